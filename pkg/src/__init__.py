# Block Concealment Tool
