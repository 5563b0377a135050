from .command_line import run_cli, build_parser
from .progress_output import ConsoleProgress
