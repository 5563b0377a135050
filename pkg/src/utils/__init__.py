from .image_formats import ImageFormats
from .frame_ranges import parse_frame_range
