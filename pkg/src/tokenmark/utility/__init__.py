from .report_io import *
