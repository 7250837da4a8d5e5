from .detect_funcs import *
