from .channel_funcs import *
