from .trial_funcs import *
from .stats_funcs import *
