from .config import *
from .experiments import *
from .main_funcs import main
