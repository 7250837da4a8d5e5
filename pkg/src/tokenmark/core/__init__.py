from .base_types import *
from .tokenseq_io import *
