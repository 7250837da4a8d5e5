from .student_model import *
from .radioactivity_funcs import *
