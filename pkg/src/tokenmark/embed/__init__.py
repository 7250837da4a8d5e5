from .logit_source import *
from .embed_funcs import *
