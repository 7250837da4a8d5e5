from .seed_chain import *
