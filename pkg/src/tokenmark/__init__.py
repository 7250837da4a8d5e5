from . import core
from . import seeding
from . import embed
from . import detect
from . import channel
from . import stats
from . import radioactivity
from . import utility
