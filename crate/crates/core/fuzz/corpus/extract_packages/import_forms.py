import a.b.c as d, e
from . import x
from ..pkg.mod import (y, z as w)
try:
    import lightgbm
except ImportError:
    pass
