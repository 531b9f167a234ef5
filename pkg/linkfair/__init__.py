__all__ = []

from .errors import *
from .channel import *
from .codec import *
from .utility import *
from .policy import *
from .allocator import *
from .metrics import *
from .simulation import *
from . import utils

from importlib.metadata import version
__version__ = version("linkfair")
