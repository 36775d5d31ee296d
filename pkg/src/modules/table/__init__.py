from .typing import *
from .corpus import *
