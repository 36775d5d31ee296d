from .metrics import *
from .fixtures import *
from .sweep import *
from .report import *
