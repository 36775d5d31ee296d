from .typing import *
from .importance import *
from .sampling import *
from .entity_swap import *
from .header import *
