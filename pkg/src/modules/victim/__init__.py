from .base import *
from .prototype import *
from .remote import *
from .registry import *
