from .embeddings import *
from .store import *
from .leakage import *
