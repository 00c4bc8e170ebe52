from .config import Config
from .errors import NoiseClassError
