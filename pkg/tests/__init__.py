from . import utils

