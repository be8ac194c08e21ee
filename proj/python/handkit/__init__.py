"""Bimanual hand-motion data toolkit."""

from ._handkit import *  # noqa: F401,F403
from ._handkit import __version__  # noqa: F401
