"""Blockwise bootstrap significance testing for word error rates."""

from ._wersig import *  # noqa: F401,F403
from ._wersig import __doc__  # noqa: F401

__version__ = "0.1.0"
