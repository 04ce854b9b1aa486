"""Multifidelity surrogate networks: DAGs of polynomial surrogates trained jointly."""

from ._mfnet import *  # noqa: F401,F403
from ._mfnet import __version__  # noqa: F401
