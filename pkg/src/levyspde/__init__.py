"""Spectral Galerkin simulation of dissipative SPDEs driven by Wiener and Levy noise."""

from .convolution import *  # noqa: F401,F403
from .dissipative import *  # noqa: F401,F403
from .noise import *  # noqa: F401,F403
from .solver import *  # noqa: F401,F403
from .spde import *  # noqa: F401,F403
from .spectral import *  # noqa: F401,F403

__version__ = "0.1.0"
