"""Global optimisation with Euler-discretised diffusions."""

from . import bounds, diffusion, objective, sampler, verify, zoo
from .errors import DiffOptError

__version__ = "0.1.0"

__all__ = ["bounds", "diffusion", "objective", "sampler", "verify", "zoo", "DiffOptError", "__version__"]
