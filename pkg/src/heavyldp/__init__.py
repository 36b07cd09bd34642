"""Large deviations for multivariate heavy-tailed random walks.

Radius laws with tail exp(-h(x)) for concave h, spherical direction laws and
ellipsoidal maps, Monte Carlo walk simulation, rate-function infima over
event sets, and quota-share strategies for elliptical risks.
"""
__version__ = "0.1.0"

from .errors import ConstraintError, DomainError, IndexUnknownError, ModelError, UnsupportedSetError
from .tail_models import *  # noqa: F401,F403
from .geometry import *  # noqa: F401,F403
from .walk import *  # noqa: F401,F403
from .ldp import *  # noqa: F401,F403
from .montecarlo import *  # noqa: F401,F403
from .reinsurance import *  # noqa: F401,F403
from .config import ExperimentConfig

from . import config, geometry, ldp, montecarlo, reinsurance, tail_models, walk  # noqa: E402

__all__ = (
    ["ModelError", "DomainError", "IndexUnknownError", "ConstraintError", "UnsupportedSetError",
     "ExperimentConfig"]
    + tail_models.__all__ + geometry.__all__ + walk.__all__ + ldp.__all__
    + montecarlo.__all__ + reinsurance.__all__
)
