"""Public/private estimation under distribution shift: models, estimators,
fingerprinting statistics, bound evaluators and a Monte Carlo harness."""

from .errors import *  # noqa: F401,F403
from .models import *  # noqa: F401,F403
from .estimators import *  # noqa: F401,F403
from .mechanisms import *  # noqa: F401,F403
from .bounds import *  # noqa: F401,F403
from .fingerprint import *  # noqa: F401,F403
from .harness import *  # noqa: F401,F403

__version__ = "0.1.0"
