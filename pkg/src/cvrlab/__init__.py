"""cvrlab: collaborative vehicle routing as a coalitional bargaining game.

Generate routing instances, compute exact collaboration gains, simulate
alternating-offers bargaining among pluggable agents, train PPO learners,
and score coalition-selection quality.
"""

from ._kernels import HAVE_COMPILED, backend_name

__version__ = "0.1.0"

__all__ = ["HAVE_COMPILED", "backend_name", "__version__"]
