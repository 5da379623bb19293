"""Priority-aware predictive velocity planning for intersection crossings.

A risk/utility/comfort trajectory optimizer over parametric ramp velocity
profiles, right-of-way conditioned prediction of other agents, a two-agent
closed-loop simulator, and surrogate safety metrics.
"""
from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401

__version__ = "0.1.0"
