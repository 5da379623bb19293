"""Hot numeric kernels: compiled extension core with a pure-NumPy fallback.

The compiled backend is used when the extension built; set
``CROSSPLAN_PURE_KERNELS=1`` to force the fallback.
"""
import os

BACKEND = "pure"

if os.environ.get("CROSSPLAN_PURE_KERNELS", "0") != "1":
    try:
        from ._core import (cumtrapz, derivative, evaluate_profile,  # noqa: F401
                            gaussian_smooth, path_state, snake_velocity)
        BACKEND = "compiled"
    except ImportError:
        pass

if BACKEND == "pure":
    from ._pure import (cumtrapz, derivative, evaluate_profile,  # noqa: F401
                        gaussian_smooth, path_state, snake_velocity)

__all__ = ["BACKEND", "snake_velocity", "gaussian_smooth", "derivative",
           "cumtrapz", "path_state", "evaluate_profile"]
