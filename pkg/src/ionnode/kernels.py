"""Backend selection for the heralding kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported. Set ``IONNODE_PURE_PYTHON=1`` to force the fallback.
Both backends return identical results.
"""

import os

from . import _fallback

if os.environ.get("IONNODE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _fallback
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _fallback

BACKEND = "compiled" if _impl is not _fallback else "python"
ATTEMPT_STRIDE = _fallback.ATTEMPT_STRIDE

first_herald = _impl.first_herald
count_heralds = _impl.count_heralds
uniforms = _impl.uniforms

__all__ = ["BACKEND", "ATTEMPT_STRIDE", "first_herald", "count_heralds", "uniforms"]
