"""Curve kernel backend selection.

Prefers the compiled extension, falls back to the pure-Python twin when it is
not built.  CHOPT_PURE_PYTHON=1 forces the fallback, which the cross-backend
equality test and the benchmark both use.
"""

from __future__ import annotations

import os

if os.environ.get("CHOPT_PURE_PYTHON"):
    from chopt import _curve_py as _impl

    BACKEND = "python"
else:
    try:
        from chopt import _curve as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from chopt import _curve_py as _impl  # type: ignore[no-redef]

        BACKEND = "python"

noise_base = _impl.noise_base
std_normal = _impl.std_normal
deep_bias_metric = _impl.deep_bias_metric
bowl_metric = _impl.bowl_metric
