"""Backend selection for the time-stepping core.

The compiled extension is preferred when present; the pure-numpy fallback
is selected automatically when it is not, or explicitly by setting the
environment variable ``DKGLAB_PURE_PYTHON=1`` before import.
"""

from __future__ import annotations

import os

from . import _stepper_py

if os.environ.get("DKGLAB_PURE_PYTHON") == "1":
    _impl = _stepper_py
    BACKEND = "python"
else:
    try:
        from . import _stepper as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        _impl = _stepper_py
        BACKEND = "python"

run_steps = _impl.run_steps

STATUS_OK = _stepper_py.STATUS_OK
STATUS_THRESHOLD = _stepper_py.STATUS_THRESHOLD
STATUS_NONFINITE = _stepper_py.STATUS_NONFINITE

__all__ = [
    "BACKEND",
    "run_steps",
    "STATUS_OK",
    "STATUS_THRESHOLD",
    "STATUS_NONFINITE",
]
