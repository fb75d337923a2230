"""Backend selection for the hot scan kernels, decided once at import.

The compiled Cython extension is preferred; the pure numpy implementation
is the fallback.  Set CUBOIDMC_BACKEND=python or =compiled to force one
(the latter raises if the extension is missing).  Both backends produce
bit-identical results; only speed differs.
"""

from __future__ import annotations

import os

_choice = os.environ.get("CUBOIDMC_BACKEND", "auto").lower()

if _choice == "python":
    from . import _kernels_py as _impl
elif _choice == "compiled":
    from . import _kernels_c as _impl  # type: ignore[no-redef]
elif _choice == "auto":
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_py as _impl  # type: ignore[no-redef]
else:
    raise ImportError(f"CUBOIDMC_BACKEND must be auto, compiled, or python, not {_choice!r}")

BACKEND: str = _impl.BACKEND
split_scores = _impl.split_scores
motion_search = _impl.motion_search
