"""Backend selection for the lattice stepping kernel.

The compiled extension is used when available; set PEDFLOW_KERNEL=python
or PEDFLOW_KERNEL=cython to force a backend (forcing cython raises if the
extension did not build).
"""

import os

from . import _kernels_py

_requested = os.environ.get("PEDFLOW_KERNEL", "").strip().lower()

if _requested == "python":
    ca_advance = _kernels_py.ca_advance
    BACKEND = "python"
elif _requested == "cython":
    from ._kernels import ca_advance  # noqa: F401

    BACKEND = "cython"
elif _requested == "":
    try:
        from ._kernels import ca_advance  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        ca_advance = _kernels_py.ca_advance
        BACKEND = "python"
else:
    raise RuntimeError(f"PEDFLOW_KERNEL must be 'python' or 'cython', got {_requested!r}")
