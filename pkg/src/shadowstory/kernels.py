"""Select the compiled kernels when available, else the numpy fallback.

Set ``SHADOWSTORY_PURE=1`` to force the fallback.
"""

import os

from . import _pykernels as python_kernels

try:
    if os.environ.get("SHADOWSTORY_PURE"):
        raise ImportError("pure-Python kernels forced")
    from . import _ckernels as compiled_kernels
except ImportError:
    compiled_kernels = None

active = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"
