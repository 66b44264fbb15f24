"""Select the persistence kernel at import time.

The compiled extension is preferred; set ``TADA_FORCE_PYTHON=1`` to use the
pure-Python kernel even when the extension is importable.
"""

import os

from . import _rips_py

BACKEND = "python"
rips_pairs = _rips_py.rips_pairs

if not os.environ.get("TADA_FORCE_PYTHON"):
    try:
        from . import _rips
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        rips_pairs = _rips.rips_pairs

# only the compiled kernel releases the GIL
RELEASES_GIL = BACKEND == "cython"
