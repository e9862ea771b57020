"""Backend selection for the hot decoding kernel.

The compiled extension is used when it was built; setting the environment
variable ``POLMOD_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import os

from . import _viterbi as _py

try:
    from . import _viterbi_ext as _ext
except ImportError:  # extension not built
    _ext = None

if _ext is not None and not os.environ.get("POLMOD_PURE_PYTHON"):
    BACKEND = "cython"
    viterbi_batch = _ext.viterbi_batch
else:
    BACKEND = "python"
    viterbi_batch = _py.viterbi_batch

viterbi_batch_python = _py.viterbi_batch
viterbi_batch_compiled = None if _ext is None else _ext.viterbi_batch
