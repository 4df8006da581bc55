"""Parallel-tempered Bayesian inference for multivariate HMMs."""

import os
import sys

try:
    from ._core import *  # noqa: F401,F403  (installed layout)
except ImportError:  # in-tree: extension lives in the CMake build dir
    _ext_dir = os.environ.get("PTHMM_EXT_DIR")
    if not _ext_dir:
        raise
    sys.path.insert(0, _ext_dir)
    from _core import *  # noqa: F401,F403
