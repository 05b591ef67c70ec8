"""Monte-Carlo laboratory for real eigenvalues of non-symmetric random matrices."""

import os

# Pin BLAS to one thread per process: campaign workers are process-parallel
# already, and fixed threading keeps reduction order (and thus every output
# byte) independent of the worker count.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

__version__ = "0.1.0"

from .errors import ConfigurationError, InsufficientDataError, NumericalError

__all__ = [
    "ConfigurationError",
    "InsufficientDataError",
    "NumericalError",
    "__version__",
]
