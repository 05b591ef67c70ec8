"""Pluggable eigenvalue kernel for the hot sampling loops.

The default backend is numpy's LAPACK. Setting ``RMT_EIG_BACKEND=torch``
(or ``auto`` to pick torch when importable) switches the rare-sampler's inner
eigensolve to torch's LAPACK build, which is substantially faster on some
CPUs. Both backends classify real eigenvalues structurally (imaginary part
exactly 0.0 from the real Schur form), so they are interchangeable
statistically; individual chain trajectories may differ in ulps, which is why
campaign manifests record the backend in use.
"""

from __future__ import annotations

import os

import numpy as np

_BACKEND = None
_BACKEND_NAME = "numpy"


def _numpy_eigvals(matrix: np.ndarray) -> np.ndarray:
    values = np.linalg.eigvals(matrix)
    if not np.iscomplexobj(values):
        values = values.astype(np.complex128)
    return values


def _load_backend():
    global _BACKEND, _BACKEND_NAME
    choice = os.environ.get("RMT_EIG_BACKEND", "numpy").lower()
    if choice in ("torch", "auto"):
        try:
            import torch

            torch.set_num_threads(1)

            def _torch_eigvals(matrix: np.ndarray) -> np.ndarray:
                return torch.linalg.eigvals(torch.from_numpy(matrix)).numpy()

            _BACKEND, _BACKEND_NAME = _torch_eigvals, "torch"
            return
        except ImportError:
            if choice == "torch":
                raise
    _BACKEND, _BACKEND_NAME = _numpy_eigvals, "numpy"


def fast_eigvals(matrix: np.ndarray) -> np.ndarray:
    if _BACKEND is None:
        _load_backend()
    return _BACKEND(matrix)


def backend_name() -> str:
    if _BACKEND is None:
        _load_backend()
    return _BACKEND_NAME
