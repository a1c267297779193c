"""Backend selection for the k-sweep kernel.

The compiled Cython kernel is used when available; the vectorized numpy
kernel is the fallback. `CRYSTAL_CURRENT_BACKEND=python|cython` forces a
choice (useful for benchmarking and cross-checking).
"""

import os

import numpy as np

from . import _sweep_py

_forced = os.environ.get("CRYSTAL_CURRENT_BACKEND", "").lower()

if _forced in ("python", "numpy"):
    _impl = _sweep_py
elif _forced == "cython":
    from . import _sweep_cy as _impl  # ImportError here is intentional
else:
    try:
        from . import _sweep_cy as _impl
    except ImportError:
        _impl = _sweep_py

BACKEND = _impl.BACKEND_NAME
sweep_chunk = _impl.sweep_chunk


def get_backend(name=None):
    """Return a sweep_chunk implementation by name ('cython'/'numpy'/None)."""
    if name is None:
        return sweep_chunk
    if name in ("python", "numpy"):
        return _sweep_py.sweep_chunk
    if name == "cython":
        from . import _sweep_cy
        return _sweep_cy.sweep_chunk
    raise ValueError(f"unknown backend {name!r}")


def occupation_2band(terms, kpts, mu_F):
    """Occupied count (0/1/2) at each k for a 2-band plane-wave fiber."""
    d00, a00, d11, a11, d10, a10 = terms
    kpts = np.asarray(kpts, dtype=float)
    h00 = (np.exp(1j * (kpts @ d00.T)) @ a00).real
    h11 = (np.exp(1j * (kpts @ d11.T)) @ a11).real
    c = np.exp(1j * (kpts @ d10.T)) @ a10
    d0 = 0.5 * (h00 + h11)
    nrm = np.sqrt(0.25 * (h00 - h11) ** 2 + np.abs(c) ** 2)
    return ((d0 - nrm <= mu_F).astype(np.int8)
            + (d0 + nrm <= mu_F).astype(np.int8))
