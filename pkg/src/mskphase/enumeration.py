"""Backend selection for the enumeration kernels.

The compiled extension is used when it imported cleanly; otherwise the pure
numpy fallback.  Set MSKPHASE_PURE=1 to force the fallback (used by the
benchmark and the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _enumeration_py

if os.environ.get("MSKPHASE_PURE"):
    _impl = _enumeration_py
    COMPILED = False
else:
    try:
        from . import _enumeration as _impl  # type: ignore[attr-defined]

        COMPILED = True
    except ImportError:
        _impl = _enumeration_py
        COMPILED = False


def backend_name() -> str:
    return "compiled" if COMPILED else "pure-python"


def log_partition(quad, lin) -> float:
    return _impl.log_partition(quad, lin)


def gibbs_moments(quad, lin):
    return _impl.gibbs_moments(quad, lin)


def pair_cell_logsumexp(quad, lin, species_index, species_sizes):
    return _impl.pair_cell_logsumexp(quad, lin, species_index, species_sizes)
