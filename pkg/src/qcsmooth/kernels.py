"""Backend selection for the hot evaluation kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. ``use_backend`` switches explicitly (tests and
the benchmark compare both).
"""

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["compiled"] = _ckernels

_active = _ckernels if _ckernels is not None else _pykernels


def backend_name():
    return "compiled" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name):
    """Select ``"compiled"`` or ``"python"``; returns the previous name."""
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}")
    previous = backend_name()
    _active = BACKENDS[name]
    return previous


def eval_pieces(codes, weights, fixed, X):
    return _active.eval_pieces(codes, weights, fixed, X)


def eval_costs(codes, weights, fixed, X):
    return _active.eval_costs(codes, weights, fixed, X)


def paired_costs(codes, weights, fixed, X):
    return _active.paired_costs(codes, weights, fixed, X)


def grid_argmin(codes, weights, fixed, X, A, b, slack):
    return _active.grid_argmin(codes, weights, fixed, X, A, b, slack)
