"""Backend selection for the planar-navigation rollout kernel.

The compiled Cython extension is preferred; the pure-numpy implementation is
a drop-in, bit-identical fallback. ``benchmarks/bench_rollout.py`` compares
the two.
"""

from . import _navrollout_py

try:  # pragma: no cover - depends on build environment
    from . import _navrollout_cy

    BACKEND = "cython"
    rollout_nav = _navrollout_cy.rollout_nav
except ImportError:  # pragma: no cover
    _navrollout_cy = None
    BACKEND = "python"
    rollout_nav = _navrollout_py.rollout_nav


def available_backends() -> dict:
    """Name -> rollout function for every importable backend."""
    backends = {"python": _navrollout_py.rollout_nav}
    if _navrollout_cy is not None:
        backends["cython"] = _navrollout_cy.rollout_nav
    return backends
