"""Backend selection for the Monte Carlo kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise
the numpy ``_pykernels`` module.  Setting ``BAYESCFAR_PURE_PYTHON=1``
forces the fallback.  Both expose ``threshold_exceedances`` and
``mixture_pfa`` with identical signatures.
"""
import importlib
import os

__all__ = ["BACKEND", "threshold_exceedances", "mixture_pfa", "load_backend", "available_backends"]

_MODULES = {"cython": "bayescfar._ckernels", "python": "bayescfar._pykernels"}


def load_backend(name: str):
    """Import and return the kernel module for ``"cython"`` or ``"python"``."""
    try:
        return importlib.import_module(_MODULES[name])
    except KeyError:
        raise ValueError(f"unknown kernel backend {name!r}") from None


def available_backends():
    names = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("BAYESCFAR_PURE_PYTHON", "").strip() not in ("", "0"):
        return "python", load_backend("python")
    try:
        return "cython", load_backend("cython")
    except ImportError:
        return "python", load_backend("python")


BACKEND, _impl = _select()
threshold_exceedances = _impl.threshold_exceedances
mixture_pfa = _impl.mixture_pfa
