"""Kernel backend selection.

The compiled module is used when it imports; set ``RUMORPERC_BACKEND=python``
to force the numpy fallback.  Both backends produce identical results.
"""
import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None


def available_backends() -> list[str]:
    return ["cython", "python"] if _ckernels is not None else ["python"]


def get_backend(name: str | None = None):
    if name is None:
        name = os.environ.get("RUMORPERC_BACKEND", "auto")
    if name == "python":
        return _pykernels
    if name in ("cython", "auto"):
        if _ckernels is not None:
            return _ckernels
        if name == "cython":
            raise ImportError("compiled kernels are not built; reinstall with Cython available")
        return _pykernels
    raise ValueError(f"unknown kernel backend {name!r}")


backend = get_backend()
BACKEND = backend.BACKEND
