"""Hot mask/codec kernels with a compiled core and a numpy fallback.

The backend is selected once at import time: the Cython extension when it
built successfully, the numpy fallback otherwise. ``MASKBENCH_KERNELS``
(``compiled`` or ``python``) forces the choice; ``benchmarks/bench_kernels.py``
uses :func:`get_backend` to time both side by side.
"""
import os

from . import fallback

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"python": fallback}
if _core is not None:
    _BACKENDS["compiled"] = _core


def get_backend(name=None):
    """Return a kernel backend module by name, or the active default."""
    if name is None:
        return _active
    try:
        return _BACKENDS[name]
    except KeyError:
        available = ", ".join(sorted(_BACKENDS))
        raise ImportError(
            f"kernel backend {name!r} not available (have: {available})"
        ) from None


_forced = os.environ.get("MASKBENCH_KERNELS")
if _forced:
    _active = get_backend(_forced)
else:
    _active = _core if _core is not None else fallback

BACKEND_NAME = _active.BACKEND_NAME

rle_encode = _active.rle_encode
rle_decode = _active.rle_decode
mask_iou_pair = _active.mask_iou_pair
mask_iou_matrix = _active.mask_iou_matrix
mask_intersection_over_area = _active.mask_intersection_over_area
grid_sample_2d = _active.grid_sample_2d

__all__ = [
    "BACKEND_NAME",
    "get_backend",
    "rle_encode",
    "rle_decode",
    "mask_iou_pair",
    "mask_iou_matrix",
    "mask_intersection_over_area",
    "grid_sample_2d",
]
