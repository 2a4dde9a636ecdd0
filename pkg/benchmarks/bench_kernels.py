"""Time the compiled kernel core against the numpy fallback.

Run as a script; prints one row per kernel with per-call times for each
available backend and the speedup of compiled over python. Both backends
are fed identical inputs and their outputs are cross-checked first, so a
timing row is also a parity assertion.
"""
import time

import numpy as np

from maskbench.kernels import get_backend


def _timeit(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_masks(rng, n, h, w):
    return [(rng.random((h, w)) < 0.4).astype(np.uint8) for _ in range(n)]


def bench(python, compiled):
    rng = np.random.default_rng(0)
    masks = make_masks(rng, 120, 64, 64)
    stack_a = np.stack(masks[:60])
    stack_b = np.stack(masks[60:])
    src = rng.random((64, 64))
    # outer-product sampling grid: 200x200 = 40k bilinear samples
    ys = rng.uniform(-0.5, 63.5, 200)
    xs = rng.uniform(-0.5, 63.5, 200)

    cases = {
        "rle_encode (120x 64x64)": lambda b: [b.rle_encode(m) for m in masks],
        "rle_decode (120x 64x64)": None,
        "mask_iou_matrix (60x60)": lambda b: b.mask_iou_matrix(stack_a, stack_b),
        "mask_int_over_area (60x60)": lambda b: b.mask_intersection_over_area(
            stack_a, stack_b
        ),
        "grid_sample_2d (200x200)": lambda b: b.grid_sample_2d(src, ys, xs),
    }
    encoded = [python.rle_encode(m) for m in masks]
    cases["rle_decode (120x 64x64)"] = lambda b: [
        b.rle_decode(c, 64, 64) for c in encoded
    ]

    backends = [("python", python)] + (
        [("compiled", compiled)] if compiled is not None else []
    )

    # parity first: identical outputs across backends
    if compiled is not None:
        for label, fn in cases.items():
            out_py, out_c = fn(python), fn(compiled)
            if isinstance(out_py, list):
                same = all(
                    np.array_equal(np.asarray(a), np.asarray(b))
                    for a, b in zip(out_py, out_c)
                )
            else:
                same = np.array_equal(np.asarray(out_py), np.asarray(out_c))
            if not same:
                raise AssertionError("backend outputs differ for %s" % label)
        print("parity: compiled and python outputs identical on all cases\n")

    header = "%-30s" % "kernel" + "".join("%14s" % n for n, _ in backends)
    if compiled is not None:
        header += "%10s" % "speedup"
    print(header)
    print("-" * len(header))
    for label, fn in cases.items():
        times = [_timeit(lambda b=b: fn(b)) for _, b in backends]
        row = "%-30s" % label + "".join("%12.2fms" % (t * 1e3) for t in times)
        if compiled is not None:
            row += "%9.1fx" % (times[0] / times[1])
        print(row)


def main():
    python = get_backend("python")
    try:
        compiled = get_backend("compiled")
    except ImportError:
        compiled = None
        print("compiled backend unavailable; timing the python fallback only\n")
    bench(python, compiled)


if __name__ == "__main__":
    main()
