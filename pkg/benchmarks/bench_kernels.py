"""Compare the compiled and numpy kernel backends on planner-sized inputs.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import math
import timeit

import numpy as np

from ctxnav import _pykernels

try:
    from ctxnav import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    occ = (rng.random((160, 280)) < 0.03).astype(np.uint8)
    ang = np.linspace(-0.75 * math.pi, 0.75 * math.pi, 512)
    raycast = (occ, 0.0, 0.0, 0.05, 7.0, 4.0, np.cos(ang), np.sin(ang), 8.0)
    values = rng.random((231, 4))
    front = values[np.asarray(_pykernels.nondominated(values), bool)]
    return {
        "raycast (512 beams)": ("raycast", raycast),
        "nondominated (231 x 4)": ("nondominated", (values,)),
        "gauge (231 x 4)": ("gauge", (front, values, 1e-9)),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=200)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    else:
        print("compiled kernels not built; timing the numpy backend only")
    print(f"{'kernel':<26}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, (fn, payload) in cases(rng).items():
        times = {}
        for name, mod in backends.items():
            f = getattr(mod, fn)
            times[name] = min(timeit.repeat(lambda: f(*payload), number=args.repeat, repeat=3)) / args.repeat
        row = f"{label:<26}" + "".join(f"{t * 1e6:>10.1f}us" for t in times.values())
        if len(times) > 1:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
