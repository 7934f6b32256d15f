"""Compare the compiled heralding kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--attempts N]

Both backends must agree exactly; the script exits non-zero otherwise.
"""

import argparse
import sys
import time

from ionnode import NoiseConfig, _fallback
from ionnode.sequence import attempt_thresholds

try:
    from ionnode import _kernels
except ImportError:
    _kernels = None


def timed(fn, *args, repeat=3):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--attempts", type=int, default=2_000_000)
    p.add_argument("--heralds", type=int, default=200)
    args = p.parse_args(argv)

    th = attempt_thresholds(NoiseConfig()).kernel
    backends = [("python", _fallback)] + ([("compiled", _kernels)] if _kernels else [])
    results = {}
    print(f"{'backend':<10}{'task':<26}{'seconds':>10}{'attempts/s':>14}")
    for name, mod in backends:
        dt, counts = timed(mod.count_heralds, 12345, 0, args.attempts, th)
        print(f"{name:<10}{'count_heralds':<26}{dt:>10.3f}{args.attempts / dt:>14.3g}")

        def first_many(mod=mod):
            return [mod.first_herald(k, 0, 10**8, th) for k in range(args.heralds)]

        dt2, idx = timed(first_many)
        total = sum(i + 1 for i in idx)
        print(f"{name:<10}{'first_herald x' + str(args.heralds):<26}{dt2:>10.3f}{total / dt2:>14.3g}")
        results[name] = (counts, idx)
    if len(results) == 2 and results["python"] != results["compiled"]:
        print("MISMATCH between backends", file=sys.stderr)
        return 1
    if _kernels is None:
        print("compiled extension not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
