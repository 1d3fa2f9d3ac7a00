"""Benchmark the compiled curve kernel against its pure-Python twin.

The per-epoch metric evaluation is the only hot path in the simulator: one
call per live trial per tick.  This script times both backends on the same
call sequence and reports the speedup.

    python3 benchmarks/bench_curve.py --calls 300000
"""

import argparse
import time

from chopt import _curve_py

try:
    from chopt import _curve
except ImportError:
    _curve = None

AMP = 0.8
TAU = 75.0
SIGMA = 0.01
MAX_EPOCHS = 300


def run_deep(mod, base, calls):
    fn = mod.deep_bias_metric
    total = 0.0
    for epoch in range(1, calls + 1):
        total += fn(AMP, TAU, epoch % MAX_EPOCHS + 1, SIGMA, base)
    return total


def run_bowl(mod, base, calls):
    fn = mod.bowl_metric
    total = 0.0
    for epoch in range(1, calls + 1):
        total += fn(0.25, MAX_EPOCHS, epoch % MAX_EPOCHS + 1, SIGMA, base)
    return total


def best_of(runner, mod, base, calls, repeats):
    best = float("inf")
    checksum = None
    for _ in range(repeats):
        start = time.perf_counter()
        checksum = runner(mod, base, calls)
        best = min(best, time.perf_counter() - start)
    return best, checksum


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--calls", type=int, default=300000, help="metric evaluations per pass")
    parser.add_argument("--repeats", type=int, default=3, help="passes per backend (best taken)")
    args = parser.parse_args()

    base = _curve_py.noise_base(101, 0xDEADBEEF)
    backends = [("python", _curve_py)]
    if _curve is not None:
        backends.insert(0, ("compiled", _curve))
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{args.calls} calls per pass, best of {args.repeats}\n")
    print(f"{'kernel':<10} {'backend':<9} {'total s':>9} {'ns/call':>9}")
    results = {}
    for kernel, runner in (("deep_bias", run_deep), ("bowl", run_bowl)):
        sums = set()
        for name, mod in backends:
            elapsed, checksum = best_of(runner, mod, base, args.calls, args.repeats)
            sums.add(checksum)
            results[(kernel, name)] = elapsed
            print(f"{kernel:<10} {name:<9} {elapsed:>9.3f} {elapsed / args.calls * 1e9:>9.0f}")
        if len(sums) > 1:
            print(f"  WARNING: {kernel} backends disagree")
    if _curve is not None:
        for kernel in ("deep_bias", "bowl"):
            ratio = results[(kernel, "python")] / results[(kernel, "compiled")]
            print(f"\n{kernel}: compiled is {ratio:.1f}x faster")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
