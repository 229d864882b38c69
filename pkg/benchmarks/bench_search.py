"""Time the compiled echo-cascade search against its pure-Python twin.

    python benchmarks/bench_search.py [--repeat N]

Both engines must agree on every case; the script exits non-zero if they do
not.  Cases are small enough for the twin to finish in seconds.
"""
import argparse
import sys
import time

from spidercc import _search_py

try:
    from spidercc import _search
except ImportError:
    _search = None

# (n, f, k, R, correct inputs, faulty count)
CASES = [
    (3, 0, 2, 1, (0, 0, 1), 0),
    (3, 1, 2, 1, (0, 1), 1),
    (3, 1, 2, 2, (0, 1), 1),
    (2, 0, 3, 1, (0, 1), 0),
    (3, 1, 3, 1, (0, 1), 1),
    (4, 1, 2, 1, (0, 0, 0), 1),
]


def timed(engine, case, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = engine.explore_echo(*case[:4], list(case[4]), case[5], 10**7)
        best = min(best, time.perf_counter() - t0)
    return out, best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args(argv)
    if _search is None:
        print("compiled kernel not built; run: pip install -e . --no-build-isolation", file=sys.stderr)
        return 2
    print(f"{'case':<28}{'states':>10}{'pure s':>10}{'compiled s':>12}{'speedup':>9}")
    mismatch = False
    for case in CASES:
        slow, t_py = timed(_search_py, case, args.repeat)
        fast, t_c = timed(_search, case, args.repeat)
        mismatch |= slow[:3] != fast[:3]
        label = "n={} f={} k={} R={} in={}".format(*case[:4], "".join(map(str, case[4])))
        print(f"{label:<28}{fast[1]:>10}{t_py:>10.3f}{t_c:>12.4f}{t_py / t_c:>8.0f}x")
    if mismatch:
        print("engines disagree", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
