"""Compare the compiled and pure-numpy kernel backends.

Times each hot kernel in isolation on both backends, then a whole Euler step
of the benchmark sample in a subprocess per backend (the backend is chosen at
import, so a full step can only be switched through ``GRACE_PURE_PYTHON``).

    python benchmarks/bench_kernels.py --sizes 16 32 64
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from grace.kernels import backend_module

_STEP_SNIPPET = """
import json, sys
from grace import kernels
from grace.bench import run_bench
rep = run_bench(tuple(int(a) for a in sys.argv[1:]), steps=50)
print(json.dumps({"backend": kernels.BACKEND, "ms": {r.n: r.mean_ms for r in rep.rows}}))
"""


def kernel_cases(n, rng):
    m = rng.standard_normal((3, n, n, n))
    m /= np.linalg.norm(m, axis=0)
    h = rng.standard_normal((3, n, n, n))
    p = 2 * n
    kern = rng.standard_normal((6, p // 2 + 1, p // 2 + 1, n + 1))
    mhat = rng.standard_normal((3, p, p, n + 1)) + 1j * rng.standard_normal((3, p, p, n + 1))
    return {
        "exchange": lambda k: k.exchange(m, np.empty_like(m), 1.0, 1.0, 1.0),
        "euler_update": lambda k: k.euler_update(m.copy(), h, 1e-3, 1.0, 0.5, 1.0, 1.0),
        "spectral_apply": lambda k: k.spectral_apply(mhat, kern, np.empty_like(mhat), 0, p),
    }


def best_of(fn, repeat=5):
    number, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number * 1e3


def whole_step(sizes, pure):
    env = dict(os.environ, GRACE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", _STEP_SNIPPET, *map(str, sizes)],
                         env=env, capture_output=True, text=True, check=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--no-step", action="store_true", help="skip the whole-step comparison")
    args = ap.parse_args(argv)
    try:
        cy = backend_module("cython")
    except ImportError:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    py = backend_module("python")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<16}{'N':>5}{'cython ms':>12}{'python ms':>12}{'speedup':>9}")
    for n in args.sizes:
        for name, fn in kernel_cases(n, rng).items():
            tc, tp = best_of(lambda: fn(cy)), best_of(lambda: fn(py))
            print(f"{name:<16}{n:>5}{tc:>12.3f}{tp:>12.3f}{tp / tc:>9.2f}")

    if not args.no_step:
        fast, slow = whole_step(args.sizes, False), whole_step(args.sizes, True)
        print(f"\n{'euler step':<16}{'N':>5}{fast['backend'] + ' ms':>12}{slow['backend'] + ' ms':>12}{'speedup':>9}")
        for n in args.sizes:
            tc, tp = fast["ms"][str(n)], slow["ms"][str(n)]
            print(f"{'':<16}{n:>5}{tc:>12.3f}{tp:>12.3f}{tp / tc:>9.2f}")


if __name__ == "__main__":
    main()
