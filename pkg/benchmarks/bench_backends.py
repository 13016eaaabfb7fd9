"""Compare the compiled and pure-Python tree kernels.

Builds the same trees (same seeds, bit-identical results) through both
backends and reports wall time per tree and the speedup. Run:

    python3 benchmarks/bench_backends.py [--n 1000 10000] [--reps 50]
"""

from __future__ import annotations

import argparse
import time

from splitlab import _pycore
from splitlab._rng import bit_generator

try:
    from splitlab import _core
except ImportError:
    _core = None

from splitlab.splitters import binary_search_tree, dirichlet, kernel_code, median_of
from splitlab.trees import default_params

FAMILIES = {
    "binary_search_tree": binary_search_tree(),
    "median_of_3": median_of(1),
    "dirichlet_3": dirichlet((1.5, 1.5, 1.5)),
}


def time_kernel(module, spec, params, n: int, reps: int, seed: int = 0) -> tuple[float, int]:
    fid, fparams = kernel_code(spec)
    kern = module.TreeKernel(params.b, params.s, params.s0, params.s1, fid, fparams)
    check = 0
    t0 = time.perf_counter()
    for i in range(reps):
        p, w, _ = kern.stats(bit_generator(seed, "test", i), n)
        check += p + w
    return (time.perf_counter() - t0) / reps, check


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 10000])
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--pure-reps", type=int, default=None,
                    help="replicates for the pure backend (defaults to --reps)")
    args = ap.parse_args()
    pure_reps = args.pure_reps or args.reps

    if _core is None:
        print("compiled extension not built; timing the pure backend only")

    header = f"{'family':<22}{'n':>8}{'compiled ms':>14}{'pure ms':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, spec in FAMILIES.items():
        params = default_params(spec)
        for n in args.n:
            t_pure, chk_p = time_kernel(_pycore, spec, params, n, pure_reps)
            if _core is not None:
                t_comp, chk_c = time_kernel(_core, spec, params, n, args.reps)
                if pure_reps == args.reps and chk_c != chk_p:
                    raise AssertionError(f"backends disagree for {name} at n={n}")
                print(f"{name:<22}{n:>8}{t_comp * 1e3:>14.3f}{t_pure * 1e3:>12.1f}"
                      f"{t_pure / t_comp:>9.1f}x")
            else:
                print(f"{name:<22}{n:>8}{'-':>14}{t_pure * 1e3:>12.1f}{'-':>10}")


if __name__ == "__main__":
    main()
