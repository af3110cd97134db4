"""Compare the compiled and pure-Python kernels on a convection-diffusion matrix.

    python3 benchmarks/bench_kernels.py [--target-h 0.1] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from darcysplit import driver, fem, verify
from darcysplit.linalg.kernels import backends
from darcysplit.mesh import generate_annulus


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--target-h", type=float, default=0.1)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    spec = verify.preset_annulus_radial("g0", mesh=generate_annulus(1.0, 4.0, args.target_h))
    free = fem.P1Space(spec.mesh).free
    A = driver.convdiff_system(spec)[0].submatrix(free, free)
    x = np.random.default_rng(0).standard_normal(A.shape[0])
    print(f"matrix {A.shape[0]} x {A.shape[1]}, nnz {A.nnz}")
    print(f"{'kernel':<12}{'backend':<10}{'best [ms]':>12}")

    timings = {}
    for name, mod in backends().items():
        lu, diag = mod.ilu0_factor(A.indptr, A.indices, A.data)
        cases = {
            "spmv": lambda: mod.csr_matvec(A.indptr, A.indices, A.data, x),
            "ilu0": lambda: mod.ilu0_factor(A.indptr, A.indices, A.data),
            "ilu0_solve": lambda: mod.ilu0_solve(A.indptr, A.indices, lu, diag, x),
        }
        for kernel, fn in cases.items():
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            timings[kernel, name] = best
            print(f"{kernel:<12}{name:<10}{1e3 * best:>12.3f}")
    if "cython" in backends():
        for kernel in ("spmv", "ilu0", "ilu0_solve"):
            print(f"speedup {kernel}: {timings[kernel, 'python'] / timings[kernel, 'cython']:.1f}x")


if __name__ == "__main__":
    main()
