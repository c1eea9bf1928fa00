"""Compare the compiled and pure-Python double-double kernels.

Run with ``python benchmarks/bench_kernels.py``.  Reports the best wall time
over several repeats for the complex DD matrix product and the Jacobi
eigensolver at a few sizes, and checks the two kernels agree bit for bit.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cddsim.core import kernels


def _best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _hermitian(d: int, rng) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def bench_gemm(mod, d: int, repeats: int, rng) -> tuple[float, tuple]:
    ah, bh = _hermitian(d, rng), _hermitian(d, rng)
    al, bl = ah * 1e-17, bh * 1e-17
    out = mod.gemm(ah, al, bh, bl)
    return _best(lambda: mod.gemm(ah, al, bh, bl), repeats), out


def bench_jacobi(mod, d: int, repeats: int, rng) -> tuple[float, tuple]:
    h = _hermitian(d, rng)

    def once():
        a_h, a_l = h.copy(), np.zeros_like(h)
        v_h, v_l = np.eye(d, dtype=complex), np.zeros((d, d), dtype=complex)
        sweeps = mod.jacobi(a_h, a_l, v_h, v_l, 2.0 ** -104, 40)
        return sweeps, a_h, a_l, v_h, v_l

    return _best(once, repeats), once()


def _same(a, b) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="8,16,32", help="comma-separated matrix sizes")
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args(argv)
    impls = kernels.implementations()
    print(f"active kernel: {kernels.KIND}; available: {', '.join(impls)}")
    if "compiled" not in impls:
        print("compiled extension not built; nothing to compare")
        return 0
    print(f"{'kernel':<8} {'size':>5} {'python [s]':>12} {'compiled [s]':>13} {'speedup':>8}  identical")
    for d in (int(s) for s in args.sizes.split(",")):
        for name, bench in (("gemm", bench_gemm), ("jacobi", bench_jacobi)):
            t_py, out_py = bench(impls["python"], d, args.repeats, np.random.default_rng(d))
            t_cy, out_cy = bench(impls["compiled"], d, args.repeats, np.random.default_rng(d))
            print(f"{name:<8} {d:>5} {t_py:>12.4g} {t_cy:>13.4g} {t_py / t_cy:>7.1f}x  {_same(out_py, out_cy)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
