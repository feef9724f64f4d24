"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --sizes 100 250 500 --repeats 3

The first numba call per kernel includes JIT compilation (or a cache load)
and is timed separately as ``warmup``.
"""
import argparse
import time

import numpy as np

from ardrecon import kernels
from ardrecon.ard import assign_traits
from ardrecon.blsm.init import random_sphere
from ardrecon.blsm.model import BlsmParams, LikelihoodSpec, link_matrix
from ardrecon.graphgen import gen_small_world


def _inputs(n, rng):
    g = gen_small_world(n, 10, 0.1, seed=rng)
    t = assign_traits(n, 8, 0.1, seed=rng)
    prm = BlsmParams(rng.normal(-2.5, 0.5, n), random_sphere(n, 2, rng), 6.0)
    P = link_matrix(prm)
    lam = P @ t.membership
    y = rng.poisson(lam).astype(float)
    return g, t, prm, P, lam, y


def _calls(impl, g, t, prm, P, lam, y, rng):
    n = g.n
    spec = LikelihoodSpec()
    ip, ix = g.csr()
    noise_z, noise_v = rng.standard_normal((n, 2)), rng.standard_normal(n)
    logu = np.log(rng.random(n))

    def positions():
        impl.sweep_positions(y, t.tr_ptr, t.tr_idx, prm.v.copy(), prm.z.copy(), prm.zeta,
                             P.copy(), lam.copy(), noise_z, logu, 0.1, spec.family_code,
                             spec.disp, spec.link_code, 1.0, 0.0, np.zeros(2))

    def intercepts():
        impl.sweep_intercepts(y, t.tr_ptr, t.tr_idx, prm.v.copy(), prm.z.copy(), prm.zeta,
                              P.copy(), lam.copy(), noise_v, logu, 0.1, spec.family_code,
                              spec.disp, spec.link_code, 1.0, -2.5, 1.0)

    return {
        "ard_counts": lambda: impl.ard_counts(n, t.K, g.edges, g.edge_weights(),
                                              t.tr_ptr, t.tr_idx),
        "brandes": lambda: impl.brandes(n, ip, ix),
        "sweep_positions": positions,
        "sweep_intercepts": intercepts,
    }


def _best(fn, repeats):
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 250, 500])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    nb, npy = kernels.implementation("numba"), kernels.implementation("numpy")
    rng = np.random.default_rng(a.seed)
    warm = _inputs(30, rng)
    for name, fn in _calls(nb, *warm, rng).items():
        print(f"warmup {name:17s} {_best(fn, 1):8.3f} s")

    print(f"\n{'kernel':17s} {'n':>5s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for n in a.sizes:
        inp = _inputs(n, rng)
        fast = _calls(nb, *inp, np.random.default_rng(a.seed))
        slow = _calls(npy, *inp, np.random.default_rng(a.seed))
        for name in fast:
            tn, tp = _best(fast[name], a.repeats), _best(slow[name], a.repeats)
            print(f"{name:17s} {n:5d} {tn:10.5f} {tp:10.5f} {tp / tn:8.1f}x")


if __name__ == "__main__":
    main()
