"""Empirical constant in ||K psi||_{L^q_T H^1} <= C ||psi||_{X^1_T} as the basis grows.

In 1D the Galerkin constant keeps growing (K psi is not in H^1 there); in 3D the
continuum norm is used and the constant is flat.
"""
import argparse

import numpy as np

from gpcontrol.analysis import lemma_kpsi_ratios
from gpcontrol.spectral import build_basis


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--sizes", type=int, nargs="+", default=None)
    p.add_argument("--trajectories", type=int, default=100)
    p.add_argument("--seed", type=int, default=6)
    a = p.parse_args()
    sizes = a.sizes or ([8, 16, 32, 64] if a.dim == 1 else [6, 12])
    print(f"{'N':>4} " + " ".join(f"{'C(q=' + str(q) + ')':>10}" for q in (2, 4, 8)))
    for n in sizes:
        r = lemma_kpsi_ratios(build_basis(a.dim, n), a.trajectories, (2, 4, 8), np.random.default_rng(a.seed),
                              band=sizes[0])
        print(f"{n:>4} " + " ".join(f"{r[q].max():10.5f}" for q in (2, 4, 8)))


if __name__ == "__main__":
    main()
