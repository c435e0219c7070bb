"""Fit c in log(E(T)/E(0)) <= c int_0^T |u| on random piecewise-constant controls (sigma = 0)
and score it on fresh controls."""
import argparse

import numpy as np

from gpcontrol.analysis import fit_energy_bound
from gpcontrol.control import random_piecewise
from gpcontrol.dynamics import EvolutionConfig
from gpcontrol.spectral import build_basis, ground_state, random_state


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--n-modes", type=int, default=32)
    p.add_argument("--controls", type=int, default=20)
    p.add_argument("--pieces", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    rng = np.random.default_rng(a.seed)
    b = build_basis(a.dim, a.n_modes)
    cfg = EvolutionConfig(0, 1e-3, 1.0)
    train = [random_piecewise(rng, 1.0, a.pieces) for _ in range(a.controls)]
    test = [random_piecewise(rng, 1.0, a.pieces) for _ in range(a.controls)]
    for label, psi0 in (("ground", ground_state(b)), ("random", random_state(b, rng))):
        fit = fit_energy_bound(psi0, train, test, cfg)
        print(f"{label:>7}: c_emp={fit.c_emp:.5f} max train ratio={max(fit.train_ratios):.5f} "
              f"max fresh ratio={max(fit.test_ratios):.5f} violations={fit.violations}/{len(test)}")


if __name__ == "__main__":
    main()
