"""Strong convergence of psi_n under weakly convergent controls u_n = u + sin(2 pi n t).

Prints eps_n, sup_t ||psi - psi_n||_{H^1} and their ratio for each n.
"""
import argparse

import numpy as np

from gpcontrol.analysis import weak_limit_experiment
from gpcontrol.control import Sinusoid
from gpcontrol.dynamics import EvolutionConfig
from gpcontrol.spectral import build_basis, ground_state


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n-modes", type=int, default=32)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--n-list", type=int, nargs="+", default=[4, 8, 16, 32, 64])
    p.add_argument("--threads", type=int, default=0)
    a = p.parse_args()
    b = build_basis(1, a.n_modes)
    u = Sinusoid(0.5, 1.0, 0.0, a.T)
    rows = weak_limit_experiment(ground_state(b), u, a.n_list, EvolutionConfig(1, a.dt, a.T), threads=a.threads)
    print(f"{'n':>4} {'eps_n':>12} {'|z_n|':>12} {'ratio':>8}")
    for r in rows:
        print(f"{r.n:>4} {r.eps_n:12.6g} {r.zn_linf_h1:12.6g} {r.ratio:8.4f}")
    ratios = [r.ratio for r in rows]
    print(f"max ratio / median ratio = {max(ratios) / np.median(ratios):.4f}")


if __name__ == "__main__":
    main()
