"""<h_0, K h_0> in 1D: polar-rule Galerkin element versus grid collocation, against adaptive quadrature."""
import math

from scipy.integrate import quad

from gpcontrol.potentials import multiply_K, multiply_K_pointwise
from gpcontrol.spectral import build_basis, ground_state


def main():
    ref = 2 * quad(lambda x: math.log(x) * math.exp(-x * x) / math.sqrt(math.pi), 0, 1, epsabs=1e-15)[0]
    print(f"{'N':>5} {'galerkin err':>14} {'collocation err':>16}")
    for n in (8, 16, 32, 64, 128, 256):
        g = ground_state(build_basis(1, n))
        print(f"{n:>5} {abs(multiply_K(g).coeffs[0] - ref):14.3e} {abs(multiply_K_pointwise(g).coeffs[0] - ref):16.3e}")


if __name__ == "__main__":
    main()
