"""Reference values computed once by adaptive quadrature (scipy.integrate.quad) on
explicit closed-form Hermite functions, independent of the package code."""
import math

# int_{-1}^{1} log|x| exp(-x^2)/sqrt(pi) dx
K00_1D = -1.0222443601107403

# ||grad psi||_6 + ||<x> psi||_6 for psi = pi^{-3/4} exp(-|x|^2/2) in R^3 (radial quad)
W16_GROUND_3D = 0.9254364132116161

# int_{-1}^{1} conj(psi) psi' / x dx for psi = (h_0 + i h_2)/sqrt(2)
GKDG_H0_IH2 = complex(-0.9464776673048635, 1.191758890412048)

# -erf(1): the same integral for psi = h_0
GKDG_GROUND_1D = -math.erf(1.0)

# 2 + (1/2) int pi^{-1} exp(-2x^2) dx
ENERGY_GROUND_1D_SIGMA1 = 2.0 + 0.5 / math.sqrt(2.0 * math.pi)
