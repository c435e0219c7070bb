"""Spectral simulation of i psi_t + H psi = u(t) K psi - sigma |psi|^2 psi with H = -Laplacian + |x|^2
and K(x) = log|x| on the unit ball."""

from .config import ConfigError, RunConfig
from .control import ControlSignal, Sinusoid, Zero, piecewise_constant, weak_family
from .dynamics import EvolutionConfig, NumericalError, Trajectory, evolve, picard_solve, strang_step
from .potentials import eval_K, hardy_quotient, multiply_K
from .spectral import HermiteBasis, SpectralState, build_basis, ground_state, propagate_free, sobolev_norm

__version__ = "0.1.0"
