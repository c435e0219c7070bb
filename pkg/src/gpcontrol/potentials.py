"""The control potential K(x) = log|x| 1_{|x| <= 1} and related diagnostics."""
from __future__ import annotations

from functools import cached_property, lru_cache

import numpy as np
from scipy.special import gamma

from .quadrature import ball_rule, inverse_square_rule
from .spectral import (
    HermiteBasis, SpectralState, axis_vander, derivative_matrix, eval_at_points,
    project_from_points,
)


class SingularPointError(ValueError):
    pass


def eval_K(points) -> np.ndarray:
    """K at an array of points of shape (P, d); K = 0 on and outside the unit sphere."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(pts, axis=1)
    if np.any(r == 0):
        raise SingularPointError("K is singular at the origin")
    return np.where(r < 1, np.log(np.minimum(r, 1.0)), 0.0)


def grad_K(points) -> np.ndarray:
    """x / |x|^2 inside the unit ball, 0 outside; shape (P, d)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r2 = np.sum(pts * pts, axis=1)
    if np.any(r2 == 0):
        raise SingularPointError("grad K is singular at the origin")
    return np.where((r2 < 1)[:, None], pts / r2[:, None], 0.0)


def _rule_vanders(basis: HermiteBasis, rule, n=None):
    return [axis_vander(basis, rule.points[:, i], n) for i in range(basis.dim)]


# Inside the unit ball, products of Hermite functions are resolved far below
# their nominal polynomial degree; 32 reproduces the exact rule to ~1e-10.
BALL_DEGREE_CAP = 32


def ball_degree(basis: HermiteBasis, extra: int = 0) -> int:
    deg = 2 * basis.dim * (basis.n_modes - 1) + extra
    return deg if basis.dim == 1 else min(deg, BALL_DEGREE_CAP)


def ball_rule_for(basis: HermiteBasis, extra: int = 0):
    levels = 42 if basis.dim == 1 else 10
    return ball_rule(basis.dim, ball_degree(basis, extra), levels)


class KOperator:
    """Galerkin realization of psi -> P_N(K psi).

    Matrix elements int K h_a h_b dx are integrated in polar coordinates over
    the unit ball (graded radial panels), which resolves the log singularity
    to near machine precision.
    """

    def __init__(self, basis: HermiteBasis, potential=eval_K):
        self.basis = basis
        self.rule = ball_rule_for(basis)
        self.vanders = _rule_vanders(basis, self.rule)
        self.kw = self.rule.weights * potential(self.rule.points)

    def apply(self, coeffs: np.ndarray) -> np.ndarray:
        """Apply to a coefficient tensor or a batch (S,)+shape."""
        single = coeffs.shape == self.basis.shape
        batch = coeffs[None] if single else coeffs
        if "matrix" in self.__dict__:
            out = (batch.reshape(len(batch), -1) @ self.matrix.T).reshape(batch.shape)
        else:
            vals = eval_at_points(batch, self.vanders)
            out = project_from_points(vals, self.kw, self.vanders)
        return out[0] if single else out

    @cached_property
    def matrix(self) -> np.ndarray:
        n = self.basis.size
        cols = []
        eye = np.eye(n).reshape((n,) + self.basis.shape)
        for lo in range(0, n, 256):
            vals = eval_at_points(eye[lo:lo + 256], self.vanders)
            cols.append(project_from_points(vals, self.kw, self.vanders).reshape(-1, n).real)
        m = np.concatenate(cols).T
        return 0.5 * (m + m.T)

    @cached_property
    def eigh(self):
        return np.linalg.eigh(self.matrix)


@lru_cache(maxsize=None)
def k_operator(basis: HermiteBasis) -> KOperator:
    return KOperator(basis)


def multiply_K(state: SpectralState, op: KOperator | None = None) -> SpectralState:
    op = op or k_operator(state.basis)
    return SpectralState(state.basis, op.apply(state.coeffs))


def multiply_K_pointwise(state: SpectralState) -> SpectralState:
    """Collocation product: K sampled at the grid nodes, then projected.

    Kept as a diagnostic; its matrix elements converge only like Q^{-1/2} in
    the node count Q because log|x| is not resolved by Gauss-Hermite nodes.
    """
    from .spectral import GridField, from_coeffs, to_coeffs
    b = state.basis
    return to_coeffs(GridField(b, from_coeffs(state).values * K_grid_field(b).values))


def hardy_quotient(state: SpectralState) -> float:
    """|| |x|^-1 psi ||_{L^2} / ||psi||_{H^1} in three dimensions."""
    return float(hardy_quotients(state.basis, state.coeffs[None])[0])


def hardy_quotients(basis: HermiteBasis, coeffs: np.ndarray) -> np.ndarray:
    """Batch Hardy quotients for coefficient tensors (S,) + shape."""
    if basis.dim != 3:
        raise ValueError("the Hardy quotient is defined for dim = 3 only")
    den = np.sqrt(np.sum(basis.eigs * np.abs(coeffs) ** 2, axis=(1, 2, 3)))
    if np.any(den == 0):
        raise ValueError("Hardy quotient of the zero state is undefined")
    return inverse_square_norms(basis, coeffs) / den


def inverse_square_norms(basis: HermiteBasis, coeffs: np.ndarray) -> np.ndarray:
    """|| |x|^-1 psi ||_{L^2(R^3)} for a batch, exact for band-limited psi."""
    rule = inverse_square_rule(basis.dim, 2 * basis.dim * (basis.n_modes - 1))
    vals = eval_at_points(coeffs, _rule_vanders(basis, rule))
    return np.sqrt(np.abs(vals) ** 2 @ rule.weights)


def inverse_square_norm(state: SpectralState) -> float:
    return float(inverse_square_norms(state.basis, state.coeffs[None])[0])


def kpsi_h1_norms(basis: HermiteBasis, coeffs: np.ndarray) -> np.ndarray:
    """H^1 norms of the functions K psi themselves (not their projections), d = 3.

    ||K psi||_{H^1}^2 = int_{|x|<1} |psi grad K + K grad psi|^2 + |x|^2 |K psi|^2 dx,
    finite by the Hardy inequality. In d < 3 the integral diverges whenever
    psi(0) != 0, so only d = 3 is accepted.
    """
    if basis.dim != 3:
        raise ValueError("K psi lies in H^1 only for dim = 3")
    n = basis.n_modes
    rule = ball_rule_for(basis)
    v = _rule_vanders(basis, rule)
    d = derivative_matrix(n)
    v1 = [m @ d for m in _rule_vanders(basis, rule, n + 1)]
    psi = eval_at_points(coeffs, v)
    k = eval_K(rule.points)
    gk = grad_K(rule.points)
    dens = np.sum(rule.points ** 2, axis=1) * k * k * np.abs(psi) ** 2
    for ax in range(3):
        dpsi = eval_at_points(coeffs, [v1[i] if i == ax else v[i] for i in range(3)])
        dens = dens + np.abs(psi * gk[:, ax] + k * dpsi) ** 2
    return np.sqrt(dens @ rule.weights)


def grad_K_dot_grad(state: SpectralState) -> complex:
    """int conj(psi) grad K . grad psi dx over the unit ball."""
    b = state.basis
    n = b.n_modes
    rule = ball_rule_for(b, 2)
    v = _rule_vanders(b, rule)
    v1 = _rule_vanders(b, rule, n + 1)
    psi = eval_at_points(state.coeffs[None], v)[0]
    gk = grad_K(rule.points)
    d = derivative_matrix(n)
    total = 0.0
    for ax in range(b.dim):
        mats = [v1[i] @ d if i == ax else v[i] for i in range(b.dim)]
        dpsi = eval_at_points(state.coeffs[None], mats)[0]
        total = total + np.sum(rule.weights * np.conj(psi) * gk[:, ax] * dpsi)
    return complex(total)


def K_lp_norm(dim: int, p: float, levels: int | None = None) -> float:
    """||K||_{L^p(R^d)} by the polar ball rule; ``levels`` sets the radial grading."""
    rule = ball_rule(dim, 0, levels)
    return float(np.sum(rule.weights * np.abs(eval_K(rule.points)) ** p) ** (1 / p))


def K_lp_norm_exact(dim: int, p: float) -> float:
    """Closed form: |S^{d-1}| Gamma(p+1) / d^{p+1}, to the power 1/p."""
    area = 2 * np.pi ** (dim / 2) / gamma(dim / 2)
    return float((area * gamma(p + 1) / dim ** (p + 1)) ** (1 / p))


def K_grid_field(basis: HermiteBasis):
    from .spectral import GridField
    return GridField(basis, eval_K(basis.grid_points().reshape(-1, basis.dim)).reshape(basis.grid_shape))
