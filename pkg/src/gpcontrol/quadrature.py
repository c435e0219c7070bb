"""Radial/angular quadrature rules for integrals with radial singular weights.

Tensor Gauss-Hermite grids never resolve log|x| or |x|^-2 near the origin
(errors decay only like Q^-1/2), so integrals against such weights are done
in polar coordinates: an exact angular rule times a radial rule that knows
about the singularity.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_genlaguerre


@dataclass(frozen=True, eq=False)
class PointRule:
    """Scattered nodes in R^d with weights for the Lebesgue measure."""

    points: np.ndarray  # (P, d)
    weights: np.ndarray  # (P,)

    @property
    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.points, axis=1)

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def sphere_rule(dim: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Directions and weights exact for polynomials of total degree <= degree on S^{d-1}."""
    if dim == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    n_phi = degree + 1
    if n_phi % 2:
        n_phi += 1
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    if dim == 2:
        dirs = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        return dirs, np.full(n_phi, 2 * np.pi / n_phi)
    if dim == 3:
        z, wz = leggauss(degree // 2 + 1)
        s = np.sqrt(1 - z * z)
        dirs = np.stack([
            np.outer(s, np.cos(phi)).ravel(),
            np.outer(s, np.sin(phi)).ravel(),
            np.repeat(z, n_phi),
        ], axis=1)
        return dirs, np.outer(wz, np.full(n_phi, 2 * np.pi / n_phi)).ravel()
    raise ValueError(f"unsupported dimension {dim}")


def graded_unit_interval(levels: int, degree: int, base_order: int = 10):
    """Composite Gauss-Legendre on [0, 1], geometrically refined towards 0.

    Panel orders grow with panel width so that a polynomial of the given
    degree (times a smooth envelope) is resolved on the outer panels, while
    log-type endpoint behaviour is handled by the grading.
    """
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(levels, -1, -1)])
    r, w = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        n = int(min(max(base_order, np.ceil(degree * (b - a) / 2) + base_order), degree // 2 + base_order))
        g, gw = leggauss(n)
        r.append(0.5 * (b - a) * g + 0.5 * (a + b))
        w.append(0.5 * (b - a) * gw)
    return np.concatenate(r), np.concatenate(w)


@lru_cache(maxsize=None)
def ball_rule(dim: int, degree: int, levels: int | None = None) -> PointRule:
    """Rule for integrals over the open unit ball, robust to log|x| and |x|^{1-d}.

    ``degree`` is the polynomial degree of the smooth part of the integrand.
    """
    if levels is None:
        levels = int(np.ceil(40 / dim)) + 2
    r, wr = graded_unit_interval(levels, degree)
    dirs, wd = sphere_rule(dim, degree)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    w = np.outer(wr * r ** (dim - 1), wd).ravel()
    return PointRule(pts, w)


@lru_cache(maxsize=None)
def inverse_square_rule(dim: int, degree: int) -> PointRule:
    """Rule for integrals of |x|^-2 * p(x) * exp(-|x|^2) over R^d (d >= 3).

    Nodes carry a factor exp(+|x|^2) so that the rule is applied to the
    actual integrand f(x) = p(x) exp(-|x|^2) and returns int |x|^-2 f dx,
    exactly for polynomials p of total degree <= degree.
    """
    if dim < 3:
        raise ValueError("|x|^-2 is not locally integrable for d < 3")
    alpha = (dim - 4) / 2
    n_r = degree // 4 + 2
    s, ws = roots_genlaguerre(n_r, alpha)
    r = np.sqrt(s)
    dirs, wd = sphere_rule(dim, degree)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    # the |x|^-2 weight is folded in: W_q f(x_q) ~ int f(x)/|x|^2 dx
    radial = 0.5 * ws * np.exp(s)
    w = np.outer(radial, wd).ravel()
    return PointRule(pts, w)
