"""Hermite eigenbasis of H = -Laplacian + |x|^2 on R^d, d in {1, 2, 3}.

States are stored as coefficient tensors of shape (N,)*d (row-major over the
multi-index). Physical values live on the tensor Gauss-Hermite grid with 2N
nodes per axis.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import roots_hermite


class BasisMismatchError(ValueError):
    pass


def hermite_functions(n: int, x) -> np.ndarray:
    """Values h_0..h_{n-1} at x, shape (n,) + x.shape, via the normalized recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * x * x)
    if n > 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for k in range(1, n - 1):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * x * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def derivative_matrix(n: int) -> np.ndarray:
    """(n+1, n) matrix of d/dx on Hermite coefficients.

    h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}
    """
    D = np.zeros((n + 1, n))
    k = np.arange(n)
    D[k[1:] - 1, k[1:]] = np.sqrt(k[1:] / 2)
    D[k + 1, k] = -np.sqrt((k + 1) / 2)
    return D


@dataclass(frozen=True, eq=False)
class HermiteBasis:
    dim: int
    n_modes: int
    nodes: np.ndarray  # per-axis abscissae, length 2N
    weights: np.ndarray  # per-axis weights for int f dx (Gaussian factor removed)
    eigs: np.ndarray  # shape (N,)*dim, lambda_k = sum_i (2 k_i + 1)
    vander: np.ndarray  # (2N, N+1): h_k(nodes); the extra column serves gradients

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_modes,) * self.dim

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return (len(self.nodes),) * self.dim

    @property
    def size(self) -> int:
        return self.n_modes ** self.dim

    def __eq__(self, other):
        return isinstance(other, HermiteBasis) and (self.dim, self.n_modes) == (other.dim, other.n_modes)

    def __hash__(self):
        return hash((self.dim, self.n_modes))

    def __repr__(self):
        return f"HermiteBasis(dim={self.dim}, n_modes={self.n_modes})"

    def grid_points(self) -> np.ndarray:
        """Tensor grid as an array of shape grid_shape + (dim,)."""
        mesh = np.meshgrid(*([self.nodes] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def grid_weights(self) -> np.ndarray:
        w = self.weights
        for _ in range(self.dim - 1):
            w = np.multiply.outer(w, self.weights)
        return w

    def multi_indices(self) -> np.ndarray:
        return np.array(list(np.ndindex(*self.shape)), dtype=int).reshape(-1, self.dim)


@lru_cache(maxsize=None)
def build_basis(dim: int, n_modes: int) -> HermiteBasis:
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if n_modes < 2 or n_modes % 2:
        raise ValueError(f"n_modes must be an even integer >= 2, got {n_modes}")
    q = 2 * n_modes
    x, _ = roots_hermite(q)
    vander = hermite_functions(n_modes + 1, x).T
    # w * exp(x^2) computed as 1 / (q h_{q-1}(x)^2), free of overflow
    weights = 1.0 / (q * hermite_functions(q, x)[-1] ** 2)
    lam1 = 2 * np.arange(n_modes) + 1.0
    eigs = np.zeros((n_modes,) * dim)
    for ax in range(dim):
        eigs = eigs + lam1.reshape([-1 if i == ax else 1 for i in range(dim)])
    for arr in (x, weights, vander, eigs):
        arr.setflags(write=False)
    return HermiteBasis(dim, n_modes, x, weights, eigs, vander)


@dataclass(frozen=True, eq=False)
class SpectralState:
    basis: HermiteBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.basis.shape:
            raise ValueError(f"coefficient shape {c.shape} does not match basis {self.basis.shape}")
        object.__setattr__(self, "coeffs", c)

    def _check(self, other: SpectralState):
        if other.basis != self.basis:
            raise BasisMismatchError(f"{self.basis} vs {other.basis}")

    def __add__(self, other):
        self._check(other)
        return SpectralState(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return SpectralState(self.basis, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralState(self.basis, c * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralState(self.basis, -self.coeffs)

    def mass(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def norm(self, s: float = 1.0) -> float:
        return sobolev_norm(self, s)


@dataclass(frozen=True, eq=False)
class GridField:
    basis: HermiteBasis
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != self.basis.grid_shape:
            raise ValueError(f"grid shape {v.shape} does not match basis grid {self.basis.grid_shape}")
        object.__setattr__(self, "values", v)


def zeros(basis: HermiteBasis) -> SpectralState:
    return SpectralState(basis, np.zeros(basis.shape, complex))


def mode(basis: HermiteBasis, k, amplitude: complex = 1.0) -> SpectralState:
    c = np.zeros(basis.shape, complex)
    c[tuple(np.atleast_1d(k))] = amplitude
    return SpectralState(basis, c)


def ground_state(basis: HermiteBasis) -> SpectralState:
    return mode(basis, (0,) * basis.dim)


def random_state(basis: HermiteBasis, rng: np.random.Generator, band: int | None = None) -> SpectralState:
    """Unit-mass state with complex Gaussian coefficients damped by 1/lambda_k.

    ``band`` restricts the support to the first ``band`` modes per axis.
    """
    g = rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)
    c = g / basis.eigs
    if band is not None:
        mask = np.zeros(basis.shape, bool)
        mask[(slice(0, band),) * basis.dim] = True
        c = np.where(mask, c, 0)
    return SpectralState(basis, c / np.linalg.norm(c))


def apply_axes(arr: np.ndarray, mats) -> np.ndarray:
    """Apply mats[i] (a matrix) along axis i of arr."""
    for ax, m in enumerate(mats):
        arr = np.moveaxis(np.tensordot(m, arr, axes=([1], [ax])), 0, ax)
    return arr


def from_coeffs(state: SpectralState) -> GridField:
    b = state.basis
    v = b.vander[:, : b.n_modes]
    return GridField(b, apply_axes(state.coeffs, [v] * b.dim))


def to_coeffs(field: GridField, basis: HermiteBasis | None = None) -> SpectralState:
    b = field.basis
    if basis is not None and basis != b:
        raise BasisMismatchError(f"{b} vs {basis}")
    fwd = (b.vander[:, : b.n_modes] * b.weights[:, None]).T
    return SpectralState(b, apply_axes(np.asarray(field.values, complex), [fwd] * b.dim))


def propagate_free(state: SpectralState, t: float) -> SpectralState:
    """Exact e^{itH}: alpha_k -> exp(i t lambda_k) alpha_k."""
    return SpectralState(state.basis, np.exp(1j * t * state.basis.eigs) * state.coeffs)


def sobolev_norm(state: SpectralState, s: float) -> float:
    w = state.basis.eigs ** s
    return float(np.sqrt(np.sum(w * np.abs(state.coeffs) ** 2)))


def grid_integral(basis: HermiteBasis, values: np.ndarray) -> complex:
    """int f dx for grid samples of f = (polynomial) * Gaussian."""
    return np.tensordot(values, basis.grid_weights(), axes=basis.dim)


def gradient_on_grid(state: SpectralState) -> np.ndarray:
    """Grid values of the gradient, shape (dim,) + grid_shape; exact on the span."""
    b = state.basis
    n = b.n_modes
    d = derivative_matrix(n)
    v_n, v_n1 = b.vander[:, :n], b.vander
    comps = []
    for ax in range(b.dim):
        mats = [v_n1 @ d if i == ax else v_n for i in range(b.dim)]
        comps.append(apply_axes(state.coeffs, mats))
    return np.stack(comps)


def lebesgue_sobolev_norm(state: SpectralState, s: int, p: float) -> float:
    """||f||_{L^p} (s=0) or ||grad f||_{L^p} + ||<x> f||_{L^p} (s=1), by grid quadrature.

    The gradient form is equivalent to the (-Laplacian)^{1/2} form for 1 < p < inf
    and is exact in the Hermite calculus.
    """
    if s not in (0, 1):
        raise ValueError("only s in {0, 1} is supported for L^p based norms")
    b = state.basis
    f = from_coeffs(state).values

    def lp(a):
        if np.isinf(p):
            return float(np.max(a))
        return float(np.real(grid_integral(b, a ** p)) ** (1.0 / p))

    if s == 0:
        return lp(np.abs(f))
    grad = np.sqrt(np.sum(np.abs(gradient_on_grid(state)) ** 2, axis=0))
    bracket = np.sqrt(1.0 + np.sum(b.grid_points() ** 2, axis=-1))
    return lp(grad) + lp(bracket * np.abs(f))


def axis_vander(basis: HermiteBasis, coords: np.ndarray, n: int | None = None) -> np.ndarray:
    """(P, n) values h_k(coords) for scattered 1D coordinates."""
    return hermite_functions(n or basis.n_modes, coords).T


_CHUNK_BUDGET = 1 << 22  # complex entries held by one intermediate block


def _chunk(batch: int, shape) -> int:
    return max(64, _CHUNK_BUDGET // max(1, batch * int(np.prod(shape[:-1]))))


def eval_at_points(coeffs: np.ndarray, vanders) -> np.ndarray:
    """Evaluate a batch of coefficient tensors (S,)+shape at scattered points.

    ``vanders[i]`` is the (P, N_i) matrix of axis-i basis values at the points.
    Returns (S, P).
    """
    d = len(vanders)
    n_pts = vanders[0].shape[0]
    out = np.empty((coeffs.shape[0], n_pts), complex)
    chunk = _chunk(coeffs.shape[0], coeffs.shape[1:])
    for lo in range(0, n_pts, chunk):
        sl = slice(lo, lo + chunk)
        acc = coeffs @ vanders[-1][sl].T
        for i in range(d - 2, -1, -1):
            acc = np.einsum("...ap,pa->...p", acc, vanders[i][sl])
        out[:, sl] = acc
    return out


def project_from_points(values: np.ndarray, weights: np.ndarray, vanders) -> np.ndarray:
    """Adjoint of eval_at_points: c_a = sum_q w_q v_q prod_i h_{a_i}(x_{q,i}); values (S, P)."""
    d = len(vanders)
    shape = tuple(v.shape[1] for v in vanders)
    out = np.zeros((values.shape[0],) + shape, complex)
    chunk = _chunk(values.shape[0], shape)
    for lo in range(0, values.shape[1], chunk):
        sl = slice(lo, lo + chunk)
        acc = values[:, sl] * weights[sl]
        for i in range(d - 1):
            acc = acc[..., None, :] * vanders[i][sl].T
        out += acc @ vanders[-1][sl]
    return out


def write_state_csv(state: SpectralState, path) -> None:
    b = state.basis
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"k_{i + 1}" for i in range(b.dim)] + ["re", "im"])
        for idx in np.ndindex(*b.shape):
            c = state.coeffs[idx]
            w.writerow(list(idx) + [f"{c.real:.17g}", f"{c.imag:.17g}"])


def read_state_csv(path, basis: HermiteBasis) -> SpectralState:
    """Read a coefficient CSV; indices absent from the file are zero."""
    coeffs = np.zeros(basis.shape, complex)
    with open(Path(path), newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        expected = [f"k_{i + 1}" for i in range(basis.dim)] + ["re", "im"]
        if header != expected:
            raise ValueError(f"bad header {header}, expected {expected}")
        for line, row in enumerate(rows, start=2):
            if len(row) != basis.dim + 2:
                raise ValueError(f"line {line}: expected {basis.dim + 2} fields")
            idx = tuple(int(v) for v in row[: basis.dim])
            if any(k < 0 or k >= basis.n_modes for k in idx):
                raise ValueError(f"line {line}: index {idx} outside 0..{basis.n_modes - 1}")
            coeffs[idx] = complex(float(row[-2]), float(row[-1]))
    return SpectralState(basis, coeffs)


def write_field_csv(field: GridField, path) -> None:
    b = field.basis
    pts = b.grid_points().reshape(-1, b.dim)
    vals = np.asarray(field.values).ravel()
    cplx = np.iscomplexobj(vals)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{i + 1}" for i in range(b.dim)] + (["re", "im"] if cplx else ["value"]))
        for x, v in zip(pts, vals):
            tail = [f"{v.real:.17g}", f"{v.imag:.17g}"] if cplx else [f"{v:.17g}"]
            w.writerow([f"{c:.17g}" for c in x] + tail)
