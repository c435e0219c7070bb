"""Time evolution of i psi_t + H psi = u(t) K psi - sigma |psi|^2 psi.

Both potential terms act through Galerkin matrices (K from the polar ball
rule, |psi|^2 from the 2N-node grid), so every sub-step is the exponential
of a Hermitian matrix and mass is conserved to round-off.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.sparse.linalg import LinearOperator, expm_multiply

from .control import ControlSignal
from .potentials import KOperator, k_operator
from .spectral import HermiteBasis, SpectralState, propagate_free

log = logging.getLogger(__name__)

DENSE_LIMIT = 512
MAX_DT = 0.1


class NumericalError(RuntimeError):
    pass


class PicardNonConvergence(NumericalError):
    def __init__(self, msg, iterations, ratio):
        super().__init__(f"{msg} (iterations={iterations}, contraction ratio={ratio:.3g})")
        self.iterations = iterations
        self.ratio = ratio


@dataclass(frozen=True)
class EvolutionConfig:
    sigma: int = 0
    dt: float = 1e-3
    T: float = 1.0
    integrator: str = "strang"
    picard_tol: float = 1e-12
    picard_max_iter: int = 60

    def __post_init__(self):
        if self.sigma not in (0, 1):
            raise ValueError("sigma must be 0 or 1")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.integrator not in ("strang", "picard"):
            raise ValueError("integrator must be 'strang' or 'picard'")
        if not self.picard_tol > 0 or self.picard_max_iter < 1:
            raise ValueError("picard_tol must be > 0 and picard_max_iter >= 1")

    def time_grid(self) -> np.ndarray:
        n = max(1, int(np.ceil(self.T / self.dt - 1e-9)))
        return np.linspace(0.0, self.T, n + 1)


@dataclass(eq=False)
class Trajectory:
    basis: HermiteBasis
    times: np.ndarray
    coeffs: np.ndarray  # (M,) + basis.shape
    record: object = None
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def state(self, j: int) -> SpectralState:
        return SpectralState(self.basis, self.coeffs[j])

    @property
    def states(self) -> list[SpectralState]:
        return [self.state(j) for j in range(len(self))]

    @property
    def final(self) -> SpectralState:
        return self.state(-1)


def h1_norms(basis: HermiteBasis, coeffs: np.ndarray) -> np.ndarray:
    """H^1 norms of a batch (M,) + shape."""
    axes = tuple(range(1, coeffs.ndim))
    return np.sqrt(np.sum(basis.eigs * np.abs(coeffs) ** 2, axis=axes))


class Galerkin:
    """Per-basis operators for the potential and cubic terms."""

    def __init__(self, basis: HermiteBasis, k_op: KOperator | None = None):
        self.basis = basis
        self.K = k_op if k_op is not None else k_operator(basis)
        n = basis.n_modes
        self.v = basis.vander[:, :n]
        self.fwd = (self.v * basis.weights[:, None]).T
        self.dense = basis.size <= DENSE_LIMIT

    def _axes(self, arr, mat):
        d = self.basis.dim
        lead = arr.ndim - d
        for ax in range(lead, lead + d):
            arr = np.moveaxis(np.tensordot(mat, arr, axes=([1], [ax])), 0, ax)
        return arr

    def to_grid(self, coeffs):
        return self._axes(coeffs, self.v)

    def to_coeffs(self, values):
        return self._axes(values, self.fwd)

    def nonlinear(self, coeffs):
        """P_N(|psi|^2 psi), batch aware."""
        psi = self.to_grid(coeffs)
        return self.to_coeffs(np.abs(psi) ** 2 * psi)

    def apply_K(self, coeffs):
        return self.K.apply(coeffs)

    @cached_property
    def grid_matrix(self) -> np.ndarray:
        m = self.v
        for _ in range(self.basis.dim - 1):
            m = np.kron(m, self.v)
        return m

    def density_matrix(self, rho: np.ndarray) -> np.ndarray:
        w = (self.basis.grid_weights() * rho).ravel()
        phi = self.grid_matrix
        return phi.T @ (w[:, None] * phi)

    def phase(self, alpha, ubar, theta, sigma, rho=None):
        """exp(-i theta (ubar K - sigma rho)) alpha in Galerkin form."""
        shape = alpha.shape
        a = alpha.ravel()
        nonlin = sigma != 0 and rho is not None
        if not nonlin:
            if ubar == 0:
                return alpha
            if self.dense:
                w, V = self.K.eigh
                return (V @ (np.exp(-1j * theta * ubar * w) * (V.T @ a))).reshape(shape)
        if self.dense:
            M = ubar * self.K.matrix - sigma * self.density_matrix(rho)
            w, V = np.linalg.eigh(M)
            return (V @ (np.exp(-1j * theta * w) * (V.conj().T @ a))).reshape(shape)

        def matvec(x):
            x = x.reshape(shape)
            y = ubar * self.apply_K(x)
            if nonlin:
                y = y - sigma * self.to_coeffs(rho * self.to_grid(x))
            return (-1j * theta) * y.ravel()

        op = LinearOperator((a.size, a.size), matvec=matvec, dtype=complex)
        return expm_multiply(op, a, traceA=0.0).reshape(shape)


@lru_cache(maxsize=None)
def galerkin(basis: HermiteBasis) -> Galerkin:
    return Galerkin(basis)


def _density(g: Galerkin, alpha):
    return np.abs(g.to_grid(alpha)) ** 2


def strang_step(state: SpectralState, u: ControlSignal, t: float, dt: float, sigma: int,
                ctx: Galerkin | None = None, implicit_tol: float = 1e-14) -> SpectralState:
    """One symmetric Strang step: half potential phase, free flow, half potential phase.

    The first half-step freezes |psi|^2 at its start, the last one at its end
    (solved by fixed-point iteration), which makes the step time-symmetric and
    hence second order.
    """
    if dt > MAX_DT:
        raise ValueError(f"dt={dt} exceeds the step guard {MAX_DT}")
    g = ctx or galerkin(state.basis)
    ubar = u.cell_average(t, t + dt)
    eigs = state.basis.eigs
    a = state.coeffs
    rho = _density(g, a) if sigma else None
    a = g.phase(a, ubar, dt / 2, sigma, rho)
    a = np.exp(1j * dt * eigs) * a
    b = g.phase(a, ubar, dt / 2, sigma, _density(g, a) if sigma else None)
    if sigma:
        for _ in range(100):
            nb = g.phase(a, ubar, dt / 2, sigma, _density(g, b))
            delta = np.max(np.abs(nb - b))
            b = nb
            if delta < implicit_tol:
                break
        else:
            raise NumericalError(f"implicit half-step did not converge at t={t}")
    return SpectralState(state.basis, b)


def _check_finite(a, t):
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"non-finite coefficients at t={t:.6g}")


def strang_evolve(psi0: SpectralState, u: ControlSignal, cfg: EvolutionConfig,
                  ctx: Galerkin | None = None) -> Trajectory:
    g = ctx or galerkin(psi0.basis)
    times = cfg.time_grid()
    out = np.empty((len(times),) + psi0.basis.shape, complex)
    out[0] = psi0.coeffs
    s = psi0
    for j in range(len(times) - 1):
        s = strang_step(s, u, times[j], times[j + 1] - times[j], cfg.sigma, g)
        _check_finite(s.coeffs, times[j + 1])
        out[j + 1] = s.coeffs
    return Trajectory(psi0.basis, times, out)


def duhamel_map(alpha0, tau, uvals, path, sigma, ctx: Galerkin) -> np.ndarray:
    """Discrete mild map on one window, trapezoid rule in time.

    Returns e^{i tau_j H} alpha0 - i sum u K psi + i sigma sum |psi|^2 psi with the
    Duhamel integrals evaluated by the trapezoid rule on ``tau`` (window-relative
    times starting at 0).
    """
    eigs = ctx.basis.eigs
    lead = (slice(None),) + (None,) * ctx.basis.dim
    F = -1j * uvals[lead] * ctx.apply_K(path)
    if sigma:
        F = F + 1j * sigma * ctx.nonlinear(path)
    back = np.exp(-1j * tau[lead] * eigs)
    G = back * F
    h = np.diff(tau)[lead]
    incr = 0.5 * h * (G[:-1] + G[1:])
    integ = np.concatenate([np.zeros_like(G[:1]), np.cumsum(incr, axis=0)])
    return np.conj(back) * (alpha0 + integ)


def _sup_h1(basis, diff):
    return float(np.max(h1_norms(basis, diff)))


def picard_window(alpha0, tau, uvals, sigma, ctx: Galerkin, tol: float, max_iter: int):
    """Fixed-point iteration of the discrete Duhamel map on one window.

    Returns (path, iterations, ratios) where ratios are successive-difference
    quotients, the measured contraction factor of the map.
    """
    eigs = ctx.basis.eigs
    lead = (slice(None),) + (None,) * ctx.basis.dim
    path = np.exp(1j * tau[lead] * eigs) * alpha0
    diffs, ratios = [], []
    for it in range(1, max_iter + 1):
        new = duhamel_map(alpha0, tau, uvals, path, sigma, ctx)
        _check_finite(new, tau[-1])
        d = _sup_h1(ctx.basis, new - path)
        path = new
        if diffs and diffs[-1] > 1e3 * tol:
            ratios.append(d / diffs[-1])
        diffs.append(d)
        if d < tol:
            return path, it, ratios
        if len(ratios) >= 3 and ratios[-1] >= 1.0:
            break
    raise PicardNonConvergence("Picard iteration did not converge", len(diffs), ratios[-1] if ratios else np.nan)


def picard_solve(psi0: SpectralState, u: ControlSignal, cfg: EvolutionConfig,
                 ctx: Galerkin | None = None, max_factor: float = 0.5) -> Trajectory:
    """Mild solution by Picard iteration on adaptively sized windows.

    The window starts at the full horizon and is halved until the measured
    contraction factor drops below ``max_factor``; the solver then advances
    window by window.
    """
    g = ctx or galerkin(psi0.basis)
    times = cfg.time_grid()
    uvals = np.asarray(u(times), dtype=float)
    n = len(times) - 1
    out = np.empty((n + 1,) + psi0.basis.shape, complex)
    out[0] = psi0.coeffs
    width = n
    j0 = 0
    windows = []
    while j0 < n:
        j1 = min(n, j0 + width)
        tau = times[j0:j1 + 1] - times[j0]
        try:
            path, iters, ratios = picard_window(out[j0], tau, uvals[j0:j1 + 1], cfg.sigma, g,
                                                cfg.picard_tol, cfg.picard_max_iter)
            factor = max(ratios) if ratios else 0.0
        except PicardNonConvergence as exc:
            if width == 1:
                raise
            factor, iters = exc.ratio, exc.iterations
            path = None
        if path is None or factor >= max_factor:
            if width == 1:
                raise PicardNonConvergence("no contracting window found", iters, factor)
            width = max(1, width // 2)
            continue
        out[j0 + 1:j1 + 1] = path[1:]
        windows.append({"t0": float(times[j0]), "t1": float(times[j1]), "iterations": iters,
                        "factor": float(factor)})
        j0 = j1
    return Trajectory(psi0.basis, times, out, info={"windows": windows})


def evolve(psi0: SpectralState, u: ControlSignal, cfg: EvolutionConfig,
           ctx: Galerkin | None = None, record: bool = True) -> Trajectory:
    if cfg.integrator == "strang":
        traj = strang_evolve(psi0, u, cfg, ctx)
    else:
        traj = picard_solve(psi0, u, cfg, ctx)
    if record:
        from .analysis import run_record
        traj.record = run_record(traj, cfg.sigma, u)
    return traj


def free_trajectory(psi0: SpectralState, times) -> Trajectory:
    times = np.asarray(times, dtype=float)
    coeffs = np.stack([propagate_free(psi0, t).coeffs for t in times])
    return Trajectory(psi0.basis, times, coeffs)


def mild_residual(traj: Trajectory, u: ControlSignal, sigma: int, ctx: Galerkin | None = None) -> float:
    """Discrete L^inf_T H^1 distance between a trajectory and its Duhamel image."""
    g = ctx or galerkin(traj.basis)
    tau = traj.times - traj.times[0]
    uvals = np.asarray(u(traj.times), dtype=float)
    image = duhamel_map(traj.coeffs[0], tau, uvals, traj.coeffs, sigma, g)
    return _sup_h1(traj.basis, traj.coeffs - image)
