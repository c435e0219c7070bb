"""Energy, Strichartz-type norms, the epsilon_n functional and reachability probes."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .control import ControlSignal, weak_family
from .dynamics import (
    EvolutionConfig, Galerkin, Trajectory, evolve, galerkin, h1_norms,
)
from .spectral import (
    HermiteBasis, SpectralState, from_coeffs, grid_integral, lebesgue_sobolev_norm,
)

log = logging.getLogger(__name__)


def energy(state: SpectralState, sigma: int) -> float:
    """sum lambda |a|^2 + sum |a|^2 + sigma/2 int |psi|^4."""
    b = state.basis
    p = np.abs(state.coeffs) ** 2
    e = float(np.sum(b.eigs * p) + np.sum(p))
    if sigma:
        rho = np.abs(from_coeffs(state).values) ** 2
        e += 0.5 * sigma * float(np.real(grid_integral(b, rho * rho)))
    return e


def energies(basis: HermiteBasis, coeffs: np.ndarray, sigma: int, ctx: Galerkin | None = None) -> np.ndarray:
    """Batch version of energy over a trajectory array (M,) + shape."""
    axes = tuple(range(1, coeffs.ndim))
    p = np.abs(coeffs) ** 2
    e = np.sum(basis.eigs * p, axis=axes) + np.sum(p, axis=axes)
    if sigma:
        g = ctx or galerkin(basis)
        rho = np.abs(g.to_grid(coeffs)) ** 2
        e = e + 0.5 * sigma * np.tensordot(rho * rho, basis.grid_weights(), axes=basis.dim)
    return e


@dataclass
class RunRecord:
    times: np.ndarray
    mass: np.ndarray
    energy: np.ndarray
    h1: np.ndarray
    linf_grid: np.ndarray
    control_l1: np.ndarray
    w16: np.ndarray | None = None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mass", "energy", "h1", "linf_grid"])
            for row in zip(self.times, self.mass, self.energy, self.h1, self.linf_grid):
                w.writerow([f"{v:.17g}" for v in row])


def run_record(traj: Trajectory, sigma: int, u: ControlSignal | None = None, with_w16: bool = False) -> RunRecord:
    b = traj.basis
    c = traj.coeffs
    axes = tuple(range(1, c.ndim))
    grid = galerkin(b).to_grid(c)
    if u is not None:
        l1 = np.concatenate([[0.0], np.cumsum([u.abs_integral(a, t) for a, t in zip(traj.times[:-1], traj.times[1:])])])
    else:
        l1 = np.zeros(len(traj))
    return RunRecord(
        times=traj.times.copy(),
        mass=np.sqrt(np.sum(np.abs(c) ** 2, axis=axes)),
        energy=energies(b, c, sigma),
        h1=h1_norms(b, c),
        linf_grid=np.max(np.abs(grid).reshape(len(c), -1), axis=1),
        control_l1=l1,
        w16=w16_series(traj) if with_w16 else None,
    )


def w16_series(traj: Trajectory) -> np.ndarray:
    return np.array([lebesgue_sobolev_norm(s, 1, 6) for s in traj.states])


def x1t_norm(traj: Trajectory, w16: np.ndarray | None = None) -> tuple[float, float]:
    """(sup_t ||psi||_{H^1}, (int ||psi||_{W^{1,6}}^2 dt)^{1/2}) with the trapezoid rule."""
    if w16 is None:
        w16 = traj.record.w16 if traj.record is not None and traj.record.w16 is not None else w16_series(traj)
    linf = float(np.max(h1_norms(traj.basis, traj.coeffs)))
    l2 = float(np.sqrt(np.trapezoid(np.asarray(w16) ** 2, traj.times)))
    return linf, l2


def kpsi_ltq_h1(traj: Trajectory, q: float, ctx: Galerkin | None = None) -> float:
    """|| K psi ||_{L^q_T H^1} for the Galerkin product K psi."""
    g = ctx or galerkin(traj.basis)
    kh = h1_norms(traj.basis, g.apply_K(traj.coeffs))
    return float(np.trapezoid(kh ** q, traj.times) ** (1.0 / q))


def duhamel_control_term(traj: Trajectory, weight: np.ndarray, ctx: Galerkin | None = None) -> np.ndarray:
    """Trapezoid values of int_0^t w(tau) e^{i(t-tau)H} (K psi(tau)) dtau on the trajectory grid."""
    g = ctx or galerkin(traj.basis)
    eigs = traj.basis.eigs
    lead = (slice(None),) + (None,) * traj.basis.dim
    tau = traj.times - traj.times[0]
    back = np.exp(-1j * tau[lead] * eigs)
    G = back * (np.asarray(weight)[lead] * g.apply_K(traj.coeffs))
    h = np.diff(tau)[lead]
    integ = np.concatenate([np.zeros_like(G[:1]), np.cumsum(0.5 * h * (G[:-1] + G[1:]), axis=0)])
    return np.conj(back) * integ


def epsilon_n(psi_traj: Trajectory, u: ControlSignal, u_n: ControlSignal, ctx: Galerkin | None = None) -> float:
    """sup_t || int_0^t (u_n - u) e^{i(t-tau)H} (K psi) dtau ||_{H^1}."""
    weight = np.asarray(u_n(psi_traj.times)) - np.asarray(u(psi_traj.times))
    if not np.any(weight):
        return 0.0
    vals = duhamel_control_term(psi_traj, weight, ctx)
    return float(np.max(h1_norms(psi_traj.basis, vals)))


@dataclass
class WeakLimitRow:
    n: int
    eps_n: float
    zn_linf_h1: float

    @property
    def ratio(self) -> float:
        return self.zn_linf_h1 / self.eps_n if self.eps_n > 0 else float("nan")


def _pool_map(fn, items, threads):
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(fn, items))


def weak_limit_experiment(psi0: SpectralState, u: ControlSignal, n_list, cfg: EvolutionConfig,
                          family=weak_family, threads: int = 1) -> list[WeakLimitRow]:
    """z_n = psi - psi_n for u_n = family(u, n), against epsilon_n."""
    n_list = list(n_list)
    if not n_list:
        return []
    ref = evolve(psi0, u, cfg, record=False)

    def one(n):
        un = family(u, n)
        traj_n = evolve(psi0, un, cfg, record=False)
        zn = float(np.max(h1_norms(ref.basis, ref.coeffs - traj_n.coeffs)))
        return WeakLimitRow(n, epsilon_n(ref, u, un), zn)

    return _pool_map(one, n_list, threads)


def write_weak_limit_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "eps_n", "zn_linf_h1", "ratio"])
        for r in rows:
            w.writerow([r.n, f"{r.eps_n:.17g}", f"{r.zn_linf_h1:.17g}", f"{r.ratio:.17g}"])


@dataclass
class ReachSample:
    control: dict
    t: float
    terminal: SpectralState | None
    r: float
    lr_norm: float
    h1: float
    error: str | None = None


def reach_sample(psi0: SpectralState, controls, horizons, cfg: EvolutionConfig, r: float = 2.0,
                 threads: int = 1) -> list[ReachSample]:
    """Terminal states Phi^u(t)(psi0) for paired (control, horizon) lists.

    Integrator failures are recorded on the sample rather than raised.
    """
    controls, horizons = list(controls), list(horizons)
    if len(controls) != len(horizons):
        raise ValueError("controls and horizons must pair up")

    def one(pair):
        u, t = pair
        lr = u.lr_norm(r, t) if t > 0 else 0.0
        if t == 0:
            return ReachSample(u.to_json(), 0.0, psi0, r, lr, psi0.norm(1))
        sub = EvolutionConfig(cfg.sigma, min(cfg.dt, t), t, cfg.integrator, cfg.picard_tol, cfg.picard_max_iter)
        try:
            fin = evolve(psi0, u, sub, record=False).final
        except Exception as exc:  # noqa: BLE001 - recorded per sample
            return ReachSample(u.to_json(), t, None, r, lr, float("nan"), error=str(exc))
        return ReachSample(u.to_json(), t, fin, r, lr, fin.norm(1))

    return _pool_map(one, list(zip(controls, horizons)), threads)


def write_reach_csv(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "t", "r", "lr_norm", "h1"])
        for i, s in enumerate(samples):
            w.writerow([i, f"{s.t:.17g}", f"{s.r:.17g}", f"{s.lr_norm:.17g}", f"{s.h1:.17g}"])


def h1_distance_matrix(states) -> np.ndarray:
    b = states[0].basis
    X = np.stack([s.coeffs.ravel() for s in states]) * np.sqrt(b.eigs.ravel())
    g = X @ X.conj().T
    sq = np.real(np.diag(g))
    d2 = sq[:, None] + sq[None, :] - 2 * np.real(g)
    return np.sqrt(np.maximum(d2, 0.0))


def covering_number(samples, eps: float, dist: np.ndarray | None = None) -> int:
    """Size of a greedy eps-net in H^1 distance (first uncovered sample becomes a center)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if len(samples) == 0:
        return 0
    D = h1_distance_matrix(samples) if dist is None else dist
    covered = np.zeros(len(D), bool)
    centers = 0
    for i in range(len(D)):
        if not covered[i]:
            centers += 1
            covered |= D[i] <= eps
    return centers


def random_sphere_states(basis: HermiteBasis, count: int, radius: float, rng: np.random.Generator):
    """Uniform samples on the H^1 sphere of the given radius."""
    out = []
    w = np.sqrt(basis.eigs)
    for _ in range(count):
        g = rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)
        g *= radius / np.linalg.norm(g)
        out.append(SpectralState(basis, g / w))
    return out


def write_covering_csv(eps_list, sizes, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "net_size"])
        for e, n in zip(eps_list, sizes):
            w.writerow([f"{e:.17g}", n])


def energy_growth_rate(traj: Trajectory, ctx: Galerkin | None = None) -> np.ndarray:
    """Instantaneous |E'(t)| / E(t) per unit |u| for sigma = 0: 2 |Im <K a, Lambda a>| / E."""
    g = ctx or galerkin(traj.basis)
    c = traj.coeffs
    axes = tuple(range(1, c.ndim))
    ka = g.apply_K(c)
    num = 2 * np.abs(np.imag(np.sum(np.conj(ka) * traj.basis.eigs * c, axis=axes)))
    return num / energies(traj.basis, c, 0)


@dataclass
class EnergyBoundFit:
    c_emp: float
    train_ratios: list = field(default_factory=list)
    test_ratios: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(r > self.c_emp for r in self.test_ratios)


def growth_ratio(traj: Trajectory, u: ControlSignal) -> float:
    e = energies(traj.basis, traj.coeffs, 0)
    l1 = u.abs_integral(traj.times[0], traj.times[-1])
    return float(np.log(e[-1] / e[0]) / l1) if l1 > 0 else 0.0


def fit_energy_bound(psi0: SpectralState, train, test, cfg: EvolutionConfig) -> EnergyBoundFit:
    """Fit c in log(E(T)/E(0)) <= c int |u| on training controls, score fresh ones.

    The constant is the largest instantaneous growth rate |E'|/(|u| E) seen
    along the training trajectories, the quantity the Gronwall argument bounds.
    """
    if cfg.sigma != 0:
        raise ValueError("the energy growth identity is fitted for sigma = 0")
    c_emp, train_r = 0.0, []
    for u in train:
        traj = evolve(psi0, u, cfg, record=False)
        c_emp = max(c_emp, float(np.max(energy_growth_rate(traj))))
        train_r.append(growth_ratio(traj, u))
    test_r = [growth_ratio(evolve(psi0, u, cfg, record=False), u) for u in test]
    return EnergyBoundFit(c_emp, train_r, test_r)


def kpsi_time_norms(basis: HermiteBasis, coeffs: np.ndarray, ctx: Galerkin | None = None) -> np.ndarray:
    """||K psi(t)||_{H^1} per sample.

    In 3D the continuum norm is finite for band-limited psi and is computed
    exactly; below 3D K psi leaves H^1 whenever psi(0) != 0, so the Galerkin
    projection is the only finite version.
    """
    if basis.dim == 3:
        from .potentials import kpsi_h1_norms
        return kpsi_h1_norms(basis, coeffs)
    g = ctx or galerkin(basis)
    return h1_norms(basis, g.apply_K(coeffs))


def lemma_kpsi_ratios(basis: HermiteBasis, n_traj: int, q_list, rng: np.random.Generator,
                      T: float = 1.0, n_times: int = 11, band: int | None = None) -> dict:
    """||K psi||_{L^q_T H^1} / ||psi||_{X^1_T} over random free-flow trajectories.

    States are drawn on the ``band``-mode basis and embedded, so every basis
    size sees the same trajectories. Returns {q: array of n_traj ratios}.
    """
    from .dynamics import free_trajectory
    from .spectral import build_basis, random_state
    band = basis.n_modes if band is None else band
    small = build_basis(basis.dim, band)
    times = np.linspace(0.0, T, n_times)
    out = {q: np.empty(n_traj) for q in q_list}
    for i in range(n_traj):
        c = np.zeros(basis.shape, complex)
        c[(slice(0, band),) * basis.dim] = random_state(small, rng).coeffs
        traj = free_trajectory(SpectralState(basis, c), times)
        linf, l2 = x1t_norm(traj)
        kh = kpsi_time_norms(basis, traj.coeffs)
        for q in q_list:
            out[q][i] = float(np.trapezoid(kh ** q, times) ** (1.0 / q)) / (linf + l2)
    return out


def energy_identity_error(traj: Trajectory, u: ControlSignal, stride: int = 50, sign: float = -1.0) -> float:
    """Relative gap between the difference quotient of E and -2 u Im int conj(psi) grad K . grad psi.

    Evaluated at step midpoints every ``stride`` steps for sigma = 0.
    ``sign`` exists so tests can inject the opposite convention.
    """
    from .potentials import grad_K_dot_grad
    b, t = traj.basis, traj.times
    e = energies(b, traj.coeffs, 0)
    idx = np.arange(0, len(t) - 1, stride)
    fd = (e[idx + 1] - e[idx]) / np.diff(t)[idx]
    pred = np.array([
        sign * 2 * u.cell_average(t[k], t[k + 1])
        * grad_K_dot_grad(SpectralState(b, 0.5 * (traj.coeffs[k] + traj.coeffs[k + 1]))).imag
        for k in idx
    ])
    scale = np.max(np.abs(pred))
    if scale == 0:
        return float(np.max(np.abs(fd)))
    return float(np.max(np.abs(fd - pred)) / scale)


def sample_controls(rng: np.random.Generator, n: int, r: float, radius: float, T: float, pieces: int = 8):
    """n piecewise-constant controls with ||u||_{L^r(0,t)} uniform in [0, radius], t uniform in (0, T].

    radius = 0 yields zero controls.
    """
    from .control import Zero, piecewise_constant, random_piecewise
    controls, horizons = [], []
    for _ in range(n):
        t = float(T * (1.0 - rng.uniform()))
        if radius == 0:
            controls.append(Zero(horizon=t))
        else:
            base = random_piecewise(rng, t, pieces)
            target = radius * rng.uniform()
            norm = base.lr_norm(r)
            controls.append(piecewise_constant(base.breakpoints, np.asarray(base.values_) * (target / norm)))
        horizons.append(t)
    return controls, horizons
