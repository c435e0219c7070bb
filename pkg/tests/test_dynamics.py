import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpcontrol.control import Sinusoid, Zero, piecewise_constant
from gpcontrol.dynamics import (
    EvolutionConfig, NumericalError, PicardNonConvergence, evolve, free_trajectory, galerkin, mild_residual,
    picard_solve, strang_evolve, strang_step,
)
from gpcontrol.spectral import SpectralState, build_basis, ground_state, propagate_free, random_state


def test_config_validation():
    for kw in ({"sigma": 2}, {"dt": 0}, {"T": -1}, {"integrator": "euler"}, {"picard_max_iter": 0}):
        with pytest.raises(ValueError):
            EvolutionConfig(**kw)


def test_time_grid_ends_at_T():
    t = EvolutionConfig(dt=0.03, T=0.1).time_grid()
    assert t[0] == 0 and t[-1] == 0.1 and np.all(np.diff(t) <= 0.03 + 1e-15)


def test_step_guard():
    b = build_basis(1, 8)
    with pytest.raises(ValueError):
        strang_step(ground_state(b), Zero(1.0), 0.0, 0.2, 0)


@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-4, 0.1))
def test_linear_free_step_exact(seed, dt):
    s = random_state(build_basis(1, 16), np.random.default_rng(seed))
    out = strang_step(s, Zero(1.0), 0.0, dt, 0)
    assert np.max(np.abs(out.coeffs - propagate_free(s, dt).coeffs)) < 1e-14


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([0, 1]), st.floats(-5, 5))
def test_step_mass(seed, sigma, amp):
    b = build_basis(1, 16)
    s = random_state(b, np.random.default_rng(seed)) * 2.0
    out = strang_step(s, Sinusoid(amp, 1.0, 0.2, 1.0), 0.1, 0.01, sigma)
    assert abs(out.mass() - s.mass()) < 1e-13


def test_step_mass_3d():
    b = build_basis(3, 4)
    s = random_state(b, np.random.default_rng(1))
    out = strang_step(s, piecewise_constant([0, 1], [3.0]), 0.0, 0.05, 1)
    assert abs(out.mass() - 1) < 1e-13


def test_evolve_linear_matches_free_flow(rng):
    b = build_basis(2, 6)
    s = random_state(b, rng)
    traj = evolve(s, Zero(0.2), EvolutionConfig(0, 0.01, 0.2))
    ref = free_trajectory(s, traj.times)
    assert np.max(np.abs(traj.coeffs - ref.coeffs)) < 1e-12
    assert np.max(np.abs(traj.record.mass - 1)) < 1e-13


def test_energy_conserved_nonlinear_ground():
    b = build_basis(1, 32)
    traj = evolve(ground_state(b), Zero(1.0), EvolutionConfig(1, 1e-3, 1.0))
    e = traj.record.energy
    assert np.max(np.abs(e - e[0])) / e[0] < 1e-6


def test_self_convergence_factor_four():
    b = build_basis(1, 32)
    psi0 = random_state(b, np.random.default_rng(4), band=8)
    u = Zero(1.0)
    ref = strang_evolve(psi0, u, EvolutionConfig(1, 1e-3 / 4, 1.0)).final
    e = [(strang_evolve(psi0, u, EvolutionConfig(1, dt, 1.0)).final - ref).norm(1) for dt in (0.02, 0.01)]
    assert 3.4 < e[0] / e[1] < 4.6


def test_picard_linear_one_iteration():
    b = build_basis(1, 16)
    traj = picard_solve(ground_state(b), Zero(0.1), EvolutionConfig(0, 1e-3, 0.1, "picard"))
    assert traj.info["windows"][0]["iterations"] == 1
    ref = free_trajectory(ground_state(b), traj.times)
    assert np.max(np.abs(traj.coeffs - ref.coeffs)) < 1e-14


def test_picard_matches_strang_short_time():
    b = build_basis(1, 32)
    psi0 = ground_state(b)
    u = Sinusoid(1.0, 1.0, 0.3, 0.1)
    p = evolve(psi0, u, EvolutionConfig(1, 1e-3, 0.1, "picard"))
    s = evolve(psi0, u, EvolutionConfig(1, 1e-3, 0.1))
    assert np.max(np.abs(p.record.h1 - s.record.h1)) < 1e-4
    assert mild_residual(p, u, 1) < 1e-10


def test_picard_windows_cover_horizon():
    b = build_basis(1, 16)
    traj = picard_solve(ground_state(b), Sinusoid(2.0, 1.0, 0.0, 1.0), EvolutionConfig(1, 1e-2, 1.0, "picard"))
    w = traj.info["windows"]
    assert w[0]["t0"] == 0 and w[-1]["t1"] == pytest.approx(1.0)
    assert all(x["factor"] < 0.5 for x in w)


def test_picard_nonconvergence_reported():
    b = build_basis(1, 16)
    with pytest.raises(PicardNonConvergence) as exc:
        picard_solve(ground_state(b) * 20.0, Zero(0.5), EvolutionConfig(1, 0.05, 0.5, "picard", picard_max_iter=3))
    assert exc.value.iterations >= 1 and "iterations" in str(exc.value)


def test_mild_residual_examples(rng):
    b = build_basis(1, 16)
    s = random_state(b, rng)
    free = free_trajectory(s, np.linspace(0, 1, 101))
    assert mild_residual(free, Zero(1.0), 0) < 1e-10
    u = piecewise_constant([0, 1], [2.0])
    good = strang_evolve(s, u, EvolutionConfig(0, 1e-3, 1.0))
    bad = strang_evolve(s, u * -1.0, EvolutionConfig(0, 1e-3, 1.0))
    assert mild_residual(good, u, 0) < 1e-4
    assert mild_residual(bad, u, 0) > 100 * mild_residual(good, u, 0)


def test_nan_guard():
    b = build_basis(1, 8)
    s = SpectralState(b, np.full(8, np.nan, complex))
    with pytest.raises(NumericalError):
        strang_evolve(s, Zero(0.1), EvolutionConfig(0, 0.05, 0.1))


def test_galerkin_kron_grid_matrix():
    g = galerkin(build_basis(2, 4))
    c = random_state(g.basis, np.random.default_rng(0)).coeffs
    assert np.allclose(g.grid_matrix @ c.ravel(), g.to_grid(c).ravel(), atol=1e-14)
