import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gpcontrol.spectral import (
    BasisMismatchError, GridField, SpectralState, build_basis, from_coeffs, grid_integral, ground_state,
    hermite_functions, lebesgue_sobolev_norm, mode, propagate_free, random_state, read_state_csv,
    sobolev_norm, to_coeffs, write_state_csv, zeros,
)

from oracles import W16_GROUND_3D


def test_eigenvalues_1d():
    assert np.array_equal(build_basis(1, 8).eigs, np.arange(1, 17, 2))


def test_ground_eigenvalue_3d():
    b = build_basis(3, 2)
    assert b.eigs[0, 0, 0] == 3
    assert np.all(b.eigs >= 3) and np.sum(b.eigs == 3) == 1


@pytest.mark.parametrize("n", [2, 8, 32, 64])
def test_gram_identity(n):
    b = build_basis(1, n)
    v = b.vander[:, :n]
    assert np.max(np.abs((v.T * b.weights) @ v - np.eye(n))) < 1e-12


def test_recurrence_matches_explicit_low_modes():
    x = np.linspace(-3, 3, 13)
    h = hermite_functions(3, x)
    g = np.exp(-x * x / 2) / math.pi ** 0.25
    assert np.allclose(h[0], g, atol=1e-15)
    assert np.allclose(h[1], math.sqrt(2) * x * g, atol=1e-15)
    assert np.allclose(h[2], (2 * x * x - 1) / math.sqrt(2) * g, atol=1e-15)


def test_high_degree_functions_stay_finite():
    h = hermite_functions(200, np.linspace(-25, 25, 101))
    assert np.all(np.isfinite(h)) and np.max(np.abs(h)) < 1


@pytest.mark.parametrize("dim,n", [(1, 3), (1, 0), (0, 4), (4, 4)])
def test_build_basis_rejects(dim, n):
    with pytest.raises(ValueError):
        build_basis(dim, n)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_nodes_avoid_origin(dim):
    b = build_basis(dim, 4)
    assert np.min(np.abs(b.nodes)) > 0


def test_transform_ground_and_linearity():
    b = build_basis(1, 8)
    c = to_coeffs(GridField(b, np.asarray(from_coeffs(ground_state(b)).values))).coeffs
    assert np.allclose(c, np.eye(8)[0], atol=1e-14)
    x = b.nodes
    h = hermite_functions(3, x)
    c = to_coeffs(GridField(b, h[0] + h[2])).coeffs
    assert np.allclose(c, [1, 0, 1, 0, 0, 0, 0, 0], atol=1e-13)


@pytest.mark.parametrize("dim,n", [(1, 32), (2, 8), (3, 6)])
def test_round_trip(dim, n, rng):
    b = build_basis(dim, n)
    s = random_state(b, rng)
    assert np.max(np.abs(to_coeffs(from_coeffs(s)).coeffs - s.coeffs)) < 1e-12


def test_basis_mismatch():
    a, b = build_basis(1, 8), build_basis(1, 16)
    with pytest.raises(BasisMismatchError):
        to_coeffs(from_coeffs(ground_state(a)), b)
    with pytest.raises(BasisMismatchError):
        ground_state(a) + ground_state(b)


def test_free_propagation_examples():
    g3 = ground_state(build_basis(3, 2))
    assert np.allclose(propagate_free(g3, math.pi).coeffs[0, 0, 0], -1, atol=1e-14)
    b = build_basis(1, 4)
    s = SpectralState(b, np.array([1, 1, 0, 0], complex))
    assert np.allclose(propagate_free(s, math.pi).coeffs[:2], [-1, -1], atol=1e-14)
    assert np.array_equal(propagate_free(s, 0.0).coeffs, s.coeffs)


def test_sobolev_examples():
    assert sobolev_norm(ground_state(build_basis(3, 2)), 1) == pytest.approx(math.sqrt(3), abs=1e-15)
    assert sobolev_norm(mode(build_basis(1, 8), (4,)), 1) == pytest.approx(3.0, abs=1e-15)
    assert sobolev_norm(zeros(build_basis(2, 4)), 1) == 0


def test_lp_norms():
    b = build_basis(1, 16)
    assert lebesgue_sobolev_norm(ground_state(b), 0, 2) == pytest.approx(1.0, abs=1e-12)
    b3 = build_basis(3, 16)
    assert abs(lebesgue_sobolev_norm(ground_state(b3), 1, 6) - W16_GROUND_3D) < 1e-6


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(1, 16), (2, 6), (3, 4)]), st.floats(-50, 50))
def test_unitarity(seed, shape, t):
    s = random_state(build_basis(*shape), np.random.default_rng(seed))
    p = propagate_free(s, t)
    assert abs(p.mass() - s.mass()) < 1e-13
    for order in (0.5, 1, 2):
        assert abs(sobolev_norm(p, order) - sobolev_norm(s, order)) < 1e-12 * sobolev_norm(s, order)


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(1, 16), (2, 6), (3, 4)]))
def test_parseval_and_l2(seed, shape):
    b = build_basis(*shape)
    s = random_state(b, np.random.default_rng(seed))
    f = from_coeffs(s).values
    assert abs(grid_integral(b, np.abs(f) ** 2).real - s.mass() ** 2) < 1e-10
    assert abs(lebesgue_sobolev_norm(s, 0, 2) - sobolev_norm(s, 0)) < 1e-10


def test_norm_equivalence_constant(rng):
    b = build_basis(1, 24)
    r = [lebesgue_sobolev_norm(s, 1, 2) / sobolev_norm(s, 1) for s in (random_state(b, rng) for _ in range(50))]
    # ||grad f|| + ||<x> f|| against sqrt(||grad f||^2 + ||x f||^2): ratio in [1, 2] up to the mass term
    assert 1.0 <= min(r) and max(r) <= 2.0


def test_state_csv_round_trip(tmp_path, rng):
    b = build_basis(2, 4)
    s = random_state(b, rng)
    write_state_csv(s, tmp_path / "s.csv")
    assert np.array_equal(read_state_csv(tmp_path / "s.csv", b).coeffs, s.coeffs)
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0] == "k_1,k_2,re,im"


def test_state_csv_rejects_out_of_range(tmp_path):
    (tmp_path / "s.csv").write_text("k_1,re,im\n8,1,0\n")
    with pytest.raises(ValueError):
        read_state_csv(tmp_path / "s.csv", build_basis(1, 8))
