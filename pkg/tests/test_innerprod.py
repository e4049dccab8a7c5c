import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import power_mu
from degwave import io
from degwave.innerprod import (
    ModalVector,
    QuadratureError,
    coupling_matrix,
    mu_coefficients,
    project,
    quadrature_rule,
    sobolev_tail,
    tail_profile,
)

ALPHAS = [0.0, 0.3, 2 / 3, 1.0, 4 / 3, 1.8]

# alpha = 0, mu = x^2: 2 * int_0^1 x^2 cos(pi x) cos(2 pi x) dx = -20 / (9 pi^2), symbolic
M12_SQUARE = -0.22515818587186171432


def bump(x):
    # zero flux at both ends for every alpha, so coefficients fall like lambda^-2
    return (1.0 - x**2) ** 2


@pytest.mark.parametrize("alpha", ALPHAS)
def test_project_eigenfunctions_gives_unit_vectors(systems, alpha):
    sys = systems(alpha, 30)
    for m in (1, 5, 30):
        c = project(lambda x: sys.eigenfunction(m, x), sys).coeffs
        e = np.zeros(31)
        e[m] = 1.0
        assert np.max(np.abs(c - e)) <= 1e-8


@pytest.mark.parametrize("alpha", ALPHAS)
def test_project_constant_is_ground_mode(systems, alpha):
    sys = systems(alpha, 20)
    c = project(lambda x: np.ones_like(x), sys).coeffs
    assert c[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(c[1:])) <= 1e-10


def test_square_cosine_coefficients(systems):
    sys = systems(0.0, 25)
    c = project(lambda x: x**2, sys).coeffs
    n = np.arange(1, 26)
    ref = 2 * math.sqrt(2) * (-1.0) ** n / (n * np.pi) ** 2
    # the sign of Phi_n(0) fixes the orientation of each mode
    signs = np.sign(sys.phi_at_0[1:])
    assert c[0] == pytest.approx(1 / 3, abs=1e-12)
    np.testing.assert_allclose(c[1:] * signs, ref, atol=1e-11)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_power_potential_identities(systems, alpha):
    sys = systems(alpha, 40)
    mu = mu_coefficients(power_mu(alpha), sys).coeffs
    assert mu[0] == pytest.approx(1 / (3 - alpha), abs=1e-12)
    np.testing.assert_allclose(np.abs(mu[1:]) * sys.lam[1:], (2 - alpha) ** 1.5, rtol=1e-9)


def test_classical_potential_product():
    from degwave.spectrum import build_eigensystem

    sys = build_eigensystem(0.0, 8)
    mu = mu_coefficients(lambda x: x**2, sys).coeffs
    np.testing.assert_allclose(np.abs(mu[1:]) * sys.lam[1:], 2**1.5, rtol=1e-11)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_coupling_matrix_structure(systems, alpha):
    sys = systems(alpha, 25)
    M = coupling_matrix(power_mu(alpha), sys)
    assert np.max(np.abs(M - M.T)) <= 1e-9
    mu = mu_coefficients(power_mu(alpha), sys).coeffs
    assert np.array_equal(M[0], mu) and np.array_equal(M[:, 0], mu)
    # multiplication by a positive function is a positive operator
    assert np.linalg.eigvalsh(M).min() > 0


def test_coupling_with_unit_potential_is_identity(systems):
    sys = systems(2 / 3, 20)
    M = coupling_matrix(lambda x: np.ones_like(x), sys)
    assert np.max(np.abs(M - np.eye(21))) <= 1e-9


def test_coupling_entry_against_symbolic_value(systems):
    sys = systems(0.0, 5)
    M = coupling_matrix(lambda x: x**2, sys)
    s = np.sign(sys.phi_at_0)
    assert M[1, 2] * s[1] * s[2] == pytest.approx(M12_SQUARE, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 4 / 3])
def test_parseval_and_reconstruction(systems, alpha):
    sys = systems(alpha, 60)
    v = project(bump, sys)
    rule = quadrature_rule(sys, 2)
    norm2 = rule.integrate(bump(rule.nodes) ** 2)
    assert abs(norm2 - v.norm2()) <= 1e-6
    x = np.linspace(0.025, 0.975, 20)
    assert np.max(np.abs(v.reconstruct(x) - bump(x))) <= 1e-4


def test_modal_vector_validation(systems):
    sys = systems(0.3, 4)
    with pytest.raises(ValueError):
        ModalVector(np.zeros(4), sys)
    with pytest.raises(ValueError):
        ModalVector([0, 1, np.nan, 0, 0], sys)
    v = ModalVector(np.arange(5.0), sys)
    assert len(v) == 5 and v[2] == 2.0 and np.asarray(v).sum() == 10.0
    with pytest.raises(ValueError):
        v.coeffs[0] = 1.0


def test_non_finite_integrand_rejected(systems):
    sys = systems(1.0, 4)
    with pytest.raises(ValueError):
        project(lambda x: np.full_like(x, np.inf), sys)


def test_refinement_ceiling_raises(systems):
    sys = systems(0.0, 5)
    # discontinuity never settles at a tight tolerance
    with pytest.raises(QuadratureError) as err:
        project(lambda x: np.where(x < 1 / 3, 1.0, 0.0), sys, quad_tol=1e-15)
    # the message carries the last observed change, which is not zero
    assert "moving by 0 " not in str(err.value)


def test_sobolev_of_unit_vector(systems):
    sys = systems(2 / 3, 10)
    for m in (0, 3, 10):
        e = np.zeros(11)
        e[m] = 1.0
        prof = sobolev_tail(ModalVector(e, sys), 3)
        assert prof.total == pytest.approx(sys.lambda_star[m] ** 3, rel=1e-14)


def test_sobolev_inverse_square_converges(systems):
    sys = systems(0.0, 40)
    c = np.zeros(41)
    c[1:] = 1 / sys.lam[1:] ** 2
    prof = sobolev_tail(ModalVector(c, sys), 3)
    np.testing.assert_allclose(prof.increments[1:], 1 / sys.lam[1:], rtol=1e-12)
    assert prof.converging
    # the same coefficients do not settle in a much stronger norm
    assert not sobolev_tail(ModalVector(c, sys), 5).converging


def test_sobolev_rejects_negative_order(systems):
    sys = systems(0.0, 3)
    with pytest.raises(ValueError):
        sobolev_tail(ModalVector(np.ones(4), sys), -1)


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=30), st.floats(0, 4))
def test_partial_sums_nondecreasing(coeffs, s):
    w = np.arange(1, len(coeffs) + 1, dtype=float)
    prof = tail_profile(w, coeffs, s)
    assert np.all(np.diff(prof.partial_sums) >= 0)
    d = prof.to_dict()
    assert d["total"] == prof.total and len(d["partial_sums"]) == len(coeffs)


@given(st.sampled_from(ALPHAS), st.integers(1, 12), st.integers(1, 12))
def test_coupling_symmetric_property(alpha, n, m):
    from degwave.spectrum import build_eigensystem

    sys = build_eigensystem(alpha, 12)
    M = coupling_matrix(power_mu(alpha), sys)
    assert abs(M[n, m] - M[m, n]) <= 1e-9


def test_matrix_csv(tmp_path):
    M = np.array([[1.0, 0.1], [0.1, 1 / 3]])
    rows = io.write_matrix(M, tmp_path / "m.csv").read_text().splitlines()
    assert rows[0] == "n,0,1"
    assert float(rows[2].split(",")[2]) == 1 / 3
