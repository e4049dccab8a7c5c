import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import power_mu
from degwave import io
from degwave.innerprod import ModalVector, coupling_matrix, mu_coefficients
from degwave.simulator import (
    ControlSignal,
    ModalState,
    StepUnderflowError,
    UndersampledWarning,
    duhamel_exp_coefficients,
    energy,
    evolve_bilinear,
    evolve_linearized,
    reconstruct_terminal,
    rough_control,
)


@pytest.fixture(scope="module")
def setup20(systems):
    sys = systems(2 / 3, 20)
    M = coupling_matrix(power_mu(2 / 3), sys)
    return sys, M, mu_coefficients(power_mu(2 / 3), sys)


def _smooth_q(T, om):
    return ControlSignal.trig(T, 0.3, -0.1, [0.5, 0.0, 0.2], [0.0, -0.4, 0.1], om[1:4])


# -- controls ---------------------------------------------------------------


def test_control_validation():
    with pytest.raises(ValueError):
        ControlSignal.zero(0.0)
    with pytest.raises(ValueError):
        ControlSignal.sampled(1.0, [1.0])
    with pytest.raises(ValueError):
        ControlSignal.sampled(1.0, [1.0, 2.0], hold="cubic")
    with pytest.raises(ValueError):
        ControlSignal.trig(1.0, 0, 0, [1.0], [], [2.0])
    with pytest.raises(TypeError):
        ControlSignal.sampled(1.0, [0.0, 1.0]).coefficients


def test_coefficient_roundtrip():
    c = np.array([0.1, -0.2, 0.3, 0.4, -0.5, 0.6])
    q = ControlSignal.from_coefficients(2.0, c, [1.5, 3.0])
    np.testing.assert_array_equal(q.coefficients, c)
    t = np.linspace(0, 2, 7)
    ref = 0.1 - 0.2 * t + 0.3 * np.cos(1.5 * t) + 0.4 * np.sin(1.5 * t) - 0.5 * np.cos(3 * t) + 0.6 * np.sin(3 * t)
    np.testing.assert_allclose(q(t), ref, atol=1e-15)


@pytest.mark.parametrize("hold", ["linear", "previous", "next"])
def test_reflection_and_integral(hold):
    q = rough_control(3.0, seed=5, hold=hold)
    r = q.reflect()
    t = np.linspace(0.01, 2.99, 37) + 1e-7
    np.testing.assert_allclose(r(t), q(3.0 - t), atol=1e-15)
    # the integral is an antiderivative: compare with a fine midpoint rule
    s = np.linspace(0, 3.0, 600001)
    mid = 0.5 * (s[1:] + s[:-1])
    assert float(q.integral(3.0)) == pytest.approx(np.sum(q(mid)) * (s[1] - s[0]), abs=1e-6)
    assert float(q.integral(0.0)) == 0.0


def test_trig_reflection_and_integral():
    q = ControlSignal.trig(2.5, 0.2, 0.4, [0.3], [-0.7], [2.2])
    t = np.linspace(0, 2.5, 11)
    np.testing.assert_allclose(q.reflect()(t), q(2.5 - t), atol=1e-14)
    F = lambda x: 0.2 * x + 0.2 * x**2 + 0.3 * np.sin(2.2 * x) / 2.2 - 0.7 * (1 - np.cos(2.2 * x)) / 2.2
    np.testing.assert_allclose(q.integral(t), F(t), atol=1e-14)


def test_step_values_are_averages_for_sampled():
    q = ControlSignal.sampled(1.0, [0.0, 1.0, -1.0], hold="previous")
    k = q.step_values(0.0, 0.25, 4)
    np.testing.assert_allclose(k, [0.0, 0.0, 1.0, 1.0])
    k = ControlSignal.sampled(1.0, [0.0, 1.0], hold="linear").step_values(0.0, 0.5, 2)
    np.testing.assert_allclose(k, [0.25, 0.75])


def test_rough_control_is_seeded():
    a, b = rough_control(2.0, 3), rough_control(2.0, 3)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, rough_control(2.0, 4).values)
    assert np.max(np.abs(a.values)) <= 0.2


def test_control_csv(tmp_path):
    q = ControlSignal.trig(1.0, 1.0, 0.0, [], [], [])
    rows = io.write_control(q, tmp_path / "c.csv", 3).read_text().splitlines()
    assert rows == ["t,p", "0,1", "0.5,1", "1,1"]


# -- free evolution ---------------------------------------------------------


def test_ground_state_is_fixed_without_control(setup20):
    sys, M, _ = setup20
    g = ModalState.ground(sys)
    tr = evolve_bilinear(g, ControlSignal.zero(5.0), M)
    assert np.array_equal(tr.terminal.a, g.a) and np.array_equal(tr.terminal.v, g.v)
    assert tr.times[-1] == pytest.approx(5.0, abs=1e-15)
    assert np.all(np.diff(tr.times) > 0)


def test_single_mode_oscillates(setup20):
    sys, M, _ = setup20
    a = np.zeros(21)
    a[1] = 1.0
    T = 3.7
    tr = evolve_bilinear(ModalState(a, np.zeros(21), 0.0, sys), ControlSignal.zero(T), M)
    w = sys.omega[1]
    assert tr.terminal.a[1] == pytest.approx(math.cos(w * T), abs=1e-10)
    assert tr.terminal.v[1] == pytest.approx(-w * math.sin(w * T), abs=1e-10)


@given(st.lists(st.floats(-1, 1), min_size=22, max_size=22), st.floats(0.5, 6.0))
@settings(max_examples=15)
def test_energy_conserved_without_control(systems, vals, T):
    sys = systems(0.3, 10)
    M = np.eye(11)
    init = ModalState(vals[:11], vals[11:], 0.0, sys)
    tr = evolve_bilinear(init, ControlSignal.zero(T), M)
    e0 = energy(init, sys.lam)
    for k in (len(tr) // 3, len(tr) - 1):
        assert abs(energy(tr.state(k), sys.lam) - e0) <= 1e-10 * max(1.0, e0)


def test_state_validation(systems):
    sys = systems(0.3, 4)
    with pytest.raises(ValueError):
        ModalState(np.zeros(5), np.zeros(4), 0.0, sys)
    with pytest.raises(ValueError):
        ModalState(np.zeros(4), np.zeros(4), 0.0, sys)
    with pytest.raises(ValueError):
        evolve_bilinear(ModalState(np.zeros(5), np.zeros(5)), ControlSignal.zero(1.0), np.eye(5))
    with pytest.raises(ValueError):
        evolve_bilinear(ModalState.ground(sys), ControlSignal.zero(1.0), np.eye(4))
    d = ModalState.ground(sys).to_dict()
    assert d["a"][0] == 1.0 and d["t"] == 0.0


def test_step_underflow_reported(setup20):
    sys, M, _ = setup20
    q = ControlSignal.trig(2.0, 0.1, 0.0, [], [], [])
    with pytest.raises(StepUnderflowError) as err:
        evolve_bilinear(ModalState.ground(sys), q, M, step_tol=1e-30, max_steps=2**10)
    assert err.value.steps <= 2**10 and err.value.change > 0


# -- controlled evolution ---------------------------------------------------


def test_time_reversal(setup20):
    sys, M, _ = setup20
    T = 4.0
    p = _smooth_q(T, sys.omega).scaled(0.2)
    fwd = evolve_bilinear(ModalState.ground(sys), p, M, step_tol=1e-10).terminal
    back_init = ModalState(fwd.a, -fwd.v, 0.0, sys)
    back = evolve_bilinear(back_init, p.reflect(), M, step_tol=1e-10).terminal
    assert np.max(np.abs(back.a - ModalState.ground(sys).a)) <= 1e-8
    assert np.max(np.abs(back.v)) <= 1e-8


def test_truncation_robustness(systems):
    alpha, T = 2 / 3, 3.0
    out = []
    for N in (20, 30):
        sys = systems(alpha, N)
        M = coupling_matrix(lambda x: x ** (2 - alpha) + 0.01 * x**2, sys)
        p = _smooth_q(T, systems(alpha, 20).omega).scaled(0.05)
        out.append(evolve_bilinear(ModalState.ground(sys), p, M).terminal)
    assert np.max(np.abs(out[1].a[:21] - out[0].a)) < 1e-6
    assert np.max(np.abs(out[1].v[:21] - out[0].v)) < 1e-6


def test_linearization_defect_is_quadratic(setup20):
    sys, M, mu = setup20
    T = 5.0
    q = _smooth_q(T, sys.omega)
    g = ModalState.ground(sys)
    lin = evolve_linearized(q, mu)
    errs = []
    for eps in (1e-2, 5e-3, 2.5e-3):
        w = evolve_bilinear(g, q.scaled(eps), M, step_tol=1e-12).terminal
        d = np.concatenate([w.a - g.a - eps * lin.a, w.v - g.v - eps * lin.v])
        errs.append(np.max(np.abs(d)))
    for e1, e2 in zip(errs, errs[1:]):
        assert 3.5 <= e1 / e2 <= 4.5


def test_linearized_zero_control(setup20):
    sys, _, mu = setup20
    s = evolve_linearized(ControlSignal.zero(2.0), mu)
    assert np.all(s.a == 0) and np.all(s.v == 0)
    with pytest.raises(ValueError):
        evolve_linearized(ControlSignal.zero(2.0), mu, T=3.0)
    with pytest.raises(ValueError):
        evolve_linearized(ControlSignal.zero(2.0), np.ones(21))


def test_linearized_resonance_closed_form(systems):
    sys = systems(0.0, 1)
    mu = ModalVector([0.0, 1.0], sys)
    w = sys.omega[1]
    for T in (1.3, 4.0, 9.5):
        q = ControlSignal.trig(T, 0, 0, [1.0], [0.0], [w])
        s = evolve_linearized(q, mu)
        # antiderivatives of cos(ws) cos(w(T-s)) and cos(ws) sin(w(T-s)) / w
        assert s.v[1] == pytest.approx((T * w * math.cos(w * T) + math.sin(w * T)) / (2 * w), abs=1e-13)
        assert s.a[1] == pytest.approx(T * math.sin(w * T) / (2 * w), abs=1e-13)


def test_linearized_zero_mode(systems):
    sys = systems(0.0, 2)
    mu = ModalVector([1.0, 0.0, 0.0], sys)
    T = 2.0
    s = evolve_linearized(ControlSignal.trig(T, 1.0, 1.0, [], [], []), mu)
    # int (1 + s) ds and int (1 + s)(T - s) ds
    assert s.v[0] == pytest.approx(4.0, abs=1e-14)
    assert s.a[0] == pytest.approx(2.0 + 4.0 / 3.0, abs=1e-14)


@pytest.mark.parametrize("hold", ["linear", "previous"])
def test_sampled_linearization_matches_trig(setup20, hold):
    sys, _, mu = setup20
    T = 4.0
    q = _smooth_q(T, sys.omega)
    ref = evolve_linearized(q, mu)
    n = 20001 if hold == "linear" else 400001
    t = np.linspace(0, T, n)
    vals = q(t) if hold == "linear" else q(t + 0.5 * (t[1] - t[0]))
    got = evolve_linearized(ControlSignal.sampled(T, vals, hold), mu)
    tol = 1e-7 if hold == "linear" else 5e-6
    assert np.max(np.abs(got.vector - ref.vector)) <= tol


# -- Duhamel ----------------------------------------------------------------


def test_duhamel_vanishes_without_control(setup20):
    sys, M, _ = setup20
    tr = evolve_bilinear(ModalState.ground(sys), ControlSignal.zero(2.0), M)
    d = duhamel_exp_coefficients(tr, ControlSignal.zero(2.0))
    assert np.all(d.gamma == 0) and d.zero_mode == (0.0, 0.0)
    assert len(d.positive()) == sys.N


@pytest.mark.parametrize("kind", ["trig", "rough"])
def test_duhamel_reconstruction(setup20, kind):
    sys, M, _ = setup20
    T = 4.0
    p = _smooth_q(T, sys.omega).scaled(0.3) if kind == "trig" else rough_control(T, 11)
    init = ModalState.ground(sys)
    tr = evolve_bilinear(init, p, M, step_tol=1e-10)
    d = duhamel_exp_coefficients(tr, p)
    rec = reconstruct_terminal(init, d)
    assert rec.distance(tr.terminal) <= 1e-6
    # real data: the negative index is the conjugate partner
    neg = d.gamma[d.indices < 0][::-1]
    np.testing.assert_allclose(neg, np.conj(d.positive()), atol=1e-14)


def test_undersampled_grid_warns(setup20):
    sys, M, _ = setup20
    p = ControlSignal.trig(2.0, 0.1, 0, [], [], [])
    tr = evolve_bilinear(ModalState.ground(sys), p, M, min_steps=64)
    h = tr.times[1] - tr.times[0]
    # thin to about 5 points per period of the fastest mode
    k = 2 ** int(math.log2(2 * math.pi / (sys.omega[-1] * h) / 5))
    coarse = type(tr)(tr.times[::k], tr.a[::k], tr.v[::k], sys, M, tr.steps // k, 0.0)
    with pytest.warns(UndersampledWarning):
        duhamel_exp_coefficients(coarse, p)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        duhamel_exp_coefficients(tr, p)


def test_trajectory_csv(tmp_path, setup20):
    sys, M, _ = setup20
    tr = evolve_bilinear(ModalState.ground(sys), ControlSignal.zero(1.0), M)
    rows = io.write_trajectory(tr, tmp_path / "t.csv", stride=1000).read_text().splitlines()
    assert rows[0].split(",")[:3] == ["t", "a_0", "a_1"] and len(rows[0].split(",")) == 43
    assert float(rows[-1].split(",")[0]) == 1.0
