"""The thirteen acceptance checks, shared by the test suite and ``degwave verify``.

Each check returns a :class:`CriterionResult` whose ``measured`` dict holds only
deterministic quantities (no timings), so serialised results are reproducible.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import io, trig
from .diagnostics import counting_function, hidden_regularity_check, kadec_certificate
from .innerprod import coupling_matrix, mu_coefficients
from .moment_control import (
    assemble_moment_problem,
    random_decaying_target,
    solve_min_norm,
    synthesize_ground_state_control,
    target_from_rhs,
)
from .simulator import ModalState, evolve_bilinear, evolve_linearized, rough_control
from .spectrum import EigenSystem, build_eigensystem, gap_profile

__all__ = [
    "CriterionResult",
    "SuiteOptions",
    "CRITERIA",
    "run_one",
    "run_all",
    "perturb_kn",
    "suite_document",
]

ALPHA_SET = (0.0, 0.3, 2.0 / 3.0, 1.0, 4.0 / 3.0, 1.5, 1.8)
CONTROL_ALPHAS = (2.0 / 3.0, 4.0 / 3.0)


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d} {self.name}"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "measured": self.measured}


@dataclass(frozen=True)
class SuiteOptions:
    seed: int = 0
    perturb_kn: float = 0.0


def perturb_kn(sys: EigenSystem, rel: float, seed: int) -> EigenSystem:
    """Copy of ``sys`` with each ``K_n`` (n >= 1) scaled by ``1 + rel*u_n``,
    ``|u_n|`` in [1/2, 1] with seeded random sign. Fault injection only."""
    if rel == 0:
        return sys
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.5, 1.0, sys.N + 1) * rng.choice([-1.0, 1.0], sys.N + 1)
    f = 1.0 + rel * u
    f[0] = 1.0
    return replace(sys, Kn=sys.Kn * f, phi_at_1=sys.phi_at_1 * f,
                   phi_at_0=sys.phi_at_0 * f, _cache={})


def _system(alpha, N, opts):
    return perturb_kn(build_eigensystem(alpha, N), opts.perturb_kn, opts.seed)


def _power_mu(alpha):
    def mu(x):
        return x ** (2.0 - alpha)
    mu.__name__ = "power"
    return mu


def _worst(values):
    return float(max(values)) if values else 0.0


# --------------------------------------------------------------------------


def c01_classical_limit(opts):
    start = time.perf_counter()
    sys = _system(0.0, 30, opts)
    n = np.arange(31)
    lam_err = float(np.max(np.abs(sys.lam[1:] - (n[1:] * np.pi) ** 2) / sys.lam[1:]))
    x = np.linspace(0.0, 1.0, 11)
    fn_err = 0.0
    for k in range(1, 31):
        ref = math.sqrt(2.0) * np.cos(k * np.pi * x)
        val = sys.eigenfunction(k, x)
        sign = np.sign(val[0])
        fn_err = max(fn_err, float(np.max(np.abs(val - sign * ref))))
    runtime_ok = time.perf_counter() - start < 1.0
    ok = lam_err <= 1e-10 and fn_err <= 1e-8 and runtime_ok
    return ok, {"lambda_rel_err": lam_err, "eigenfunction_err": fn_err, "runtime_ok": runtime_ok}


def c02_boundary_value(opts):
    worst = {}
    for a in ALPHA_SET:
        sys = _system(a, 50, opts)
        worst[f"{a:.6g}"] = float(np.max(np.abs(np.abs(sys.phi_at_1[1:]) - math.sqrt(2 - a))))
    return _worst(worst.values()) <= 1e-12, {"max_err_by_alpha": worst}


def c03_orthonormality(opts):
    start = time.perf_counter()
    worst = {}
    for a in CONTROL_ALPHAS:
        sys = _system(a, 30, opts)
        G = coupling_matrix(lambda x: np.ones_like(x), sys)
        worst[f"{a:.6g}"] = float(np.max(np.abs(G - np.eye(31))))
    runtime_ok = time.perf_counter() - start < 30.0
    ok = _worst(worst.values()) <= 1e-8 and runtime_ok
    return ok, {"max_err_by_alpha": worst, "runtime_ok": runtime_ok}


def c04_gap_law(opts):
    mono, dev = {}, {}
    for a in ALPHA_SET:
        g = gap_profile(_system(a, 100, opts))
        key = f"{a:.6g}"
        mono[key] = g.nonincreasing
        dev[key] = float(abs(g.gaps[49] - (2 - a) * np.pi / 2))
    ok = all(mono.values()) and _worst(dev.values()) <= 1e-3
    return ok, {"nonincreasing": mono, "gap50_err": dev}


def c05_admissible_identity(opts):
    ratio_err, mu0_err = {}, {}
    for a in ALPHA_SET:
        sys = _system(a, 30, opts)
        mu = mu_coefficients(_power_mu(a), sys).coeffs
        key = f"{a:.6g}"
        ratio_err[key] = float(np.max(np.abs(sys.lam[1:] * np.abs(mu[1:]) - (2 - a) ** 1.5)))
        mu0_err[key] = float(abs(mu[0] - 1 / (3 - a)))
    ok = _worst(ratio_err.values()) <= 1e-6 and _worst(mu0_err.values()) <= 1e-10
    return ok, {"ratio_err": ratio_err, "mu0_err": mu0_err}


def _control_case(a, opts, N=20, factor=1.2):
    sys = _system(a, N, opts)
    mu = mu_coefficients(_power_mu(a), sys)
    target = random_decaying_target(sys, opts.seed, decay=2.0)
    T = factor * sys.setup.T0
    return sys, mu, target, T, synthesize_ground_state_control(target, mu, T=T)


def c06_linear_roundtrip(opts):
    out = {}
    ok = True
    for a in CONTROL_ALPHAS:
        sys, mu, target, T, res = _control_case(a, opts)
        lin = evolve_linearized(res.q, mu)
        rel = float(np.max(np.abs(lin.vector - target.vector)) / np.max(np.abs(target.vector)))
        out[f"{a:.6g}"] = {"residual_inf": res.residual_inf, "roundtrip_rel_err": rel}
        ok &= res.residual_inf <= 1e-8 and rel <= 1e-6
    return ok, out


def c07_quadratic_defect(opts):
    out = {}
    ok = True
    for a in CONTROL_ALPHAS:
        sys, mu, target, T, res = _control_case(a, opts)
        M = coupling_matrix(_power_mu(a), sys)
        ground = ModalState.ground(sys)
        errs = []
        for eps in (1e-2, 5e-3):
            tr = evolve_bilinear(ground, res.q.scaled(eps), M, T, step_tol=1e-10)
            errs.append(float(np.max(np.abs(tr.terminal.vector - ground.vector - eps * target.vector))))
        ratio = errs[0] / errs[1]
        out[f"{a:.6g}"] = {"error_1e-2": errs[0], "error_5e-3": errs[1], "ratio": ratio}
        ok &= 3.3 <= ratio <= 4.7
    return ok, out


def c08_regime_separation(opts):
    out = {}
    ok = True
    for a in CONTROL_ALPHAS:
        sys = _system(a, 20, opts)
        mu = mu_coefficients(_power_mu(a), sys)
        T0 = sys.setup.T0
        short = trig.gram_matrix(sys.omega[1:], 0.6 * T0)
        vals, vecs = np.linalg.eigh(short)
        deficient = vecs[:, vals <= 1e-12 * vals[-1]]
        rng = np.random.default_rng(opts.seed)
        base = random_decaying_target(sys, opts.seed, decay=2.0)
        rhs = assemble_moment_problem(base, mu.coeffs, sys, T0).rhs
        # add a unit-scale component along the directions lost at 0.6 T0
        rhs = rhs + np.linalg.norm(rhs) * deficient @ rng.standard_normal(deficient.shape[1])
        target = target_from_rhs(sys, mu.coeffs, rhs)
        r_short = solve_min_norm(assemble_moment_problem(target, mu.coeffs, sys, 0.6 * T0)).residual_inf
        r_long = solve_min_norm(assemble_moment_problem(target, mu.coeffs, sys, 1.2 * T0)).residual_inf
        out[f"{a:.6g}"] = {"deficient_directions": int(deficient.shape[1]),
                           "residual_short": r_short, "residual_long": r_long}
        ok &= deficient.shape[1] > 0 and r_short >= 1e3 * r_long
    return ok, out


def c09_ingham_stability(opts):
    out = {}
    ok = True
    for a in (0.0,) + CONTROL_ALPHAS:
        mins = []
        for N in (10, 20, 40):
            sys = _system(a, N, opts)
            G = trig.gram_matrix(sys.omega[1:], 1.2 * sys.setup.T0)
            d = 1.0 / np.sqrt(np.diag(G))
            mins.append(float(np.linalg.eigvalsh(G * np.outer(d, d))[0]))
        spread = (max(mins) - min(mins)) / max(mins)
        out[f"{a:.6g}"] = {"min_eigenvalues": mins, "relative_spread": spread}
        ok &= min(mins) > 0 and spread < 0.2
    return ok, out


def c10_kadec_margins(opts):
    out = {}
    ok = True
    for a in (0.0, 0.5, 0.9):
        rep = kadec_certificate(_system(a, 1000, opts), 20)
        need = (0.25 - a / (4 * (2 - a))) / 2
        out[f"{a:.6g}"] = {"sup_deviation": rep.sup_deviation, "margin": rep.margin, "required": need}
        ok &= rep.sup_deviation < 0.25 and rep.margin >= need
    rep = kadec_certificate(_system(1.2, 1000, opts), 20, k_shift=1)
    out["1.2"] = {"k_shift": 1, "sup_deviation": rep.sup_deviation, "margin": rep.margin}
    ok &= rep.sup_deviation < 0.25
    return ok, out


def c11_counting_limit(opts):
    out = {}
    ok = True
    for a in (2.0 / 3.0, 1.5):
        sys = _system(a, 200, opts)
        hi = sys.omega[-6]
        om = sys.omega[(sys.omega >= 50) & (sys.omega <= hi)]
        # the count jumps at each omega_n: probe both sides plus a uniform grid
        r = np.unique(np.concatenate([
            np.linspace(50.0, hi, 400),
            np.nextafter(om, -np.inf), np.nextafter(om, np.inf),
        ]))
        r = r[(r >= 50) & (r <= hi)]
        tab = counting_function(sys, r)
        worst = float(np.max(np.abs(tab.ratio - tab.limit) * r))
        out[f"{a:.6g}"] = {"max_scaled_err": worst, "bound": 5.0, "r_max": float(hi)}
        ok &= worst <= 5.0
    return ok, out


def c12_hidden_regularity(opts):
    a = 2.0 / 3.0
    sys = _system(a, 40, opts)
    M = coupling_matrix(_power_mu(a), sys)
    T = 1.2 * sys.setup.T0
    p = rough_control(T, opts.seed, amplitude=0.2, pieces=16)
    tr = evolve_bilinear(ModalState.ground(sys), p, M, T)
    rep = hidden_regularity_check(tr, p)
    meas = {
        "position_s3_tail_ratio": rep.position.worst_tail_ratio,
        "velocity_s2_tail_ratio": rep.velocity.worst_tail_ratio,
        "duhamel_tail_ratio": rep.duhamel.worst_tail_ratio,
        "threshold": 1e-3,
    }
    return rep.position.worst_tail_ratio < 1e-3 and rep.velocity.worst_tail_ratio < 1e-3, meas


def c13_determinism(opts):
    """Serialise a seeded synthesis twice; the verify-twice comparison runs in the tests."""
    docs = []
    for _ in range(2):
        _, _, _, _, res = _control_case(CONTROL_ALPHAS[0], opts, N=10)
        docs.append(io.dumps(res.to_dict()))
    return docs[0] == docs[1], {"bytes": len(docs[0]), "identical": docs[0] == docs[1]}


CRITERIA = [
    (1, "classical limit oracle", c01_classical_limit),
    (2, "boundary value identity", c02_boundary_value),
    (3, "orthonormality", c03_orthonormality),
    (4, "gap law", c04_gap_law),
    (5, "admissible potential identity", c05_admissible_identity),
    (6, "linearised controllability roundtrip", c06_linear_roundtrip),
    (7, "bilinear quadratic defect", c07_quadratic_defect),
    (8, "regime separation", c08_regime_separation),
    (9, "Ingham constant stability", c09_ingham_stability),
    (10, "Kadec margins", c10_kadec_margins),
    (11, "counting function limit", c11_counting_limit),
    (12, "hidden regularity evidence", c12_hidden_regularity),
    (13, "determinism", c13_determinism),
]


def run_one(number, opts=SuiteOptions()) -> CriterionResult:
    num, name, fn = CRITERIA[number - 1]
    start = time.perf_counter()
    try:
        ok, meas = fn(opts)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        ok, meas = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CriterionResult(num, name, bool(ok), meas, time.perf_counter() - start)


def run_all(opts=SuiteOptions(), only=None, echo=None):
    results = []
    for num, _, _ in CRITERIA:
        if only and num not in only:
            continue
        r = run_one(num, opts)
        if echo:
            echo(r)
        results.append(r)
    return results


def suite_document(results, opts, config_digest):
    return {
        "schema_version": "1.0",
        "command": "verify",
        "config_hash": config_digest,
        "seed": opts.seed,
        "perturb_kn": opts.perturb_kn,
        "all_passed": all(r.passed for r in results),
        "criteria": [r.to_dict() for r in results],
    }
