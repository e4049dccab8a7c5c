"""Controls steering the linearised system near the ground state, via a
trigonometric moment problem solved in minimum L2 norm."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import trig
from .innerprod import ModalVector, mu_coefficients, sobolev_tail
from .simulator import ControlSignal
from .spectrum import EigenSystem, _is_integer, degeneracy_setup

__all__ = [
    "InadmissiblePotentialError",
    "TargetState",
    "MomentProblem",
    "SynthesisResult",
    "RegimeDescriptor",
    "assemble_moment_problem",
    "solve_min_norm",
    "synthesize_ground_state_control",
    "regime_report",
    "DEFAULT_CUTOFF",
    "moment_rhs",
    "single_mode_target",
    "random_decaying_target",
    "target_from_rhs",
]

DEFAULT_CUTOFF = 1e-12
# relative band around T0 treated as T = T0
_CRITICAL_BAND = 1e-9
# |mu_n| lambda*_n below this counts as a vanishing coefficient
_ZERO_MU = 1e-10


class InadmissiblePotentialError(ValueError):
    def __init__(self, index, value):
        super().__init__(f"potential coefficient mu_{index} = {value:.3g} vanishes; "
                         "the moment problem cannot be formed")
        self.index = index


@dataclass(frozen=True, eq=False)
class TargetState:
    """Position target ``Y`` and velocity target ``Z`` as modal vectors."""

    Y: ModalVector
    Z: ModalVector

    def __post_init__(self):
        if self.Y.sys is not self.Z.sys:
            raise ValueError("Y and Z must share an eigensystem")

    @classmethod
    def from_arrays(cls, sys, Y, Z):
        return cls(ModalVector(Y, sys), ModalVector(Z, sys))

    @classmethod
    def zero(cls, sys):
        z = np.zeros(sys.N + 1)
        return cls.from_arrays(sys, z, z)

    @property
    def sys(self):
        return self.Y.sys

    @property
    def vector(self):
        return np.concatenate([self.Y.coeffs, self.Z.coeffs])

    def decay_flags(self):
        """Summability evidence for the H^3 norm of ``Y`` and the H^2 norm of ``Z``."""
        return sobolev_tail(self.Y, 3).converging, sobolev_tail(self.Z, 2).converging


@dataclass(frozen=True, eq=False)
class MomentProblem:
    T: float
    omegas: np.ndarray
    rhs: np.ndarray
    gram: np.ndarray
    cutoff: float = DEFAULT_CUTOFF

    @property
    def family(self):
        return trig.family(self.omegas)


@dataclass(frozen=True, eq=False)
class SynthesisResult:
    Q: ControlSignal
    q: ControlSignal
    coefficients: np.ndarray
    residual: np.ndarray
    residual_quadrature: np.ndarray
    min_norm: float
    effective_rank: int
    problem: MomentProblem
    regime: "RegimeDescriptor | None" = None

    @property
    def residual_inf(self) -> float:
        return float(np.max(np.abs(self.residual))) if len(self.residual) else 0.0

    def to_dict(self):
        reg = self.regime
        return {
            "T": self.problem.T,
            "T0": reg.T0 if reg else None,
            "regime": reg.regime if reg else None,
            "residual_inf": self.residual_inf,
            "min_norm": self.min_norm,
            "effective_rank": self.effective_rank,
            "coefficients": self.coefficients.tolist(),
        }


def moment_rhs(target: TargetState, mu) -> np.ndarray:
    """``[A_0, B_0, A_1, B_1, ...]`` with ``A_n = Z_n/mu_n``, ``B_n = w_n Y_n/mu_n``
    (``B_0 = Y_0/mu_0``)."""
    sys = target.sys
    m = np.asarray(mu, dtype=float)
    if len(m) != sys.N + 1:
        raise ValueError("mu and target truncations differ")
    scale = np.abs(m) * sys.lambda_star
    bad = np.flatnonzero(scale < _ZERO_MU)
    if bad.size:
        raise InadmissiblePotentialError(int(bad[0]), float(m[bad[0]]))
    Y, Z = target.Y.coeffs, target.Z.coeffs
    rhs = np.empty(2 * sys.N + 2)
    rhs[0] = Z[0] / m[0]
    rhs[1] = Y[0] / m[0]
    rhs[2::2] = Z[1:] / m[1:]
    rhs[3::2] = sys.omega[1:] * Y[1:] / m[1:]
    return rhs


def assemble_moment_problem(target: TargetState, mu, sys: EigenSystem | None = None,
                            T: float = None, cutoff: float = DEFAULT_CUTOFF) -> MomentProblem:
    """Right-hand side and closed-form Gram matrix on [0, T]."""
    sys = target.sys if sys is None else sys
    if target.sys is not sys:
        raise ValueError("target was built on a different eigensystem")
    if T is None or not T > 0:
        raise ValueError("T must be positive")
    rhs = moment_rhs(target, mu)
    om = sys.omega[1:]
    return MomentProblem(float(T), om, rhs, trig.gram_matrix(om, T), cutoff)


def _quadrature_moments(Q: ControlSignal, omegas, T):
    """``<Q, family_k>`` by Gauss-Legendre panels, independent of the closed forms."""
    x, w = np.polynomial.legendre.leggauss(32)
    w_max = max(1.0, float(np.max(omegas)) if len(omegas) else 1.0)
    panels = max(4, math.ceil(w_max * T / 4.0))
    e = np.linspace(0.0, T, panels + 1)
    half = 0.5 * np.diff(e)
    t = ((0.5 * (e[1:] + e[:-1]))[:, None] + half[:, None] * x).ravel()
    wt = (half[:, None] * w).ravel()
    qv = Q(t) * wt
    out = np.empty(2 * len(omegas) + 2)
    out[0] = qv.sum()
    out[1] = qv @ t
    ph = np.multiply.outer(t, omegas)
    out[2::2] = qv @ np.cos(ph)
    out[3::2] = qv @ np.sin(ph)
    return out


def solve_min_norm(problem: MomentProblem) -> SynthesisResult:
    """Minimum-norm solution of ``gram c = rhs`` through a truncated eigendecomposition.

    Eigenvalues below ``cutoff * max eigenvalue`` are discarded, so
    infeasible problems return a least-squares fit and a nonzero residual.
    """
    G, rhs = problem.gram, problem.rhs
    vals, vecs = np.linalg.eigh(G)
    keep = vals > problem.cutoff * vals[-1]
    proj = vecs[:, keep].T @ rhs
    c = vecs[:, keep] @ (proj / vals[keep])
    Q = ControlSignal.from_coefficients(problem.T, c, problem.omegas)
    residual = G @ c - rhs
    residual_q = _quadrature_moments(Q, problem.omegas, problem.T) - rhs
    return SynthesisResult(
        Q=Q,
        q=Q.reflect(),
        coefficients=c,
        residual=residual,
        residual_quadrature=residual_q,
        min_norm=math.sqrt(max(0.0, float(c @ G @ c))),
        effective_rank=int(keep.sum()),
        problem=problem,
    )


@dataclass(frozen=True)
class RegimeDescriptor:
    alpha: float
    T: float
    T0: float
    margin: float
    regime: str
    k: int | None = None

    def to_dict(self):
        return {"alpha": self.alpha, "T": self.T, "T0": self.T0, "margin": self.margin,
                "regime": self.regime, "k": self.k}


def regime_report(alpha: float, T: float) -> RegimeDescriptor:
    """Which controllability regime ``(alpha, T)`` falls in.

    At ``T = T0`` on the strong branch, ``1/(2 - alpha)`` integer is reported
    as ``excluded``; otherwise ``deficiency-k`` with ``k = floor(1/(2-alpha))``.
    ``alpha = 1`` lands in ``excluded`` (``1/(2-1) = 1``).
    """
    setup = degeneracy_setup(alpha)
    T = float(T)
    T0 = setup.T0
    margin = T - T0
    k = None
    if abs(margin) <= _CRITICAL_BAND * T0:
        if setup.branch == "weak":
            regime = "codim-1"
        elif _is_integer(1.0 / (2.0 - setup.alpha)):
            regime = "excluded"
        else:
            k = setup.k_alpha
            regime = f"deficiency-{k}"
    elif margin > 0:
        regime = "open-neighborhood"
    else:
        regime = "overdetermined"
    return RegimeDescriptor(setup.alpha, T, T0, margin, regime, k)


def synthesize_ground_state_control(target_offset: TargetState, mu, alpha: float | None = None,
                                    T: float = None, N: int | None = None,
                                    cutoff: float = DEFAULT_CUTOFF) -> SynthesisResult:
    """Control ``q`` whose linearised response from the ground state is ``target_offset``.

    ``mu`` is a callable on (0, 1) or a precomputed :class:`ModalVector`.
    ``alpha`` and ``N`` are checked against the target's eigensystem.
    """
    sys = target_offset.sys
    if alpha is not None and abs(alpha - sys.alpha) > 1e-15:
        raise ValueError("alpha does not match the target's eigensystem")
    if N is not None and N != sys.N:
        raise ValueError("N does not match the target's truncation")
    mu_vec = mu if isinstance(mu, ModalVector) else mu_coefficients(mu, sys)
    problem = assemble_moment_problem(target_offset, mu_vec.coeffs, sys, T, cutoff)
    res = solve_min_norm(problem)
    return SynthesisResult(**{**res.__dict__, "regime": regime_report(sys.alpha, T)})



def single_mode_target(sys: EigenSystem, mode: int, amplitude: float,
                       component: str = "velocity") -> TargetState:
    """Offset with one nonzero coefficient in ``Y`` (position) or ``Z`` (velocity)."""
    if not 0 <= mode <= sys.N:
        raise ValueError(f"mode {mode} outside 0..{sys.N}")
    if component not in ("position", "velocity"):
        raise ValueError("component must be 'position' or 'velocity'")
    Y = np.zeros(sys.N + 1)
    Z = np.zeros(sys.N + 1)
    (Y if component == "position" else Z)[mode] = amplitude
    return TargetState.from_arrays(sys, Y, Z)


def random_decaying_target(sys: EigenSystem, seed: int, decay: float = 2.0,
                           scale: float = 1.0) -> TargetState:
    """Seeded Gaussian coefficients damped by ``(lambda*_n)^-decay``."""
    rng = np.random.default_rng(seed)
    damp = scale * sys.lambda_star ** (-decay)
    Y = rng.standard_normal(sys.N + 1) * damp
    Z = rng.standard_normal(sys.N + 1) * damp
    return TargetState.from_arrays(sys, Y, Z)


def target_from_rhs(sys: EigenSystem, mu, rhs) -> TargetState:
    """Inverse of :func:`moment_rhs`: the target whose moments are ``rhs``."""
    m = np.asarray(mu, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    Y = np.empty(sys.N + 1)
    Z = np.empty(sys.N + 1)
    Z[0], Y[0] = rhs[0] * m[0], rhs[1] * m[0]
    Z[1:] = rhs[2::2] * m[1:]
    Y[1:] = rhs[3::2] * m[1:] / sys.omega[1:]
    return TargetState.from_arrays(sys, Y, Z)
