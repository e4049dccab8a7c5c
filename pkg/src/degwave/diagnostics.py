"""Numerical evidence for threshold, gap, counting and regularity properties.

Reports are evidence over a finite truncation, never proofs.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .innerprod import SobolevProfile, mu_coefficients, sobolev_tail, tail_profile, ModalVector
from .simulator import ControlSignal, TrajectoryRecord, duhamel_exp_coefficients
from .spectrum import DomainError, EigenSystem, _is_integer, degeneracy_setup

__all__ = [
    "SCHEMA_VERSION",
    "ExcludedAlphaError",
    "KadecReport",
    "CountingTable",
    "AdmissibilityReport",
    "RegularityReport",
    "threshold_time",
    "kadec_certificate",
    "deficiency",
    "counting_function",
    "admissibility",
    "hidden_regularity_check",
]

SCHEMA_VERSION = "1.0"
KADEC_TAIL_START = 20


class ExcludedAlphaError(DomainError):
    """``1/(2 - alpha)`` is an integer: the deficiency count is not defined."""


def threshold_time(alpha: float) -> float:
    """``4 / (2 - alpha)``."""
    return degeneracy_setup(alpha).T0


def deficiency(alpha: float) -> int:
    """``floor(1 / (2 - alpha))`` for ``alpha`` in (1, 2) off the excluded set."""
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"deficiency is defined for alpha in (1, 2), got {alpha!r}")
    r = 1.0 / (2.0 - alpha)
    if _is_integer(r):
        raise ExcludedAlphaError(f"alpha = {alpha!r} gives 1/(2-alpha) = {round(r)}, an integer")
    return int(math.floor(r))


def _report_dict(obj):
    d = {"schema_version": SCHEMA_VERSION, "report": type(obj).__name__}
    for k, v in asdict(obj).items():
        d[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return d


@dataclass(frozen=True)
class KadecReport:
    alpha: float
    k_shift: int
    tail_start: int
    tail_end: int
    sup_deviation: float
    margin: float
    limit_deviation: float
    head_deviations: tuple

    def to_dict(self):
        return _report_dict(self)


def kadec_certificate(sys: EigenSystem, N0: int = KADEC_TAIL_START, k_shift: int | None = None) -> KadecReport:
    """``sup_{N0 <= n <= N} |w_n/(kappa pi) - n - k/2|`` and margin ``1/4 - sup``.

    ``k`` defaults to 0 on the weak branch and ``floor(1/(2-alpha))`` on the
    strong one. ``limit_deviation`` is the large-``n`` value
    ``|alpha/(4(2-alpha)) - k/2|``. Deviations for ``n < N0`` are listed
    separately and do not enter the sup.
    """
    if sys.N < N0 + 50:
        raise ValueError(f"need N >= N0 + 50 = {N0 + 50}, have N = {sys.N}")
    s = sys.setup
    k = s.k_alpha if k_shift is None else int(k_shift)
    n = np.arange(sys.N + 1)
    x = sys.omega / (s.kappa * math.pi)
    dev = np.abs(x - n - 0.5 * k)
    sup = float(np.max(dev[N0:]))
    limit = abs(s.alpha / (4.0 * (2.0 - s.alpha)) - 0.5 * k)
    return KadecReport(s.alpha, k, N0, sys.N, sup, 0.25 - sup, limit, tuple(dev[1:N0].tolist()))


@dataclass(frozen=True)
class CountingTable:
    alpha: float
    r: np.ndarray
    count: np.ndarray
    ratio: np.ndarray
    limit: float

    def rows(self):
        return list(zip(self.r.tolist(), self.count.tolist(), self.ratio.tolist()))

    def to_dict(self):
        return _report_dict(self)


def counting_function(sys: EigenSystem, r_grid) -> CountingTable:
    """``n(r) = #{n in Z : |w_n| < r}`` for each ``r`` (must stay below ``w_N``)."""
    r = np.asarray(r_grid, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise ValueError("r_grid must be a nonempty 1-d sequence")
    if np.any(r <= 0) or np.any(r >= sys.omega[-1]):
        raise ValueError(f"r values must lie in (0, w_N) = (0, {sys.omega[-1]:.6g})")
    pos = np.searchsorted(sys.omega[1:], r, side="left")
    count = 1 + 2 * pos
    return CountingTable(sys.alpha, r, count, count / r, sys.setup.T0 / math.pi)


@dataclass(frozen=True)
class AdmissibilityReport:
    mu_id: str
    worst_ratio: float
    worst_index: int
    ratios: np.ndarray
    floor: float
    passed: bool

    def to_dict(self):
        d = _report_dict(self)
        d["pass"] = d.pop("passed")
        return d


def admissibility(mu, sys: EigenSystem, floor_c: float, mu_id: str | None = None) -> AdmissibilityReport:
    """``min_n lambda*_n |mu_n|`` over the truncation, compared with ``floor_c``."""
    coeffs = mu if isinstance(mu, ModalVector) else mu_coefficients(mu, sys)
    ratios = sys.lambda_star * np.abs(coeffs.coeffs)
    i = int(np.argmin(ratios))
    name = mu_id or getattr(mu, "__name__", "mu")
    return AdmissibilityReport(name, float(ratios[i]), i, ratios, float(floor_c),
                               bool(ratios[i] >= floor_c))


@dataclass(frozen=True, eq=False)
class RegularityReport:
    """Profiles for ``w(T)`` in H^3, ``w_t(T)`` in H^2 and ``sum lambda^2 |gamma_n|^2``."""

    position: SobolevProfile
    velocity: SobolevProfile
    duhamel: SobolevProfile

    @property
    def converging(self):
        return self.position.converging and self.velocity.converging

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "report": "RegularityReport",
            "converging": self.converging,
            "position": self.position.to_dict(),
            "velocity": self.velocity.to_dict(),
            "duhamel": self.duhamel.to_dict(),
        }


def hidden_regularity_check(traj: TrajectoryRecord, p: ControlSignal) -> RegularityReport:
    sys = traj.sys
    end = traj.terminal
    pos = sobolev_tail(ModalVector(end.a, sys), 3)
    vel = sobolev_tail(ModalVector(end.v, sys), 2)
    g = duhamel_exp_coefficients(traj, p).positive()
    # gamma_{-n} is the conjugate of gamma_n for real data; sum both signs
    duh = tail_profile(sys.lam[1:], np.sqrt(2.0) * np.abs(g), 2)
    return RegularityReport(pos, vel, duh)
