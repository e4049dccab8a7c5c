"""Eigenpairs of ``-(x^alpha u')'`` on (0, 1) with Neumann conditions.

For ``n >= 1`` the eigenpairs are

    lambda_n = kappa^2 j_n^2,
    Phi_n(x) = K_n x^((1-alpha)/2) J_o(j_n x^kappa),

with ``kappa = (2-alpha)/2``, Bessel order ``o = -nu`` (``alpha < 1``) or
``o = +nu`` (``alpha >= 1``), ``nu = |1-alpha|/(2-alpha)``, and ``j_n`` the
``n``-th positive zero of ``J_{o+1}``. ``n = 0`` is the constant mode.

``Phi_n`` is evaluated as ``K_n j_n^o * s_o(j_n x^kappa)`` where
``s_o(y) = y^-o J_o(y)`` is finite at ``y = 0``; this is algebraically the
same as the formula above and avoids the ``0 * inf`` form at ``x = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .special_functions import (
    bessel_j,
    bessel_j_prime,
    bessel_j_scaled,
    bessel_zeros,
    rgamma,
)

__all__ = [
    "ALPHA_MAX",
    "DomainError",
    "DegeneracySetup",
    "EigenPair",
    "EigenSystem",
    "GapProfile",
    "degeneracy_setup",
    "build_eigensystem",
    "eigenfunction_eval",
    "omega_sequence",
    "gap_profile",
]

ALPHA_MAX = 1.9


class DomainError(ValueError):
    """A parameter is outside the range the toolkit supports."""


def _is_integer(v, tol=1e-9):
    return abs(v - round(v)) <= tol


@dataclass(frozen=True)
class DegeneracySetup:
    """The degeneracy exponent and every constant derived from it."""

    alpha: float
    kappa: float
    nu: float
    bessel_order: float
    zero_order: float
    T0: float
    k_alpha: int
    branch: str

    @property
    def degenerate_critical(self):
        """True when ``1/(2-alpha)`` is an integer on the strong branch."""
        return self.branch == "strong" and _is_integer(1.0 / (2.0 - self.alpha))


def degeneracy_setup(alpha: float) -> DegeneracySetup:
    alpha = float(alpha)
    if not (0.0 <= alpha < 2.0) or not math.isfinite(alpha):
        raise DomainError(f"alpha must lie in [0, 2), got {alpha!r}")
    kappa = (2.0 - alpha) / 2.0
    nu = abs(1.0 - alpha) / (2.0 - alpha)
    weak = alpha < 1.0
    order = -nu if weak else nu
    k_alpha = 0 if weak else int(math.floor(1.0 / (2.0 - alpha) + 1e-12))
    return DegeneracySetup(
        alpha=alpha,
        kappa=kappa,
        nu=nu,
        bessel_order=order,
        zero_order=order + 1.0,
        T0=4.0 / (2.0 - alpha),
        k_alpha=k_alpha,
        branch="weak" if weak else "strong",
    )


class EigenPair(NamedTuple):
    n: int
    lam: float
    jzero: float
    Kn: float
    omega: float
    phi_at_1: float
    phi_at_0: float


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Truncated eigenbasis ``n = 0..N``; all arrays have length ``N + 1``.

    Instances are immutable. Sign convention: ``Kn > 0`` so ``Phi_n(1)``
    carries the sign of ``J_o(j_n)``.
    """

    setup: DegeneracySetup
    lam: np.ndarray
    jzero: np.ndarray
    Kn: np.ndarray
    omega: np.ndarray
    phi_at_1: np.ndarray
    phi_at_0: np.ndarray
    tol: float = 1e-12
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for name in ("lam", "jzero", "Kn", "omega", "phi_at_1", "phi_at_0"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def N(self) -> int:
        return len(self.lam) - 1

    @property
    def alpha(self) -> float:
        return self.setup.alpha

    @property
    def lambda_star(self) -> np.ndarray:
        out = self.lam.copy()
        out[0] = 1.0
        return out

    @property
    def pairs(self):
        return [
            EigenPair(n, *(float(getattr(self, k)[n]) for k in
                           ("lam", "jzero", "Kn", "omega", "phi_at_1", "phi_at_0")))
            for n in range(self.N + 1)
        ]

    def _check_index(self, n):
        if not 0 <= n <= self.N:
            raise IndexError(f"mode {n} outside 0..{self.N}")

    def eigenfunction(self, n: int, x):
        """``Phi_n(x)`` for ``x`` in [0, 1] (vectorised over ``x``)."""
        self._check_index(n)
        xa = np.asarray(x, dtype=float)
        if np.any((xa < 0) | (xa > 1)):
            raise ValueError("x must lie in [0, 1]")
        if n == 0:
            out = np.ones_like(xa)
        else:
            o = self.setup.bessel_order
            j = self.jzero[n]
            y = j * xa ** self.setup.kappa
            out = self.Kn[n] * j**o * bessel_j_scaled(o, y)
        return float(out) if np.ndim(out) == 0 else out

    def eigenfunctions(self, x, modes=None):
        """Matrix ``Phi[n, i] = Phi_n(x_i)`` for ``n`` in ``modes`` (default all)."""
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        modes = range(self.N + 1) if modes is None else modes
        return np.array([np.atleast_1d(self.eigenfunction(n, xa)) for n in modes])

    def eigenfunction_derivative(self, n: int, x):
        """``Phi_n'(x)`` for ``x`` in (0, 1]."""
        self._check_index(n)
        xa = np.asarray(x, dtype=float)
        if np.any((xa <= 0) | (xa > 1)):
            raise ValueError("derivative is evaluated on (0, 1]")
        if n == 0:
            return np.zeros_like(xa) if xa.ndim else 0.0
        a = self.setup.alpha
        k = self.setup.kappa
        o = self.setup.bessel_order
        j = self.jzero[n]
        y = j * xa**k
        out = self.Kn[n] * (
            0.5 * (1.0 - a) * xa ** (-0.5 - 0.5 * a) * bessel_j(o, y)
            + xa ** (0.5 - 0.5 * a) * j * k * xa ** (k - 1.0) * bessel_j_prime(o, y)
        )
        return float(out) if np.ndim(out) == 0 else out


def build_eigensystem(alpha: float, N: int, tol: float = 1e-12) -> EigenSystem:
    """Eigenpairs ``n = 0..N`` for degeneracy ``alpha`` in [0, 1.9].

    ``K_n = sqrt(2-alpha) / |J_o(j_n)|`` (closed-form normalisation), so
    ``|Phi_n(1)| = sqrt(2-alpha)``; ``Phi_n(0) = K_n j_n^o / (2^o Gamma(1+o))``.
    """
    setup = degeneracy_setup(alpha)
    if setup.alpha > ALPHA_MAX:
        raise DomainError(f"alpha must not exceed {ALPHA_MAX}, got {setup.alpha!r}")
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    o = setup.bessel_order
    table = bessel_zeros(setup.zero_order, N, tol)
    j = np.concatenate([[0.0], table.zeros])
    jo = bessel_j(o, table.zeros)
    K = np.concatenate([[1.0], math.sqrt(2.0 - setup.alpha) / np.abs(jo)])
    lam = setup.kappa**2 * j**2
    lead = 2.0 ** (-o) * rgamma(1.0 + o)
    phi1 = np.concatenate([[1.0], K[1:] * jo])
    phi0 = np.concatenate([[1.0], K[1:] * table.zeros**o * lead])
    return EigenSystem(
        setup=setup,
        lam=lam,
        jzero=j,
        Kn=K,
        omega=np.sqrt(lam),
        phi_at_1=phi1,
        phi_at_0=phi0,
        tol=float(tol),
    )


def eigenfunction_eval(sys: EigenSystem, n: int, x):
    """Functional alias of :meth:`EigenSystem.eigenfunction`."""
    return sys.eigenfunction(n, x)


def omega_sequence(sys: EigenSystem):
    """Signed frequencies ``omega_n``, ``n = -N..N``, with ``omega_{-n} = -omega_n``.

    Returns ``(indices, omegas)``.
    """
    idx = np.arange(-sys.N, sys.N + 1)
    om = np.sign(idx) * sys.omega[np.abs(idx)]
    return idx, om


class GapProfile(NamedTuple):
    n: np.ndarray
    gaps: np.ndarray
    limit: float
    nonincreasing: bool


def gap_profile(sys: EigenSystem, slack: float = 1e-12) -> GapProfile:
    """Consecutive gaps ``omega_{n+1} - omega_n`` for ``n = 1..N-1``.

    ``nonincreasing`` allows ``slack`` (relative to the limit) for rounding.
    """
    if sys.N < 3:
        raise ValueError("gap profile needs N >= 3")
    gaps = np.diff(sys.omega[1:])
    limit = sys.setup.kappa * math.pi
    mono = bool(np.all(np.diff(gaps) <= slack * limit))
    return GapProfile(np.arange(1, sys.N), gaps, limit, mono)
