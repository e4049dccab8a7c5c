"""L2(0, 1) projections onto an eigenbasis and the associated Sobolev-tower norms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum import EigenSystem

__all__ = [
    "QuadratureError",
    "QuadratureRule",
    "ModalVector",
    "SobolevProfile",
    "quadrature_rule",
    "project",
    "mu_coefficients",
    "coupling_matrix",
    "sobolev_tail",
    "CONVERGENCE_THRESHOLD",
]

GL_ORDER = 16
# wanted contribution of [0, x_min] to any product of two eigenfunctions
_ORIGIN_MASS = 1e-17
_MAX_REFINE = 5
CONVERGENCE_THRESHOLD = 1e-3

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


class QuadratureError(RuntimeError):
    """Refinement ceiling reached before coefficients settled."""


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    level: int

    def integrate(self, values):
        return values @ self.weights


def _panels(sys: EigenSystem, level: int):
    """Panel edges on (0, 1]: halving toward 0, then split by phase change."""
    k = sys.setup.kappa
    j_max = sys.jzero[-1]
    peak = float(np.max(np.abs(sys.phi_at_0)))
    x_min = _ORIGIN_MASS / max(1.0, peak) ** 2
    depth = max(4, math.ceil(math.log2(1.0 / x_min)))
    edges = [0.0]
    for d in range(depth, 0, -1):
        a, b = 2.0**-d, 2.0 ** (1 - d)
        # about one radian of Bessel phase per sub-panel at level 0
        m = max(1, math.ceil(j_max * (b**k - a**k))) * 2**level
        edges.extend(a + (b - a) * np.arange(m) / m)
    edges.append(1.0)
    return np.asarray(edges)


def quadrature_rule(sys: EigenSystem, level: int = 0) -> QuadratureRule:
    """Composite Gauss-Legendre on a mesh graded toward ``x = 0`` (cached)."""
    key = ("rule", level)
    if key not in sys._cache:
        e = _panels(sys, level)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        nodes = (mid[:, None] + half[:, None] * _GL_X).ravel()
        weights = (half[:, None] * _GL_W).ravel()
        sys._cache[key] = QuadratureRule(nodes, weights, level)
    return sys._cache[key]


def _basis(sys: EigenSystem, level: int):
    key = ("basis", level)
    if key not in sys._cache:
        sys._cache[key] = sys.eigenfunctions(quadrature_rule(sys, level).nodes)
    return sys._cache[key]


@dataclass(frozen=True, eq=False)
class ModalVector:
    """Coefficients ``c_n = <f, Phi_n>`` for ``n = 0..N``."""

    coeffs: np.ndarray
    sys: EigenSystem

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.sys.N + 1,):
            raise ValueError(f"expected {self.sys.N + 1} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, n):
        return self.coeffs[n]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coeffs, dtype=dtype)

    def reconstruct(self, x):
        """Pointwise partial sum ``sum_n c_n Phi_n(x)``."""
        return self.coeffs @ self.sys.eigenfunctions(x)

    def norm2(self):
        return float(self.coeffs @ self.coeffs)


def _settled(sys, integrand_fn, quad_tol):
    """Integrate at increasing refinement until successive results agree."""
    prev = integrand_fn(0)
    for level in range(1, _MAX_REFINE + 1):
        cur = integrand_fn(level)
        change = float(np.max(np.abs(cur - prev)))
        if change <= quad_tol:
            return cur
        prev = cur
    raise QuadratureError(
        f"coefficients still moving by {change:.3g} "
        f"after {_MAX_REFINE} refinements (quad_tol={quad_tol:g})"
    )


def _sample(f, nodes):
    vals = np.asarray(f(nodes), dtype=float)
    if vals.shape == ():
        vals = np.full_like(nodes, float(vals))
    if not np.all(np.isfinite(vals)):
        raise ValueError("function returned non-finite values on quadrature nodes")
    return vals


def project(f, sys: EigenSystem, quad_tol: float = 1e-10) -> ModalVector:
    """``c_n = int_0^1 f Phi_n dx`` with absolute accuracy about ``quad_tol``."""
    def at(level):
        rule = quadrature_rule(sys, level)
        return _basis(sys, level) @ (rule.weights * _sample(f, rule.nodes))

    return ModalVector(_settled(sys, at, quad_tol), sys)


def mu_coefficients(mu, sys: EigenSystem, quad_tol: float = 1e-10) -> ModalVector:
    """``mu_n = <mu, Phi_n>``."""
    return project(mu, sys, quad_tol)


def coupling_matrix(mu, sys: EigenSystem, quad_tol: float = 1e-10) -> np.ndarray:
    """Symmetric ``M[n, m] = <mu Phi_m, Phi_n>``.

    Row and column 0 are the ``mu_coefficients`` vector itself.
    """
    def at(level):
        rule = quadrature_rule(sys, level)
        B = _basis(sys, level)
        return (B * (rule.weights * _sample(mu, rule.nodes))) @ B.T

    M = _settled(sys, at, quad_tol)
    M = 0.5 * (M + M.T)
    m0 = mu_coefficients(mu, sys, quad_tol).coeffs
    M[0, :] = m0
    M[:, 0] = m0
    return M


@dataclass(frozen=True)
class SobolevProfile:
    """Partial sums of ``sum_k (lambda*_k)^s c_k^2`` with ``lambda*_0 = 1``.

    ``converging`` is evidence only: every increment in the last quartile is
    below ``threshold`` times the running total.
    """

    s: float
    partial_sums: np.ndarray
    increments: np.ndarray
    converging: bool
    threshold: float

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])

    @property
    def worst_tail_ratio(self) -> float:
        return _tail_ratio(self.partial_sums, self.increments)

    def to_dict(self):
        return {
            "s": self.s,
            "total": self.total,
            "worst_tail_ratio": self.worst_tail_ratio,
            "converging": self.converging,
            "threshold": self.threshold,
            "partial_sums": self.partial_sums.tolist(),
        }


def _tail_ratio(sums, inc):
    n = len(sums)
    start = n - max(1, n // 4)
    tot = sums[start:]
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(tot > 0, inc[start:] / tot, 0.0)
    return float(np.max(r))


def tail_profile(weights, coeffs, s, threshold=CONVERGENCE_THRESHOLD) -> SobolevProfile:
    """Profile of ``sum weights_k^s |c_k|^2`` for arbitrary positive weights."""
    inc = np.asarray(weights, dtype=float) ** s * np.abs(np.asarray(coeffs)) ** 2
    sums = np.cumsum(inc)
    return SobolevProfile(float(s), sums, inc, _tail_ratio(sums, inc) < threshold, threshold)


def sobolev_tail(v, s: float, threshold: float = CONVERGENCE_THRESHOLD) -> SobolevProfile:
    """H^s profile of a :class:`ModalVector`."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    return tail_profile(v.sys.lambda_star, v.coeffs, s, threshold)
