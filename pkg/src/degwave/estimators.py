"""scikit-learn style wrappers: a modal projector and a ground-state controller."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import trig
from .innerprod import _basis, mu_coefficients, quadrature_rule
from .moment_control import (
    DEFAULT_CUTOFF,
    MomentProblem,
    TargetState,
    moment_rhs,
    regime_report,
    solve_min_norm,
)
from .simulator import ControlSignal
from .spectrum import build_eigensystem

__all__ = ["ModalProjector", "GroundStateController", "resolve_mu"]


def resolve_mu(mu, alpha):
    """Callable for a named potential preset, or ``mu`` itself if callable."""
    if callable(mu):
        return mu
    if mu == "power":
        return lambda x: x ** (2.0 - alpha)
    if mu == "one":
        return lambda x: np.ones_like(x)
    if mu == "power+smooth":
        return lambda x: x ** (2.0 - alpha) + 0.01 * x**2
    raise ValueError(f"unknown potential preset {mu!r}")


class ModalProjector(TransformerMixin, BaseEstimator):
    """Maps samples of functions on ``nodes_`` to eigenbasis coefficients.

    Rows of ``X`` are function values at the fitted quadrature nodes.
    """

    def __init__(self, alpha=0.0, n_modes=40, level=0):
        self.alpha = alpha
        self.n_modes = n_modes
        self.level = level

    def fit(self, X=None, y=None):
        self.system_ = build_eigensystem(self.alpha, self.n_modes)
        rule = quadrature_rule(self.system_, self.level)
        self.nodes_ = rule.nodes
        self.weights_ = rule.weights
        self._basis = _basis(self.system_, self.level)
        return self

    def transform(self, X):
        check_is_fitted(self, "system_")
        X = check_array(X)
        if X.shape[1] != len(self.nodes_):
            raise ValueError(f"expected {len(self.nodes_)} samples per row, got {X.shape[1]}")
        return (X * self.weights_) @ self._basis.T

    def inverse_transform(self, C):
        check_is_fitted(self, "system_")
        C = check_array(C)
        if C.shape[1] != self.n_modes + 1:
            raise ValueError(f"expected {self.n_modes + 1} coefficients per row")
        return C @ self._basis

    def sample(self, f):
        """Values of a callable at the fitted nodes, as a single-row matrix."""
        check_is_fitted(self, "system_")
        return np.atleast_2d(f(self.nodes_))


class GroundStateController(BaseEstimator):
    """Minimum-norm controls for targets near the ground state.

    Rows of ``X`` are ``[Y_0..Y_N, Z_0..Z_N]``; :meth:`predict` returns the
    control coefficients in family order ``[1, t, cos w_1 t, sin w_1 t, ...]``
    of the reflected control ``Q``.
    """

    def __init__(self, alpha=0.0, T=None, n_modes=20, mu="power", cutoff=DEFAULT_CUTOFF):
        self.alpha = alpha
        self.T = T
        self.n_modes = n_modes
        self.mu = mu
        self.cutoff = cutoff

    def fit(self, X=None, y=None):
        self.system_ = build_eigensystem(self.alpha, self.n_modes)
        self.T_ = 1.2 * self.system_.setup.T0 if self.T is None else float(self.T)
        self.mu_ = mu_coefficients(resolve_mu(self.mu, self.alpha), self.system_)
        self.gram_ = trig.gram_matrix(self.system_.omega[1:], self.T_)
        self.regime_ = regime_report(self.alpha, self.T_)
        return self

    def _solve(self, row):
        m = self.n_modes + 1
        target = TargetState.from_arrays(self.system_, row[:m], row[m:])
        rhs = moment_rhs(target, self.mu_.coeffs)
        problem = MomentProblem(self.T_, self.system_.omega[1:], rhs, self.gram_, self.cutoff)
        return solve_min_norm(problem)

    def _rows(self, X):
        check_is_fitted(self, "system_")
        X = check_array(X)
        if X.shape[1] != 2 * (self.n_modes + 1):
            raise ValueError(f"expected {2 * (self.n_modes + 1)} target entries per row")
        return X

    def predict(self, X):
        return np.array([self._solve(row).coefficients for row in self._rows(X)])

    def control(self, row) -> ControlSignal:
        """The control ``q`` (not the reflected ``Q``) for one target row."""
        return self._solve(self._rows(np.atleast_2d(row))[0]).q

    def score(self, X, y=None):
        """Negative worst moment residual over the rows (higher is better)."""
        return -max(self._solve(row).residual_inf for row in self._rows(X))
