"""Modal time stepping of ``a'' + Lambda a = p(t) M a`` and its linearisation."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import trig
from .spectrum import EigenSystem

__all__ = [
    "ControlSignal",
    "ModalState",
    "TrajectoryRecord",
    "StepUnderflowError",
    "UndersampledWarning",
    "DuhamelCoefficients",
    "evolve_bilinear",
    "evolve_linearized",
    "duhamel_exp_coefficients",
    "reconstruct_terminal",
    "energy",
    "rough_control",
]

DEFAULT_MODES = 40
DEFAULT_STEP_TOL = 1e-9
_HOLDS = ("linear", "previous", "next")


class StepUnderflowError(RuntimeError):
    def __init__(self, steps, change, step_tol):
        super().__init__(
            f"terminal state still changed by {change:.3g} at {steps} steps "
            f"(step_tol={step_tol:g})"
        )
        self.steps = steps
        self.change = change


class UndersampledWarning(UserWarning):
    pass


# --------------------------------------------------------------------------
# controls


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """A scalar control on [0, T].

    ``kind == "trig"``: ``d0 + d1 t + sum a_k cos(w_k t) + b_k sin(w_k t)``.
    ``kind == "sampled"``: values on a uniform grid interpolated by ``hold``.
    """

    kind: str
    T: float
    d0: float = 0.0
    d1: float = 0.0
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omegas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hold: str = "linear"

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        for name in ("a", "b", "omegas", "values"):
            arr = np.array(getattr(self, name), dtype=float).ravel()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.kind == "trig":
            if not len(self.a) == len(self.b) == len(self.omegas):
                raise ValueError("a, b and omegas must have equal length")
        elif self.kind == "sampled":
            if len(self.values) < 2:
                raise ValueError("sampled controls need at least 2 grid values")
            if self.hold not in _HOLDS:
                raise ValueError(f"hold must be one of {_HOLDS}")
        else:
            raise ValueError(f"unknown control kind {self.kind!r}")

    @classmethod
    def zero(cls, T):
        return cls("trig", float(T))

    @classmethod
    def trig(cls, T, d0, d1, a, b, omegas):
        return cls("trig", float(T), float(d0), float(d1), a, b, omegas)

    @classmethod
    def from_coefficients(cls, T, coeffs, omegas):
        """Trig control from a vector ordered like :func:`trig.family`."""
        c = np.asarray(coeffs, dtype=float)
        return cls.trig(T, c[0], c[1], c[2::2], c[3::2], omegas)

    @classmethod
    def sampled(cls, T, values, hold="linear"):
        return cls("sampled", float(T), values=values, hold=hold)

    @property
    def coefficients(self):
        """Trig coefficient vector in family order."""
        if self.kind != "trig":
            raise TypeError("only trig controls have family coefficients")
        c = np.empty(2 * len(self.a) + 2)
        c[0], c[1] = self.d0, self.d1
        c[2::2], c[3::2] = self.a, self.b
        return c

    @property
    def grid(self):
        return np.linspace(0.0, self.T, len(self.values))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "trig":
            ph = np.multiply.outer(t, self.omegas)
            return self.d0 + self.d1 * t + np.cos(ph) @ self.a + np.sin(ph) @ self.b
        v = self.values
        n = len(v) - 1
        u = np.clip(t / self.T, 0.0, 1.0) * n
        if self.hold == "linear":
            i = np.minimum(np.floor(u).astype(int), n - 1)
            return v[i] + (u - i) * (v[i + 1] - v[i])
        if self.hold == "previous":
            return v[np.minimum(np.floor(u).astype(int), n)]
        return v[np.maximum(np.ceil(u).astype(int), 0)]

    def reflect(self) -> "ControlSignal":
        """The control ``t -> self(T - t)``."""
        if self.kind == "sampled":
            flipped = {"linear": "linear", "previous": "next", "next": "previous"}
            return ControlSignal.sampled(self.T, self.values[::-1], flipped[self.hold])
        # cos(w(T-t)) = cos wT cos wt + sin wT sin wt
        # sin(w(T-t)) = sin wT cos wt - cos wT sin wt
        c, s = np.cos(self.omegas * self.T), np.sin(self.omegas * self.T)
        return ControlSignal.trig(
            self.T,
            self.d0 + self.d1 * self.T,
            -self.d1,
            self.a * c + self.b * s,
            self.a * s - self.b * c,
            self.omegas,
        )

    def scaled(self, eps) -> "ControlSignal":
        if self.kind == "sampled":
            return ControlSignal.sampled(self.T, eps * self.values, self.hold)
        return ControlSignal.trig(
            self.T, eps * self.d0, eps * self.d1, eps * self.a, eps * self.b, self.omegas
        )

    def integral(self, t):
        """``int_0^t p(s) ds`` for ``t`` in [0, T]."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.T)
        if self.kind == "trig":
            w = self.omegas
            ph = np.multiply.outer(t, w)
            with np.errstate(divide="ignore", invalid="ignore"):
                sc = np.where(w > 0, np.sin(ph) / np.where(w > 0, w, 1.0), t[..., None])
                cc = np.where(w > 0, (1.0 - np.cos(ph)) / np.where(w > 0, w, 1.0), 0.0)
            return self.d0 * t + 0.5 * self.d1 * t**2 + sc @ self.a + cc @ self.b
        v = self.values
        n = len(v) - 1
        h = self.T / n
        if self.hold == "linear":
            seg = 0.5 * h * (v[:-1] + v[1:])
        elif self.hold == "previous":
            seg = h * v[:-1]
        else:
            seg = h * v[1:]
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        i = np.minimum(np.floor(t / h).astype(int), n - 1)
        u = t - i * h
        if self.hold == "linear":
            part = u * v[i] + 0.5 * u**2 * (v[i + 1] - v[i]) / h
        else:
            part = u * (v[i] if self.hold == "previous" else v[i + 1])
        return cum[i] + part

    def step_values(self, t0, h, steps):
        """Kick amplitudes for a uniform step grid.

        Midpoint values for trig controls; exact step averages for sampled
        ones, so jumps between grid points cost O(h^2) instead of O(h).
        """
        if self.kind == "trig":
            return self(t0 + h * (np.arange(steps) + 0.5))
        I = self.integral(t0 + h * np.arange(steps + 1))
        return np.diff(I) / h

    def sample(self, n_points: int):
        t = np.linspace(0.0, self.T, int(n_points))
        return t, self(t)


# --------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class ModalState:
    """Coefficients ``a_n = <w, Phi_n>`` and ``v_n = <w_t, Phi_n>`` at time ``t``."""

    a: np.ndarray
    v: np.ndarray
    t: float = 0.0
    sys: EigenSystem | None = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        v = np.array(self.v, dtype=float)
        if a.shape != v.shape or a.ndim != 1:
            raise ValueError("a and v must be 1-d arrays of equal length")
        if self.sys is not None and len(a) != self.sys.N + 1:
            raise ValueError("state length does not match the eigensystem")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "v", v)

    @classmethod
    def ground(cls, sys: EigenSystem):
        a = np.zeros(sys.N + 1)
        a[0] = 1.0
        return cls(a, np.zeros(sys.N + 1), 0.0, sys)

    @property
    def vector(self):
        return np.concatenate([self.a, self.v])

    def __sub__(self, other):
        return ModalState(self.a - other.a, self.v - other.v, self.t, self.sys)

    def distance(self, other) -> float:
        return float(np.max(np.abs(self.vector - other.vector)))

    def to_dict(self):
        return {"t": self.t, "a": self.a.tolist(), "v": self.v.tolist()}


def energy(state: ModalState, lam) -> float:
    return 0.5 * float(np.sum(state.v**2 + np.asarray(lam) * state.a**2))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    times: np.ndarray
    a: np.ndarray
    v: np.ndarray
    sys: EigenSystem
    mu_matrix: np.ndarray
    steps: int
    last_change: float

    @property
    def terminal(self) -> ModalState:
        return ModalState(self.a[-1], self.v[-1], float(self.times[-1]), self.sys)

    @property
    def initial(self) -> ModalState:
        return ModalState(self.a[0], self.v[0], float(self.times[0]), self.sys)

    def state(self, k) -> ModalState:
        return ModalState(self.a[k], self.v[k], float(self.times[k]), self.sys)

    def __len__(self):
        return len(self.times)


# --------------------------------------------------------------------------
# bilinear evolution


def _rotation(omega, tau):
    """Half-step free propagator coefficients; n = 0 moves as ``a + v tau``."""
    w = np.asarray(omega, dtype=float)
    c = np.cos(w * tau)
    s = np.sin(w * tau)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_over_w = np.where(w > 0, s / np.where(w > 0, w, 1.0), tau)
    return c, s_over_w, -w * s


def _strang(a0, v0, omega, M, p_mid, h, keep):
    # one step R (I + h p K) R is affine in p: x -> P x + p Q x
    m = len(a0)
    c, sw, ws = _rotation(omega, 0.5 * h)
    R = np.block([[np.diag(c), np.diag(sw)], [np.diag(ws), np.diag(c)]])
    K = np.zeros((2 * m, 2 * m))
    K[m:, :m] = h * M
    PQ = np.vstack([R @ R, R @ K @ R])
    x = np.concatenate([a0, v0])
    n = len(p_mid)
    if keep:
        X = np.empty((n + 1, 2 * m))
        X[0] = x
    for k in range(n):
        y = PQ @ x
        x = y[: 2 * m] + p_mid[k] * y[2 * m :]
        if keep:
            X[k + 1] = x
    if keep:
        return X[:, :m], X[:, m:]
    return x[:m], x[m:]


def evolve_bilinear(
    init: ModalState,
    p: ControlSignal,
    mu_matrix,
    T: float | None = None,
    step_tol: float = DEFAULT_STEP_TOL,
    min_steps: int = 64,
    max_steps: int = 2**21,
) -> TrajectoryRecord:
    """Strang splitting with step halving until the terminal state settles.

    The terminal state at ``2n`` steps is compared with ``n`` steps; the finer
    run is returned once the sup-norm change is below ``step_tol``.
    """
    if init.sys is None:
        raise ValueError("initial state must reference its eigensystem")
    T = p.T if T is None else float(T)
    if not T > 0:
        raise ValueError("T must be positive")
    M = np.asarray(mu_matrix, dtype=float)
    n_modes = len(init.a)
    if M.shape != (n_modes, n_modes):
        raise ValueError(f"mu_matrix must be {n_modes}x{n_modes}, got {M.shape}")
    omega = init.sys.omega
    # enough steps to resolve the fastest mode for the Duhamel quadrature
    n = max(min_steps, 2 ** math.ceil(math.log2(max(1.0, 20 * omega[-1] * T / (2 * math.pi)))))

    def run(steps, keep=False):
        h = T / steps
        kicks = p.step_values(init.t, h, steps)
        return _strang(init.a, init.v, omega, M, np.asarray(kicks, float), h, keep)

    prev = np.concatenate(run(n))
    while True:
        n *= 2
        if n > max_steps:
            raise StepUnderflowError(n // 2, change, step_tol)
        cur = np.concatenate(run(n))
        change = float(np.max(np.abs(cur - prev)))
        if change < step_tol:
            break
        prev = cur
    A, V = run(n, keep=True)
    times = init.t + np.linspace(0.0, T, n + 1)
    return TrajectoryRecord(times, A, V, init.sys, M, n, change)


# --------------------------------------------------------------------------
# linearised map


_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _sampled_transform(q: ControlSignal, omegas):
    """``int_0^T q(s) exp(-i w s) ds`` for a sampled control, exact per segment.

    Segments with ``w h > 0.5`` use the exact exponential moments of the
    interpolant (Filon); the rest use 8-point Gauss-Legendre per segment.
    """
    v = q.values
    n = len(v) - 1
    h = q.T / n
    t0 = np.arange(n) * h
    if q.hold == "linear":
        A, B = v[:-1], (v[1:] - v[:-1]) / h
    elif q.hold == "previous":
        A, B = v[:-1], np.zeros(n)
    else:
        A, B = v[1:], np.zeros(n)
    out = np.empty(len(omegas), dtype=complex)
    for i, w in enumerate(np.asarray(omegas, dtype=float)):
        if abs(w) * h > 0.5:
            e = np.exp(-1j * w * h)
            m0 = (1.0 - e) / (1j * w)
            m1 = (e * (1.0 + 1j * w * h) - 1.0) / w**2
            out[i] = np.sum(np.exp(-1j * w * t0) * (A * m0 + B * m1))
        else:
            u = 0.5 * h * (_GL_X + 1.0)
            seg = (A[:, None] + B[:, None] * u) * np.exp(-1j * w * (t0[:, None] + u))
            out[i] = 0.5 * h * np.sum(seg @ _GL_W)
    return out


def _reflected_moments(q: ControlSignal, omegas):
    """``C(w) = int q(s) cos(w(T-s)) ds``, ``S(w) = int q(s) sin(w(T-s)) ds``,
    and the two polynomial moments ``int q``, ``int q (T-s)``."""
    T = q.T
    om = np.asarray(omegas, dtype=float)
    if q.kind == "trig":
        fam = trig.family(q.omegas)
        coef = q.coefficients
        pw = np.zeros(len(om), dtype=int)
        cos_m = coef @ trig.inner_products(fam, (pw, pw, om), T)
        sin_m = coef @ trig.inner_products(fam, (pw, pw + 1, om), T)
        poly = coef @ trig.inner_products(fam, (np.array([0, 1]), np.array([0, 0]), np.zeros(2)), T)
    else:
        F = _sampled_transform(q, om)
        cos_m, sin_m = F.real, -F.imag
        poly_f = _sampled_transform(q, np.zeros(1))[0].real
        # int s q(s) ds: exact for linear/constant interpolants with 8-point GL
        v = q.values
        n = len(v) - 1
        h = T / n
        u = 0.5 * h * (_GL_X + 1.0)
        tt = (np.arange(n) * h)[:, None] + u
        poly = np.array([poly_f, 0.5 * h * np.sum((q(tt) * tt) @ _GL_W)])
    c, s = np.cos(om * T), np.sin(om * T)
    C = c * cos_m + s * sin_m
    S = s * cos_m - c * sin_m
    int_q = poly[0]
    int_q_back = T * poly[0] - poly[1]
    return C, S, int_q, int_q_back


def evolve_linearized(q: ControlSignal, mu_coeffs, T: float | None = None, sys=None) -> ModalState:
    """Terminal state of the linearisation at the ground state.

    ``W_n(T) = mu_n int q(s) sin(w_n (T-s)) / w_n ds`` and
    ``W'_n(T) = mu_n int q(s) cos(w_n (T-s)) ds``, with ``(T-s)`` and ``1``
    as the kernels for ``n = 0``.
    """
    if T is not None and abs(float(T) - q.T) > 1e-12 * q.T:
        raise ValueError("T must match the control's horizon")
    sys = getattr(mu_coeffs, "sys", sys)
    if sys is None:
        raise ValueError("an eigensystem is required (pass a ModalVector)")
    mu = np.asarray(mu_coeffs, dtype=float)
    om = sys.omega[1:]
    C, S, int_q, int_q_back = _reflected_moments(q, om)
    a = np.empty(len(mu))
    v = np.empty(len(mu))
    a[0], v[0] = mu[0] * int_q_back, mu[0] * int_q
    a[1:] = mu[1:] * S / om
    v[1:] = mu[1:] * C
    return ModalState(a, v, q.T, sys)


# --------------------------------------------------------------------------
# Duhamel coefficients


@dataclass(frozen=True, eq=False)
class DuhamelCoefficients:
    """``gamma_n = int_0^T r_|n|(s) exp(-i w_n s) ds`` for ``n = -N..N``, ``n != 0``,
    plus the two ``n = 0`` integrals ``int r_0(s) ds`` and ``int r_0(s)(T-s) ds``."""

    indices: np.ndarray
    gamma: np.ndarray
    zero_mode: tuple
    T: float
    sys: EigenSystem

    def positive(self):
        return self.gamma[self.indices > 0]


def _simpson_weights(n_intervals, h):
    if n_intervals % 2:
        raise ValueError("Simpson weights need an even number of intervals")
    w = np.ones(n_intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def duhamel_exp_coefficients(traj: TrajectoryRecord, p: ControlSignal, mu_matrix=None):
    """Duhamel coefficients of ``r(s) = p(s) M a(s)`` along ``traj``.

    Composite Simpson on the trajectory grid; warns if the grid has fewer
    than 20 points per period of the fastest mode.
    """
    M = traj.mu_matrix if mu_matrix is None else np.asarray(mu_matrix, dtype=float)
    sys = traj.sys
    t = traj.times - traj.times[0]
    T = float(t[-1])
    h = T / (len(t) - 1)
    om = sys.omega
    if 2 * math.pi / (om[-1] * h) < 20:
        warnings.warn(
            f"trajectory grid has {2 * math.pi / (om[-1] * h):.1f} points per period "
            "of the fastest mode (< 20)",
            UndersampledWarning,
            stacklevel=2,
        )
    r = p(traj.times)[:, None] * (traj.a @ M.T)
    wts = _simpson_weights(len(t) - 1, h)
    idx = np.concatenate([-np.arange(sys.N, 0, -1), np.arange(1, sys.N + 1)])
    w_signed = np.sign(idx) * om[np.abs(idx)]
    phase = np.exp(-1j * np.multiply.outer(t, w_signed))
    gamma = np.einsum("k,kj,kj->j", wts, r[:, np.abs(idx)], phase)
    r0 = r[:, 0]
    zero = (float(wts @ r0), float(wts @ (r0 * (T - t))))
    return DuhamelCoefficients(idx, gamma, zero, T, sys)


def reconstruct_terminal(init: ModalState, coeffs: DuhamelCoefficients) -> ModalState:
    """Terminal state as free evolution plus the exponential-mode sum.

    Each ``n != 0`` contributes ``gamma_n e^{i w_n T} / (2 i w_n)`` to the
    position coefficient of mode ``|n|`` and ``gamma_n e^{i w_n T} / 2`` to its
    velocity coefficient.
    """
    sys = coeffs.sys
    T = coeffs.T
    om = sys.omega
    c, sw, ws = _rotation(om, T)
    a = c * init.a + sw * init.v
    v = ws * init.a + c * init.v
    a = a.astype(complex)
    v = v.astype(complex)
    for n, g in zip(coeffs.indices, coeffs.gamma):
        w = math.copysign(om[abs(n)], n)
        e = g * np.exp(1j * w * T)
        a[abs(n)] += e / (2j * w)
        v[abs(n)] += e / 2.0
    a[0] += coeffs.zero_mode[1]
    v[0] += coeffs.zero_mode[0]
    return ModalState(a.real, v.real, init.t + T, sys)


def rough_control(T: float, seed: int, amplitude: float = 0.2, pieces: int = 16,
                  hold: str = "linear") -> ControlSignal:
    """Seeded control with ``pieces`` random nodal values in ``[-amplitude, amplitude]``.

    With ``hold="linear"`` the signal is continuous with a kink at every node;
    ``"previous"`` gives a jump at every node.
    """
    rng = np.random.default_rng(seed)
    vals = amplitude * rng.uniform(-1.0, 1.0, pieces + 1)
    return ControlSignal.sampled(T, vals, hold=hold)
