"""Bessel functions of the first kind for real order, their zeros, and Gamma.

Everything here is real-argument and vectorised over ``x``. The order is a
plain float; the toolkit only ever needs orders in roughly [-1/2, 11].

Three evaluation regimes are used for ``J_nu(x)``:

* power series for small ``x``,
* Miller's backward recurrence normalised by the Neumann sum
  ``(x/2)**mu = sum_k (mu + 2k) Gamma(mu + k) / k! J_{mu+2k}(x)``,
* Hankel's asymptotic expansion for large ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BesselZeroTable",
    "ZeroFindingError",
    "gamma",
    "rgamma",
    "bessel_j",
    "bessel_j_scaled",
    "bessel_j_prime",
    "bessel_zeros",
    "mcmahon_zero",
    "SERIES_LIMIT",
    "asymptotic_limit",
]

# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

SERIES_LIMIT = 8.0


class ZeroFindingError(RuntimeError):
    """Raised when a Bessel zero could not be located or polished."""

    def __init__(self, index, bracket, message="zero finding failed"):
        self.index = index
        self.bracket = bracket
        super().__init__(f"{message} for zero #{index} in bracket {bracket}")


def _lanczos_gamma(x):
    # valid on [1, 2]; relative error ~1e-15 there
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, len(_LANCZOS)):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def gamma(x: float) -> float:
    """Gamma function of a real argument.

    A fixed-coefficient Lanczos sum is evaluated on the base interval
    [1, 2] and carried to ``x`` by the recurrence ``Gamma(x+1) = x Gamma(x)``.

    Raises
    ------
    ValueError
        If ``x`` is a nonpositive integer (a pole).
    """
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"Gamma has a pole at {x!r}")
    if not math.isfinite(x):
        raise ValueError("Gamma argument must be finite")
    if x > 171.7:
        return math.inf
    if x == math.floor(x):
        return float(math.factorial(int(x) - 1))
    base = x
    num = 1.0
    den = 1.0
    while base > 2.0:
        base -= 1.0
        num *= base
    while base < 1.0:
        den *= base
        base += 1.0
    return num * _lanczos_gamma(base) / den


def rgamma(x: float) -> float:
    """``1 / Gamma(x)``, zero at the poles."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    return 1.0 / gamma(x)


def asymptotic_limit(nu: float) -> float:
    """Smallest ``x`` handed to the Hankel expansion for order ``nu``."""
    return max(25.0, nu * nu)


def _series(nu, x):
    # J_nu(x) = (x/2)^nu * sum_m (-x^2/4)^m / (m! Gamma(m + nu + 1))
    q = -0.25 * x * x
    r0 = rgamma(nu + 1.0)
    term = np.full_like(x, r0)
    total = term.copy()
    m = 0
    while True:
        m += 1
        term = term * q / (m * (m + nu))
        total += term
        if m > 4 and np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
        if m > 400:
            break
    return total


def _hankel(nu, x):
    mu4 = 4.0 * nu * nu
    inv8x = 1.0 / (8.0 * x)
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    prev = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 200):
        term = term * (mu4 - (2 * k - 1) ** 2) * inv8x / k
        mag = np.abs(term)
        # stop each element once the divergent tail starts to grow
        active &= mag < prev
        if not active.any():
            break
        t = np.where(active, term, 0.0)
        if k % 2 == 1:
            q += t if (k // 2) % 2 == 0 else -t
        else:
            p += t if (k // 2) % 2 == 0 else -t
        prev = np.where(active, mag, prev)
        active &= mag > 1e-17
    chi = x - (0.5 * nu + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _miller(mu, top, x):
    """Return [J_mu(x), ..., J_{mu+top}(x)] by backward recurrence, mu in [0, 1)."""
    xmax = float(np.max(x))
    start = int(xmax + 12.0 * xmax ** (1.0 / 3.0) + 40 + top)
    start += start % 2
    f_next = np.zeros_like(x)
    f_cur = np.full_like(x, 1e-30)
    keep = np.zeros((top + 1,) + x.shape)
    # g[0] is the k=0 weight Gamma(mu+1); g[k] = Gamma(mu+k)/k! for k >= 1
    g = [gamma(mu + 1.0), gamma(mu + 1.0)]
    for k in range(1, start // 2 + 1):
        g.append(g[-1] * (mu + k) / (k + 1))
    norm = np.zeros_like(x)
    for k in range(start, -1, -1):
        if k <= top:
            keep[k] = f_cur
        if k % 2 == 0:
            half = k // 2
            c = g[0] if half == 0 else (mu + k) * g[half]
            norm += c * f_cur
        if k == 0:
            break
        f_prev = (2.0 * (mu + k) / x) * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        big = np.abs(f_cur) > 1e200
        if big.any():
            s = np.where(big, 1e-200, 1.0)
            f_cur = f_cur * s
            f_next = f_next * s
            norm = norm * s
            keep = keep * s
    scale = (0.5 * x) ** mu / norm
    return keep * scale


def _miller_order(nu, x):
    fl = math.floor(nu)
    mu = nu - fl
    if fl >= 0:
        return _miller(mu, int(fl), x)[int(fl)]
    vals = _miller(mu, 1, x)
    upper, cur = vals[1], vals[0]
    order = mu
    for _ in range(-int(fl)):
        lower = (2.0 * order / x) * cur - upper
        upper, cur = cur, lower
        order -= 1.0
    return cur


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def bessel_j(nu: float, x):
    """Bessel function of the first kind ``J_nu(x)`` for real ``x >= 0``.

    Parameters
    ----------
    nu : float
        Real order. Negative integer orders use ``J_{-n} = (-1)^n J_n``.
    x : float or array_like
        Nonnegative argument(s). ``x = 0`` is rejected for negative
        non-integer orders, where ``J_nu`` is unbounded.

    Returns
    -------
    float or ndarray
        Same shape as ``x``.
    """
    nu = float(nu)
    arr, scalar = _as_array(x)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError("bessel_j requires finite x >= 0")
    if nu < 0 and nu == math.floor(nu):
        n = int(-nu)
        res = bessel_j(float(n), arr) * (-1.0) ** n
        return float(res) if scalar else res
    if nu < 0 and np.any(arr == 0):
        raise ValueError(f"J_{nu} is unbounded at x = 0")
    flat = arr.ravel()
    out = np.empty_like(flat)
    lim = asymptotic_limit(nu)
    small = flat <= SERIES_LIMIT
    large = flat >= lim
    mid = ~(small | large)
    if small.any():
        xs = flat[small]
        with np.errstate(divide="ignore"):
            pref = np.where(xs > 0, (0.5 * xs) ** nu, 1.0 if nu == 0 else 0.0)
        out[small] = pref * _series(nu, xs)
    if mid.any():
        out[mid] = _miller_order(nu, flat[mid])
    if large.any():
        out[large] = _hankel(nu, flat[large])
    out = out.reshape(arr.shape)
    return float(out) if scalar else out


def bessel_j_scaled(nu: float, y):
    """``y**(-nu) * J_nu(y)``, the entire function of ``y**2``.

    Finite at ``y = 0`` for every order, where it equals
    ``1 / (2**nu * Gamma(nu + 1))``.
    """
    nu = float(nu)
    arr, scalar = _as_array(y)
    if np.any(arr < 0):
        raise ValueError("bessel_j_scaled requires y >= 0")
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat <= 2.0
    if small.any():
        ys = flat[small]
        out[small] = 2.0 ** (-nu) * _series(nu, ys)
    if (~small).any():
        ys = flat[~small]
        out[~small] = bessel_j(nu, ys) * ys ** (-nu)
    out = out.reshape(arr.shape)
    return float(out) if scalar else out


def bessel_j_prime(nu: float, x):
    """Derivative ``J_nu'(x) = (nu/x) J_nu(x) - J_{nu+1}(x)`` for ``x > 0``."""
    arr, scalar = _as_array(x)
    if np.any(arr <= 0):
        raise ValueError("bessel_j_prime requires x > 0")
    res = (nu / arr) * bessel_j(nu, arr) - bessel_j(nu + 1.0, arr)
    return float(res) if scalar else res


def mcmahon_zero(nu: float, n):
    """McMahon's large-``n`` expansion of the ``n``-th positive zero of ``J_nu``."""
    n = np.asarray(n, dtype=float)
    beta = math.pi * (n + 0.5 * nu - 0.25)
    mu = 4.0 * nu * nu
    b8 = 8.0 * beta
    return (
        beta
        - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8**3)
    )


@dataclass(frozen=True)
class BesselZeroTable:
    """Ascending positive zeros ``j_{order, n}``, ``n = 1..len(zeros)``."""

    order: float
    zeros: np.ndarray
    tolerance: float

    def __post_init__(self):
        z = np.array(self.zeros, dtype=float)
        z.setflags(write=False)
        object.__setattr__(self, "zeros", z)

    def __len__(self):
        return len(self.zeros)

    def __getitem__(self, n):
        """1-based access: ``table[1]`` is the first positive zero."""
        if n < 1 or n > len(self.zeros):
            raise IndexError(f"zero index {n} outside 1..{len(self.zeros)}")
        return float(self.zeros[n - 1])

    def gaps(self):
        return np.diff(self.zeros)


def _sign_change_brackets(nu, upper, step):
    x0 = 1e-3
    mesh = np.arange(x0, upper + step, step)
    vals = bessel_j(nu, mesh)
    s = np.sign(vals)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = np.nonzero(vals == 0.0)[0]
    brackets = [(mesh[i], mesh[i + 1]) for i in idx]
    for i in exact:
        brackets.append((mesh[i], mesh[i]))
    brackets.sort()
    return brackets


def bessel_zeros(nu: float, count: int, tol: float = 1e-12, mesh_step: float = 0.1):
    """First ``count`` positive zeros of ``J_nu``.

    Each zero is bracketed by a sign change on a mesh covering
    ``[0, last + pi]`` (so none can be skipped), started from McMahon's
    estimate when that lies inside the bracket, and polished by Newton steps
    with a bisection fallback until ``|J_nu(z)| <= tol``.

    Raises
    ------
    ZeroFindingError
        If a bracket fails to converge within the iteration budget.
    """
    nu = float(nu)
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    if nu <= -1.0:
        raise ValueError("bessel_zeros supports orders nu > -1")
    upper = float(mcmahon_zero(nu, count)) + math.pi
    while True:
        brackets = _sign_change_brackets(nu, upper, mesh_step)
        if len(brackets) > count:
            break
        upper += 4.0 * math.pi
    brackets = brackets[:count]
    a = np.array([b[0] for b in brackets])
    b = np.array([b[1] for b in brackets])
    guess = mcmahon_zero(nu, np.arange(1, count + 1))
    z = np.where((guess > a) & (guess < b), guess, 0.5 * (a + b))
    fa = bessel_j(nu, a)
    done = a == b
    for _ in range(40):
        fz = bessel_j(nu, z)
        done |= np.abs(fz) <= 0.25 * tol
        if done.all():
            break
        # maintain brackets
        left = np.sign(fz) == np.sign(fa)
        a = np.where(left & ~done, z, a)
        fa = np.where(left & ~done, fz, fa)
        b = np.where(~left & ~done, z, b)
        dz = bessel_j_prime(nu, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = z - fz / dz
        ok = np.isfinite(newton) & (newton > a) & (newton < b)
        z = np.where(done, z, np.where(ok, newton, 0.5 * (a + b)))
        done |= (b - a) <= 4e-16 * b
    # bisection fallback on whatever is left
    fz = bessel_j(nu, z)
    stuck = np.nonzero(np.abs(fz) > tol)[0]
    for i in stuck:
        lo, hi, flo = a[i], b[i], fa[i]
        zi = z[i]
        for _ in range(200):
            zi = 0.5 * (lo + hi)
            fm = bessel_j(nu, zi)
            if abs(fm) <= tol or hi - lo <= 4e-16 * hi:
                break
            if math.copysign(1.0, fm) == math.copysign(1.0, flo):
                lo, flo = zi, fm
            else:
                hi = zi
        if abs(bessel_j(nu, zi)) > tol:
            raise ZeroFindingError(int(i) + 1, (float(lo), float(hi)))
        z[i] = zi
    if np.any(np.diff(z) <= 0):
        bad = int(np.nonzero(np.diff(z) <= 0)[0][0]) + 1
        raise ZeroFindingError(bad, (float(z[bad - 1]), float(z[bad])), "zeros not increasing")
    return BesselZeroTable(order=nu, zeros=z, tolerance=float(tol))
