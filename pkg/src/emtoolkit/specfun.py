"""Legendre functions, spherical harmonics, spherical Bessel functions and zeros.

Conventions
-----------
``assoc_legendre_P`` carries no Condon-Shortley phase; the ``(-1)^m`` factor
lives in ``spherical_harmonic``.  Harmonics with negative ``m`` come from
``Y_{l,-m} = (-1)^m conj(Y_{l,m})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ConvergenceError, DomainError, PreconditionError

ZERO_TOL = 1e-10


def _as_array(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _check_unit_interval(x: np.ndarray) -> None:
    if np.any(np.abs(x) > 1.0):
        raise DomainError("argument must satisfy |x| <= 1")


# ---------------------------------------------------------------------------
# Legendre

def legendre_P(l: int, x):
    """Legendre polynomial by the three-term recurrence."""
    if l < 0:
        raise DomainError(f"degree must be non-negative, got {l}")
    x, scalar = _as_array(x)
    _check_unit_interval(x)
    p_prev, p = np.ones_like(x), x.copy()
    if l == 0:
        p = p_prev
    for n in range(1, l):
        p_prev, p = p, ((2 * n + 1) * x * p - n * p_prev) / (n + 1)
    return float(p) if scalar else p


def assoc_legendre_P(l: int, m: int, x):
    """``(1 - x^2)^(m/2) d^m/dx^m P_l(x)`` for ``0 <= m <= l``."""
    if l < 0 or m < 0 or m > l:
        raise DomainError(f"need 0 <= m <= l, got l={l}, m={m}")
    x, scalar = _as_array(x)
    _check_unit_interval(x)
    dfact = math.prod(range(1, 2 * m, 2))  # (2m-1)!!
    p_mm = dfact * (1.0 - x * x) ** (0.5 * m)
    if l == m:
        out = p_mm
    else:
        p_prev, p = p_mm, x * (2 * m + 1) * p_mm
        for n in range(m + 2, l + 1):
            p_prev, p = p, ((2 * n - 1) * x * p - (n + m - 1) * p_prev) / (n - m)
        out = p
    return float(out) if scalar else out


def spherical_harmonic(l: int, m: int, theta, phi):
    """Orthonormal complex harmonic ``Y_{l,m}(theta, phi)``."""
    if l < 0 or abs(m) > l:
        raise DomainError(f"need |m| <= l, got l={l}, m={m}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(theta < -1e-12) or np.any(theta > np.pi + 1e-12):
        raise DomainError("theta must lie in [0, pi]")
    if np.any(np.abs(phi) > np.pi + 1e-12):
        raise DomainError("phi must lie in [-pi, pi]")
    am = abs(m)
    norm = math.sqrt((2 * l + 1) / (4.0 * math.pi)) * math.exp(
        0.5 * (math.lgamma(l - am + 1) - math.lgamma(l + am + 1)))
    cos_t = np.clip(np.cos(theta), -1.0, 1.0)
    y = (-1) ** am * norm * assoc_legendre_P(l, am, cos_t) * np.exp(1j * am * phi)
    if m < 0:
        y = (-1) ** am * np.conj(y)
    return complex(y) if np.ndim(y) == 0 else y


def spherical_harmonic_dtheta(l: int, m: int, theta, phi):
    """``dY_{l,m}/dtheta`` by the ladder identity (theta strictly inside (0, pi))."""
    theta = np.asarray(theta, dtype=float)
    out = m / np.tan(theta) * spherical_harmonic(l, m, theta, phi)
    if m < l:
        out = out + math.sqrt((l - m) * (l + m + 1)) * np.exp(-1j * np.asarray(phi)) \
            * spherical_harmonic(l, m + 1, theta, phi)
    return out


# ---------------------------------------------------------------------------
# spherical Bessel functions

def _j_upward(l: int, s: np.ndarray) -> np.ndarray:
    sn, cs = np.sin(s), np.cos(s)
    j_prev = sn / s
    if l == 0:
        return j_prev
    j = sn / (s * s) - cs / s
    for n in range(1, l):
        j_prev, j = j, (2 * n + 1) / s * j - j_prev
    return j


def _j_downward(l: int, s: np.ndarray) -> np.ndarray:
    # Miller recurrence started far above l; normalised with the sum rule
    # sum (2n+1) j_n^2 = 1 and signed against whichever of j_0, j_1 is larger.
    start = l + 10 + int(math.sqrt(60.0 * (l + 1)))
    f_next = np.zeros_like(s)
    f = np.full_like(s, 1e-30)
    total = (2 * start + 1) * f * f
    f_l = f if start == l else np.zeros_like(s)
    f1 = np.zeros_like(s)
    for n in range(start, 0, -1):
        f_prev = (2 * n + 1) / s * f - f_next
        f_next, f = f, f_prev
        if n - 1 == l:
            f_l = f.copy()
        if n - 1 == 1:
            f1 = f.copy()
        total = total + (2 * (n - 1) + 1) * f * f
        big = np.abs(f) > 1e100
        if big.any():
            scale = np.where(big, 1e-100, 1.0)
            f, f_next, f_l, f1 = f * scale, f_next * scale, f_l * scale, f1 * scale
            total = total * scale * scale
    f0 = f
    j = f_l / np.sqrt(total)
    exact0 = np.sin(s) / s
    exact1 = np.sin(s) / (s * s) - np.cos(s) / s
    use0 = np.abs(exact0) >= np.abs(exact1)
    sign = np.where(use0, np.sign(exact0) * np.sign(f0), np.sign(exact1) * np.sign(f1))
    return sign * j


def spherical_bessel_j(l: int, s):
    """Spherical Bessel function ``j_l(s)`` for ``s > 0``."""
    if l < 0:
        raise DomainError(f"order must be non-negative, got {l}")
    s, scalar = _as_array(s)
    if np.any(~(s > 0)):
        raise DomainError("spherical_bessel_j needs s > 0; use spherical_bessel_j_limit at 0")
    out = np.empty_like(s)
    up = s >= l
    if up.any():
        out[up] = _j_upward(l, s[up])
    if (~up).any():
        out[~up] = _j_downward(l, s[~up])
    return float(out) if scalar else out


def spherical_bessel_j_limit(l: int) -> float:
    """Value of ``j_l`` at ``s -> 0+``."""
    if l < 0:
        raise DomainError(f"order must be non-negative, got {l}")
    return 1.0 if l == 0 else 0.0


def spherical_bessel_jp(l: int, s):
    """Derivative ``j_l'(s) = j_{l-1}(s) - (l+1)/s j_l(s)``."""
    if l == 0:
        return -spherical_bessel_j(1, s)
    s_arr = np.asarray(s, dtype=float)
    return spherical_bessel_j(l - 1, s) - (l + 1) / s_arr * spherical_bessel_j(l, s)


def bessel_J_half(l: int, s):
    """Half-integer Bessel function ``J_{l+1/2}(s) = sqrt(2s/pi) j_l(s)``."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0)):
        raise DomainError("bessel_J_half needs s > 0")
    return np.sqrt(2.0 * s_arr / np.pi) * spherical_bessel_j(l, s)


@lru_cache(maxsize=None)
def _bessel_polys(l: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    # j_l(s) = (P_l(1/s) sin s - Q_{l-1}(1/s) cos s) / s; both obey the
    # j-recurrence with P_{-1} = 0, P_0 = 1, Q_{-2} = -1, Q_{-1} = 0.
    if l == -1:
        return (0,), (-1,)
    if l == 0:
        return (1,), (0,)
    p1, q1 = _bessel_polys(l - 1)
    p2, q2 = _bessel_polys(l - 2)

    def step(a, b, n):
        out = [0] * (max(len(a) + 1, len(b)))
        for i, c in enumerate(a):
            out[i + 1] += (2 * n + 1) * c
        for i, c in enumerate(b):
            out[i] -= c
        while len(out) > 1 and out[-1] == 0:
            out.pop()
        return tuple(out)

    return step(p1, p2, l - 1), step(q1, q2, l - 1)


def bessel_poly_P(l: int) -> tuple[int, ...]:
    """Integer coefficients of ``P_l(x)``, ascending powers."""
    if l < 0:
        raise DomainError("degree must be non-negative")
    return _bessel_polys(l)[0]


def bessel_poly_Q(l: int) -> tuple[int, ...]:
    """Integer coefficients of ``Q_l(x)``, ascending powers (``Q_{-1} = 0``)."""
    if l < -1:
        raise DomainError("degree must be at least -1")
    return _bessel_polys(l + 1)[1]


# ---------------------------------------------------------------------------
# zeros

@dataclass(frozen=True)
class ModeIndex:
    l: int
    m: int
    k: float

    def __post_init__(self) -> None:
        if self.l < 0 or abs(self.m) > self.l:
            raise DomainError(f"need |m| <= l, got l={self.l}, m={self.m}")
        if not self.k > 0:
            raise DomainError(f"wavenumber must be positive, got {self.k}")

    def is_cavity(self, r0: float, tol: float = ZERO_TOL) -> bool:
        return abs(spherical_bessel_j(self.l, self.k * r0)) < tol


@dataclass(frozen=True)
class ZeroTable:
    """Ascending wavenumbers ``k`` with ``j_l(k r0) = 0``."""

    l: int
    r0: float
    zeros: tuple[float, ...]

    def __post_init__(self) -> None:
        z = tuple(float(v) for v in self.zeros)
        if any(b <= a for a, b in zip(z, z[1:])):
            raise PreconditionError("zeros must be strictly increasing")
        object.__setattr__(self, "zeros", z)

    def __len__(self) -> int:
        return len(self.zeros)

    def __getitem__(self, n: int) -> float:
        """Zero number ``n`` counted from 1."""
        if n < 1:
            raise IndexError("zero indices start at 1")
        return self.zeros[n - 1]

    def residuals(self) -> np.ndarray:
        return np.abs(spherical_bessel_j(self.l, np.asarray(self.zeros) * self.r0))


def _polish(l: int, s: float, n: int) -> float:
    for _ in range(50):
        j = spherical_bessel_j(l, s)
        jp = spherical_bessel_jp(l, s)
        step = j / jp
        s -= step
        if abs(step) <= 4e-16 * s:
            break
    if abs(spherical_bessel_j(l, s)) >= ZERO_TOL * max(1.0, abs(spherical_bessel_jp(l, s))):
        raise ConvergenceError(f"zero polish did not converge for l={l}, n={n}")
    return s


def _bisect(l: int, a: float, b: float, fa: float, tol: float = 1e-6) -> float:
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = spherical_bessel_j(l, mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    return 0.5 * (a + b)


@lru_cache(maxsize=256)
def _zeros_unit(l: int, count: int) -> tuple[float, ...]:
    # Zeros of j_l lie above l and are more than pi apart, so a sign scan with
    # step pi/8 isolates each one.  The scan range comes from the large-n
    # asymptote pi*(n + l/2).
    step = np.pi / 8.0
    lo = max(float(l), 1.0)
    hi = np.pi * (count + 0.5 * l) + 2.0 * np.pi
    found: list[float] = []
    while True:
        grid = np.arange(lo, hi + step, step)
        vals = spherical_bessel_j(l, grid)
        for i in range(grid.size - 1):
            if vals[i] == 0.0:
                found.append(float(grid[i]))
            elif vals[i] * vals[i + 1] < 0:
                s = _bisect(l, grid[i], grid[i + 1], vals[i])
                found.append(_polish(l, s, len(found) + 1))
            if len(found) == count:
                return tuple(found)
        lo = float(grid[-1])
        hi = lo + np.pi * max(4, count - len(found) + 2)


def bessel_zeros(l: int, r0: float, count: int) -> ZeroTable:
    """First ``count`` positive ``k`` with ``j_l(k r0) = 0``."""
    if l < 0:
        raise DomainError(f"order must be non-negative, got {l}")
    if count < 1:
        raise PreconditionError(f"count must be at least 1, got {count}")
    if not r0 > 0:
        raise DomainError(f"r0 must be positive, got {r0}")
    return ZeroTable(l, float(r0), tuple(s / r0 for s in _zeros_unit(l, count)))


# ---------------------------------------------------------------------------
# radial functions and normalisation

def tau(l: int, k: float, r):
    """Radial eigenfunction ``k sqrt(2/pi) j_l(k r)``."""
    return k * math.sqrt(2.0 / math.pi) * spherical_bessel_j(l, k * np.asarray(r, dtype=float))


def tau_prime(l: int, k: float, r):
    return k * k * math.sqrt(2.0 / math.pi) * spherical_bessel_jp(l, k * np.asarray(r, dtype=float))


def _require_zero(l: int, k: float, r0: float, tol: float) -> None:
    if not (k > 0 and r0 > 0):
        raise DomainError("k and r0 must be positive")
    value = abs(spherical_bessel_j(l, k * r0))
    if value >= tol:
        raise PreconditionError(
            f"k*r0 = {k * r0!r} is not a zero of j_{l} (|j_l| = {value:.3e})")


def radial_norm_sq(l: int, k: float, r0: float) -> float:
    """Closed form of the integral of ``tau_{l,k}^2 r^2`` over ``[0, r0]``."""
    return 0.5 * k * r0 * r0 * float(bessel_J_half(l + 1, k * r0)) ** 2


def norm_constant(l: int, k: float, r0: float, tol: float = 1e-8) -> float:
    """``c_{l,k} = sqrt(k) r0 / sqrt(2) * J_{l+3/2}(k r0)``; ``k r0`` must be a zero of ``j_l``."""
    _require_zero(l, k, r0, tol)
    return math.sqrt(k) * r0 / math.sqrt(2.0) * float(bessel_J_half(l + 1, k * r0))
