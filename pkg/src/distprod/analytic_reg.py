"""Analytic (Cauchy / Poisson) regularization.

For a distribution ``T`` the Cauchy transform ``T0(z) = (1/2 pi i) <T, 1/(x-z)>``
is holomorphic off the support of ``T`` and ``T_red(x, eps) = T0(x+i eps) -
T0(x-i eps)``. For the delta function this is the Poisson kernel; for
``delta^(k)`` it is the k-th x-derivative of that kernel; for a continuous
compactly supported ``f`` it is the Poisson smoothing of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import graded_points, integrate, panel_rule

__all__ = [
    "Epsilon",
    "NonRealDomain",
    "poisson",
    "poisson_derivative",
    "cauchy_transform",
    "poisson_smoothing",
    "kernel_breaks",
]


class NonRealDomain(ValueError):
    """The Cauchy kernel is singular: ``z`` is real and lies in the support."""


@dataclass(frozen=True)
class Epsilon:
    value: float

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError(f"epsilon must be positive, got {self.value}")

    @classmethod
    def from_index(cls, alpha: float, n: float) -> "Epsilon":
        """``eps = n**-alpha``."""
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return cls(float(n) ** -float(alpha))

    def __float__(self) -> float:
        return self.value


def _eps(eps) -> float:
    e = float(eps)
    if not e > 0:
        raise ValueError(f"epsilon must be positive, got {e}")
    return e


def poisson(x, eps):
    """``(1/pi) eps / (x**2 + eps**2)``."""
    e = _eps(eps)
    x = np.asarray(x, dtype=float)
    return e / (math.pi * (x * x + e * e))


def poisson_derivative(k: int, x, eps):
    """k-th x-derivative of the Poisson kernel.

    With ``x + i eps = r exp(i theta)``,
    ``d^k/dx^k (1/pi) Im 1/(x - i eps) = (-1)^k k! sin((k+1) theta) / (pi r^(k+1))``.
    """
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    e = _eps(eps)
    x = np.asarray(x, dtype=float)
    if k == 0:
        return poisson(x, e)
    # evaluate at |x| (theta in (0, pi/2]) and restore parity: for x < 0,
    # sin((k+1) theta) with theta near pi cancels catastrophically
    ax = np.abs(x)
    theta = np.arctan2(e, ax)
    r = np.hypot(ax, e)
    val = (-1) ** k * math.factorial(k) * np.sin((k + 1) * theta) / (math.pi * r ** (k + 1))
    return np.where(x < 0, (-1) ** k * val, val) if k % 2 else val


def _support(f) -> tuple[float, float]:
    lo, hi = getattr(f, "support")
    return float(lo), float(hi)


def _kinks(f) -> list[float]:
    return [float(p) for p in getattr(f, "kinks", ())]


def cauchy_transform(f, z: complex, tol: float = 1e-12) -> complex:
    """``(1/2 pi i) int f(x) / (x - z) dx`` over the support of ``f``.

    ``f`` is a vectorized callable with a ``support`` attribute (and
    optionally ``kinks``). Real and imaginary parts are integrated
    separately as real integrals.
    """
    z = complex(z)
    a, b = z.real, z.imag
    lo, hi = _support(f)
    if b == 0.0 and lo <= a <= hi:
        raise NonRealDomain(f"z={z} is real and inside the support [{lo}, {hi}]")
    pts = _kinks(f)
    if b != 0.0:
        pts += graded_points(a, abs(b), lo, hi, ratio=2.0)

    def re_part(x):  # (1/2pi) b / ((x-a)^2 + b^2)
        d = x - a
        return f(x) * b / (d * d + b * b)

    def im_part(x):  # -(1/2pi) (x-a) / ((x-a)^2 + b^2)
        d = x - a
        return -f(x) * d / (d * d + b * b)

    re = integrate(re_part, lo, hi, tol, rtol=tol, points=pts).value if b != 0.0 else 0.0
    im = integrate(im_part, lo, hi, tol, rtol=tol, points=pts).value
    return complex(re, im) / (2 * math.pi)


def kernel_breaks(x: np.ndarray, scale: float, lo: float, hi: float,
                  fixed: list[float], ratio: float = 2.0) -> np.ndarray:
    """Per-point panel breaks: ``x ± scale*ratio**j`` plus fixed points, clipped to [lo, hi]."""
    x = np.asarray(x, dtype=float)
    width = hi - lo
    J = max(1, int(math.ceil(math.log(max(width / scale, 1.0), ratio))) + 1)
    offs = scale * ratio ** np.arange(J)
    cand = [np.full(x.shape, lo), np.full(x.shape, hi), x]
    cand += [x - d for d in offs] + [x + d for d in offs]
    cand += [np.full(x.shape, p) for p in fixed]
    br = np.stack(cand, axis=-1)
    br = np.clip(br, lo, hi)
    return np.sort(br, axis=-1)


def _edge_points(f, lo, hi) -> list[float]:
    """Breakpoints graded toward kinks and endpoints of Hoelder-only functions."""
    pts = _kinks(f)
    h = getattr(f, "hoelder_exponent", None)
    if h is not None and h < 1.0:
        for c in [lo, hi, *pts]:
            pts += graded_points(c, 1e-9, lo, hi, ratio=4.0)
    return pts


def poisson_smoothing(f, x, eps, *, order: int = 20, derivative: int = 0):
    """``(1/pi) int f(y) eps / ((y-x)**2 + eps**2) dy``, vectorized in ``x``.

    Uses a composite Gauss-Legendre rule on panels graded geometrically
    around each ``x`` (ratio 2, down to ``eps``) plus the kinks of ``f``.
    ``derivative=j`` returns the j-th x-derivative instead.
    """
    e = _eps(eps)
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x).ravel()
    lo, hi = _support(f)
    fixed = _edge_points(f, lo, hi)
    out = np.empty(flat.size)
    chunk = 512
    for s in range(0, flat.size, chunk):
        xs = flat[s:s + chunk]
        br = kernel_breaks(xs, e, lo, hi, fixed)
        y, w = panel_rule(br, order)
        fy = f(y.ravel()).reshape(y.shape)
        # d^j/dx^j K(x - y) = K^(j)(x - y)
        ker = poisson_derivative(derivative, xs[:, None] - y, e)
        out[s:s + chunk] = np.sum(w * fy * ker, axis=-1)
    return out.reshape(x.shape)
