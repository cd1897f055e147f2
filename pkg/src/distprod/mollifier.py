"""Delta-sequence generators.

Two families are supported:

* the compact generators ``Phi(x) = x**m * exp(1/(x**2 - 1)) / F`` on
  ``|x| < 1`` (``m`` even), with exact derivatives and the moment
  constants ``A_{i,j} = int Phi**i / t**j``;
* generators built as the Fourier anti-transform of a smooth even bump
  supported in ``[-1, 1]``. These are real, even and rapidly decaying but
  neither compactly supported nor positive in general.

Fourier convention: ``Phi~(k) = (1/2pi) int Phi(x) exp(ikx) dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from .quadrature import (
    QuadResult,
    graded_points,
    integrate,
    integrate_semi_infinite,
    panel_rule,
)

__all__ = [
    "MollifierSpec",
    "FourierBumpSpec",
    "FourierMollifier",
    "AConstant",
    "DivergentConstant",
    "DeltaFamily",
    "DiricheletReport",
    "make_mollifier",
    "phi",
    "phi_derivative",
    "bump_derivative",
    "delta_n",
    "a_constant",
    "phi_fourier",
    "default_bump",
    "mollifier_from_fourier",
    "dirichelet_check",
    "positivity_check",
    "family_action",
]


class DivergentConstant(ArithmeticError):
    """``A_{i,j}`` does not exist: the integrand behaves like ``t**(m*i - j)``
    with ``m*i < j`` at the origin."""

    def __init__(self, m: int, i: int, j: int):
        super().__init__(f"A_{{{i},{j}}} diverges for m={m} (m*i={m * i} < j={j})")
        self.m, self.i, self.j = m, i, j


# ---------------------------------------------------------------------------
# exact derivatives of x**m * exp(1/(x**2 - 1))
# ---------------------------------------------------------------------------

_S = Polynomial([-1.0, 0.0, 1.0])  # x**2 - 1
_X = Polynomial([0.0, 1.0])


@lru_cache(maxsize=None)
def _numerators(m: int, k: int) -> tuple[Polynomial, ...]:
    """p_0..p_k with d^j/dx^j [x^m e^g] = p_j / (x^2-1)^(2j) * e^g, g = 1/(x^2-1)."""
    polys = [Polynomial([0.0] * m + [1.0])]
    for j in range(k):
        p = polys[-1]
        polys.append(p.deriv() * _S * _S - 4 * j * _X * _S * p - 2 * _X * p)
    return tuple(polys)


def bump_derivative(m: int, k: int, x) -> np.ndarray:
    """k-th derivative of the unnormalized ``x**m * exp(1/(x**2-1))`` (zero off ``(-1,1)``).

    Evaluated as ``p_k(x) * exp(g - 2k log(1-x^2))`` so nothing overflows
    near the support edge.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    one_minus = (1.0 - xi) * (1.0 + xi)
    with np.errstate(under="ignore"):
        expo = -1.0 / one_minus - 2 * k * np.log(one_minus)
        out[inside] = _numerators(m, k)[k](xi) * np.exp(expo)
    return out


# ---------------------------------------------------------------------------
# compact generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MollifierSpec:
    """Generator ``Phi(x) = x**m exp(1/(x**2-1)) / F`` supported in ``[-1, 1]``."""

    m: int
    F: float
    quad_tol: float = 1e-10
    F_error: float = 0.0

    support = (-1.0, 1.0)
    kinks = ()

    def __post_init__(self):
        if self.m < 0 or self.m % 2:
            raise ValueError(f"m must be a nonnegative even integer, got {self.m}")
        if not self.F > 0:
            raise ValueError("normalization F must be positive")

    def __call__(self, x):
        return bump_derivative(self.m, 0, x) / self.F

    def derivative(self, k: int, x):
        return bump_derivative(self.m, k, x) / self.F

    @property
    def even(self) -> bool:
        return True

    def to_dict(self) -> dict:
        return {"m": self.m, "F": self.F, "quad_tol": self.quad_tol, "F_error": self.F_error}


@lru_cache(maxsize=32)
def make_mollifier(m: int = 2, quad_tol: float = 1e-10) -> MollifierSpec:
    """Normalize ``x**m exp(1/(x**2-1))`` on ``[-1, 1]``.

    ``m=0`` gives the standard bump; the product formulas need ``m >= 2``.
    """
    if isinstance(m, bool) or int(m) != m:
        raise ValueError(f"m must be an integer, got {m!r}")
    m = int(m)
    if m < 0 or m % 2:
        raise ValueError(f"m must be a nonnegative even integer, got {m}")
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    # the relative error of F is the absolute error of int Phi
    res = integrate(lambda x: bump_derivative(m, 0, x), -1.0, 1.0, 0.0,
                    rtol=0.1 * quad_tol, points=(0.0,))
    return MollifierSpec(m=m, F=float(res.value), quad_tol=quad_tol,
                         F_error=res.error_estimate / res.value)


def phi(spec: MollifierSpec, x):
    return spec(x)


def phi_derivative(spec: MollifierSpec, k: int, x):
    if k < 0:
        raise ValueError("derivative order must be nonnegative")
    return spec.derivative(k, x)


def delta_n(generator: Callable, beta: float, n: float, x):
    """``n**beta * Phi(n**beta * x)``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    s = float(n) ** beta
    return s * generator(s * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class AConstant:
    i: int
    j: int
    m: int
    value: float
    error_estimate: float = 0.0

    def __float__(self) -> float:
        return self.value


def a_constant(spec: MollifierSpec, i: int, j: int, *, principal_value: bool = False,
               tol: float = 1e-11) -> AConstant:
    """``A_{i,j} = int_{-1}^{1} Phi(t)**i / t**j dt``.

    Convergence is decided from the exponent ``m*i - j`` before integrating.
    With ``principal_value=True`` a divergent constant with odd ``j`` is
    returned as its principal value, which is 0 by parity.
    """
    if i < 1 or j < 0:
        raise ValueError("need i >= 1 and j >= 0")
    m = spec.m
    power = m * i - j
    if power < 0:
        if principal_value and j % 2:
            return AConstant(i, j, m, 0.0, 0.0)
        raise DivergentConstant(m, i, j)
    scale = spec.F ** -i

    def f(t):
        with np.errstate(under="ignore"):
            e = np.exp(i / ((t - 1.0) * (t + 1.0)))
        return t ** power * e * scale

    res = integrate(f, -1.0, 1.0, 0.0, rtol=tol, points=(0.0,))
    return AConstant(i, j, m, float(res.value), res.error_estimate)


# ---------------------------------------------------------------------------
# Fourier-built generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FourierBumpSpec:
    """Even smooth bump ``b`` supported in ``[-1, 1]`` with ``2 pi b(0) = 1``."""

    bump: Callable[[np.ndarray], np.ndarray]
    name: str = "bump"
    tol: float = 1e-10
    validate: bool = True

    def __post_init__(self):
        if not self.validate:
            return
        k = np.linspace(-1.2, 1.2, 241)
        v = np.asarray(self.bump(k), dtype=float)
        if np.any(v[np.abs(k) >= 1.0] != 0.0):
            raise ValueError("bump must vanish outside [-1, 1]")
        if not np.allclose(v, v[::-1], rtol=0, atol=1e-14):
            raise ValueError("bump must be even")
        b0 = float(np.asarray(self.bump(np.array([0.0])))[0])
        if abs(2 * math.pi * b0 - 1.0) > max(self.tol, 1e-12):
            raise ValueError(f"need 2*pi*bump(0) = 1, got {2 * math.pi * b0!r}")

    def __call__(self, k):
        return np.asarray(self.bump(np.asarray(k, dtype=float)), dtype=float)


def _standard_bump(k):
    k = np.asarray(k, dtype=float)
    out = np.zeros_like(k)
    inside = np.abs(k) < 1.0
    ki = k[inside]
    with np.errstate(under="ignore"):
        out[inside] = math.e / (2 * math.pi) * np.exp(1.0 / ((ki - 1.0) * (ki + 1.0)))
    return out


def default_bump() -> FourierBumpSpec:
    """``(e / 2pi) exp(1/(k**2 - 1))``, so ``2 pi b(0) = 1``."""
    return _DEFAULT_BUMP


_DEFAULT_BUMP = FourierBumpSpec(_standard_bump, name="standard")


def _q_rule(panels: int = 128, order: int = 20):
    breaks = np.linspace(0.0, 1.0, panels + 1)
    return panel_rule(breaks, order)


@dataclass(frozen=True, eq=False)
class FourierMollifier:
    """``Phi(x) = int b(k) exp(-ikx) dk = 2 int_0^1 b(k) cos(kx) dk``.

    Bulk evaluation uses a cubic spline of ``Phi`` on ``[0, cutoff]`` and
    returns 0 beyond ``cutoff``; :meth:`exact` evaluates the anti-transform
    by adaptive quadrature.
    """

    bump: FourierBumpSpec
    cutoff: float = 400.0
    grid_step: float = 0.02
    _spline: CubicSpline = field(init=False, repr=False)

    kinks = ()

    def __post_init__(self):
        x = np.linspace(0.0, self.cutoff, int(round(self.cutoff / self.grid_step)) + 1)
        object.__setattr__(self, "_spline", CubicSpline(x, self._panel_values(x)))

    @property
    def support(self) -> tuple[float, float]:
        return (-self.cutoff, self.cutoff)

    def _panel_values(self, x: np.ndarray) -> np.ndarray:
        q, w = _q_rule()
        bw = 2.0 * w * self.bump(q)
        out = np.empty_like(x)
        for s in range(0, x.size, 2048):
            xs = x[s:s + 2048]
            out[s:s + 2048] = np.cos(np.outer(xs, q)) @ bw
        return out

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        inside = x <= self.cutoff
        out[inside] = self._spline(x[inside])
        return out

    def exact(self, x, tol: float = 1e-13) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = [
            integrate(lambda k, xv=xv: 2.0 * self.bump(k) * np.cos(k * xv), 0.0, 1.0, tol).value
            for xv in x.ravel()
        ]
        return np.array(vals).reshape(x.shape)

    def fourier(self, k):
        return self.bump(k)


@lru_cache(maxsize=8)
def mollifier_from_fourier(bump: FourierBumpSpec | None = None, cutoff: float = 400.0,
                           grid_step: float = 0.02) -> FourierMollifier:
    return FourierMollifier(bump or default_bump(), cutoff=cutoff, grid_step=grid_step)


def _generator_extent(generator) -> float:
    lo, hi = getattr(generator, "support", (-1.0, 1.0))
    return max(abs(lo), abs(hi))


def phi_fourier(generator, k, order: int = 20):
    """``(1/2pi) int Phi(x) exp(ikx) dx`` for an even generator, vectorized in ``k``.

    Uses ``(1/pi) int_0^L Phi(x) cos(kx) dx`` on a composite Gauss-Legendre
    rule whose panels resolve both ``Phi`` and the oscillation.
    """
    k = np.asarray(k, dtype=float)
    L = _generator_extent(generator)
    kmax = float(np.max(np.abs(k))) if k.size else 0.0
    if L <= 1.0:
        # compact generator: grade toward the flat edge at 1
        base = 1.0 - 0.5 ** np.arange(0, 12)
        n_osc = max(16, int(math.ceil(kmax * L / math.pi)) * 2)
        breaks = np.unique(np.concatenate([[0.0], base, np.linspace(0, L, n_osc + 1), [L]]))
    else:
        n_osc = max(int(math.ceil(L)), int(math.ceil(kmax * L / math.pi)) * 2)
        breaks = np.linspace(0.0, L, n_osc + 1)
    x, w = panel_rule(breaks, order)
    fw = w * generator(x)
    flat = k.ravel()
    out = np.empty(flat.size)
    for s in range(0, flat.size, 256):
        out[s:s + 256] = np.cos(np.outer(flat[s:s + 256], x)) @ fw
    return (out / math.pi).reshape(k.shape)


# ---------------------------------------------------------------------------
# delta families and their checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DeltaFamily:
    """``delta_n(x) = n**power * Phi(n**beta * x)``; ``power`` defaults to ``beta``."""

    generator: Callable
    beta: float = 1.0
    power: float | None = None

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    def __call__(self, n: float, x):
        s = float(n) ** self.beta
        p = self.beta if self.power is None else self.power
        return float(n) ** p * self.generator(s * np.asarray(x, dtype=float))

    def width(self, n: float) -> float:
        return float(n) ** -self.beta


def _scale_of(family, n) -> float:
    w = getattr(family, "width", None)
    return float(w(n)) if w is not None else 1e-12


def family_action(family, f: Callable, n: float, *, lo: float = -1.0, hi: float = 1.0,
                  tol: float = 1e-12) -> QuadResult:
    """``int_lo^hi delta_n(x) f(x) dx`` with breakpoints graded around the origin."""
    pts = graded_points(0.0, _scale_of(family, n), lo, hi, ratio=2.0)
    return integrate(lambda x: family(n, x) * f(x), lo, hi, tol, rtol=1e-12, points=pts)


@dataclass
class DiricheletReport:
    schedule: list[float]
    masses: list[float]
    tails: list[list[float]]
    C1: list[float]
    C2: float
    mass_ok: bool
    tails_ok: bool
    bound_ok: bool

    @property
    def passed(self) -> bool:
        return self.mass_ok and self.tails_ok and self.bound_ok

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def _tail_functions():
    return [
        lambda x: 1.0 / (1.0 + x * x),
        lambda x: np.exp(-np.abs(x)),
        lambda x: np.where(np.abs(x) <= 3.0, 1.0, 0.0),
    ]


def dirichelet_check(family, schedule: Sequence[float], *, A: float = 0.5,
                     mass_tol: float = 1e-6, tail_tol: float = 1e-6) -> DiricheletReport:
    """Check the three Dirichelet delta-sequence conditions along ``schedule``.

    i)   ``int_{-A}^{A} delta_n -> 1``;
    ii)  ``int_{|x|>A} delta_n f -> 0`` for integrable ``f``;
    iii) ``|delta_n(t)| <= C1/|t| + C2`` with ``C1, C2`` independent of ``n``.

    ``C1`` is estimated per ``n`` as ``max |t delta_n(t)|`` on a grid scaled
    to the family width; condition iii passes when it does not grow.
    """
    schedule = [float(n) for n in schedule]
    masses, tails, c1 = [], [], []
    s_grid = np.concatenate([-np.logspace(3, -4, 700), np.logspace(-4, 3, 700)])
    for n in schedule:
        masses.append(float(family_action(family, lambda x: np.ones_like(x), n, lo=-A, hi=A).value))
        row = []
        for f in _tail_functions():
            def g(x, f=f):
                return family(n, x) * f(x)
            right = integrate_semi_infinite(g, A, 1e-13, "algebraic", scale=1.0).value
            left = integrate_semi_infinite(lambda y: g(-y), A, 1e-13, "algebraic", scale=1.0).value
            row.append(float(right + left))
        tails.append(row)
        t = s_grid * _scale_of(family, n) if hasattr(family, "width") else s_grid * 1e-3
        t = t[np.abs(t) <= A]
        c1.append(float(np.max(np.abs(t * family(n, t)))))
    C1 = max(c1)
    grid = np.linspace(-A, A, 4001)
    grid = grid[grid != 0]
    C2 = max(float(np.max(np.abs(family(n, grid)) - C1 / np.abs(grid))) for n in schedule)
    C2 = max(C2, 0.0)

    mass_err = [abs(v - 1.0) for v in masses]
    mass_ok = mass_err[-1] <= mass_tol and mass_err[-1] <= mass_err[0] + mass_tol
    tail_last = max(abs(v) for v in tails[-1])
    tail_first = max(abs(v) for v in tails[0])
    tails_ok = tail_last <= tail_tol and tail_last <= tail_first + tail_tol
    bound_ok = c1[-1] <= c1[0] * (1 + 1e-6) + 1e-12
    return DiricheletReport(schedule, masses, tails, c1, C2, mass_ok, tails_ok, bound_ok)


def positivity_check(generator, samples: int = 20001) -> bool:
    """Whether ``Phi >= 0`` on a dense sample of its support."""
    L = _generator_extent(generator)
    x = np.linspace(-L, L, samples)
    return bool(np.all(generator(x) >= 0.0))
