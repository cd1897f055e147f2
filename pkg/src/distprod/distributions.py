"""Distributions, test functions and their two regularized forms.

A distribution is either a delta derivative at the origin or a continuous
function with compact support. Each regularization turns it into a smooth
function object exposing ``__call__``, ``derivative(j, x)``, ``support``
(``None`` for the whole line) and ``features``: ``(centre, scale)`` pairs
that tell the integrators where the function varies on which length scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Union

import numpy as np

from .analytic_reg import _edge_points, poisson_derivative, poisson_smoothing
from .mollifier import MollifierSpec, bump_derivative
from .quadrature import graded_points, integrate, panel_rule

__all__ = [
    "DeltaDerivative",
    "CompactFunction",
    "Distribution",
    "TestFunction",
    "MissingDerivative",
    "MollifiedDelta",
    "MollifiedFunction",
    "AnalyticDelta",
    "AnalyticFunction",
    "Product",
    "Combination",
    "mollify",
    "analytic",
    "pair",
    "hat",
    "bump_test_function",
    "standard_test_functions",
    "test_function",
    "compact_from_csv",
]


class MissingDerivative(ValueError):
    """A smooth function cannot supply the derivative order a delta derivative needs."""


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaDerivative:
    """``delta^(order)`` located at the origin."""

    order: int = 0

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be nonnegative")

    @property
    def name(self) -> str:
        return f"d{self.order}"


@dataclass(frozen=True, eq=False)
class CompactFunction:
    """Continuous ``f`` vanishing outside ``support``.

    ``kinks`` lists points where ``f`` is not smooth. ``hoelder_exponent`` is
    metadata only; a value below 1 makes the integrators grade their panels
    toward kinks and endpoints.
    """

    f: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    kinks: tuple[float, ...] = ()
    hoelder_exponent: float | None = None
    name: str = "f"

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise ValueError(f"support must be a nonempty interval, got {self.support}")
        if self.hoelder_exponent is not None and not 0 < self.hoelder_exponent <= 1:
            raise ValueError("hoelder_exponent must lie in (0, 1]")
        object.__setattr__(self, "support", (float(lo), float(hi)))
        object.__setattr__(self, "kinks", tuple(float(k) for k in self.kinks if lo < k < hi))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        out = np.zeros(x.shape)
        out[inside] = self.f(x[inside])
        return out


Distribution = Union[DeltaDerivative, CompactFunction]


def hat(centre: float = 0.0, half_width: float = 1.0, height: float = 1.0) -> CompactFunction:
    """Triangle ``height * max(0, 1 - |x - centre| / half_width)``."""
    return CompactFunction(
        lambda x: height * np.maximum(0.0, 1.0 - np.abs(x - centre) / half_width),
        (centre - half_width, centre + half_width),
        kinks=(centre,),
        hoelder_exponent=1.0,
        name="hat" if (centre, half_width, height) == (0.0, 1.0, 1.0) else f"hat({centre},{half_width})",
    )


def compact_from_csv(path: str | Path, name: str | None = None) -> CompactFunction:
    """Piecewise-linear function from a CSV with header ``x,f`` and increasing ``x``."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["x", "f"]:
            raise ValueError(f"{path}: expected header 'x,f', got {','.join(header)}")
        rows = [(float(r[0]), float(r[1])) for r in reader if r and r[0].strip()]
    if len(rows) < 2:
        raise ValueError(f"{path}: need at least two samples")
    xs = np.array([r[0] for r in rows])
    fs = np.array([r[1] for r in rows])
    if np.any(np.diff(xs) <= 0):
        raise ValueError(f"{path}: x must be strictly increasing")
    if not np.all(np.isfinite(fs)):
        raise ValueError(f"{path}: non-finite samples")
    return CompactFunction(
        lambda x: np.interp(x, xs, fs),
        (float(xs[0]), float(xs[-1])),
        kinks=tuple(xs[1:-1]),
        hoelder_exponent=1.0,
        name=name or path.stem,
    )


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Smooth compactly supported ``psi`` with tabulated derivatives at 0.

    ``dpsi(j, x)`` evaluates the j-th derivative anywhere, when available.
    """

    __test__ = False  # not a pytest class

    psi: Callable[[np.ndarray], np.ndarray]
    support: tuple[float, float]
    derivatives_at_zero: tuple[float, ...]
    name: str = "psi"
    dpsi: Callable[[int, np.ndarray], np.ndarray] | None = None
    kinks: tuple[float, ...] = ()

    @property
    def value_at_zero(self) -> float:
        return self.derivatives_at_zero[0]

    @property
    def features(self) -> list[tuple[float, float]]:
        return []

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        out = np.zeros(x.shape)
        inside = (x > lo) & (x < hi)
        out[inside] = self.psi(x[inside])
        return out

    def derivative(self, j: int, x):
        if j == 0:
            return self(x)
        if self.dpsi is None:
            raise MissingDerivative(f"{self.name} has no derivative evaluator")
        return self.dpsi(j, np.asarray(x, dtype=float))


def bump_test_function(name: str, centre: float = 0.0, width: float = 1.0,
                       height: float = math.e, m: int = 0, max_order: int = 8) -> TestFunction:
    """``height * B_m((x - centre) / width)`` with ``B_m(u) = u**m exp(1/(u**2 - 1))``."""

    def psi(x):
        return height * bump_derivative(m, 0, (np.asarray(x, dtype=float) - centre) / width)

    def dpsi(j, x):
        return height * width ** -j * bump_derivative(m, j, (np.asarray(x, dtype=float) - centre) / width)

    ders = tuple(float(dpsi(j, np.array([0.0]))[0]) for j in range(max_order + 1))
    return TestFunction(psi, (centre - width, centre + width), ders, name, dpsi)


def standard_test_functions() -> list[TestFunction]:
    """Fixed suite of test functions in D.

    ``bump``, ``wide`` and ``narrow`` have ``psi(0) = 1``; ``shifted`` vanishes
    near 0 together with all derivatives; ``offcenter`` has nonzero odd
    derivatives at 0; ``x2bump`` has ``psi(0) = 0`` but ``psi''(0) != 0``.
    """
    return [
        bump_test_function("bump"),
        bump_test_function("wide", width=2.0),
        bump_test_function("narrow", width=0.5),
        bump_test_function("shifted", centre=1.5),
        bump_test_function("offcenter", centre=0.3, height=1.0),
        bump_test_function("x2bump", m=2),
    ]


def test_function(name: str) -> TestFunction:
    for t in standard_test_functions():
        if t.name == name:
            return t
    names = ", ".join(t.name for t in standard_test_functions())
    raise KeyError(f"unknown test function {name!r}; choose from {names}")


test_function.__test__ = False


# ---------------------------------------------------------------------------
# regularized (smooth) forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MollifiedDelta:
    """``x -> n^(beta(k+1)) Phi^(k)(n^beta x)``."""

    order: int
    generator: MollifierSpec
    beta: float
    n: float

    @property
    def s(self) -> float:
        return float(self.n) ** self.beta

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.generator.support
        return (lo / self.s, hi / self.s)

    @property
    def features(self) -> list[tuple[float, float]]:
        return [(0.0, 1.0 / self.s)]

    def derivative(self, j: int, x):
        s = self.s
        x = np.asarray(x, dtype=float)
        return s ** (self.order + j + 1) * self.generator.derivative(self.order + j, s * x)

    def __call__(self, x):
        return self.derivative(0, x)


@dataclass(frozen=True)
class AnalyticDelta:
    """``x -> d^k/dx^k`` of the Poisson kernel at ``eps``."""

    order: int
    eps: float

    support = None

    @property
    def features(self) -> list[tuple[float, float]]:
        return [(0.0, self.eps)]

    def derivative(self, j: int, x):
        return poisson_derivative(self.order + j, x, self.eps)

    def __call__(self, x):
        return self.derivative(0, x)


def _generator_breaks(generator) -> np.ndarray:
    lo, hi = generator.support
    if hi - lo <= 2.0:
        # compact generator: the flat edges need no grading
        return np.linspace(lo, hi, 17)
    return np.linspace(lo, hi, int(math.ceil(hi - lo)) + 1)


@dataclass(frozen=True, eq=False)
class MollifiedFunction:
    """``x -> int f(y) delta_n(x - y) dy = int f(x - u/s) Phi(u) du``, ``s = n^beta``."""

    f: CompactFunction
    generator: object
    beta: float
    n: float
    order: int = 20

    @property
    def s(self) -> float:
        return float(self.n) ** self.beta

    @property
    def support(self) -> tuple[float, float]:
        glo, ghi = self.generator.support
        lo, hi = self.f.support
        return (lo - ghi / self.s, hi - glo / self.s)

    @property
    def features(self) -> list[tuple[float, float]]:
        return [(c, 1.0 / self.s) for c in (*self.f.support, *self.f.kinks)]

    @cached_property
    def _y_points(self) -> np.ndarray:
        lo, hi = self.f.support
        return np.array(sorted({lo, hi, *_edge_points(self.f, lo, hi)}))

    def derivative(self, j: int, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        s = self.s
        glo, ghi = self.generator.support
        base = _generator_breaks(self.generator)
        out = np.empty(flat.size)
        for c in range(0, flat.size, 512):
            xs = flat[c:c + 512]
            images = (xs[:, None] - self._y_points[None, :]) * s
            br = np.concatenate([np.broadcast_to(base, (xs.size, base.size)), images], axis=1)
            br = np.sort(np.clip(br, glo, ghi), axis=1)
            u, w = panel_rule(br, self.order)
            fu = self.f(xs[:, None] - u / s)
            if j == 0:
                gu = self.generator(u.ravel()).reshape(u.shape)
            else:
                gu = self.generator.derivative(j, u.ravel()).reshape(u.shape)
            out[c:c + 512] = np.sum(w * fu * gu, axis=1)
        return (s ** j * out).reshape(x.shape)

    def __call__(self, x):
        return self.derivative(0, x)


@dataclass(frozen=True, eq=False)
class AnalyticFunction:
    """Poisson smoothing of ``f`` at ``eps``."""

    f: CompactFunction
    eps: float

    support = None

    @property
    def features(self) -> list[tuple[float, float]]:
        return [(c, self.eps) for c in (*self.f.support, *self.f.kinks)]

    def derivative(self, j: int, x):
        return poisson_smoothing(self.f, x, self.eps, derivative=j)

    def __call__(self, x):
        return self.derivative(0, x)


def _intersect(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return (max(a[0], b[0]), min(a[1], b[1]))


def _hull(a, b):
    if a is None or b is None:
        return None
    return (min(a[0], b[0]), max(a[1], b[1]))


@dataclass(frozen=True, eq=False)
class Product:
    """Pointwise product; derivatives by the Leibniz rule."""

    factors: tuple

    @property
    def support(self):
        sup = None
        for f in self.factors:
            sup = _intersect(sup, getattr(f, "support", None))
        return sup

    @property
    def features(self) -> list[tuple[float, float]]:
        return [ft for f in self.factors for ft in getattr(f, "features", [])]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape)
        for f in self.factors:
            out = out * f(x)
        return out

    def derivative(self, j: int, x):
        if j == 0:
            return self(x)
        x = np.asarray(x, dtype=float)
        # derivatives of the running product, orders 0..j
        acc = [self.factors[0].derivative(i, x) for i in range(j + 1)]
        for f in self.factors[1:]:
            d = [f.derivative(i, x) for i in range(j + 1)]
            acc = [sum(math.comb(r, i) * acc[i] * d[r - i] for i in range(r + 1)) for r in range(j + 1)]
        return acc[j]


@dataclass(frozen=True, eq=False)
class Combination:
    """``sum c_i f_i``."""

    terms: tuple  # of (coefficient, function)

    @property
    def support(self):
        sup = ()
        for _, f in self.terms:
            s = getattr(f, "support", None)
            if s is None:
                return None
            sup = s if sup == () else _hull(sup, s)
        return sup or None

    @property
    def features(self) -> list[tuple[float, float]]:
        return [ft for _, f in self.terms for ft in getattr(f, "features", [])]

    def __call__(self, x):
        return self.derivative(0, x)

    def derivative(self, j: int, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for c, f in self.terms:
            out = out + c * (f(x) if j == 0 else f.derivative(j, x))
        return out


def mollify(T: Distribution, spec, beta: float, n: float):
    """``T * delta_n^(beta)`` as a smooth function."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    if isinstance(T, DeltaDerivative):
        return MollifiedDelta(T.order, spec, beta, n)
    if isinstance(T, CompactFunction):
        return MollifiedFunction(T, spec, beta, n)
    raise TypeError(f"not a distribution: {T!r}")


def analytic(T: Distribution, eps):
    """``T_red(., eps)`` as a smooth function."""
    e = float(eps)
    if not e > 0:
        raise ValueError("epsilon must be positive")
    if isinstance(T, DeltaDerivative):
        return AnalyticDelta(T.order, e)
    if isinstance(T, CompactFunction):
        return AnalyticFunction(T, e)
    raise TypeError(f"not a distribution: {T!r}")


def _derivative_at_zero(g, k: int) -> float:
    ders = getattr(g, "derivatives_at_zero", None)
    if ders is not None and k < len(ders):
        return float(ders[k])
    if k == 0:
        return float(np.asarray(g(np.array([0.0])))[0])
    d = getattr(g, "derivative", None)
    if d is None:
        raise MissingDerivative(f"cannot take derivative of order {k} of {g!r}")
    try:
        return float(np.asarray(d(k, np.array([0.0])))[0])
    except MissingDerivative:
        raise
    except (NotImplementedError, AttributeError) as exc:
        raise MissingDerivative(str(exc)) from exc


def pair(T: Distribution, g, tol: float = 1e-12) -> float:
    """Exact action ``<T, g>``."""
    if isinstance(T, DeltaDerivative):
        return (-1) ** T.order * _derivative_at_zero(g, T.order)
    if isinstance(T, CompactFunction):
        lo, hi = _intersect(T.support, getattr(g, "support", None))
        if not lo < hi:
            return 0.0
        pts = list(T.kinks) + list(getattr(g, "kinks", ()))
        for c, s in getattr(g, "features", []):
            pts += graded_points(c, s, lo, hi, ratio=2.0)
        res = integrate(lambda x: T(x) * g(x), lo, hi, tol, rtol=tol, points=pts)
        return float(res.value)
    raise TypeError(f"not a distribution: {T!r}")
