"""Deterministic adaptive quadrature.

Global adaptive bisection driven by the 10-point Gauss / 21-point Kronrod
pair (the QUADPACK ``qk21`` rule and error heuristic). Integrands are
vectorized: they receive a 1-d float array and return an array of the same
shape (real or complex). Every interval selected for refinement in a sweep
is bisected at once, so one sweep costs a single integrand call.

Fixed composite Gauss-Legendre rules on caller-supplied panels are also
provided for the batched inner integrals (convolutions evaluated at many
points at once).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "QuadResult",
    "QuadratureError",
    "NoConvergence",
    "NonFiniteIntegrand",
    "integrate",
    "integrate_semi_infinite",
    "graded_points",
    "panel_rule",
]

_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny

# Kronrod abscissae (positive half, descending) and weights, QUADPACK qk21.
_XGK = np.array([
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525329854,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
# Gauss weights live on the odd-indexed Kronrod abscissae.
_WG = np.array([
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(21)
GAUSS_WEIGHTS[1:10:2] = _WG
GAUSS_WEIGHTS[11:20:2] = _WG[::-1]


class QuadratureError(ArithmeticError):
    """Base class for quadrature failures."""


class NoConvergence(QuadratureError):
    """The tolerance could not be met.

    The best available estimate is attached as ``partial`` (``None`` when
    the integrand could not even be sampled).
    """

    def __init__(self, message: str, partial: "QuadResult | None" = None):
        super().__init__(message)
        self.partial = partial


class NonFiniteIntegrand(NoConvergence):
    """The integrand returned inf or nan at a sample point."""


@dataclass(frozen=True)
class QuadResult:
    value: complex | float
    error_estimate: float
    evaluations: int
    abs_value: float = float("nan")  # integral of |f|, a natural scale
    intervals: int = 0

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")


def _kronrod(f, a: np.ndarray, b: np.ndarray):
    centre = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = centre[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(f(x.ravel())).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)]
        raise NonFiniteIntegrand(f"integrand is not finite at x={bad[:3]!r}")
    resk = fx @ KRONROD_WEIGHTS
    resg = fx @ GAUSS_WEIGHTS
    absf = np.abs(fx)
    resabs = absf @ KRONROD_WEIGHTS
    resasc = np.abs(fx - 0.5 * resk[:, None]) @ KRONROD_WEIGHTS
    err = np.abs((resk - resg) * half)
    resasc = resasc * np.abs(half)
    resabs = resabs * np.abs(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where((resasc != 0) & (err != 0), scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > _TINY / (50.0 * _EPS), np.maximum(floor, err), err)
    return resk * half, err, resabs


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    rtol: float = 0.0,
    points: Iterable[float] = (),
    limit: int = 100_000,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]``.

    Stops once the summed error estimate is below
    ``max(tol, rtol * integral(|f|))``. ``points`` are split points where
    the integrand is singular or changes scale; they become interval
    endpoints, so the integrand is never evaluated on them.

    Raises
    ------
    NoConvergence
        If ``limit`` subintervals do not suffice, roundoff prevents further
        refinement, or the tolerance is below ``50 * eps * integral(|f|)``.
    NonFiniteIntegrand
        If the integrand returns inf or nan at a node (a subclass of
        ``NoConvergence``; pass the singular point in ``points``).
    """
    a = float(a)
    b = float(b)
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if tol < 0 or rtol < 0 or (tol == 0 and rtol == 0):
        raise ValueError("tolerances must be nonnegative and not both zero")

    cuts = np.unique(np.array([a, b, *[p for p in points if a < p < b]], dtype=float))
    lo, hi = cuts[:-1], cuts[1:]
    val, err, absv = _kronrod(f, lo, hi)
    nev = 21 * lo.size

    while True:
        total_err = float(err.sum())
        abs_total = float(absv.sum())
        target = max(tol, rtol * abs_total)
        if total_err <= target:
            break
        # each interval's estimate is floored at 50 eps * int|f|, so subdividing
        # cannot push the total below 50 eps * abs_total
        if 50.0 * _EPS * abs_total > target:
            partial = QuadResult(_total(val), total_err, nev, abs_total, lo.size)
            raise NoConvergence(
                f"tolerance {target:.3g} is below the roundoff floor "
                f"{50.0 * _EPS * abs_total:.3g}", partial)
        width = hi - lo
        splittable = width > 64.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        order = np.argsort(-err, kind="stable")
        order = order[splittable[order]]
        if order.size == 0:
            partial = QuadResult(_total(val), total_err, nev, abs_total, lo.size)
            raise NoConvergence("roundoff limit reached before tolerance", partial)
        # Bisect the worst intervals until the remaining error fits in half the target.
        excess = total_err - 0.5 * target
        take = int(np.searchsorted(np.cumsum(err[order]), excess)) + 1
        pick = np.sort(order[:take])
        if lo.size + pick.size > limit:
            partial = QuadResult(_total(val), total_err, nev, abs_total, lo.size)
            raise NoConvergence(
                f"subdivision budget of {limit} intervals exhausted "
                f"(error {total_err:.3g} > {target:.3g})",
                partial,
            )
        mid = 0.5 * (lo[pick] + hi[pick])
        new_lo = np.concatenate([lo[pick], mid])
        new_hi = np.concatenate([mid, hi[pick]])
        nval, nerr, nabs = _kronrod(f, new_lo, new_hi)
        nev += 21 * new_lo.size
        keep = np.ones(lo.size, dtype=bool)
        keep[pick] = False
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
        absv = np.concatenate([absv[keep], nabs])
        # keep interval order canonical so sums are reproducible
        idx = np.argsort(lo, kind="stable")
        lo, hi, val, err, absv = lo[idx], hi[idx], val[idx], err[idx], absv[idx]

    return QuadResult(_total(val), float(err.sum()), nev, float(absv.sum()), lo.size)


def _total(val: np.ndarray):
    s = val.sum()
    return complex(s) if np.iscomplexobj(val) else float(s)


def integrate_semi_infinite(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    tol: float = 1e-10,
    decay_hint: str = "exponential",
    *,
    scale: float = 1.0,
    rtol: float = 0.0,
    limit: int = 100_000,
) -> QuadResult:
    """Integrate ``f`` over ``[a, inf)`` after mapping to ``[0, 1)``.

    ``decay_hint="exponential"`` uses ``x = a - scale*log(1-t)`` (exact
    for ``exp(-(x-a)/scale)``); ``"algebraic"`` uses
    ``x = a + scale*t/(1-t)``. ``scale`` should be the length over which
    the integrand decays.
    """
    if scale <= 0:
        raise ValueError("scale must be positive")
    if decay_hint == "exponential":
        def x_of(s):
            return a - scale * np.log(s), scale / s
    elif decay_hint == "algebraic":
        def x_of(s):
            return a + scale * (1.0 - s) / s, scale / (s * s)
    else:
        raise ValueError(f"unknown decay_hint {decay_hint!r}")

    def g(t):
        s = 1.0 - t
        out = np.zeros(t.shape, dtype=complex if _is_complex(f, a) else float)
        live = s > 0  # t rounds to 1 on tiny intervals: the integrand has decayed
        x, jac = x_of(s[live])
        out[live] = f(x) * jac
        return out

    return integrate(g, 0.0, 1.0, tol, rtol=rtol, limit=limit)


def _is_complex(f, a: float) -> bool:
    return bool(np.iscomplexobj(np.asarray(f(np.array([a + 1.0])))))


def graded_points(
    centre: float, scale: float, lo: float, hi: float, ratio: float = 4.0
) -> list[float]:
    """Split points ``centre ± scale*ratio**j`` (j >= 0) that fall inside ``(lo, hi)``,
    plus ``centre`` itself when interior."""
    pts = []
    if lo < centre < hi:
        pts.append(centre)
    if scale <= 0:
        return pts
    reach = max(hi - centre, centre - lo)
    d = scale
    while d < reach:
        for p in (centre - d, centre + d):
            if lo < p < hi:
                pts.append(p)
        d *= ratio
    return pts


@lru_cache(maxsize=8)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def panel_rule(breaks: np.ndarray, order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights.

    ``breaks`` has shape ``(..., P)`` and is sorted along the last axis;
    zero-length panels are allowed and contribute nothing. Returns
    ``(nodes, weights)`` of shape ``(..., (P-1)*order)``.
    """
    breaks = np.asarray(breaks, dtype=float)
    x, w = _legendre(order)
    left = breaks[..., :-1, None]
    half = 0.5 * (breaks[..., 1:, None] - left)
    nodes = left + half * (x + 1.0)
    weights = half * w
    shape = breaks.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def sorted_breaks(rows: Sequence[np.ndarray], lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Stack per-point breakpoint candidates, clip to ``[lo, hi]`` and sort."""
    cand = np.column_stack([lo, hi, *rows])
    cand = np.clip(cand, lo[:, None], hi[:, None])
    return np.sort(cand, axis=1)
