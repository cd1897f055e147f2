"""Free Klein-Gordon field in 1+1 dimensions: regularized two-point quantities.

Notation: ``omega_k = sqrt(k**2 + mu**2)`` with boson mass ``mu``; the
mollifier generator enters through its Fourier transform
``Phi~(k) = (1/2pi) int Phi(x) exp(ikx) dx``, taken from a bump supported
in ``[-1, 1]`` with ``2 pi Phi~(0) = 1``.

The vacuum expectation of the mollified field times the analytically
regularized field at the same point is

    I_n = int_0^inf dk / omega_k  Phi~(k / n**beta) exp(-k / n**alpha)
        = int_0^1 dq Phi~(q) exp(-q n**(beta-alpha)) / sqrt(q**2 + mu**2/n**(2 beta)).

Sign conventions: in the mode expansion the analytic regularization
multiplies mode ``k`` by ``P_eps(k) = exp(-|k| eps)`` (Heaviside split);
in ``I_n`` the exponent is written with ``theta(k) = sign(k)``. Both give
``exp(-|k| eps)``, which is what is implemented.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic_reg import Epsilon
from .extrapolation import GrowthFit, LimitVerdict, classify_limit, fit_growth, tail
from .mollifier import (
    FourierBumpSpec,
    FourierMollifier,
    MollifierSpec,
    default_bump,
    phi_fourier,
)
from .products import NSchedule
from .quadrature import graded_points, integrate, integrate_semi_infinite

__all__ = [
    "KGConfig",
    "KGRow",
    "KGStudy",
    "ModeAmplitude",
    "InvalidRegime",
    "FormMismatch",
    "OscillationWarning",
    "omega",
    "delta_plus_equal_time",
    "i_n",
    "i_n_forms",
    "kernel_integral",
    "i_n_lower_bound",
    "bump_sup",
    "divergence_study",
    "gaussian_zeta_hat",
    "analytic_smearing_residual",
    "mollifier_smearing_residual",
    "fourier_transform_of",
]

AGREEMENT_RTOL = 1e-8
_OSCILLATION_WARN_T = 20.0


class InvalidRegime(ValueError):
    """The requested bound only holds for ``alpha >= beta``."""


class FormMismatch(ArithmeticError):
    """The raw and substituted forms of ``I_n`` disagree."""


class OscillationWarning(RuntimeWarning):
    """Large ``|t|`` makes ``exp(-i omega t)`` oscillate; adaptive quadrature degrades."""


@dataclass(frozen=True, eq=False)
class KGConfig:
    mu: float = 1.0
    bump: FourierBumpSpec = field(default_factory=default_bump)
    alpha: float = 1.0
    beta: float = 1.0
    schedule: NSchedule = field(default_factory=NSchedule.default)
    quad_tol: float = 1e-12

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")
        if not isinstance(self.bump, FourierBumpSpec):
            raise TypeError("bump must be a FourierBumpSpec")

    def with_exponents(self, alpha: float, beta: float) -> "KGConfig":
        return KGConfig(self.mu, self.bump, alpha, beta, self.schedule, self.quad_tol)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "bump": self.bump.name, "alpha": self.alpha, "beta": self.beta,
                "schedule": list(self.schedule.values), "quad_tol": self.quad_tol}


def omega(k, mu: float):
    """``sqrt(k**2 + mu**2)``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return np.hypot(np.asarray(k, dtype=float), mu)


def delta_plus_equal_time(r: float, mu: float, tol: float = 1e-13) -> float:
    """Equal-time two-point function ``(1/4pi) int dk exp(ikr)/omega_k = K_0(mu r)/(2pi)``.

    ``K_0(x) = int_0^inf exp(-x cosh t) dt`` is integrated directly; the
    integrand is flat up to ``t ~ log(2/x)``, which sets the map scale.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    r = abs(float(r))
    if r == 0.0:
        raise ValueError("Delta_+ diverges at coincident points (r = 0)")
    x = mu * r

    def f(t):
        with np.errstate(over="ignore"):
            return np.exp(-x * np.cosh(t))

    scale = max(1.0, math.log(2.0 / x)) if x < 2.0 else 1.0 / math.sqrt(x)
    res = integrate_semi_infinite(f, 0.0, 0.0, "algebraic", scale=scale, rtol=tol)
    return res.value / (2.0 * math.pi)


def _check_n(n: float):
    if not n >= 1:
        raise ValueError(f"n must be at least 1, got {n}")


def _raw_form(config: KGConfig, n: float) -> float:
    nb, na = n ** config.beta, n ** config.alpha
    mu = config.mu
    bump = config.bump

    def f(k):
        return bump(k / nb) * np.exp(-k / na) / np.hypot(k, mu)

    # the bump vanishes for k >= n**beta, so the integral over [0, inf) ends there
    pts = graded_points(0.0, mu, 0.0, nb) + graded_points(0.0, na, 0.0, nb)
    return integrate(f, 0.0, nb, 0.0, rtol=config.quad_tol, points=pts).value


def _compact_form(config: KGConfig, n: float, with_bump: bool = True) -> float:
    c = config.mu / n ** config.beta
    rate = n ** (config.beta - config.alpha)
    bump = config.bump

    def f(q):
        v = np.exp(-q * rate) / np.sqrt(q * q + c * c)
        return bump(q) * v if with_bump else v

    pts = graded_points(0.0, c, 0.0, 1.0) + graded_points(0.0, 1.0 / rate, 0.0, 1.0)
    return integrate(f, 0.0, 1.0, 0.0, rtol=config.quad_tol, points=pts).value


def i_n_forms(config: KGConfig, n: float) -> tuple[float, float]:
    """``(raw k-integral, substituted q-integral)`` for ``I_n``."""
    _check_n(n)
    return _raw_form(config, n), _compact_form(config, n)


def i_n(config: KGConfig, n: float, *, agreement: float = AGREEMENT_RTOL) -> float:
    """``I_n``, computed in both forms; raises :class:`FormMismatch` if they disagree."""
    raw, compact = i_n_forms(config, n)
    if abs(raw - compact) > agreement * max(abs(raw), abs(compact)):
        raise FormMismatch(f"I_n forms disagree at n={n}: {raw!r} vs {compact!r}")
    return compact


def kernel_integral(config: KGConfig, n: float) -> float:
    """``int_0^1 exp(-q n**(beta-alpha)) / sqrt(q**2 + mu**2/n**(2 beta)) dq`` (no bump)."""
    _check_n(n)
    return _compact_form(config, n, with_bump=False)


def i_n_lower_bound(config: KGConfig, n: float) -> float:
    """``exp(-n**(beta-alpha)) log((n**beta + sqrt(n**(2 beta) + mu**2)) / mu)``.

    A minorant of :func:`kernel_integral`, valid for ``alpha >= beta``.
    """
    if config.alpha < config.beta:
        raise InvalidRegime(f"bound needs alpha >= beta, got alpha={config.alpha}, beta={config.beta}")
    _check_n(n)
    return math.exp(-n ** (config.beta - config.alpha)) * math.asinh(n ** config.beta / config.mu)


def bump_sup(bump: FourierBumpSpec, samples: int = 20001) -> float:
    """Sampled supremum ``M`` of the bump on ``[-1, 1]``."""
    return float(np.max(bump(np.linspace(-1.0, 1.0, samples))))


@dataclass(frozen=True)
class KGRow:
    n: float
    i_n: float
    raw: float
    kernel: float
    bound: float | None

    def to_dict(self) -> dict:
        return {"n": self.n, "i_n": self.i_n, "raw": self.raw, "kernel": self.kernel,
                "bound": self.bound}


@dataclass(frozen=True, eq=False)
class KGStudy:
    config: KGConfig
    rows: tuple[KGRow, ...]
    growth: GrowthFit
    verdict: LimitVerdict
    sup_bump: float

    @property
    def sequence(self) -> list[tuple[float, float]]:
        return [(r.n, r.i_n) for r in self.rows]

    @property
    def nondecreasing_tail(self) -> bool:
        v = [r.i_n for r in tail(self.rows)]
        return all(b >= a for a, b in zip(v, v[1:]))

    @property
    def bound_holds(self) -> bool | None:
        """Kernel integral above the minorant at every ``n`` (``None`` when not applicable)."""
        if any(r.bound is None for r in self.rows):
            return None
        return all(r.kernel >= r.bound * (1 - 1e-12) for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "sup_bump": self.sup_bump,
            "rows": [r.to_dict() for r in self.rows],
            "growth": self.growth.to_dict(),
            "verdict": self.verdict.to_dict(),
            "nondecreasing_tail": self.nondecreasing_tail,
            "bound_holds": self.bound_holds,
        }

    def csv_rows(self) -> list[list]:
        head = [["n", "i_n", "kernel", "bound"]]
        return head + [[r.n, r.i_n, r.kernel, "" if r.bound is None else r.bound]
                       for r in self.rows]


def _row(config: KGConfig, n: float) -> KGRow:
    raw, compact = i_n_forms(config, n)
    if abs(raw - compact) > AGREEMENT_RTOL * max(abs(raw), abs(compact)):
        raise FormMismatch(f"I_n forms disagree at n={n}: {raw!r} vs {compact!r}")
    bound = i_n_lower_bound(config, n) if config.alpha >= config.beta else None
    return KGRow(n, compact, raw, kernel_integral(config, n), bound)


def divergence_study(config: KGConfig, *, workers: int | None = None,
                     rel_tol: float = 1e-2) -> KGStudy:
    """``I_n`` along the schedule with growth fit and limit verdict."""
    ns = list(config.schedule)
    if len(ns) < 8:
        raise ValueError("divergence_study needs a schedule of at least 8 points")
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = tuple(pool.map(lambda n: _row(config, n), ns))
    else:
        rows = tuple(_row(config, n) for n in ns)
    seq = [(r.n, r.i_n) for r in rows]
    growth = fit_growth(tail(seq))
    verdict = classify_limit(seq, rel_tol=rel_tol)
    return KGStudy(config, rows, growth, verdict, bump_sup(config.bump))


# ---------------------------------------------------------------------------
# smearing residuals
# ---------------------------------------------------------------------------


def _gaussian(k):
    return np.exp(-k * k)


@dataclass(frozen=True, eq=False)
class ModeAmplitude:
    """Mock matrix element ``a12(k) = <Psi_1, a(k) Psi_2>``; must decay rapidly."""

    a12: Callable = _gaussian
    name: str = "gaussian"

    def __call__(self, k):
        return np.asarray(self.a12(np.asarray(k, dtype=float)))

    @classmethod
    def gaussian(cls, width: float = 1.0, centre: float = 0.0, phase: float = 0.0) -> "ModeAmplitude":
        """``exp(i phase) exp(-((k - centre)/width)**2)``."""
        if not width > 0:
            raise ValueError("width must be positive")
        rot = complex(math.cos(phase), math.sin(phase))

        def a(k):
            g = np.exp(-((k - centre) / width) ** 2)
            return g if phase == 0.0 else rot * g

        return cls(a, f"gaussian(w={width:g},c={centre:g},phase={phase:g})")


def gaussian_zeta_hat(width: float = 1.0) -> Callable:
    """Fourier transform of ``zeta(x) = exp(-x**2 / (2 width**2))``."""
    if not width > 0:
        raise ValueError("width must be positive")
    amp = width / math.sqrt(2.0 * math.pi)
    return lambda k: amp * np.exp(-0.5 * (width * np.asarray(k, dtype=float)) ** 2)


def _warn_t(t: float):
    if abs(t) > _OSCILLATION_WARN_T:
        warnings.warn(f"|t| = {abs(t):g}: exp(-i omega t) oscillates and quadrature degrades",
                      OscillationWarning, stacklevel=3)


def _phase(w, t: float):
    return 1.0 if t == 0.0 else np.exp(-1j * w * t)


def _finish(res) -> complex:
    return complex(res.value)


def analytic_smearing_residual(a12: ModeAmplitude | Callable, zeta_hat: Callable, t: float,
                               eps: Epsilon | float, mu: float, *, tol: float = 1e-12,
                               scale: float = 1.0) -> complex:
    """``int_0^inf dk/sqrt(2 omega_k) (exp(-k eps) - 1) a12(k) exp(-i omega_k t) zeta^(k)``.

    ``eps = 0`` returns 0. ``scale`` is the decay length of ``a12 * zeta^``.
    """
    e = float(eps)
    if e < 0:
        raise ValueError("epsilon must be nonnegative")
    if not mu > 0:
        raise ValueError("mu must be positive")
    if e == 0.0:
        return 0j
    _warn_t(t)

    def f(k):
        w = np.hypot(k, mu)
        return np.expm1(-k * e) / np.sqrt(2.0 * w) * a12(k) * _phase(w, t) * zeta_hat(k)

    res = integrate_semi_infinite(f, 0.0, 0.0, "algebraic", scale=scale, rtol=tol)
    return _finish(res)


def fourier_transform_of(generator) -> Callable:
    """``Phi~`` for a bump spec, a Fourier-built mollifier, a compact generator or a callable."""
    if isinstance(generator, FourierBumpSpec):
        return generator
    if isinstance(generator, FourierMollifier):
        return generator.fourier
    if isinstance(generator, MollifierSpec):
        return lambda k: phi_fourier(generator, k)
    if callable(generator):
        return generator
    raise TypeError(f"cannot take the Fourier transform of {generator!r}")


def mollifier_smearing_residual(a12: ModeAmplitude | Callable, zeta_hat: Callable, t: float,
                                generator, beta: float, n: float, mu: float, *,
                                tol: float = 1e-12, scale: float = 1.0) -> complex:
    """``int dk/sqrt(4pi omega_k) a12(k) exp(-i omega_k t) zeta^(-k) (2pi Phi~(k/n**beta) - 1)``.

    ``generator`` is any input accepted by :func:`fourier_transform_of`; the
    whole line is folded onto ``[0, inf)``.
    """
    _check_n(n)
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not beta > 0:
        raise ValueError("beta must be positive")
    _warn_t(t)
    ft = fourier_transform_of(generator)
    nb = float(n) ** beta

    def half(k):
        w = np.hypot(k, mu)
        return (a12(k) * _phase(w, t) * zeta_hat(-k)
                * (2.0 * math.pi * ft(k / nb) - 1.0) / np.sqrt(4.0 * math.pi * w))

    def f(k):
        return half(k) + half(-k)

    def envelope(k):
        w = np.hypot(k, mu)
        return (np.abs(a12(k) * zeta_hat(-k)) + np.abs(a12(-k) * zeta_hat(k))) / np.sqrt(4.0 * math.pi * w)

    # 2 pi Phi~ - 1 carries absolute roundoff of order machine epsilon, so the
    # attainable accuracy is relative to the integral without that factor
    ref = integrate_semi_infinite(envelope, 0.0, 0.0, "algebraic", scale=scale, rtol=1e-6).value
    floor = 64.0 * np.finfo(float).eps * ref
    res = integrate_semi_infinite(f, 0.0, floor, "algebraic", scale=scale, rtol=tol)
    return _finish(res)
