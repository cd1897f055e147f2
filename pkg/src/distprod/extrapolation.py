"""Sequence limits: Aitken acceleration, growth fits and limit verdicts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "aitken",
    "GrowthFit",
    "fit_growth",
    "LimitVerdict",
    "classify_limit",
    "tail",
]

MODELS = ("constant", "log", "power", "exponential")


def aitken(seq: Sequence[float]) -> np.ndarray:
    """One pass of Aitken's delta-squared transform.

    Returns ``len(seq) - 2`` values aligned with ``seq[2:]``. Where the
    second difference is negligible relative to the data the corresponding
    raw term is passed through instead.
    """
    x = np.asarray(seq, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 terms")
    d1 = x[2:] - x[1:-1]
    d0 = x[1:-1] - x[:-2]
    d2 = d1 - d0
    scale = np.maximum(np.abs(x[2:]), np.maximum(np.abs(x[1:-1]), np.abs(x[:-2])))
    ok = np.abs(d2) > 64 * np.finfo(float).eps * scale
    out = x[2:].copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = x[2:] - d1 * d1 / d2
    use = ok & np.isfinite(acc)
    out[use] = acc[use]
    return out


def tail(seq: Sequence, fraction: float = 2.0 / 3.0):
    """The last ``ceil(fraction * len)`` items."""
    k = int(math.ceil(fraction * len(seq)))
    return seq[len(seq) - k:]


@dataclass(frozen=True)
class GrowthFit:
    model: str
    params: tuple[float, ...]
    residual: float
    residuals: dict = field(default_factory=dict, compare=False)

    @property
    def rate(self) -> float:
        """Slope for log, exponent for power, exponential rate; 0 for constant."""
        return 0.0 if self.model == "constant" else float(self.params[1])

    def predict(self, n):
        n = np.asarray(n, dtype=float)
        if self.model == "constant":
            return np.full(n.shape, self.params[0])
        if self.model == "log":
            return self.params[0] + self.params[1] * np.log(n)
        if self.model == "power":
            return self.params[0] * n ** self.params[1]
        return self.params[0] * np.exp(self.params[1] * n)

    def to_dict(self) -> dict:
        return {"model": self.model, "params": list(self.params), "residual": self.residual,
                "rate": self.rate}


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r * r)))


def _linfit(u: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.column_stack([np.ones_like(u), u])
    (c, a), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(c), float(a)


def fit_growth(sequence: Sequence[tuple[float, float]], *, preference: float = 0.5) -> GrowthFit:
    """Least-squares fits of ``v(n)`` to constant, ``c + a log n``, ``a n**p`` and ``a exp(b n)``.

    Power and exponential models are fitted linearly in ``log|v|`` (only
    when ``v`` keeps one sign) and scored by RMS residual in ``v``. The
    constant model wins unless another model cuts its residual by the
    factor ``preference``; otherwise the lowest residual wins, ties going
    to the simpler model.
    """
    if len(sequence) < 6:
        raise ValueError("fit_growth needs at least 6 points")
    n = np.array([p[0] for p in sequence], dtype=float)
    v = np.array([p[1] for p in sequence], dtype=float)
    if not np.all(np.isfinite(v)) or np.any(n <= 0):
        raise ValueError("need finite values and positive n")
    fits: dict[str, GrowthFit] = {}
    c = float(np.mean(v))
    fits["constant"] = GrowthFit("constant", (c,), _rms(v - c))
    c0, a = _linfit(np.log(n), v)
    fits["log"] = GrowthFit("log", (c0, a), _rms(v - c0 - a * np.log(n)))
    same_sign = np.all(v > 0) or np.all(v < 0)
    if same_sign:
        sgn = 1.0 if v[0] > 0 else -1.0
        la, p = _linfit(np.log(n), np.log(np.abs(v)))
        amp = sgn * math.exp(la)
        fits["power"] = GrowthFit("power", (amp, p), _rms(v - amp * n ** p))
        la, b = _linfit(n, np.log(np.abs(v)))
        amp = sgn * math.exp(la)
        with np.errstate(over="ignore"):
            pred = amp * np.exp(b * n)
        res = _rms(v - pred) if np.all(np.isfinite(pred)) else math.inf
        fits["exponential"] = GrowthFit("exponential", (amp, b), res)
    residuals = {k: f.residual for k, f in fits.items()}
    best = min(fits.values(), key=lambda f: (f.residual, MODELS.index(f.model)))
    const = fits["constant"]
    if best.model != "constant" and not best.residual < preference * const.residual:
        best = const
    return GrowthFit(best.model, best.params, best.residual, residuals)


@dataclass(frozen=True)
class LimitVerdict:
    """Outcome of probing ``lim v(n)``.

    ``kind`` is ``converged`` (with ``value``), ``zero`` (every term below
    ``floor``), ``divergent`` (with ``growth``) or ``inconclusive``.
    """

    kind: str
    sequence: tuple[tuple[float, float], ...]
    value: float | None = None
    growth: GrowthFit | None = None
    accelerated: tuple[float, ...] = ()
    floor: float = 0.0
    scale: float = 0.0
    reason: str = ""

    def __post_init__(self):
        if self.kind not in ("converged", "zero", "divergent", "inconclusive"):
            raise ValueError(f"unknown verdict kind {self.kind!r}")
        if not self.sequence:
            raise ValueError("verdict needs a nonempty sequence")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "converged" and self.value == 0.0)

    @property
    def limit(self) -> float | None:
        """The limit value for ``converged`` and ``zero`` verdicts."""
        if self.kind == "zero":
            return 0.0
        return self.value if self.kind == "converged" else None

    def label(self) -> str:
        if self.kind == "converged":
            return f"ConvergedTo({self.value:.10g})"
        if self.kind == "zero":
            return "ExactZero"
        if self.kind == "divergent":
            return f"Divergent({self.growth.model}, rate={self.growth.rate:.4g})"
        return "Inconclusive"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label(),
            "value": self.value,
            "growth": self.growth.to_dict() if self.growth else None,
            "sequence": [[float(n), float(v)] for n, v in self.sequence],
            "accelerated": list(self.accelerated),
            "floor": self.floor,
            "scale": self.scale,
            "reason": self.reason,
        }


def classify_limit(sequence: Sequence[tuple[float, float]], floor: float = 0.0,
                   rel_tol: float = 1e-2, *, zero_rel: float = 1e-6,
                   scale: float | None = None, growth_factor: float = 10.0) -> LimitVerdict:
    """Classify the limit of a finite-n sequence.

    * ``zero`` if every ``|v| <= floor``;
    * ``converged`` if the last three Aitken-accelerated tail values agree
      within ``rel_tol * |L| + zero_rel * scale`` (``L`` snaps to 0 when
      ``|L| <= zero_rel * scale``);
    * ``divergent`` if ``|v|`` grows by more than ``growth_factor`` over the
      tail, or the tail is monotone, acceleration does not settle and the
      best growth fit is not constant;
    * ``inconclusive`` otherwise.

    ``scale`` defaults to the largest ``|v|`` among the early terms.
    """
    seq = tuple((float(n), float(v)) for n, v in sequence)
    if len(seq) < 6:
        raise ValueError("classify_limit needs at least 6 points")
    v = np.array([p[1] for p in seq])
    if not np.all(np.isfinite(v)):
        return LimitVerdict("inconclusive", seq, reason="non-finite terms")
    if scale is None:
        scale = float(np.max(np.abs(v[: max(2, len(v) // 3)])))
    if np.all(np.abs(v) <= floor):
        return LimitVerdict("zero", seq, floor=floor, scale=scale, reason="all terms below floor")

    t = tail(seq)
    tv = np.array([p[1] for p in t])
    acc = aitken(tv)
    zero_abs = zero_rel * scale
    last = acc[-3:]
    L = float(last[-1])
    spread = float(np.max(last) - np.min(last))
    d = np.abs(np.diff(tv))
    # Aitken maps a growing geometric sequence to its antilimit; only trust
    # it when the raw differences contract (or the raw tail already settled).
    tiny = 1e-13 * max(scale, float(np.max(np.abs(tv))))
    contracting = d[-1] <= tiny or d[-1] < d[-2]
    raw_settled = float(np.ptp(tv[-3:])) <= rel_tol * abs(float(tv[-1])) + zero_abs
    if (contracting or raw_settled) and spread <= rel_tol * abs(L) + zero_abs:
        value = 0.0 if abs(L) <= zero_abs else L
        return LimitVerdict("converged", seq, value=value, accelerated=tuple(acc),
                            floor=floor, scale=scale, reason="accelerated tail is Cauchy")

    growth = fit_growth(t)
    first, final = abs(tv[0]), abs(tv[-1])
    d = np.diff(tv)
    monotone = bool(np.all(d > 0) or np.all(d < 0))
    grows = final > growth_factor * first if first > 0 else final > zero_abs
    if grows and growth.model == "constant":
        growth = _forced_growth(t)
    if grows or (monotone and abs(tv[-1]) > abs(tv[0]) and growth.model != "constant"):
        return LimitVerdict("divergent", seq, growth=growth, accelerated=tuple(acc),
                            floor=floor, scale=scale,
                            reason="tail grows by more than the threshold" if grows
                            else "monotone growth that acceleration does not settle")
    return LimitVerdict("inconclusive", seq, growth=growth, accelerated=tuple(acc),
                        floor=floor, scale=scale, reason="no criterion met")


def _forced_growth(seq) -> GrowthFit:
    """Best non-constant model, used when growth is evident but noisy."""
    fit = fit_growth(seq, preference=math.inf)
    return fit
