"""Closed-form predictions for delta products.

Predictions are kept symbolic (sign, rational factor, factorial, power of
pi and the index of the moment constant ``A_{i,j}``) and only turned into
numbers by :meth:`Prediction.evaluate`. All values are coefficients of
``Psi(0)``.

Coefficient derivations (``t = n**beta x``, ``eps = n**-alpha``):

* pair ``delta^(k) x delta^(l)`` at ``alpha = (k+l+2) beta``:
  ``((-1)**k + (-1)**l)/2 * (k+l+1)!/pi * A_{1,k+l+2}``;
* method 1, ``2l`` deltas at ``l alpha = (3l-1) beta``: ``A_{l,2l} / pi**l``;
  odd counts vanish because ``Phi(0) = 0``;
* method 2, ``l`` deltas at ``alpha = l beta``: only the subsets with
  ``l-1`` mollified slots survive, giving
  ``l * w_{l-1} / ((2**l - 2) pi) * A_{l-1,2}``, with ``m >= 2(l-1)`` forced by
  the single-mollifier term (``A_{1,2(l-1)}``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .mollifier import MollifierSpec, a_constant, make_mollifier
from .quadrature import integrate

__all__ = [
    "Prediction",
    "predict_pair_derivatives",
    "predict_method1_equal_deltas",
    "predict_method2_equal_deltas",
    "predict_continuous_extension",
    "required_m_pair",
    "smallest_even_above",
]

_REL = 1e-12


def _cmp(lhs: float, rhs: float) -> int:
    """Sign of ``lhs - rhs`` with a relative tolerance for equality."""
    if math.isclose(lhs, rhs, rel_tol=_REL, abs_tol=_REL):
        return 0
    return 1 if lhs > rhs else -1


def smallest_even_above(x: int) -> int:
    """Smallest even integer strictly greater than ``x``."""
    return x + 1 if (x + 1) % 2 == 0 else x + 2


def required_m_pair(k: int, l: int) -> int:
    """Smallest even ``m`` with ``m > k + l + 1``."""
    return smallest_even_above(k + l + 1)


@dataclass(frozen=True)
class Prediction:
    """Predicted limit, as a coefficient of ``Psi(0)``.

    ``kind`` is ``value``, ``zero`` or ``undefined``. For ``value`` the
    coefficient is ``sign * rational * factorial / pi**pi_power * A_{a_index}``.
    ``threshold`` is ``(p, q)`` for the scaling relation ``p alpha = q beta``.
    """

    kind: str
    required_m: int | None = None
    threshold: tuple[Fraction, Fraction] | None = None
    sign: int = 1
    rational: Fraction = Fraction(1)
    factorial: int = 1
    pi_power: int = 1
    a_index: tuple[int, int] | None = None
    reason: str = ""
    convention: str = ""

    def __post_init__(self):
        if self.kind not in ("value", "zero", "undefined"):
            raise ValueError(f"unknown prediction kind {self.kind!r}")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def prefactor(self) -> float:
        """Everything except the A-constant."""
        return self.sign * float(self.rational) * self.factorial / math.pi ** self.pi_power

    def evaluate(self, spec: MollifierSpec | None = None) -> float:
        """Numeric coefficient of ``Psi(0)``; ``spec`` defaults to ``m = required_m``."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "undefined":
            raise ValueError(f"prediction undefined: {self.reason}")
        if spec is None:
            spec = make_mollifier(self.required_m)
        i, j = self.a_index
        return self.prefactor() * a_constant(spec, i, j).value

    def value(self, spec: MollifierSpec | None = None, psi=None) -> float:
        """Predicted limit for the test function ``psi``."""
        c = self.evaluate(spec)
        return c * (psi.value_at_zero if psi is not None else 1.0)

    def expression(self) -> str:
        if self.kind != "value":
            return self.kind
        sign = "-" if self.sign < 0 else ""
        num = self.rational * self.factorial
        pi = "pi" if self.pi_power == 1 else f"pi^{self.pi_power}"
        den = pi if num.denominator == 1 else f"({num.denominator} {pi})"
        i, j = self.a_index
        return f"{sign}({num.numerator}/{den})*A_{{{i},{j}}}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "expression": self.expression(),
            "sign": self.sign,
            "rational": str(self.rational),
            "factorial": self.factorial,
            "pi_power": self.pi_power,
            "a_index": list(self.a_index) if self.a_index else None,
            "required_m": self.required_m,
            "threshold": [str(t) for t in self.threshold] if self.threshold else None,
            "reason": self.reason,
            "convention": self.convention,
        }


def _check_m(m: int):
    if m < 0 or m % 2:
        raise ValueError(f"m must be a nonnegative even integer, got {m}")


def predict_pair_derivatives(k: int, l: int, alpha: float, beta: float, m: int) -> Prediction:
    """Limit of ``delta^(k) x delta^(l)``."""
    _check_m(m)
    j = k + l + 2
    req = required_m_pair(k, l)
    thr = (Fraction(1), Fraction(j))
    c = _cmp(alpha, j * beta)
    if c > 0:
        return Prediction("zero", req, thr, reason=f"alpha > {j} beta")
    if c < 0:
        return Prediction("undefined", req, thr, reason=f"alpha < {j} beta is not covered")
    if (k - l) % 2:
        return Prediction("zero", req, thr, reason="mixed parity")
    sign = 1 if k % 2 == 0 else -1
    return Prediction("value", req, thr, sign=sign, factorial=math.factorial(k + l + 1),
                      pi_power=1, a_index=(1, j))


def predict_method1_equal_deltas(count: int, alpha: float, beta: float, m: int) -> Prediction:
    """Method-1 product of ``count`` deltas with equal pair exponents."""
    _check_m(m)
    if count < 2:
        raise ValueError("count must be at least 2")
    if count % 2:
        return Prediction("zero", 2, None, reason="odd count: the exact delta meets Phi(0) = 0")
    l = count // 2
    thr = (Fraction(l), Fraction(3 * l - 1))
    c = _cmp(l * alpha, (3 * l - 1) * beta)
    if c > 0:
        return Prediction("zero", 2, thr, reason=f"{l} alpha > {3 * l - 1} beta")
    if c < 0:
        return Prediction("undefined", 2, thr, reason=f"{l} alpha < {3 * l - 1} beta is not covered")
    return Prediction("value", 2, thr, pi_power=l, a_index=(l, 2 * l))


def predict_method2_equal_deltas(l: int, alpha: float, beta: float, m: int, weights=None) -> Prediction:
    """A-weighted product of ``l`` deltas.

    ``weights`` must be symmetric (see ``AWeights.by_size``); only the weight
    on subsets with ``l - 1`` mollified slots enters the limit.
    """
    _check_m(m)
    if l < 2:
        raise ValueError("need at least two deltas")
    req = 2 * (l - 1)
    thr = (Fraction(1), Fraction(l))
    if l == 2:
        w = Fraction(1)  # a1 = a2 = 1 is forced for equal factors
    else:
        if weights is None:
            w = Fraction(1)
        else:
            if weights.N != l:
                raise ValueError(f"weights are for {weights.N} factors, not {l}")
            w = Fraction(weights.leading).limit_denominator(10 ** 12)
    c = _cmp(alpha, l * beta)
    if c > 0:
        return Prediction("zero", req, thr, reason=f"alpha > {l} beta")
    if c < 0:
        return Prediction("undefined", req, thr, reason=f"alpha < {l} beta is not covered")
    rational = Fraction(l) * w / (2 ** l - 2)
    if rational == 0:
        return Prediction("zero", req, thr, reason="leading weight is zero")
    sign = 1 if rational > 0 else -1
    return Prediction("value", req, thr, sign=sign, rational=abs(rational), pi_power=1,
                      a_index=(l - 1, 2),
                      convention="l * w_lead / (2^l - 2); w_lead weights the l-1 mollified terms")


def predict_continuous_extension(S, T, psi, tol: float = 1e-12) -> float:
    """``int S T Psi`` for compactly supported continuous ``S`` and ``T``."""
    lo = max(S.support[0], T.support[0], psi.support[0])
    hi = min(S.support[1], T.support[1], psi.support[1])
    if not lo < hi:
        return 0.0
    pts = [*S.kinks, *T.kinks, *getattr(psi, "kinks", ())]
    res = integrate(lambda x: S(x) * T(x) * psi(x), lo, hi, tol, rtol=tol, points=pts)
    return float(res.value)
