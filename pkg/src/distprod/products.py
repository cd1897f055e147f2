"""Finite-n product functionals and their limits.

Three constructions are evaluated against a test function ``Psi``:

* the pair product ``(1/2) int [S_n T_red + T_n S_red] Psi``;
* method 1 (N-fold): even N averages the product of pair regularizations
  over all perfect pairings and all assignments of the pair parameters to
  the pairs; odd N averages, over which factor is left out, the exact
  action of that factor on ``Psi`` times the even product of the rest;
* method 2 (A-weights): a weighted sum over every nonempty proper subset
  ``M`` of factor slots of ``prod_{i in M} S_i,n prod_{i not in M} S_i,red``,
  normalized by ``1 / (2**N - 2)``.

Here ``S_n`` is the mollification at exponent ``beta`` and ``S_red`` the
analytic regularization at ``eps = n**-alpha``.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .distributions import (
    DeltaDerivative,
    Product,
    TestFunction,
    analytic,
    mollify,
    pair,
)
from .extrapolation import LimitVerdict, classify_limit
from .mollifier import MollifierSpec
from .quadrature import graded_points, integrate

__all__ = [
    "RegParams",
    "AWeights",
    "NSchedule",
    "LimitVerdict",
    "TermValue",
    "UnsupportedCount",
    "classify_limit",
    "pair_term",
    "pair_product",
    "nfold_method1_term",
    "nfold_method1",
    "amethod_term",
    "amethod",
    "DEFAULT_CAP",
]

DEFAULT_CAP = 6


class UnsupportedCount(ValueError):
    """Number of factors outside the supported range."""


@dataclass(frozen=True)
class RegParams:
    """Exponents ``eps = n**-alpha`` and ``delta_n = n**beta Phi(n**beta x)``.

    ``pair_params`` gives one ``(alpha_i, beta_i)`` per pair for method 1
    with four or more factors; by default every pair uses ``(alpha, beta)``.
    """

    alpha: float
    beta: float
    pair_params: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")
        if self.pair_params is not None:
            pp = tuple((float(a), float(b)) for a, b in self.pair_params)
            if any(not (a > 0 and b > 0) for a, b in pp):
                raise ValueError("pair exponents must be positive")
            object.__setattr__(self, "pair_params", pp)

    def pairs(self, count: int) -> tuple[tuple[float, float], ...]:
        if self.pair_params is None:
            return ((self.alpha, self.beta),) * count
        if len(self.pair_params) != count:
            raise ValueError(f"need {count} pair parameters, got {len(self.pair_params)}")
        return self.pair_params

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta,
                "pair_params": [list(p) for p in self.pair_params] if self.pair_params else None}


@dataclass(frozen=True)
class NSchedule:
    values: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if len(v) < 6:
            raise ValueError("a schedule needs at least 6 points")
        if any(b <= a for a, b in zip(v, v[1:])) or v[0] <= 0:
            raise ValueError("schedule must be positive and strictly increasing")
        object.__setattr__(self, "values", v)

    @classmethod
    def geometric(cls, start: float = 10.0, ratio: float = 2.0, count: int = 14) -> "NSchedule":
        return cls(tuple(start * ratio ** j for j in range(count)))

    @classmethod
    def default(cls) -> "NSchedule":
        """``n = 10 * 2**j``, ``j = 0..13``."""
        return cls.geometric()

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def _size_total(N: int) -> int:
    return 2 ** N - 2


@dataclass(frozen=True)
class AWeights:
    """Weights of the A-multiplication, one per nonempty proper subset of slots.

    A subset lists the slots that are mollified; the others are analytically
    regularized. The weights must sum to ``2**N - 2``. For equal factors the
    weights depend only on the subset size; ``pair``, ``triple`` and
    ``quad`` build the named two-, three- and four-factor forms.
    """

    N: int
    weights: tuple[tuple[frozenset, float], ...]
    label: str = "general"

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need at least two factors")
        subsets = {frozenset(s) for r in range(1, self.N) for s in itertools.combinations(range(self.N), r)}
        given = {k for k, _ in self.weights}
        if given != subsets:
            raise ValueError("weights must cover every nonempty proper subset exactly once")
        total = math.fsum(w for _, w in self.weights)
        target = _size_total(self.N)
        if not math.isclose(total, target, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"weights must sum to {target}, got {total!r}")

    @classmethod
    def general(cls, N: int, mapping: Mapping[Iterable[int], float], label: str = "general") -> "AWeights":
        items = tuple(sorted(((frozenset(k), float(w)) for k, w in mapping.items()),
                             key=lambda kw: (len(kw[0]), sorted(kw[0]))))
        return cls(N, items, label)

    @classmethod
    def by_size(cls, N: int, size_weights: Mapping[int, float], label: str | None = None) -> "AWeights":
        """Symmetric weights: every subset with ``j`` mollified slots gets ``size_weights[j]``."""
        if set(size_weights) != set(range(1, N)):
            raise ValueError(f"need weights for subset sizes 1..{N - 1}")
        mapping = {s: size_weights[len(s)] for r in range(1, N) for s in itertools.combinations(range(N), r)}
        return cls.general(N, mapping, label or "by_size")

    @classmethod
    def pair(cls, a1: float = 1.0, a2: float = 1.0) -> "AWeights":
        """``a1`` weights ``S1,n S2,red`` and ``a2`` weights ``S1,red S2,n``; ``a1 + a2 = 2``."""
        return cls.general(2, {(0,): a1, (1,): a2}, "pair")

    @classmethod
    def triple(cls, b1: float = 1.0, b2: float = 1.0) -> "AWeights":
        """``b1`` on two mollified factors, ``b2`` on one; ``b1 + b2 = 2``."""
        if not math.isclose(b1 + b2, 2.0, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"need b1 + b2 = 2, got {b1 + b2!r}")
        return cls.by_size(3, {2: b1, 1: b2}, "triple")

    @classmethod
    def quad(cls, c1: float = 1.0, c2: float = 1.0, c3: float = 1.0) -> "AWeights":
        """``c1, c2, c3`` on three, two and one mollified factors; ``2c1 + 3c2 + 2c3 = 7``."""
        if not math.isclose(2 * c1 + 3 * c2 + 2 * c3, 7.0, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(f"need 2c1 + 3c2 + 2c3 = 7, got {2 * c1 + 3 * c2 + 2 * c3!r}")
        return cls.by_size(4, {3: c1, 2: c2, 1: c3}, "quad")

    @classmethod
    def equal(cls, N: int) -> "AWeights":
        """All weights 1 (the default symmetric point)."""
        return cls.by_size(N, {j: 1.0 for j in range(1, N)}, "equal")

    @classmethod
    def from_values(cls, N: int, values: Sequence[float]) -> "AWeights":
        """Named forms from a flat list: (a1, a2), (b1, b2) or (c1, c2, c3)."""
        if N == 2 and len(values) == 2:
            return cls.pair(*values)
        if N == 3 and len(values) == 2:
            return cls.triple(*values)
        if N == 4 and len(values) == 3:
            return cls.quad(*values)
        if len(values) == N - 1:
            # size weights listed from N-1 mollified factors down to 1
            return cls.by_size(N, {N - 1 - i: float(v) for i, v in enumerate(values)})
        raise ValueError(f"cannot interpret {len(values)} weights for N={N}")

    def weight(self, subset: Iterable[int]) -> float:
        key = frozenset(subset)
        for k, w in self.weights:
            if k == key:
                return w
        raise KeyError(subset)

    @property
    def size_weights(self) -> dict[int, float] | None:
        """Weight per subset size when the weights are symmetric, else ``None``."""
        out: dict[int, float] = {}
        for k, w in self.weights:
            if out.setdefault(len(k), w) != w:
                return None
        return out

    @property
    def leading(self) -> float:
        """Weight of the subsets with ``N - 1`` mollified factors (symmetric weights only)."""
        sw = self.size_weights
        if sw is None:
            raise ValueError("leading weight is defined for symmetric weights only")
        return sw[self.N - 1]

    def to_dict(self) -> dict:
        sw = self.size_weights
        return {
            "N": self.N,
            "label": self.label,
            "size_weights": {str(k): v for k, v in sorted(sw.items())} if sw else None,
            "weights": [[sorted(k), w] for k, w in self.weights],
        }


# ---------------------------------------------------------------------------
# term expansion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TermValue:
    value: float
    scale: float  # sum of |coefficient| * int |integrand|
    error: float = 0.0


class _Regularizer:
    """Builds and caches the regularized forms for one ``n``."""

    def __init__(self, dists: Sequence, spec, n: float):
        self.dists = list(dists)
        self.spec = spec
        self.n = float(n)
        # identical distributions share a key so equal terms merge
        self.ids = []
        for d in self.dists:
            for j, e in enumerate(self.dists[: len(self.ids)]):
                if _same(d, e):
                    self.ids.append(self.ids[j])
                    break
            else:
                self.ids.append(len(self.ids))
        self._cache: dict = {}

    def moll(self, i: int, beta: float):
        key = ("m", self.ids[i], beta)
        if key not in self._cache:
            self._cache[key] = mollify(self.dists[i], self.spec, beta, self.n)
        return key

    def ana(self, i: int, alpha: float):
        key = ("a", self.ids[i], alpha)
        if key not in self._cache:
            self._cache[key] = analytic(self.dists[i], self.n ** -alpha)
        return key

    def factor(self, key):
        return self._cache[key]


def _same(a, b) -> bool:
    if isinstance(a, DeltaDerivative) and isinstance(b, DeltaDerivative):
        return a == b
    return a is b


def _merge(terms: Iterable[tuple[float, tuple]]) -> list[tuple[float, tuple]]:
    """Sum coefficients of terms with the same multiset of factors."""
    acc: dict[tuple, float] = {}
    for c, keys in terms:
        k = tuple(sorted(keys, key=repr))
        acc[k] = acc.get(k, 0.0) + c
    return [(c, k) for k, c in acc.items() if c != 0.0]


def _domain(factors, psi) -> tuple[float, float] | None:
    lo, hi = psi.support
    for f in factors:
        s = getattr(f, "support", None)
        if s is not None:
            lo, hi = max(lo, s[0]), min(hi, s[1])
    return (lo, hi) if lo < hi else None


def _breakpoints(factors, lo: float, hi: float, extra=()) -> list[float]:
    pts = list(extra)
    seen = set()
    for f in factors:
        for c, sc in getattr(f, "features", []):
            if (c, sc) in seen:
                continue
            seen.add((c, sc))
            pts += graded_points(c, sc, lo, hi, ratio=2.0)
        s = getattr(f, "support", None)
        if s is not None:
            pts += [p for p in s if lo < p < hi]
    return pts


def _integrate_terms(reg: _Regularizer, terms, psi: TestFunction, rtol: float) -> TermValue:
    total, scale, err = 0.0, 0.0, 0.0
    for c, keys in terms:
        factors = [reg.factor(k) for k in keys]
        dom = _domain(factors, psi)
        if dom is None:
            continue
        lo, hi = dom
        pts = _breakpoints(factors, lo, hi, psi.kinks)

        def f(x, factors=factors):
            out = psi(x)
            for g in factors:
                out = out * g(x)
            return out

        res = integrate(f, lo, hi, 0.0, rtol=rtol, points=pts)
        total += c * res.value
        scale += abs(c) * res.abs_value
        err += abs(c) * res.error_estimate
    return TermValue(total, scale, err)


def _check_count(N: int, cap: int):
    if N < 2:
        raise UnsupportedCount("need at least two distributions")
    if N > cap:
        raise UnsupportedCount(f"{N} distributions exceeds the cap of {cap}")


def _pairings(items: tuple[int, ...]):
    """All perfect matchings of an even-length tuple."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for j, other in enumerate(rest):
        for tail in _pairings(rest[:j] + rest[j + 1:]):
            yield ((first, other),) + tail


def _even_terms(reg: _Regularizer, idx: tuple[int, ...], params: RegParams):
    """Method-1 even product as merged (coefficient, factor keys) terms."""
    l = len(idx) // 2
    pp = params.pairs(l)
    pairings = list(_pairings(idx))
    perms = sorted(set(itertools.permutations(pp)))
    norm = 1.0 / (len(pairings) * len(perms) * 2 ** l)
    raw = []
    for pairing in pairings:
        for perm in perms:
            for flips in itertools.product((0, 1), repeat=l):
                keys = []
                for (i, j), (a, b), fl in zip(pairing, perm, flips):
                    mi, aj = (i, j) if fl == 0 else (j, i)
                    keys += [reg.moll(mi, b), reg.ana(aj, a)]
                raw.append((norm, tuple(keys)))
    return _merge(raw)


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def pair_term(S, T, params: RegParams, n: float, psi: TestFunction, spec: MollifierSpec,
              *, rtol: float = 1e-10, detail: bool = False):
    """``(1/2) int [S_n T_red + T_n S_red] Psi`` at ``eps = n**-alpha``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    reg = _Regularizer([S, T], spec, n)
    a, b = params.alpha, params.beta
    t1 = _integrate_terms(reg, [(1.0, (reg.moll(0, b), reg.ana(1, a)))], psi, rtol)
    t2 = _integrate_terms(reg, [(1.0, (reg.moll(1, b), reg.ana(0, a)))], psi, rtol)
    out = TermValue(0.5 * (t1.value + t2.value), 0.5 * (t1.scale + t2.scale),
                    0.5 * (t1.error + t2.error))
    return out if detail else out.value


def nfold_method1_term(dists: Sequence, params: RegParams, n: float, psi: TestFunction,
                       spec: MollifierSpec, *, cap: int = DEFAULT_CAP, rtol: float = 1e-10,
                       detail: bool = False):
    """Method-1 product of ``dists`` at index ``n``."""
    N = len(dists)
    _check_count(N, cap)
    if n < 1:
        raise ValueError("n must be at least 1")
    reg = _Regularizer(dists, spec, n)
    if N % 2 == 0:
        out = _integrate_terms(reg, _even_terms(reg, tuple(range(N)), params), psi, rtol)
        return out if detail else out.value

    # odd: average over the factor applied exactly
    total, scale = 0.0, 0.0
    groups: dict[int, int] = {}
    for i in range(N):
        groups[reg.ids[i]] = groups.get(reg.ids[i], 0) + 1
    first_of = {}
    for i in range(N):
        first_of.setdefault(reg.ids[i], i)
    for ident, mult in groups.items():
        i = first_of[ident]
        rest = tuple(j for j in range(N) if j != i)
        terms = _even_terms(reg, rest, params)
        v, s = _exact_action(reg, dists[i], terms, psi, rtol)
        total += mult * v
        scale += mult * s
    out = TermValue(total / N, scale / N)
    return out if detail else out.value


def _exact_action(reg: _Regularizer, T, terms, psi: TestFunction, rtol: float) -> tuple[float, float]:
    """``<T, Psi * sum_terms c prod factors>`` and a magnitude scale."""
    if isinstance(T, DeltaDerivative):
        v, s = 0.0, 0.0
        for c, keys in terms:
            g = Product((psi, *[reg.factor(k) for k in keys]))
            val = c * pair(T, g)
            v += val
            s += abs(val)
        return v, s
    lo, hi = T.support
    v, s = 0.0, 0.0
    for c, keys in terms:
        factors = [reg.factor(k) for k in keys]
        dom = _domain(factors + [T], psi)
        if dom is None:
            continue
        pts = _breakpoints(factors, dom[0], dom[1], (*T.kinks, *psi.kinks))

        def f(x, factors=factors):
            out = psi(x) * T(x)
            for g in factors:
                out = out * g(x)
            return out

        res = integrate(f, dom[0], dom[1], 0.0, rtol=rtol, points=pts)
        v += c * res.value
        s += abs(c) * res.abs_value
    return v, s


def amethod_term(dists: Sequence, weights: AWeights, params: RegParams, n: float,
                 psi: TestFunction, spec: MollifierSpec, *, cap: int = DEFAULT_CAP,
                 rtol: float = 1e-10, detail: bool = False):
    """A-weighted product: ``(1/(2^N-2)) sum_M w_M prod_{M} S_n prod_{not M} S_red``."""
    N = len(dists)
    _check_count(N, cap)
    if weights.N != N:
        raise ValueError(f"weights are for {weights.N} factors, got {N} distributions")
    if n < 1:
        raise ValueError("n must be at least 1")
    reg = _Regularizer(dists, spec, n)
    a, b = params.alpha, params.beta
    norm = 1.0 / _size_total(N)
    raw = []
    for subset, w in weights.weights:
        keys = tuple(reg.moll(i, b) if i in subset else reg.ana(i, a) for i in range(N))
        raw.append((norm * w, keys))
    out = _integrate_terms(reg, _merge(raw), psi, rtol)
    return out if detail else out.value


def _run(term, schedule: NSchedule, workers: int | None) -> list[TermValue]:
    ns = list(schedule)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(term, ns))
    return [term(n) for n in ns]


def _verdict(ns, vals: list[TermValue], rel_tol: float) -> LimitVerdict:
    seq = [(n, v.value) for n, v in zip(ns, vals)]
    floor = 1e-14 * max(v.scale for v in vals)
    return classify_limit(seq, floor=floor, rel_tol=rel_tol)


def pair_product(S, T, params: RegParams, schedule: NSchedule, psi: TestFunction,
                 spec: MollifierSpec, *, rel_tol: float = 1e-2, workers: int | None = None,
                 rtol: float = 1e-10) -> LimitVerdict:
    vals = _run(lambda n: pair_term(S, T, params, n, psi, spec, rtol=rtol, detail=True),
                schedule, workers)
    return _verdict(schedule, vals, rel_tol)


def nfold_method1(dists: Sequence, params: RegParams, schedule: NSchedule, psi: TestFunction,
                  spec: MollifierSpec, *, rel_tol: float = 1e-2, workers: int | None = None,
                  cap: int = DEFAULT_CAP, rtol: float = 1e-10) -> LimitVerdict:
    _check_count(len(dists), cap)
    vals = _run(lambda n: nfold_method1_term(dists, params, n, psi, spec, cap=cap,
                                             rtol=rtol, detail=True), schedule, workers)
    return _verdict(schedule, vals, rel_tol)


def amethod(dists: Sequence, weights: AWeights, params: RegParams, schedule: NSchedule,
            psi: TestFunction, spec: MollifierSpec, *, rel_tol: float = 1e-2,
            workers: int | None = None, cap: int = DEFAULT_CAP, rtol: float = 1e-10) -> LimitVerdict:
    _check_count(len(dists), cap)
    vals = _run(lambda n: amethod_term(dists, weights, params, n, psi, spec, cap=cap,
                                       rtol=rtol, detail=True), schedule, workers)
    return _verdict(schedule, vals, rel_tol)
