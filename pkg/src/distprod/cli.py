"""Command-line front end.

Subcommands: ``constants``, ``product``, ``sweep``, ``kg`` and ``residuals``.
JSON reports carry ``"schema": 1`` and the fully resolved configuration;
no timestamps are written, so identical command lines give identical bytes.

Exit codes: 0 success (an inconclusive verdict included), 1 usage or
configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

from .closedform import (
    Prediction,
    predict_continuous_extension,
    predict_method1_equal_deltas,
    predict_method2_equal_deltas,
    predict_pair_derivatives,
)
from .distributions import CompactFunction, DeltaDerivative, compact_from_csv, test_function
from .kleingordon import (
    KGConfig,
    ModeAmplitude,
    analytic_smearing_residual,
    divergence_study,
    gaussian_zeta_hat,
    mollifier_smearing_residual,
)
from .mollifier import DivergentConstant, a_constant, default_bump, make_mollifier
from .products import AWeights, NSchedule, RegParams, amethod, nfold_method1, pair_product
from .quadrature import QuadratureError

SCHEMA = 1
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2
MATCH_RTOL = 0.02
MAX_SWEEP_CELLS = 1000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def parse_dist(token: str):
    """``d<k>`` for the k-th delta derivative, ``file:path.csv`` for sampled data."""
    token = token.strip()
    if token.startswith("file:"):
        try:
            return compact_from_csv(token[5:])
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
    if len(token) > 1 and token[0] == "d" and token[1:].isdigit():
        return DeltaDerivative(int(token[1:]))
    raise UsageError(f"unknown distribution {token!r} (use d0, d1, ... or file:path.csv)")


def parse_dists(text: str) -> list:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError("empty distribution list")
    return [parse_dist(t) for t in items]


def _schedule(args) -> NSchedule:
    try:
        if args.n_values:
            return NSchedule(tuple(_floats(args.n_values)))
        return NSchedule.geometric(args.n_start, args.n_ratio, args.n_count)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _workers(args) -> int:
    return args.workers if args.workers is not None else (os.cpu_count() or 1)


def _mollifier(m: int):
    try:
        return make_mollifier(m)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _weights(args, N: int) -> AWeights | None:
    if args.method != "2":
        return None
    try:
        if args.weights:
            return AWeights.from_values(N, _floats(args.weights))
        return AWeights.equal(N)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _dist_label(T) -> str:
    if isinstance(T, DeltaDerivative):
        return f"d{T.order}"
    return f"file:{T.name}" if isinstance(T, CompactFunction) else repr(T)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _emit(args, text: str):
    if args.output and args.output != "-":
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# predictions
# ---------------------------------------------------------------------------


def _prediction(dists, method: str, alpha: float, beta: float, m: int,
                weights: AWeights | None) -> Prediction | None:
    if not all(isinstance(T, DeltaDerivative) for T in dists):
        return None
    N = len(dists)
    orders = [T.order for T in dists]
    symmetric = weights is None or weights.size_weights is not None
    if N == 2:
        # every method reduces to the pair product when a1 = a2 = 1
        if weights is None or weights.size_weights == {1: 1.0}:
            return predict_pair_derivatives(orders[0], orders[1], alpha, beta, m)
        return None
    if any(orders) or not symmetric:
        return None
    if method == "1":
        return predict_method1_equal_deltas(N, alpha, beta, m)
    if method == "2":
        return predict_method2_equal_deltas(N, alpha, beta, m, weights)
    return None


def _predicted_value(dists, pred: Prediction | None, spec, psi) -> tuple[float | None, str | None]:
    if pred is None:
        if len(dists) == 2 and all(isinstance(T, CompactFunction) for T in dists):
            return predict_continuous_extension(dists[0], dists[1], psi), None
        return None, None
    if pred.kind == "undefined":
        return None, pred.reason
    try:
        return pred.value(spec, psi), None
    except DivergentConstant as exc:
        return None, str(exc)


def _matches(limit: float | None, predicted: float | None, rtol: float = MATCH_RTOL) -> bool | None:
    if limit is None or predicted is None:
        return None
    if predicted == 0.0:
        return limit == 0.0
    return abs(limit - predicted) <= rtol * abs(predicted)


def _run_product(dists, method: str, params: RegParams, schedule: NSchedule, psi, spec,
                 weights, rel_tol: float, workers: int | None):
    if method == "pair":
        if len(dists) != 2:
            raise UsageError("method 'pair' needs exactly two distributions")
        return pair_product(dists[0], dists[1], params, schedule, psi, spec,
                            rel_tol=rel_tol, workers=workers)
    if method == "1":
        return nfold_method1(dists, params, schedule, psi, spec, rel_tol=rel_tol, workers=workers)
    return amethod(dists, weights, params, schedule, psi, spec, rel_tol=rel_tol, workers=workers)


def _method(args, dists) -> str:
    if args.method:
        return args.method
    return "pair" if len(dists) == 2 else "1"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_constants(args) -> int:
    ms = _ints(args.m)
    pairs = []
    for tok in args.ij:
        ij = _ints(tok)
        if len(ij) != 2:
            raise UsageError(f"bad index pair {tok!r} (use i,j)")
        pairs.append(tuple(ij))
    rows = []
    for m in ms:
        spec = _mollifier(m)
        for i, j in pairs:
            try:
                c = a_constant(spec, i, j, principal_value=args.principal_value)
                rows.append({"m": m, "i": i, "j": j, "status": "finite",
                             "value": c.value, "error": c.error_estimate})
            except DivergentConstant:
                rows.append({"m": m, "i": i, "j": j, "status": "divergent",
                             "value": None, "error": None})
    if args.format == "csv":
        out = [["m", "i", "j", "status", "value", "error"]]
        out += [[r["m"], r["i"], r["j"], r["status"],
                 "" if r["value"] is None else r["value"],
                 "" if r["error"] is None else r["error"]] for r in rows]
        _emit(args, _csv(out))
    else:
        config = {"m": ms, "ij": [list(p) for p in pairs],
                  "principal_value": args.principal_value,
                  "mollifiers": [_mollifier(m).to_dict() for m in ms]}
        _emit(args, _json({"schema": SCHEMA, "command": "constants", "config": config,
                           "rows": rows}))
    return EXIT_OK


def _product_config(args, dists, method, params, schedule, psi, spec, weights) -> dict:
    return {
        "dists": [_dist_label(T) for T in dists],
        "method": method,
        "params": params.to_dict(),
        "mollifier": spec.to_dict(),
        "weights": weights.to_dict() if weights else None,
        "psi": psi.name,
        "schedule": list(schedule.values),
        "rel_tol": args.rel_tol,
        "match_rtol": MATCH_RTOL,
    }


def cmd_product(args) -> int:
    dists = parse_dists(args.dists)
    method = _method(args, dists)
    try:
        params = RegParams(args.alpha, args.beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    schedule = _schedule(args)
    psi = _psi(args.psi)
    spec = _mollifier(args.m)
    weights = _weights(args, len(dists))
    verdict = _run_product(dists, method, params, schedule, psi, spec, weights,
                           args.rel_tol, _workers(args))
    pred = _prediction(dists, method, args.alpha, args.beta, args.m, weights)
    predicted, note = _predicted_value(dists, pred, spec, psi)
    match = _matches(verdict.limit, predicted)
    if args.format == "csv":
        _emit(args, _csv([["n", "value"]] + [[n, v] for n, v in verdict.sequence]))
        return EXIT_OK
    report = {
        "schema": SCHEMA,
        "command": "product",
        "config": _product_config(args, dists, method, params, schedule, psi, spec, weights),
        "verdict": verdict.to_dict(),
        "inconclusive": verdict.kind == "inconclusive",
        "prediction": pred.to_dict() if pred else None,
        "predicted_value": predicted,
        "prediction_note": note,
        "match": match,
    }
    _emit(args, _json(report))
    return EXIT_OK


def _psi(name: str):
    try:
        return test_function(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _sweep_cell(dists, method, alpha, beta, schedule, psi, spec, weights, rel_tol, m):
    row = {"alpha": alpha, "beta": beta}
    try:
        v = _run_product(dists, method, RegParams(alpha, beta), schedule, psi, spec,
                         weights, rel_tol, None)
        pred = _prediction(dists, method, alpha, beta, m, weights)
        predicted, _ = _predicted_value(dists, pred, spec, psi)
        row.update(verdict=v.kind, label=v.label(), limit=v.limit, predicted=predicted,
                   match=_matches(v.limit, predicted), error="")
    except (QuadratureError, ValueError, ArithmeticError) as exc:
        row.update(verdict="error", label="error", limit=None, predicted=None, match=None,
                   error=f"{type(exc).__name__}: {exc}")
    return row


def cmd_sweep(args) -> int:
    dists = parse_dists(args.dists)
    method = _method(args, dists)
    alphas, betas = _floats(args.alphas), _floats(args.betas)
    if not alphas or not betas:
        raise UsageError("empty alpha or beta grid")
    if len(alphas) * len(betas) > MAX_SWEEP_CELLS:
        raise UsageError(f"grid has more than {MAX_SWEEP_CELLS} cells")
    if any(not x > 0 for x in alphas + betas):
        raise UsageError("exponents must be positive")
    schedule = _schedule(args)
    psi = _psi(args.psi)
    spec = _mollifier(args.m)
    weights = _weights(args, len(dists))
    if method == "pair" and len(dists) != 2:
        raise UsageError("method 'pair' needs exactly two distributions")
    cells = [(a, b) for b in betas for a in alphas]

    def run(cell):
        return _sweep_cell(dists, method, cell[0], cell[1], schedule, psi, spec, weights,
                           args.rel_tol, args.m)

    workers = _workers(args)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    if args.format == "json":
        config = _product_config(args, dists, method, RegParams(alphas[0], betas[0]), schedule,
                                 psi, spec, weights)
        config.pop("params")
        config.update(alphas=alphas, betas=betas)
        _emit(args, _json({"schema": SCHEMA, "command": "sweep", "config": config, "rows": rows}))
    else:
        cols = ["alpha", "beta", "verdict", "label", "limit", "predicted", "match", "error"]
        out = [cols] + [["" if r[c] is None else r[c] for c in cols] for r in rows]
        _emit(args, _csv(out))
    return EXIT_OK


def _kg_config(args) -> KGConfig:
    try:
        return KGConfig(mu=args.mu, bump=default_bump(), alpha=args.alpha, beta=args.beta,
                        schedule=_schedule(args), quad_tol=args.quad_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_kg(args) -> int:
    config = _kg_config(args)
    if len(config.schedule) < 8:
        raise UsageError("the Klein-Gordon study needs at least 8 schedule points")
    study = divergence_study(config, workers=_workers(args))
    if args.format == "csv":
        _emit(args, _csv(study.csv_rows()))
    else:
        _emit(args, _json({"schema": SCHEMA, "command": "kg", **study.to_dict()}))
    return EXIT_OK


_GENERATORS = ("bump", "m2", "m4", "broken")


def _generator(name: str):
    if name == "bump":
        return default_bump()
    if name == "broken":
        b = default_bump()
        return lambda k: 0.5 * b(k)
    return _mollifier(int(name[1:]))


def cmd_residuals(args) -> int:
    if not args.mu > 0 or not args.beta > 0:
        raise UsageError("mu and beta must be positive")
    eps_values = _floats(args.eps)
    if any(e < 0 for e in eps_values):
        raise UsageError("epsilon values must be nonnegative")
    schedule = _schedule(args)
    amp = ModeAmplitude.gaussian(args.amp_width)
    zeta = gaussian_zeta_hat(args.zeta_width)
    gen = _generator(args.generator)
    rows = []
    for e in eps_values:
        r = analytic_smearing_residual(amp, zeta, args.t, e, args.mu)
        rows.append({"kind": "analytic", "param": e, "abs": abs(r), "re": r.real, "im": r.imag})
    for n in schedule:
        r = mollifier_smearing_residual(amp, zeta, args.t, gen, args.beta, n, args.mu)
        rows.append({"kind": "mollifier", "param": n, "abs": abs(r), "re": r.real, "im": r.imag})
    if args.format == "csv":
        cols = ["kind", "param", "abs", "re", "im"]
        _emit(args, _csv([cols] + [[r[c] for c in cols] for r in rows]))
    else:
        config = {"mu": args.mu, "t": args.t, "beta": args.beta, "generator": args.generator,
                  "amplitude": amp.name, "zeta_width": args.zeta_width, "eps": eps_values,
                  "schedule": list(schedule.values)}
        _emit(args, _json({"schema": SCHEMA, "command": "residuals", "config": config,
                           "rows": rows}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, fmt: str = "json"):
    p.add_argument("--format", choices=("json", "csv"), default=fmt)
    p.add_argument("--output", "-o", default="-", help="output path ('-' for stdout)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: machine parallelism)")


def _schedule_args(p: argparse.ArgumentParser):
    p.add_argument("--n-start", type=float, default=10.0)
    p.add_argument("--n-ratio", type=float, default=2.0)
    p.add_argument("--n-count", type=int, default=14)
    p.add_argument("--n-values", default=None, help="explicit comma-separated schedule")


def _product_args(p: argparse.ArgumentParser):
    p.add_argument("--dists", required=True,
                   help="comma list: d0, d1, ... (delta derivatives) or file:path.csv (header x,f)")
    p.add_argument("--method", choices=("pair", "1", "2"), default=None,
                   help="pair (two factors), 1 (pairing average) or 2 (A-weights)")
    p.add_argument("--m", type=int, default=2, help="mollifier power (even)")
    p.add_argument("--weights", default=None,
                   help="method-2 weights from N-1 mollified slots down to 1, e.g. b1,b2")
    p.add_argument("--psi", default="bump", help="test function name")
    p.add_argument("--rel-tol", type=float, default=1e-2)
    _schedule_args(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="distprod", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="table of A_{i,j} = int Phi^i / t^j")
    p.add_argument("--m", default="2,4,6", help="comma list of even powers")
    p.add_argument("--ij", nargs="+", default=["1,2", "1,3", "1,4", "2,2", "2,4"],
                   help="index pairs i,j")
    p.add_argument("--principal-value", action="store_true",
                   help="report odd-j constants as 0 instead of divergent")
    _common(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("product", help="finite-n sequence and limit of a product",
                       description="CSV columns: n,value")
    _product_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("sweep", help="verdicts over an (alpha, beta) grid",
                       description="CSV columns: alpha,beta,verdict,label,limit,predicted,match,error")
    _product_args(p)
    p.add_argument("--alphas", required=True)
    p.add_argument("--betas", required=True)
    _common(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kg", help="Klein-Gordon I_n divergence study",
                       description="CSV columns: n,i_n,kernel,bound")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--quad-tol", type=float, default=1e-12)
    _schedule_args(p)
    _common(p)
    p.set_defaults(func=cmd_kg)

    p = sub.add_parser("residuals", help="smearing residuals of both regularizations",
                       description="CSV columns: kind,param,abs,re,im")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--generator", choices=_GENERATORS, default="bump")
    p.add_argument("--eps", default="1,0.1,0.01,0.001,0.0001")
    p.add_argument("--amp-width", type=float, default=1.0)
    p.add_argument("--zeta-width", type=float, default=1.0)
    _schedule_args(p)
    _common(p)
    p.set_defaults(func=cmd_residuals)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"distprod: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, DivergentConstant, ArithmeticError) as exc:
        print(f"distprod: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
