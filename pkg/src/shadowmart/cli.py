"""Command-line front end.

Exit codes: 0 success, 2 order violation, 3 parse error, 4 verification
failure, 5 LP infeasible or unbounded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import config
from .dilation import finite_nsi
from .errors import (BadSpec, Infeasible, IterationLimit, NotAPeacock, OrderViolation,
                     ResidualNotPeacock, SizeLimit, Unbounded, NonBinomialMixture)
from .families import from_family_spec
from .martingale import (MartingaleMixture, build, check_slice_ordering,
                         discretize, sample_arrays, slice_nsi_report, verify_marginals,
                         verify_martingale)
from .measure import Measure, check_convex_order, w1_distance
from .mot import get_cost, mot_lp, mot_lp_multistep
from .parametrization import Parametrization, _KIND_FROM_JSON, check_cs_convex
from .shadow import Peacock, obstructed_shadow, simple_shadow

EXIT_OK = 0
EXIT_ORDER = 2
EXIT_PARSE = 3
EXIT_VERIFY = 4
EXIT_LP = 5


class ParseError(Exception):
    """Input file or argument could not be interpreted."""


class VerificationFailure(Exception):
    """An audit exceeded its tolerance."""


@dataclass
class RunConfig:
    command: str
    inputs: list[str] = field(default_factory=list)
    output: str | None = None
    alphas: list[float] | int | None = None
    m: int | None = None
    seed: int = 0
    tol: float | None = None
    fmt: str = "json"
    threads: int = 1

    def __post_init__(self):
        if self.m is not None and self.m < 1:
            raise ParseError("m must be at least 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ParseError("seed must be a 64-bit unsigned value")
        if self.fmt not in ("json", "csv"):
            raise ParseError("format must be json or csv")
        if self.threads < 1:
            raise ParseError("threads must be positive")
        if isinstance(self.alphas, list) and self.alphas:
            if abs(self.alphas[0]) > 1e-12 or abs(self.alphas[-1] - 1.0) > 1e-12:
                raise ParseError("alpha grid must start at 0 and end at 1")

    def grid(self, total: float) -> list[float] | None:
        """Alpha grid scaled to the base mass ``total``."""
        if self.alphas is None:
            return None
        if isinstance(self.alphas, int):
            return (np.linspace(0.0, 1.0, self.alphas + 1) * total).tolist()
        return [a * total for a in self.alphas]


# ---------------------------------------------------------------------------
# file helpers


def _read_json(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_measure(path: str) -> Measure:
    d = _read_json(path)
    try:
        if isinstance(d, dict) and "type" in d:
            raise ParseError(f"{path}: distribution specs need 'discretize' first")
        return Measure.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a measure: {exc}") from exc


def load_peacock(path: str) -> Peacock:
    d = _read_json(path)
    try:
        if isinstance(d, dict) and "family" in d:
            return from_family_spec(d)
        if isinstance(d, dict) and "atoms" in d:
            m = Measure.from_dict(d)
            return Peacock([0.0], [m])
        return Peacock.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a peacock: {exc}") from exc


def load_mixture(path: str) -> MartingaleMixture:
    d = _read_json(path)
    try:
        return MartingaleMixture.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: not a mixture: {exc}") from exc


def load_param(spec: str, base: Measure) -> Parametrization:
    """A kind name (applied to ``base``) or a parametrization JSON file."""
    kind = _KIND_FROM_JSON.get(spec)
    if kind is None and spec.replace("-", "_") in _KIND_FROM_JSON.values():
        kind = spec.replace("-", "_")
    if kind is not None:
        if kind in ("intervals", "explicit_grid"):
            raise ParseError(f"parametrization kind {spec!r} needs a JSON file")
        return Parametrization(kind, base)
    d = _read_json(spec)
    try:
        return Parametrization.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{spec}: not a parametrization: {exc}") from exc


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _measure_csv(m: Measure, t: float | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "weight"] if t is not None else ["x", "weight"])
    for x, wt in m.atoms:
        w.writerow([repr(t), repr(x), repr(wt)] if t is not None else [repr(x), repr(wt)])
    return buf.getvalue()


def _summary(m: Measure) -> str:
    bary = f"{m.barycenter:.12g}" if m.mass > 0 else "undefined"
    supp = ", ".join(f"{x:.12g}" for x in m.xs)
    return f"mass {m.mass:.12g}, barycenter {bary}, support [{supp}]"


# ---------------------------------------------------------------------------
# commands


def cmd_shadow(cfg: RunConfig, mode: str) -> int:
    nu = load_measure(cfg.inputs[0])
    chain = load_peacock(cfg.inputs[1]).marginals
    if mode == "simple":
        res = simple_shadow(nu, chain[-1])
    else:
        res = obstructed_shadow(nu, chain)
    text = _measure_csv(res) if cfg.fmt == "csv" else res.to_json()
    _write(text, cfg.output)
    print(_summary(res), file=sys.stderr if cfg.output in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_build(cfg: RunConfig, param_spec: str, refine: bool, subdivide: int) -> int:
    p = load_peacock(cfg.inputs[0])
    param = load_param(param_spec, p.marginals[0])
    mix = build(p, param, cfg.grid(param.base.mass), refine=refine, subdivide=subdivide,
                threads=cfg.threads)
    if cfg.fmt == "csv":
        _write(_marginals_csv(mix), cfg.output)
    else:
        _write(mix.to_json(), cfg.output)
    bad = mix.non_binomial_links()
    print(f"slices {len(mix.slices)}, non-binomial links {len(bad)}",
          file=sys.stderr if cfg.output in (None, "-") else sys.stdout)
    return EXIT_OK


def _marginals_csv(mix: MartingaleMixture) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x", "weight"])
    for i, t in enumerate(mix.times):
        for x, wt in mix.marginal(i).atoms:
            w.writerow([repr(t), repr(x), repr(wt)])
    return buf.getvalue()


def cmd_sample(cfg: RunConfig, n: int, force: bool) -> int:
    mix = load_mixture(cfg.inputs[0])
    ks, X = sample_arrays(mix, n, cfg.seed, force=force, threads=cfg.threads)
    if cfg.fmt == "json":
        rows = [{"path_id": p, "slice": int(k), "values": X[p].tolist()} for p, k in enumerate(ks)]
        _write(json.dumps({"times": mix.times, "paths": rows}), cfg.output)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", "slice", "t", "x"])
    for p in range(X.shape[0]):
        for i, t in enumerate(mix.times):
            w.writerow([p, int(ks[p]), repr(t), repr(float(X[p, i]))])
    _write(buf.getvalue(), cfg.output)
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    mix = load_mixture(cfg.inputs[0])
    tol = config.tolerance()
    failures: list[str] = []
    lines: list[str] = []
    if mix.peacock is not None and mix.param is not None and mix.alphas is not None:
        dev = verify_marginals(mix)
        lines.append(f"marginal deviation {dev:.3e}")
        if dev > tol:
            failures.append("telescoping marginal identity")
        mdev = max(w1_distance(mix.marginal(i), m, tol=1e-6) for i, m in enumerate(mix.peacock.marginals))
        lines.append(f"mixture vs peacock marginals {mdev:.3e}")
        if mdev > tol:
            failures.append("mixture marginals equal the peacock")
    else:
        lines.append("marginal deviation skipped (no provenance)")
    audit = verify_martingale(mix)
    lines.append(f"kernel barycenter error {audit.kernel_error:.3e}")
    if audit.kernel_error > tol:
        failures.append("kernel barycenter")
    lines.append(f"non-binomial links {len(audit.non_binomial)}")
    if audit.non_binomial:
        failures.append("binomial links " + ", ".join(f"{k}:{i}" for k, i in audit.non_binomial[:10]))
    nsi = slice_nsi_report(mix)
    lines.append(f"NSI slices {sum(nsi)}/{len(nsi)}")
    ok, wit = check_slice_ordering(mix)
    lines.append("slice ordering " + ("true" if ok else
                                       f"false (slice {wit.slice_index}, time index {wit.time_index})"))
    print("\n".join(lines))
    if failures:
        print("verification failed: " + "; ".join(failures), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_mot(cfg: RunConfig, cost_name: str, multistep: str | None, sense: str) -> int:
    cost = get_cost(cost_name)
    if multistep is not None:
        p = load_peacock(multistep)
        value, law = mot_lp_multistep(p, cost)
        out = {"value": value, "final_coupling": law.pair(0, len(p) - 1).to_dict()}
    else:
        mu0 = load_measure(cfg.inputs[0])
        mu1 = load_measure(cfg.inputs[1])
        value, cpl = mot_lp(mu0, mu1, cost, sense=sense)
        out = {"value": value, "coupling": cpl.to_dict(), "convex_order": check_convex_order(mu0, mu1)}
    print(f"value {value:.12g}", file=sys.stderr if cfg.output in (None, "-") else sys.stdout)
    _write(json.dumps(out), cfg.output)
    return EXIT_OK


def cmd_discretize(cfg: RunConfig) -> int:
    spec = _read_json(cfg.inputs[0])
    try:
        m = discretize(spec, cfg.m)
    except BadSpec as exc:
        raise ParseError(str(exc)) from exc
    _write(_measure_csv(m) if cfg.fmt == "csv" else m.to_json(), cfg.output)
    return EXIT_OK


def cmd_nsi(cfg: RunConfig) -> int:
    p = load_peacock(cfg.inputs[0])
    rep = finite_nsi(p)
    lines = [f"NSI: {'true' if rep.ok else 'false'}"]
    for t, ok, d in zip(rep.times, rep.per_time, rep.deviations):
        lines.append(f"  t={t:g}: {'ok' if ok else 'fails'} (deviation {d:.3e})")
    if not rep.ok:
        lines.append(f"first failure at t={rep.first_failure:g}")
    _write("\n".join(lines), cfg.output)
    return EXIT_OK


def cmd_param(cfg: RunConfig, kind: str, alpha: float | None, cs_grid: int | None) -> int:
    mu0 = load_measure(cfg.inputs[0])
    param = load_param(kind, mu0)
    out: dict = {"parametrization": param.to_dict()}
    if alpha is not None:
        out["nu"] = param.at_alpha(alpha * mu0.mass).to_dict()
    if cs_grid is not None:
        grid = np.linspace(0.0, mu0.mass, cs_grid).tolist()
        ok, wit = check_cs_convex(param, grid)
        out["cs_convex"] = ok
        if wit is not None:
            out["witness"] = {"alphas": list(wit.alphas), "lower": wit.lower.to_dict(),
                              "upper": wit.upper.to_dict()}
        print(f"cs-convex: {'true' if ok else 'false'}", file=sys.stderr)
    _write(json.dumps(out), cfg.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _alphas_arg(text: str) -> list[float] | int:
    try:
        if "," in text:
            return [float(a) for a in text.split(",")]
        n = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha grid {text!r}") from exc
    if n < 1:
        raise argparse.ArgumentTypeError("alpha count must be positive")
    return n


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with the parse-error code (argparse uses 2)."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def make_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-o", "--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format (default csv for sample, json otherwise)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--tol", type=float, default=None, help="override the global tolerance")

    ap = _Parser(prog="shadowmart", description="Shadow martingales for finite peacocks.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("shadow", parents=[common], help="shadow of a measure through a chain")
    s.add_argument("nu")
    s.add_argument("peacock")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--simple", action="store_true", help="simple shadow in the last marginal")
    g.add_argument("--obstructed", action="store_true", help="obstructed shadow (default)")

    b = sub.add_parser("build", parents=[common], help="build the shadow martingale mixture")
    b.add_argument("peacock")
    b.add_argument("--param", default="left-curtain", help="kind name or parametrization JSON")
    b.add_argument("--alphas", type=_alphas_arg, default=None,
                   help="interval count or comma-separated grid on [0, 1]")
    b.add_argument("--refine", action="store_true", help="add every kink of the table in alpha")
    b.add_argument("--subdivide", type=int, default=0)

    sa = sub.add_parser("sample", parents=[common], help="sample trajectories from a mixture")
    sa.add_argument("mixture")
    sa.add_argument("-n", type=int, default=1000)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--force", action="store_true", help="sample even with non-binomial links")

    v = sub.add_parser("verify", parents=[common], help="audit a mixture")
    v.add_argument("mixture")

    mo = sub.add_parser("mot", parents=[common], help="martingale optimal transport LP")
    mo.add_argument("mu0", nargs="?")
    mo.add_argument("mu1", nargs="?")
    mo.add_argument("--cost", default="cubic", choices=("cubic", "tanh_sqrt", "exp_diff", "exp_rev"))
    mo.add_argument("--multistep", default=None, help="peacock JSON for the path LP")
    mo.add_argument("--sense", choices=("min", "max"), default="min")

    d = sub.add_parser("discretize", parents=[common], help="quantile discretization of a law")
    d.add_argument("spec")
    d.add_argument("m", type=int)

    n = sub.add_parser("nsi", parents=[common], help="test the NSI property")
    n.add_argument("peacock")

    pa = sub.add_parser("param", parents=[common], help="evaluate or check a parametrization")
    pa.add_argument("mu0")
    pa.add_argument("kind")
    pa.add_argument("--alpha", type=float, default=None, help="fraction of the mass to evaluate")
    pa.add_argument("--check-cs-convex", type=int, default=None, metavar="GRID",
                    help="number of equally spaced alphas for the convexity check")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    saved_tol = config.tolerance()
    try:
        if args.tol is not None:
            config.set_tolerance(args.tol)
        inputs = [getattr(args, k) for k in ("nu", "peacock", "mixture", "mu0", "mu1", "spec")
                  if getattr(args, k, None) is not None]
        if args.command == "shadow":
            inputs = [args.nu, args.peacock]
        cfg = RunConfig(args.command, inputs, args.out, getattr(args, "alphas", None),
                        getattr(args, "m", None), getattr(args, "seed", 0), args.tol,
                        args.format or ("csv" if args.command == "sample" else "json"), args.threads)
        if args.command == "shadow":
            return cmd_shadow(cfg, "simple" if args.simple else "obstructed")
        if args.command == "build":
            return cmd_build(cfg, args.param, args.refine, args.subdivide)
        if args.command == "sample":
            return cmd_sample(cfg, args.n, args.force)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "mot":
            if args.multistep is None and (args.mu0 is None or args.mu1 is None):
                raise ParseError("mot needs two measure files or --multistep")
            return cmd_mot(cfg, args.cost, args.multistep, args.sense)
        if args.command == "discretize":
            return cmd_discretize(cfg)
        if args.command == "nsi":
            return cmd_nsi(cfg)
        if args.command == "param":
            return cmd_param(cfg, args.kind, args.alpha, args.check_cs_convex)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OrderViolation as exc:
        print(f"order violation at chain index {exc.index}: {exc}", file=sys.stderr)
        return EXIT_ORDER
    except (NotAPeacock, ResidualNotPeacock) as exc:
        print(f"order violation: {exc}", file=sys.stderr)
        return EXIT_ORDER
    except (Infeasible, Unbounded, IterationLimit, SizeLimit) as exc:
        print(f"LP failure: {exc}", file=sys.stderr)
        return EXIT_LP
    except (VerificationFailure, NonBinomialMixture) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    finally:
        config.set_tolerance(saved_tol)
    ap.error(f"unknown command {args.command}")
    return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
