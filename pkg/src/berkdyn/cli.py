"""Command-line front end: ``berkdyn <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import report
from .berk import BerkPoint, rho
from .dyn import (
    DynamicsContext,
    analyze,
    chordal_derivative,
    orbit,
    sup_norm,
)
from .errors import BerkdynError, BudgetExceeded, InputError
from .grid import (
    FibonacciGrid,
    LengthTable,
    MarkedGrid,
    Seeds,
    fibonacci_seeds,
    grid_alpha,
    grid_derivative_sequence,
)
from .lyap import (
    OrbitMeasure,
    bound_check,
    liminf_gap_check,
    lyapunov_sequence,
    main_theorem_check,
    orbit_measure_exponent,
)
from .parse import ParseError, parse_element, parse_poly
from .tree import edge_degree, edge_length, escape_time, generators_and_q, geometric_sequence
from .valfield import INF, FieldDescriptor, ValuedPoly
from . import verify as verify_mod

SUBCOMMANDS = ("analyze", "orbit", "tree", "grid", "lyapunov", "verify")


@dataclass
class RunConfig:
    subcommand: str
    field: FieldDescriptor | None = None
    poly: ValuedPoly | None = None
    anchor: object = None
    critical_points: list | None = None
    output: str = "json"
    max_iter: int = 10_000
    max_depth: int = 1 << 10
    seed: int = 0
    options: dict = dc_field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"usage: {message}")


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--field", help="padic:<p> or laurent:<var>")
    common.add_argument("--poly", help="polynomial in z, e.g. '(z^2 - z)/3'")
    common.add_argument("--anchor", help="point of the filled Julia set used as base-point center")
    common.add_argument("--critical", help="comma-separated critical points to use")
    common.add_argument("--output", choices=("json", "tsv", "dot"), default="json")
    common.add_argument("--max-iter", type=int, default=10_000)
    common.add_argument("--max-depth", type=int, default=1 << 10)
    common.add_argument("--seed", type=int, default=0)

    parser = _Parser(prog="berkdyn", description="Exact dynamics of polynomials on the Berkovich line.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    sub.add_parser("analyze", parents=[common], help="base point, kappa, tameness")
    p = sub.add_parser("orbit", parents=[common], help="orbit and derivative of a classical point")
    p.add_argument("--point", required=True)
    p.add_argument("--steps", type=int, required=True)
    p = sub.add_parser("tree", parents=[common], help="geometric sequence above a classical point")
    p.add_argument("--point", required=True)
    p.add_argument("--levels", type=int, required=True)
    p = sub.add_parser("grid", parents=[common], help="length engine on a marked grid")
    p.add_argument("--grid", required=True, help="fibonacci:depth=<n>, fixture:<name> or file:<path>")
    p.add_argument("--seeds", help="comma-separated seed lengths")
    p.add_argument("--count", type=int, help="number of derivative terms for general grids")
    p = sub.add_parser("lyapunov", parents=[common], help="Lyapunov sequence or orbit-measure exponent")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--point")
    g.add_argument("--xi", help="'<center>;<logdiam>'")
    g.add_argument("--orbit-measure", help="JSON file with support and weights")
    p.add_argument("--steps", type=int, default=16)
    p = sub.add_parser("verify", parents=[common], help="randomized verification suites")
    p.add_argument("--suite", choices=verify_mod.SUITES + ("all",), default="all")
    p.add_argument("--count", type=int)
    p.add_argument("--jobs", type=int, default=1)
    return parser


def parse_spec(argv: Sequence[str]) -> RunConfig:
    args = _build_parser().parse_args(list(argv))
    if args.max_iter <= 0 or args.max_depth <= 0:
        raise InputError("budgets must be positive")
    cfg = RunConfig(args.subcommand, output=args.output, max_iter=args.max_iter,
                    max_depth=args.max_depth, seed=args.seed)
    try:
        if args.field is not None:
            cfg.field = FieldDescriptor.parse(args.field)
        if args.poly is not None:
            if cfg.field is None:
                raise InputError("--poly needs --field")
            cfg.poly = parse_poly(args.poly, cfg.field)
        if args.anchor is not None:
            cfg.anchor = parse_element(args.anchor, _need_field(cfg))
        if args.critical is not None:
            cfg.critical_points = [parse_element(t, _need_field(cfg)) for t in args.critical.split(",")]
    except (ParseError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(str(exc)) from None
    opts = {k: v for k, v in vars(args).items()
            if k not in {"subcommand", "field", "poly", "anchor", "critical", "output", "max_iter", "max_depth", "seed"}}
    cfg.options = opts
    if cfg.subcommand in {"analyze", "orbit", "tree", "lyapunov"} and cfg.poly is None:
        raise InputError(f"{cfg.subcommand} needs --field and --poly")
    return cfg


def _need_field(cfg: RunConfig) -> FieldDescriptor:
    if cfg.field is None:
        raise InputError("a --field is required")
    return cfg.field


def _steps(cfg: RunConfig, n: int, what: str = "steps") -> int:
    if n < 0:
        raise InputError(f"{what} must be nonnegative")
    if n > cfg.max_iter:
        raise BudgetExceeded(f"{what}={n} exceeds --max-iter", cap=cfg.max_iter)
    return n


# ---------------------------------------------------------------------------
# subcommands


def _context(cfg: RunConfig) -> DynamicsContext:
    return analyze(cfg.poly, cfg.anchor)


def _head(cfg: RunConfig) -> dict:
    out = {"command": cfg.subcommand}
    if cfg.field is not None:
        out["field"] = str(cfg.field)
    if cfg.poly is not None:
        out["poly"] = str(cfg.poly)
    return out


def cmd_analyze(cfg: RunConfig):
    ctx = _context(cfg)
    kappa = ctx.kappa if ctx.kappa_exact else {"lower": ctx.kappa.lower, "upper": ctx.kappa.upper}
    crit = [{"point": c, "local_degree": m} for c, m in ctx.crit] if ctx.crit_rational else None
    res = {
        **_head(cfg),
        "degree": ctx.degree,
        "anchor": ctx.anchor,
        "base_point": ctx.base_point,
        "R_log": ctx.R_log,
        "image_of_base_point": ctx.image(ctx.base_point),
        "simple": ctx.simple,
        "kappa": kappa,
        "kappa_exact": ctx.kappa_exact,
        "Xi_log": ctx.Xi_log,
        "tame": {"tame": True, "nontame": False}.get(ctx.tame),
        "tameness": ctx.tame,
        "critical_points": crit,
    }
    if cfg.output == "tsv":
        rows = [(k, report.plain(v) if not isinstance(v, (str, bool)) else v) for k, v in res.items() if k != "critical_points"]
        return report.to_tsv(["key", "value"], [(k, json.dumps(v) if isinstance(v, (dict, list)) else v) for k, v in rows]), 0
    return res, 0


def cmd_orbit(cfg: RunConfig):
    ctx = _context(cfg)
    z = parse_element(cfg.options["point"], cfg.field)
    n = _steps(cfg, cfg.options["steps"])
    pts = orbit(ctx.f, z, n)
    rows = []
    total = Fraction(0)
    for k, w in enumerate(pts):
        d = ctx.fprime(w)
        dlog = d.log_abs if not d.is_zero() else -INF
        rows.append({"k": k, "point": w, "log_abs": w.log_abs, "in_base_disk": ctx.in_base_disk(w),
                     "log_derivative": dlog, "cumulative": total})
        total = total + dlog
    esc = escape_time(ctx, z, n)
    if cfg.output == "tsv":
        return report.to_tsv(["k", "point", "log_abs", "in_base_disk", "log_derivative", "cumulative"],
                             [list(r.values()) for r in rows], decimals=[5]), 0
    return {**_head(cfg), "point": z, "escape_time": esc, "orbit": rows}, 0


def _generators(ctx: DynamicsContext, cfg: RunConfig):
    if ctx.simple:
        return None
    crit = cfg.critical_points
    if crit is None:
        crit = [c for c, _ in ctx.crit] if ctx.crit_rational else []
    escaping = [c for c in crit if escape_time(ctx, c, cfg.max_iter) is not None]
    if not escaping:
        return None
    return generators_and_q(ctx, escaping, cfg.max_iter)[0]


def cmd_tree(cfg: RunConfig):
    ctx = _context(cfg)
    z = parse_element(cfg.options["point"], cfg.field)
    n = cfg.options["levels"]
    if n < 0:
        raise InputError("levels must be nonnegative")
    if n > cfg.max_depth:
        raise BudgetExceeded(f"levels={n} exceeds --max-depth", cap=cfg.max_depth)
    gens = _generators(ctx, cfg)
    seq = geometric_sequence(ctx, z, n, gens)
    edges = []
    for i, (a, b) in enumerate(zip(seq.entries, seq.entries[1:])):
        edges.append({"from": i + 1, "to": i, "degree": edge_degree(ctx, (b, a)), "length": edge_length((a, b))})
    if cfg.output == "dot":
        nodes = [(f"G{i}", f"G{i} {p}") for i, p in enumerate(seq.entries)]
        dedges = [(f"G{e['from']}", f"G{e['to']}", f"deg {e['degree']}, len {e['length']}") for e in edges]
        return report.to_dot("tree", nodes, dedges), 0
    if cfg.output == "tsv":
        return report.to_tsv(["level", "point", "logdiam", "rho_from_base"],
                             [(i, p, p.logdiam, rho(ctx.base_point, p)) for i, p in enumerate(seq.entries)],
                             decimals=[2, 3]), 0
    return {**_head(cfg), "point": z, "q": seq.q, "generators": gens or [ctx.image(ctx.base_point)],
            "levels": list(seq.entries), "edges": edges}, 0


def _parse_rationals(text: str) -> list[Fraction]:
    try:
        return [Fraction(t.strip()) for t in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise InputError(f"malformed rational list {text!r}") from None


def load_grid(spec: str, max_depth: int) -> MarkedGrid:
    if spec.startswith("fibonacci:"):
        key, _, val = spec[len("fibonacci:"):].partition("=")
        if key != "depth":
            raise InputError("fibonacci grids take 'fibonacci:depth=<n>'")
        try:
            depth = int(val)
        except ValueError:
            raise InputError(f"bad depth {val!r}") from None
        if depth > max_depth:
            raise BudgetExceeded(f"depth={depth} exceeds --max-depth", cap=max_depth)
        return FibonacciGrid(depth)
    if spec.startswith("fixture:"):
        return verify_mod.load_fixture(spec[len("fixture:"):])
    path = Path(spec[len("file:"):] if spec.startswith("file:") else spec)
    if not path.is_file():
        raise InputError(f"no grid file {spec!r}")
    return MarkedGrid.from_text(path.read_text())


def cmd_grid(cfg: RunConfig):
    grid = load_grid(cfg.options["grid"], cfg.max_depth)
    seeds_text = cfg.options.get("seeds")
    fib = isinstance(grid, FibonacciGrid)
    if fib:
        x0, x1 = _parse_rationals(seeds_text) if seeds_text else (Fraction(1), Fraction(1))
        seeds = fibonacci_seeds(x0, x1)
    elif seeds_text:
        seeds = Seeds(tuple(_parse_rationals(seeds_text)))
    else:
        seeds = grid.seeds or (Fraction(1),) * grid.q
    table = LengthTable(grid, seeds)
    rows = grid_derivative_sequence(table, grid, cfg.options.get("count"))
    verdicts = main_theorem_check(table, grid)
    res = {"command": "grid", "grid": cfg.options["grid"], "q": grid.q, "m": grid.m}
    if fib:
        gaps = table.gap_lengths(grid.ell[: grid.mark_depth + 1])
        res["gaps"] = gaps
        verdicts.append(liminf_gap_check(table, grid.mark_depth - 1, levels=grid.ell))
    else:
        res["consistent"] = grid.is_consistent()
    refused = any(v.detail.get("refused") for v in verdicts)
    res["alpha"] = None if refused else grid_alpha(table)
    res["derivative"] = rows
    res["verdicts"] = verdicts
    code = 0 if all(v.passed for v in verdicts) else 2
    if cfg.output == "tsv":
        return report.to_tsv(["n", "k", "ell", "a", "normalized"],
                             [(r.n, r.k, r.ell, r.a, r.normalized) for r in rows], decimals=[4]), code
    return res, code


def _parse_xi(text: str, field: FieldDescriptor) -> BerkPoint:
    c, sep, r = text.partition(";")
    if not sep:
        raise InputError(f"expected '<center>;<logdiam>', got {text!r}")
    r = r.strip()
    logdiam = -INF if r in {"-inf", "classical"} else _parse_rationals(r)[0]
    return BerkPoint(parse_element(c.strip(), field), logdiam)


def _tail_stats(seq) -> dict:
    vals = [v for _, _, v in seq]
    if not vals:
        return {}
    half = vals[len(vals) // 2:]
    return {"min": min(vals), "last": vals[-1], "window_min": min(half)}


def cmd_lyapunov(cfg: RunConfig):
    ctx = _context(cfg)
    opts = cfg.options
    N = _steps(cfg, opts["steps"])
    if opts.get("orbit_measure"):
        try:
            data = json.loads(Path(opts["orbit_measure"]).read_text())
            support = tuple(_parse_xi(s, cfg.field) for s in data["support"])
            weights = tuple(_parse_rationals(",".join(map(str, data["weights"]))))
        except (OSError, KeyError, TypeError, json.JSONDecodeError) as exc:
            raise InputError(f"unreadable orbit measure: {exc}") from None
        mu = OrbitMeasure(support, weights)
        L = orbit_measure_exponent(ctx, mu)
        verdicts = bound_check(ctx, mu)
        code = 0 if all(v.passed for v in verdicts) else 2
        if cfg.output == "tsv":
            return report.to_tsv(["point", "weight", "log_norm_derivative"],
                                 [(p, w, sup_norm(ctx.fprime, p)) for p, w in zip(support, weights)]), code
        return {**_head(cfg), "measure": {"support": support, "weights": weights},
                "exponent": L, "verdicts": verdicts}, code
    if opts.get("xi"):
        xi = _parse_xi(opts["xi"], cfg.field)
    else:
        xi = BerkPoint(parse_element(opts["point"], cfg.field), -INF)
    rep = lyapunov_sequence(ctx, xi, N)
    if cfg.output == "tsv":
        return report.to_tsv(["n", "partial", "normalized"], rep.sequence, decimals=[2]), 0
    rows = [{"n": n, "partial": s, "normalized": v} for n, s, v in rep.sequence]
    return {**_head(cfg), "point": xi, "chordal_derivative_at_start": chordal_derivative(ctx.f, xi) if N else None,
            "sequence": rows, "tail": _tail_stats(rep.sequence)}, 0


def cmd_verify(cfg: RunConfig):
    opts = cfg.options
    if opts.get("jobs", 1) < 1:
        raise InputError("--jobs must be positive")
    res = verify_mod.run(opts["suite"], opts.get("count"), cfg.seed, opts.get("jobs", 1))
    code = 0 if res["summary"]["failed"] == 0 else 2
    if cfg.output == "tsv":
        return report.to_tsv(["suite", "instance", "name", "passed", "margin"],
                             [(r["suite"], r["instance"], r["name"], r["passed"], r["margin"]) for r in res["verdicts"]]), code
    return res, code


COMMANDS = {
    "analyze": cmd_analyze,
    "orbit": cmd_orbit,
    "tree": cmd_tree,
    "grid": cmd_grid,
    "lyapunov": cmd_lyapunov,
    "verify": cmd_verify,
}


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute a parsed configuration; returns the rendered report and exit code."""
    if cfg.output == "dot" and cfg.subcommand != "tree":
        raise InputError("DOT output is only available for the tree subcommand")
    out, code = COMMANDS[cfg.subcommand](cfg)
    if isinstance(out, str):
        return out, code
    return report.to_json(out), code


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_spec(argv)
        text, code = run(cfg)
    except BerkdynError as exc:
        sys.stdout.write(report.to_json(exc.to_json()))
        return exc.exit_code
    except (ValueError, ZeroDivisionError) as exc:
        err = InputError(str(exc))
        sys.stdout.write(report.to_json(err.to_json()))
        return err.exit_code
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
