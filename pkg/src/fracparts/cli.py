"""``fracparts`` command line: one subcommand per computation, JSON or CSV out.

Exit codes: 0 ok, 2 precision exhausted, 3 resonance, 4 bad arguments,
5 invariant violation.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from . import bounds, lattice, oracle, phi, sums
from .alpha import AlphaVector, parse_alpha
from .errors import FracPartsError, InvariantViolation, PrecisionExhausted, Resonance
from .realnum import PrecisionBudget
from .serialize import to_csv_text, to_json_text

__all__ = ["main", "run", "parse_alpha", "parse_grid", "build_parser"]

EXIT_OK, EXIT_PRECISION, EXIT_RESONANCE, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3, 4, 5
MAX_BITS_ENV = "FRACPARTS_MAX_BITS"
GRID_CAP = 10_000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def parse_grid(text: str) -> list[Fraction]:
    """``start:stop:factor`` (geometric, inclusive) or a comma list of numbers.

    A factor below 1 walks downwards, so ``1/2:1/256:1/2`` gives eight
    dyadic epsilons.
    """
    if ":" not in text:
        vals = [_fraction(t) for t in text.split(",") if t.strip()]
        if not vals:
            raise argparse.ArgumentTypeError("empty grid")
        return vals
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:factor, got {text!r}")
    start, stop, factor = (_fraction(p) for p in parts)
    if start <= 0 or stop <= 0 or factor <= 0 or factor == 1:
        raise argparse.ArgumentTypeError("grid needs positive start, stop and a factor != 1")
    up = factor > 1
    if (up and start > stop) or (not up and start < stop):
        raise argparse.ArgumentTypeError("grid factor points away from stop")
    out, x = [], start
    while (x <= stop) if up else (x >= stop):
        out.append(x)
        if len(out) > GRID_CAP:
            raise argparse.ArgumentTypeError("grid too long")
        x *= factor
    return out


def _alpha_arg(text: str) -> AlphaVector:
    try:
        return parse_alpha(text)
    except FracPartsError as exc:
        raise argparse.ArgumentTypeError(str(exc))


@dataclass
class Artifact:
    json: object
    columns: Sequence[str]
    rows: list
    summary: str
    failed: str | None = None  # message for an exact inequality that failed


def _budget(args) -> PrecisionBudget:
    max_bits = args.max_bits
    if max_bits is None:
        env = os.environ.get(MAX_BITS_ENV)
        if env:
            try:
                max_bits = int(env)
            except ValueError:
                raise UsageError(f"{MAX_BITS_ENV} must be an integer, got {env!r}")
    if max_bits is None:
        max_bits = 4096
    if args.start_bits < 8 or max_bits < args.start_bits:
        raise UsageError("need 8 <= start-bits <= max-bits")
    return PrecisionBudget(start_bits=args.start_bits, max_bits=max_bits)


def _kw(args):
    return {"chunks": args.chunks, "workers": args.workers}


# subcommand handlers ------------------------------------------------------

def cmd_sum(args, budget):
    box = sums.BoxSpec(tuple(args.radii)) if args.radii else sums.BoxSpec.cube(args.q, args.alpha.n)
    res = sums.sum_reciprocals(args.alpha, box, budget, **_kw(args))
    return Artifact(res.to_json(), res.csv_columns, res.csv_rows(),
                    f"S in [{res.lower:.10g}, {res.upper:.10g}] over {res.terms} terms")


def cmd_count(args, budget):
    rec = lattice.count_M(args.alpha, args.eps, args.q, budget, **_kw(args))
    return Artifact(rec.to_json(), rec.csv_columns, [rec.csv_row()],
                    f"|M| = {rec.count} (main term {rec.main_term:.10g})")


def cmd_oracle(args, budget):
    lattice._check_count_args(args.eps, args.q)
    c = oracle.naive_count(args.alpha, args.eps, args.q, budget)
    rec = lattice.make_record(args.alpha, Fraction(args.eps), Fraction(args.q), c, False, None)
    return Artifact(rec.to_json(), rec.csv_columns, [rec.csv_row()], f"naive |M| = {c}")


def cmd_phi(args, budget):
    t = phi.compute_phi_table(args.alpha, args.qmax, budget, **_kw(args))
    last = t.breakpoints[-1].value if t.breakpoints else 1.0
    return Artifact(t.to_json(), t.csv_columns, t.csv_rows(),
                    f"{len(t.breakpoints)} breakpoints, phi({float(args.qmax):g}) = {last:.10g}")


def cmd_profile(args, budget):
    prof = sums.dyadic_profile(args.alpha, args.q, budget, **_kw(args))
    res = sums.sum_reciprocals(args.alpha, sums.BoxSpec.cube(args.q, args.alpha.n), budget, **_kw(args))
    sw = sums.sandwich_check(prof, res)
    data = dict(prof.to_json(), sandwich=sw._asdict())
    fail = None if sw.holds else f"sandwich fails: {sw}"
    return Artifact(data, prof.csv_columns, prof.csv_rows(),
                    f"{len(prof.shell_counts)} shells, sandwich {sw.lower_sum} <= S <= {sw.upper_sum}: "
                    f"{'holds' if sw.holds else 'FAILS'}", fail)


def cmd_sharpness(args, budget):
    t = phi.compute_phi_table(args.alpha, args.qmax, budget, **_kw(args))
    pts = phi.sharpness_sequence(t, budget)
    data = [{"q": p.Q, "witness": list(p.witness), "reciprocal": p.reciprocal} for p in pts]
    return Artifact(data, ("q", "witness", "reciprocal"), [tuple(p) for p in pts],
                    f"{len(pts)} sharpness points")


def cmd_verify_prop(args, budget):
    eps = args.eps_grid or [Fraction(1, 2**e) for e in range(1, 9)]
    qs = args.q_grid or sorted({Fraction(q) for _, q in bounds.default_prop_grid(args.alpha.n)})
    grid = [(e, q) for e in eps for q in qs]
    rep = lattice.verify_prop_bound(args.alpha, grid, budget, **_kw(args))
    return Artifact(rep.to_json(), rep.csv_columns, rep.csv_rows(),
                    f"slope {rep.slope:.4f}, max ratio {rep.max_ratio:.6g} over {len(grid)} points")


def cmd_verify_theorem(args, budget):
    grid = args.q_grid or [Fraction(2**k) for k in range(4, 13)]
    rep = bounds.fit_theorem_constants(args.alpha, grid, budget, **_kw(args))
    return Artifact(rep.to_json(), rep.csv_columns, rep.csv_rows(),
                    f"r in [{min(r.r for r in rep.rows):.6g}, {rep.fitted_constant_high:.6g}], "
                    f"stability {rep.stability:.4f}")


def cmd_verify_gap(args, budget):
    rep = sums.verify_gap_principle(args.alpha, args.q, budget)
    fail = None if rep.holds else f"gap principle fails: {rep}"
    return Artifact(rep._asdict(), rep._fields, [tuple(rep)],
                    f"min separation {rep.min_pairwise_separation:.6g}, floor {rep.floor:.6g}: "
                    f"{'holds' if rep.holds else 'FAILS'}", fail)


def cmd_verify_shells(args, budget):
    rep = bounds.shell_difference_check(args.alpha, args.q, args.c_n, budget, **_kw(args))
    return Artifact(rep.to_json(), rep.csv_columns, rep.csv_rows(),
                    f"K = {rep.K:.4f}, k in {list(rep.k_range)}: {'holds' if rep.holds else 'fails'}")


def cmd_verify_widmer(args, budget):
    inst = lattice.LatticeInstance(args.alpha)
    rep = lattice.widmer_instance_check(inst, args.eps, args.q, args.b_grid, budget)
    return Artifact(rep.to_json(), rep.csv_columns, rep.csv_rows(),
                    f"error {rep.actual_error:g}, smallest term {rep.min_term:.6g}, ratio {rep.ratio:.6g}")


def cmd_bounds(args, budget):
    entries = bounds.evaluate_bounds(args.n, args.q, args.phi_q, args.phi_2q)
    return Artifact([e.to_json() for e in entries], bounds.BoundCatalogEntry.csv_columns,
                    [e.csv_row() for e in entries], f"{len(entries)} bounds")


# parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="write the artifact here instead of stdout")
    common.add_argument("--chunks", type=int, default=1)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--start-bits", type=int, default=128)
    common.add_argument("--max-bits", type=int, default=None, help=f"default: ${MAX_BITS_ENV} or 4096")

    with_alpha = _Parser(add_help=False, parents=[common])
    with_alpha.add_argument("--alpha", type=_alpha_arg, required=True)

    p = _Parser(prog="fracparts", description="Reciprocal sums of fractional parts and related counts.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, handler: Callable, helptext, parent=with_alpha, on=sub):
        sp = on.add_parser(name, parents=[parent], help=helptext)
        sp.set_defaults(handler=handler)
        return sp

    sp = add("sum", cmd_sum, "enclose S over a box")
    sp.add_argument("--q", type=_fraction)
    sp.add_argument("--radii", type=parse_grid, help="per-axis radii, comma separated")
    for name, h, txt in (("count", cmd_count, "|M(alpha, eps, Q)| via the kernel"),
                         ("oracle", cmd_oracle, "|M(alpha, eps, Q)| by the naive double loop")):
        sp = add(name, h, txt)
        sp.add_argument("--eps", type=_fraction, required=True)
        sp.add_argument("--q", type=_fraction, required=True)
    for name, h, txt in (("phi", cmd_phi, "empirical maximal phi table"),
                         ("sharpness", cmd_sharpness, "breakpoint witnesses")):
        sp = add(name, h, txt)
        sp.add_argument("--qmax", type=_fraction, required=True)
    sp = add("profile", cmd_profile, "dyadic shell counts and the sandwich check")
    sp.add_argument("--q", type=_fraction, required=True)

    verify = sub.add_parser("verify", help="numerical checks").add_subparsers(dest="check", required=True)
    sp = add("prop", cmd_verify_prop, "count error against (eps Q^N / phi(Q))^(N/(N+1))", on=verify)
    sp.add_argument("--eps-grid", type=parse_grid)
    sp.add_argument("--q-grid", type=parse_grid)
    sp = add("theorem", cmd_verify_theorem, "fit constants of the main estimate", on=verify)
    sp.add_argument("--q-grid", type=parse_grid)
    sp = add("gap", cmd_verify_gap, "gap principle floor", on=verify)
    sp.add_argument("--q", type=_fraction, required=True)
    sp = add("shells", cmd_verify_shells, "dyadic shell differences", on=verify)
    sp.add_argument("--q", type=_fraction, required=True)
    sp.add_argument("--c-n", type=float, help="default: twice the worst observed count-error ratio")
    sp = add("widmer", cmd_verify_widmer, "lattice counting error term", on=verify)
    sp.add_argument("--eps", type=_fraction, required=True)
    sp.add_argument("--q", type=_fraction, required=True)
    sp.add_argument("--b-grid", type=parse_grid)

    sp = add("bounds", cmd_bounds, "closed-form bound catalog", parent=common)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--q", type=_fraction, required=True)
    sp.add_argument("--phi-q", type=_fraction, required=True)
    sp.add_argument("--phi-2q", type=_fraction)
    return p


def _validate(args):
    if args.chunks < 1 or args.workers < 1:
        raise UsageError("chunks and workers must be >= 1")
    if args.command == "sum" and (args.q is None) == (args.radii is None):
        raise UsageError("sum needs exactly one of --q or --radii")
    if getattr(args, "radii", None) and len(args.radii) != args.alpha.n:
        raise UsageError("--radii needs one radius per alpha component")


def _emit(art: Artifact, args) -> None:
    if args.format == "json":
        text = to_json_text(art.json)
    else:
        text = to_csv_text(art.columns, art.rows)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(art.summary)
    else:
        sys.stdout.write(text)
        print(art.summary, file=sys.stderr)


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        budget = _budget(args)
    except UsageError as exc:
        print(f"fracparts: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        art = args.handler(args, budget)
    except PrecisionExhausted as exc:
        print(f"fracparts: precision exhausted: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except Resonance as exc:
        print(f"fracparts: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except InvariantViolation as exc:
        print(f"fracparts: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (FracPartsError, ValueError) as exc:
        print(f"fracparts: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(art, args)
    if art.failed:
        print(f"fracparts: invariant violated: {art.failed}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
