"""``ictk`` command line.

Subcommands write CSV tables (17 significant digits unless ``--round`` is
given) to ``--out`` or stdout. Exit status: 0 on success, 2 when every
requested result is infeasible, 1 on errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys

import numpy as np

from .capacity import SingleUserChannel, constrained_capacity, unconstrained_capacity
from .channels import resolve_channel
from .coding import simulate_single_user
from .polytope import MAX_ENUM_INPUTS, EnumerationLimitError
from .prob import as_pmf, mutual_information, push_forward, total_variation
from .region import (
    FEASIBILITY_TV,
    TwoUserChannel,
    example1_closed_form,
    example1_rates,
    frontier_search,
    rate_tuple,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

CAPACITY_HEADER = ["g_z", "feasible", "rate", "gap", "converged", "p_x"]
REGION_HEADER = ["w1", "w2", "wc", "r1", "r2", "rc", "tv_to_target", "q_z"]
FACET_HEADER = ["n_r1", "n_r2", "n_rc", "offset"]
SIMULATE_HEADER = ["n", "trials", "error_rate", "mean_tv", "tv_std_err",
                   "exceed_0.05", "exceed_0.1", "seed"]
EXAMPLE1_HEADER = ["quantity", "value", "closed_form", "rounded"]


class CliError(Exception):
    pass


class _Fmt:
    def __init__(self, digits: int | None):
        self.digits = digits

    def num(self, x) -> str:
        if isinstance(x, (bool, np.bool_)):
            return str(bool(x)).lower()
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        x = float(x)
        if math.isnan(x):
            return "nan"
        if self.digits is not None:
            return f"{x:.{self.digits}f}"
        return format(x, ".17g")

    def vec(self, v) -> str:
        return ";".join(self.num(x) for x in np.asarray(v, dtype=float))


def _parse_floats(text: str, sep: str = ",") -> list[float]:
    try:
        return [float(t) for t in text.split(sep) if t.strip()]
    except ValueError:
        raise CliError(f"cannot parse numbers from {text!r}") from None


def parse_targets(specs: list[str], nz: int) -> list[np.ndarray]:
    """``0.2,0.8`` is one pmf; ``t0:t1:steps`` sweeps ``(t, 1 - t)`` for binary Z."""
    out = []
    for spec in specs:
        if ":" in spec:
            parts = spec.split(":")
            if len(parts) != 3:
                raise CliError(f"sweep spec must be t0:t1:steps, got {spec!r}")
            if nz != 2:
                raise CliError(f"sweep specs need a binary Z alphabet, this channel has |Z| = {nz}")
            t0, t1 = _parse_floats(parts[0])[0], _parse_floats(parts[1])[0]
            try:
                steps = int(parts[2])
            except ValueError:
                raise CliError(f"sweep step count must be an integer, got {parts[2]!r}") from None
            if steps < 1:
                raise CliError("sweep step count must be positive")
            for t in np.linspace(t0, t1, steps):
                out.append(as_pmf([t, 1.0 - t], size=2))
        else:
            out.append(as_pmf(_parse_floats(spec), size=nz))
    return out


def _write(args, rows: list[list[str]], extra: list[list[list[str]]] = ()):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    for table in extra:
        buf.write("\n")
        w.writerows(table)
    text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _single(ch, what: str) -> SingleUserChannel:
    if not isinstance(ch, SingleUserChannel):
        raise CliError(f"{what} needs a single-user channel")
    return ch


def cmd_capacity(args) -> int:
    ch = _single(resolve_channel(args.channel), "capacity")
    fmt = _Fmt(args.round)
    targets = parse_targets(args.target, ch.p_z_given_x.shape[1]) if args.target else [None]
    rows = [CAPACITY_HEADER]
    any_feasible = False
    for g in targets:
        if g is None:
            res = unconstrained_capacity(ch.p_y_given_x, args.tol, args.max_iter)
        else:
            res = constrained_capacity(ch, g, args.tol, args.max_iter)
        g_col = "" if g is None else fmt.vec(g)
        if not res.feasible:
            rows.append([g_col, "false", "nan", "nan", "false", ""])
            continue
        any_feasible = True
        # self-certification of the exported row
        if abs(mutual_information(res.optimizer, ch.p_y_given_x) - res.rate) > 1e-12:
            raise CliError("rate does not re-validate against its optimizer")
        if g is not None and total_variation(push_forward(res.optimizer, ch.p_z_given_x), g) > 1e-8:
            raise CliError("optimizer violates the interference constraint")
        rows.append([g_col, "true", fmt.num(res.rate), fmt.num(res.duality_gap),
                     fmt.num(res.converged), fmt.vec(res.optimizer)])
    _write(args, rows)
    return EXIT_OK if any_feasible else EXIT_INFEASIBLE


def _parse_weights(text: str | None):
    if not text:
        return ((1, 0, 0), (0, 1, 0), (1, 1, 0))
    out = []
    for part in text.split(";"):
        w = _parse_floats(part)
        if len(w) != 3:
            raise CliError(f"each weight needs three entries w1,w2,wc, got {part!r}")
        out.append(tuple(w))
    return tuple(out)


def cmd_region(args) -> int:
    ch = resolve_channel(args.channel)
    if not isinstance(ch, TwoUserChannel):
        raise CliError("region needs a two-user channel")
    fmt = _Fmt(args.round)
    nz = ch.sizes[2]
    targets = parse_targets(args.target, nz) if args.target else [None]
    if len(targets) != 1:
        raise CliError("region takes a single target Q_Z")
    target = targets[0]
    fr = frontier_search(ch, target, weights=_parse_weights(args.weights), u_size=args.u_size,
                         restarts=args.restarts, seed=args.seed)
    rows = [REGION_HEADER]
    by_weight = dict(zip([w for w in fr.weights if w not in fr.failed_weights], fr.points))
    for w in fr.weights:
        pt = by_weight.get(w)
        if pt is None:
            rows.append([fmt.num(v) for v in w] + ["nan", "nan", "nan", "nan", ""])
            continue
        check = rate_tuple(ch, pt.dist)
        if check.rates != pt.rates:
            raise CliError("region point does not re-validate against its distribution")
        tv = 0.0 if target is None else total_variation(pt.q_z, target)
        if tv > FEASIBILITY_TV:
            raise CliError("region point violates the interference constraint")
        rows.append([fmt.num(v) for v in w] + [fmt.num(v) for v in pt.rates]
                    + [fmt.num(tv), fmt.vec(pt.q_z)])
    facets = [FACET_HEADER]
    if fr.hull is not None:
        facets += [[fmt.num(v) for v in f] for f in fr.hull.facets]
    _write(args, rows, [facets])
    return EXIT_OK if fr.feasible else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    ch = _single(resolve_channel(args.channel), "simulate")
    fmt = _Fmt(args.round)
    if args.rate is None:
        raise CliError("simulate needs --rate")
    if args.p_x:
        p_x = as_pmf(_parse_floats(args.p_x), size=ch.n_inputs)
    else:
        targets = parse_targets(args.target, ch.p_z_given_x.shape[1]) if args.target else [None]
        if len(targets) != 1:
            raise CliError("simulate takes a single target G_Z")
        g = targets[0]
        res = (unconstrained_capacity(ch.p_y_given_x, args.tol, args.max_iter) if g is None
               else constrained_capacity(ch, g, args.tol, args.max_iter))
        if not res.feasible:
            sys.stderr.write("target interference type is infeasible\n")
            _write(args, [SIMULATE_HEADER])
            return EXIT_INFEASIBLE
        p_x = res.optimizer
    rows = [SIMULATE_HEADER]
    for n in _parse_n_list(args.n_list):
        rep = simulate_single_user(ch, p_x, n, args.rate, args.trials, decoder=args.decoder,
                                   seed=args.seed, codebook=args.codebook)
        rows.append([fmt.num(rep.n), fmt.num(rep.trials), fmt.num(rep.error_rate),
                     fmt.num(rep.mean_tv), fmt.num(rep.tv_std_err),
                     fmt.num(rep.tv_exceed_frac[0.05]), fmt.num(rep.tv_exceed_frac[0.1]),
                     fmt.num(rep.seed)])
    _write(args, rows)
    return EXIT_OK


def _parse_n_list(text: str) -> list[int]:
    try:
        ns = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"--n-list must be comma-separated integers, got {text!r}") from None
    if not ns or min(ns) < 1:
        raise CliError("--n-list needs positive blocklengths")
    return ns


def cmd_example1(args) -> int:
    fmt = _Fmt(args.round)
    names = ("r1", "r2_uncoordinated", "r2_coordinated", "rc")
    rounded = ("4", "2", "2.4", "0.81")  # forms quoted for the example
    rows = [EXAMPLE1_HEADER]
    for name, v, c, r in zip(names, example1_rates(), example1_closed_form(), rounded):
        rows.append([name, fmt.num(v), fmt.num(c), r])
    _write(args, rows)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the CSV table here instead of stdout")
    common.add_argument("--round", type=int, metavar="DIGITS",
                        help="print numbers with this many decimals (default: 17 significant digits)")
    common.add_argument("--seed", type=int, default=0)

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--channel", required=True, help="JSON file or preset "
                        "(example1, bsc:<p>, identity:<k>)")
    solver.add_argument("--target", action="append",
                        help="interference type as comma-separated pmf, or t0:t1:steps (binary Z); repeatable")
    solver.add_argument("--tol", type=float, default=1e-7)
    solver.add_argument("--max-iter", type=int, default=10_000)

    p = argparse.ArgumentParser(prog="ictk", description="Communication/interference trade-off toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("capacity", parents=[common, solver],
                       help="single-user capacity under interference-type targets")
    c.set_defaults(func=cmd_capacity)

    r = sub.add_parser("region", parents=[common, solver], help="two-user coordination frontier")
    r.add_argument("--u-size", type=int, default=None)
    r.add_argument("--weights", help="semicolon-separated w1,w2,wc triples")
    r.add_argument("--restarts", type=int, default=64)
    r.set_defaults(func=cmd_region)

    s = sub.add_parser("simulate", parents=[common, solver], help="random-coding Monte Carlo")
    s.add_argument("--rate", type=float, help="code rate in bits per channel use")
    s.add_argument("--p-x", help="input pmf (default: capacity-achieving for the target)")
    s.add_argument("--n-list", default="25,100,400")
    s.add_argument("--trials", type=int, default=500)
    s.add_argument("--decoder", choices=["ml", "typicality"], default="ml")
    s.add_argument("--codebook", choices=["explicit", "ensemble"], default="explicit")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("example1", parents=[common], help="the 16-point constellation example")
    e.set_defaults(func=cmd_example1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    for name in ("tol", "max_iter", "trials", "restarts", "u_size"):
        v = getattr(args, name, None)
        if v is not None and not v > 0:
            sys.stderr.write(f"error: --{name.replace('_', '-')} must be positive\n")
            return EXIT_ERROR
    try:
        return args.func(args)
    except EnumerationLimitError as exc:
        sys.stderr.write(f"error: {exc}; the limit of {MAX_ENUM_INPUTS} inputs is a choice "
                         "of this tool, not of the problem\n")
    except (CliError, ValueError, MemoryError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
