"""Command-line interface.

Subcommands:

* ``list`` - show the built-in instances, their strategies, families and
  batteries;
* ``occupation`` - compute an occupation measure and its certified tail;
* ``absorption`` - tail-sum table and uniformity verdict over a family;
* ``convergence`` - battery-relative convergence of a family's occupation
  measures against a named limit strategy;
* ``reproduce`` - run frozen claim tables and report pass/fail per claim.

Exit codes: 0 on success (including honest "diverges" verdicts), 1 when an
analysis ran and failed (failed claims, solver refusals, model diagnostics),
2 on bad input (unknown names, unparsable values, missing files).
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from datetime import datetime, timezone
from fractions import Fraction

from .numbers import Number, format_number, parse_number
from .measure import MeasureError
from .mdp import ModelError, validate_model
from .occupation import (
    SolverError,
    Truncation,
    expected_hitting_time,
    occupation_countable,
    occupation_unroll,
)
from .absorption import uniformity_report
from .topology import BatteryError, check_convergence
from .serialize import (
    FormatError,
    absorption_report_to_dict,
    convergence_report_to_dict,
    dumps,
    enc_number,
    load_json,
    measure_to_dict,
    model_from_dict,
)
from .reproduce import format_lines, report_to_dict, reproduce
from .zoo import ZOO
from .spaces import StatePoint


class CliInputError(Exception):
    pass


def _fmt_num(n: Number, as_float: bool) -> str:
    if n.is_exact:
        return repr(float(n.value)) if as_float else format_number(n)
    if float(n.err) == 0.0:
        return repr(float(n.value))
    return f"{float(n.value)!r} (err<={float(n.err):.3g})"


def _parse_x0(space, text: str) -> StatePoint:
    if ":" in text:
        label, _, coord = text.partition(":")
        try:
            c = parse_number(coord)
        except ValueError as exc:
            raise CliInputError(f"bad coordinate {coord!r}") from exc
        value = c.value if c.is_exact else Fraction(float(c.value))
        try:
            return space.segment_point(label, value)
        except (KeyError, ValueError) as exc:
            raise CliInputError(str(exc)) from exc
    try:
        return space.point(text)
    except KeyError as exc:
        raise CliInputError(str(exc)) from exc


def _load_entry(args):
    if getattr(args, "zoo", None):
        if args.zoo not in ZOO:
            raise CliInputError(f"unknown instance {args.zoo!r}; have {', '.join(sorted(ZOO))}")
        return ZOO[args.zoo]()
    return None


def _load_model(args):
    """(model, strategies, batteries, families, default_x0, source name)."""
    entry = _load_entry(args)
    if entry is not None:
        strategies = dict(entry.strategies)
        for fam in entry.families.values():
            for name, s in fam.explored():
                strategies.setdefault(name, s)
        return entry.model, strategies, entry.batteries, entry.families, entry.x0, entry.name
    if getattr(args, "model", None):
        try:
            doc = model_from_dict(load_json(args.model))
        except OSError as exc:
            raise CliInputError(f"cannot read {args.model!r}: {exc}") from exc
        return doc.model, doc.strategies, {}, {}, None, args.model
    raise CliInputError("pick an instance with --zoo or a file with --model")


def _resolve_strategy(strategies, families, name: str):
    if name in strategies:
        return strategies[name]
    if ":" in name:
        label, _, idx = name.rpartition(":")
        fam = families.get(label)
        if fam is not None and fam.generator is not None and idx.lstrip("-").isdigit():
            return fam.generator(int(idx))
    raise CliInputError(
        f"unknown strategy {name!r}; have {', '.join(sorted(strategies)) or 'none'}"
    )


def _eps_value(text: str):
    n = parse_number(text)
    return n.value if n.is_exact else Fraction(float(n.value))


def _trunc(args) -> Truncation:
    return Truncation(states=args.trunc_states, stages=args.trunc_stages)


def _stamp(doc: dict, args) -> dict:
    if not args.no_timestamp:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat()
    return doc


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


# -- list ------------------------------------------------------------------


def cmd_list(args) -> int:
    lines = []
    for name in sorted(ZOO):
        entry = ZOO[name]()
        lines.append(f"{name}: {entry.title}")
        lines.append(f"  strategies: {', '.join(sorted(entry.strategies))}")
        fams = []
        for label, fam in sorted(entry.families.items()):
            span = ""
            if fam.index_lo is not None:
                span = f"[{fam.index_lo}..{fam.index_hi}]"
            fams.append(label + span)
        lines.append(f"  families: {', '.join(fams) or 'none'}")
        bats = [f"{n} ({b.mode})" for n, b in sorted(entry.batteries.items())]
        lines.append(f"  batteries: {', '.join(bats)}")
        lines.append(f"  claims: {len(entry.claims)}")
        if entry.notes:
            lines.append(f"  notes: {entry.notes}")
    _emit(args, "\n".join(lines))
    return 0


# -- occupation ------------------------------------------------------------


def _state_label(part) -> str:
    if hasattr(part, "point"):
        p = part.point
        if p.atom is not None:
            return p.atom
        return f"{p.segment}:{p.coord}"
    return f"{part.segment}[{part.breaks[0]}..{part.breaks[-1]}]"


def _action_label(part) -> str:
    if part is None:
        return "-"
    if hasattr(part, "action"):
        return str(part.action)
    if hasattr(part, "parts"):
        return "mixture(" + ", ".join(_action_label(p) for _, p in part.parts) + ")"
    return f"density[{part.breaks[0]}..{part.breaks[-1]}]"


def cmd_occupation(args) -> int:
    model, strategies, _, families, default_x0, source = _load_model(args)
    diags = validate_model(model)
    if diags:
        print("model diagnostics:", file=sys.stderr)
        for d in diags:
            print(f"  {d}", file=sys.stderr)
        return 1
    strategy = _resolve_strategy(strategies, families, args.strategy)
    if args.x0:
        x0 = _parse_x0(model.states, args.x0)
    elif default_x0 is not None:
        x0 = default_x0
    else:
        raise CliInputError("this model has no default initial state; pass --x0")

    solver = args.solver
    if solver == "unroll" or (solver == "auto" and args.horizon is not None):
        if args.horizon is None:
            raise CliInputError("the unroll solver needs --horizon")
        occ = occupation_unroll(model, strategy, x0, args.horizon)
    elif solver == "countable":
        occ = occupation_countable(model, strategy, x0, _trunc(args))
    else:  # auto without a horizon
        try:
            occ = occupation_countable(model, strategy, x0, _trunc(args))
        except SolverError as exc:
            raise CliInputError(
                f"the countable solver refused this instance ({exc}); rerun "
                "with --solver unroll --horizon N or a larger --trunc-states"
            )

    total = occ.measure.total_mass()
    mean = expected_hitting_time(occ)
    doc = {
        "source": source,
        "strategy": args.strategy,
        "x0": _state_label_from_point(x0),
        "method": occ.method,
        "total_mass": enc_number(total),
        "tail_bound": enc_number(occ.tail_bound),
        "expected_hitting_time": enc_number(mean),
        "measure": measure_to_dict(occ.measure),
    }
    if args.format == "json":
        _emit(args, dumps(_stamp(doc, args)))
        return 0
    rows = [["state", "action", "weight", "mass"]]
    for c in occ.measure.components:
        rows.append(
            [
                _state_label(c.state),
                _action_label(c.action),
                _fmt_num(c.weight, args.float),
                _fmt_num(c.mass(), args.float),
            ]
        )
    if args.format == "csv":
        body = _csv_text(rows)
        tail = _csv_text(
            [
                ["total_mass", _fmt_num(total, args.float)],
                ["tail_bound", _fmt_num(occ.tail_bound, args.float)],
                ["expected_hitting_time", _fmt_num(mean, args.float)],
            ]
        )
        _emit(args, body + tail)
        return 0
    lines = [
        f"# occupation measure ({source}, strategy {args.strategy})",
        "",
        _md_table(rows),
        "",
        f"total mass: {_fmt_num(total, args.float)}",
        f"certified tail bound: {_fmt_num(occ.tail_bound, args.float)}",
        f"expected hitting time: {_fmt_num(mean, args.float)}",
        f"solver: {occ.method}",
    ]
    _emit(args, "\n".join(lines))
    return 0


def _state_label_from_point(p: StatePoint) -> str:
    if p.atom is not None:
        return p.atom
    return f"{p.segment}:{p.coord}"


def _md_table(rows) -> str:
    head, *body = rows
    out = ["| " + " | ".join(str(c) for c in head) + " |"]
    out.append("|" + "|".join(" --- " for _ in head) + "|")
    for row in body:
        out.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(out)


# -- absorption ------------------------------------------------------------


def cmd_absorption(args) -> int:
    model, strategies, _, families, default_x0, source = _load_model(args)
    if args.family not in families:
        raise CliInputError(
            f"unknown family {args.family!r}; have {', '.join(sorted(families)) or 'none'}"
        )
    family = families[args.family]
    x0 = _parse_x0(model.states, args.x0) if args.x0 else default_x0
    if x0 is None:
        raise CliInputError("this model has no default initial state; pass --x0")
    rep = uniformity_report(
        model,
        family,
        x0,
        n_max=args.n_max,
        eps=_eps_value(args.eps),
        trunc=_trunc(args),
    )
    doc = absorption_report_to_dict(rep)
    doc["source"] = source
    if args.format == "json":
        _emit(args, dumps(_stamp(doc, args)))
        return 0
    rows = [["strategy", "mean time"] + [f"n={n}" for n in range(rep.n_max + 1)]]
    for name, total, tails in zip(rep.strategy_names, rep.expected_times, rep.rows):
        rows.append(
            [name, _fmt_num(total, args.float)] + [_fmt_num(t, args.float) for t in tails]
        )
    rows.append(["sup", ""] + [_fmt_num(t, args.float) for t in rep.sup_row])
    if args.format == "csv":
        _emit(args, _csv_text(rows) + _csv_text([["verdict", rep.verdict]]))
        return 0
    lines = [
        f"# absorption tails ({source}, family {args.family})",
        "",
        _md_table(rows),
        "",
        f"verdict: {rep.verdict}",
        f"note: {rep.note}",
    ]
    if rep.witness is not None:
        name, n, v = rep.witness
        lines.append(f"witness: tail {_fmt_num(v, args.float)} at stage {n} under {name}")
    _emit(args, "\n".join(lines))
    return 0


# -- convergence -----------------------------------------------------------


def cmd_convergence(args) -> int:
    model, strategies, batteries, families, default_x0, source = _load_model(args)
    if not batteries:
        raise CliInputError("convergence checks need a built-in instance (--zoo)")
    if args.battery not in batteries:
        raise CliInputError(
            f"unknown battery {args.battery!r}; have {', '.join(sorted(batteries))}"
        )
    battery = batteries[args.battery]
    if args.family not in families:
        raise CliInputError(
            f"unknown family {args.family!r}; have {', '.join(sorted(families)) or 'none'}"
        )
    family = families[args.family]
    limit_strategy = _resolve_strategy(strategies, families, args.limit)
    x0 = _parse_x0(model.states, args.x0) if args.x0 else default_x0

    def occupy(strategy):
        if args.horizon is not None:
            return occupation_unroll(model, strategy, x0, args.horizon).measure
        try:
            return occupation_countable(model, strategy, x0, _trunc(args)).measure
        except SolverError:
            raise CliInputError(
                "the countable solver refused this instance; rerun with --horizon N"
            )

    seq = [occupy(s) for _, s in family.explored()]
    rep = check_convergence(seq, occupy(limit_strategy), battery, tol=args.tol)
    doc = convergence_report_to_dict(rep)
    doc["source"] = source
    doc["family"] = args.family
    doc["limit"] = args.limit
    if args.format == "json":
        _emit(args, dumps(_stamp(doc, args)))
        return 0
    rows = [["function", "limit value", "final gap", "converged", "persistent"]]
    for t in rep.traces:
        rows.append(
            [
                t.name,
                _fmt_num(t.limit_value, args.float),
                _fmt_num(t.gaps[-1], args.float),
                str(t.converged),
                str(t.persistent),
            ]
        )
    if args.format == "csv":
        _emit(args, _csv_text(rows) + _csv_text([["verdict", rep.verdict]]))
        return 0
    lines = [
        f"# convergence ({source}, family {args.family} -> {args.limit}, "
        f"battery {args.battery}, mode {rep.mode})",
        "",
        _md_table(rows),
        "",
        f"verdict: {rep.verdict}" + (f" (witness: {rep.witness})" if rep.witness else ""),
    ]
    if rep.note:
        lines.append(f"note: {rep.note}")
    lines.append(f"caveat: {rep.caveat}")
    _emit(args, "\n".join(lines))
    return 0


# -- reproduce -------------------------------------------------------------


def cmd_reproduce(args) -> int:
    try:
        rep = reproduce(args.target)
    except KeyError as exc:
        raise CliInputError(str(exc))
    if args.format == "json":
        doc = report_to_dict(rep)
        _emit(args, dumps(_stamp(doc, args)))
    elif args.format == "csv":
        rows = [["id", "acceptance", "passed", "expected", "computed"]]
        for r in rep.rows:
            rows.append([r.id, r.acceptance or "", str(r.passed), r.expected, r.computed])
        _emit(args, _csv_text(rows))
    else:
        _emit(args, format_lines(rep))
    return 0 if rep.passed else 1


# -- entry point -----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, model_source=True):
    if model_source:
        p.add_argument("--zoo", help="built-in instance name")
        p.add_argument("--model", help="model JSON file")
        p.add_argument("--x0", help="initial state: an atom name, or segment:coord")
        p.add_argument("--trunc-states", type=int, default=Truncation().states)
        p.add_argument("--trunc-stages", type=int, default=Truncation().stages)
    p.add_argument("--format", choices=("json", "csv", "md"), default="md")
    p.add_argument("--float", action="store_true", help="render numbers as floats")
    p.add_argument("--no-timestamp", action="store_true", help="omit the generated-at stamp")
    p.add_argument("-o", "--out", help="write the report to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amdp",
        description="occupation measures and absorption diagnostics for absorbing "
        "Markov decision processes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list built-in instances")
    p.add_argument("--format", choices=("json", "csv", "md"), default="md")
    p.add_argument("--float", action="store_true")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("occupation", help="compute an occupation measure")
    _add_common(p)
    p.add_argument("--strategy", required=True)
    p.add_argument("--solver", choices=("auto", "countable", "unroll"), default="auto")
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_occupation)

    p = sub.add_parser("absorption", help="tail-sum table over a strategy family")
    _add_common(p)
    p.add_argument("--family", required=True)
    p.add_argument("--n-max", type=int, default=20)
    p.add_argument("--eps", default="1/1000000")
    p.set_defaults(func=cmd_absorption)

    p = sub.add_parser("convergence", help="battery-relative convergence check")
    _add_common(p)
    p.add_argument("--family", required=True)
    p.add_argument("--limit", required=True, help="strategy whose occupation is the limit")
    p.add_argument("--battery", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("reproduce", help="run the frozen claim tables")
    p.add_argument("--target", default="all")
    p.add_argument("--format", choices=("json", "csv", "md"), default="md")
    p.add_argument("--float", action="store_true")
    p.add_argument("--no-timestamp", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, ModelError, MeasureError, BatteryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
