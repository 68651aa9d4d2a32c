"""Command-line interface (``recondiv``).

Exit codes: 0 success (including negative verdicts such as "not EF-able"),
2 usage error, 3 unreadable or invalid instance, 4 precondition or domain
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from recondiv import fileio
from recondiv.envy import (
    ef_payments,
    envy_report,
    exhaustive_min_macc_assignment,
    is_ef_able,
    min_max_envy_payments,
)
from recondiv.errors import InstanceFormatError, RecondivError
from recondiv.experiment import ExperimentConfig, compare_payment_rules, run_experiment
from recondiv.generate import generate_instance
from recondiv.model import DEFAULT_THRESHOLD, Allocation, parse_assignment, to_exact
from recondiv.proportionality import (
    decide_prop_able,
    disproportionality_report,
    min_disprop_payments,
    minimum_disproportionality_mechanism,
    utilitarian_assignment,
)
from recondiv.strategy import (
    Misreport,
    Scenario,
    build_rat_adversarial_scenario,
    classify_manipulation,
    random_direct_scenarios,
    random_scenarios,
)

EXIT_USAGE, EXIT_FORMAT, EXIT_PRECONDITION = 2, 3, 4


def _fmt(x) -> str:
    """Money at presentation precision; exact values keep their fraction."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    return f"{x:.2f}"


def _json_num(x):
    return str(x) if isinstance(x, Fraction) else x


def _load(args):
    inst = fileio.load(args.file, strict=not args.lenient)
    if args.exact:
        inst = to_exact(inst)
    return inst


def _assignment(inst, text):
    return utilitarian_assignment(inst) if text is None else parse_assignment(inst, text)


def _names(inst, assignment):
    return ", ".join(f"{inst.agents[i]}->{inst.new_apartments[a]}" for i, a in enumerate(assignment))


def _cycle(inst, cert):
    return "(" + ",".join(inst.agents[k] for k in cert.nodes) + ")"


def _emit(args, payload: dict, lines: list[str]):
    if args.json:
        print(json.dumps(payload, indent=2, default=_json_num))
    else:
        print("\n".join(lines))


def cmd_check_ef(args):
    inst = _load(args)
    assignment = _assignment(inst, args.assignment)
    check = is_ef_able(inst, assignment, args.tol)
    payload = {"assignment": [inst.new_apartments[a] for a in assignment], "ef_able": bool(check)}
    lines = [f"assignment: {_names(inst, assignment)}"]
    if check:
        p = ef_payments(inst, assignment, args.tol)
        payload["payments"] = list(p)
        lines += ["EF-able", "payments: " + " ".join(_fmt(x) for x in p)]
    else:
        payload["witness_cycle"] = [inst.agents[k] for k in check.cycle.nodes]
        payload["cycle_mean"] = check.cycle.mean_cost
        lines += ["not EF-able", f"witness cycle: {_cycle(inst, check.cycle)} mean cost {_fmt(check.cycle.mean_cost)}"]
    _emit(args, payload, lines)
    return 0


def cmd_solve_minenvy(args):
    inst = _load(args)
    if args.exhaustive:
        res = exhaustive_min_macc_assignment(inst, args.max_n)
    else:
        res = min_max_envy_payments(inst, _assignment(inst, args.assignment))
    report = envy_report(inst, res.allocation)
    payload = {
        "assignment": [inst.new_apartments[a] for a in res.assignment],
        "payments": list(res.payments),
        "value": res.value,
        "envy": list(report.envy),
        "cycle": [inst.agents[k] for k in res.cycle.nodes] if res.cycle else None,
    }
    lines = [f"assignment: {_names(inst, res.assignment)}",
             "payments: " + " ".join(_fmt(x) for x in res.payments),
             f"min max envy: {_fmt(res.value)}"]
    if res.cycle:
        lines.append(f"certificate cycle: {_cycle(inst, res.cycle)}")
    _emit(args, payload, lines)
    return 0


def cmd_solve_mindisprop(args):
    inst = _load(args)
    if args.assignment is None:
        outcome = minimum_disproportionality_mechanism(inst)
        alloc, report = outcome.allocation, outcome.report
    else:
        assignment = parse_assignment(inst, args.assignment)
        alloc = Allocation(assignment, min_disprop_payments(inst, assignment))
        report = disproportionality_report(inst, alloc)
    payload = {
        "assignment": [inst.new_apartments[a] for a in alloc.assignment],
        "payments": list(alloc.payments),
        "dp": list(report.dp),
        "dp_sum": report.dp_sum,
        "max_dp": report.max_dp,
    }
    lines = [f"assignment: {_names(inst, alloc.assignment)}",
             "payments: " + " ".join(_fmt(x) for x in alloc.payments),
             f"max disproportionality: {_fmt(report.max_dp)}"]
    _emit(args, payload, lines)
    return 0


def cmd_decide_prop(args):
    inst = _load(args)
    decision = decide_prop_able(inst, args.tol)
    alloc = decision.outcome.allocation
    payload = {"prop_able": bool(decision), "min_max_dp": decision.min_max_dp,
               "assignment": [inst.new_apartments[a] for a in alloc.assignment],
               "payments": list(alloc.payments)}
    if decision:
        lines = ["PROP-able", f"assignment: {_names(inst, alloc.assignment)}",
                 "payments: " + " ".join(_fmt(x) for x in alloc.payments)]
    else:
        lines = ["not PROP-able",
                 f"smallest achievable max disproportionality: {_fmt(decision.min_max_dp)} > 0"]
    _emit(args, payload, lines)
    return 0


def _parse_misreport(inst, agent, text):
    changes = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"misreport entry {item!r} is not key=value")
        key = key.strip()
        changes[int(key) if key.isdigit() else key] = Fraction(value) if inst.exact else float(value)
    return Misreport(agent, changes)


def _scenarios(inst, agent, misreport, text, seed):
    out = []
    for item in text.split(","):
        item = item.strip()
        if item == "given":
            out.append(Scenario())
        elif item == "rat":
            out.append(build_rat_adversarial_scenario(inst, agent, misreport))
        elif item.startswith("random:"):
            count = int(item.split(":", 1)[1])
            if inst.model == "direct":
                out += random_direct_scenarios(inst, agent, count, seed)
            else:
                out += random_scenarios(inst, agent, count, seed)
        else:
            raise argparse.ArgumentTypeError(f"unknown scenario kind {item!r}")
    return out


def cmd_analyze_manipulation(args):
    inst = _load(args)
    agent = inst.agents.index(args.agent) if args.agent in inst.agents else int(args.agent)
    misreport = _parse_misreport(inst, agent, args.misreport)
    scenarios = _scenarios(inst, agent, misreport, args.scenarios, args.seed)
    verdict = classify_manipulation(inst, agent, misreport, scenarios, scenario_set=args.scenarios)
    payload = {
        "classification": verdict.classification,
        "scenario_set": verdict.scenario_set,
        "gains": dict(zip(verdict.labels, verdict.gains)),
        "profit_witnesses": [verdict.labels[k] for k in verdict.profit_witnesses],
        "loss_witnesses": [verdict.labels[k] for k in verdict.loss_witnesses],
    }
    lines = [f"{verdict.classification} (relative to scenario set: {verdict.scenario_set})"]
    lines += [f"  {label}: gain {_fmt(g)}{'  [assignment changed]' if ch else ''}"
              for label, g, ch in zip(verdict.labels, verdict.gains, verdict.assignment_changed)]
    _emit(args, payload, lines)
    return 0


def cmd_generate(args):
    inst = generate_instance(args.agents, args.seed, args.model, endowment=args.endowment,
                             normalize=None if args.normalize <= 0 else args.normalize,
                             significance=args.significance)
    text = fileio.dumps(inst)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_COLUMNS = ("mechanism", "max_dp", "max_envy", "max_dp_over_V", "max_envy_over_V")


def _table(rows, average_value, note=None):
    out = [f"average new-apartment value V = {_fmt(average_value)}"]
    if note:
        out.append(note)
    out.append(f"{'payments':<14}{'max DP':>16}{'max envy':>16}{'max DP / V':>12}{'max envy / V':>14}")
    for r in rows:
        out.append(f"{r['mechanism']:<14}{_fmt(r['max_dp']):>16}{_fmt(r['max_envy']):>16}"
                   f"{r['max_dp_over_V']:>12.4f}{r['max_envy_over_V']:>14.4f}")
    return "\n".join(out)


def _csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _json_num(r[k]) for k in _COLUMNS})
    return buf.getvalue().rstrip("\n")


def cmd_report(args):
    inst = _load(args)
    pair = compare_payment_rules(inst, None if args.assignment is None else parse_assignment(inst, args.assignment))
    rows = [pair.min_envy.to_dict(), pair.min_disprop.to_dict()]
    if args.format == "json":
        print(json.dumps({"assignment": [inst.new_apartments[a] for a in pair.min_envy.assignment],
                          "reports": rows}, indent=2, default=_json_num))
    elif args.format == "csv":
        print(_csv(rows))
    else:
        print(f"assignment: {_names(inst, pair.min_envy.assignment)}")
        print(_table(rows, pair.min_envy.average_value))
    return 0


def cmd_experiment(args):
    config = ExperimentConfig(agents=args.agents, repetitions=args.repetitions, seed=args.seed,
                              model=args.model, endowment=args.endowment,
                              normalize=None if args.normalize <= 0 else args.normalize,
                              significance=args.significance)
    summary = run_experiment(config)
    means = summary.means()
    rows = [dict(mechanism=name, **cols) for name, cols in means.items()]
    if args.format == "json":
        print(json.dumps(summary.to_dict(), indent=2, default=_json_num))
    elif args.format == "csv":
        print(_csv(rows))
    else:
        note = (f"synthetic population, {config.repetitions} runs of {config.agents} agents "
                f"(magnitudes are not comparable to survey data)")
        print(_table(rows, summary.average_value(), note))
        print(f"runs with max DP <= 0 and max envy > 0: {summary.prop_without_ef_count()}/{config.repetitions}")
        print(f"dominance violations: {summary.dominance_violations()}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recondiv", description="Fair reassignment of new apartments with payments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def instance_cmd(name, help_text, func, json_flag=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="instance file (JSON)")
        p.add_argument("--exact", action="store_true", help="rational arithmetic (direct/additive only)")
        p.add_argument("--lenient", action="store_true", help="warn about unknown fields instead of failing")
        if json_flag:
            p.add_argument("--json", action="store_true", help="machine-readable output")
        p.set_defaults(func=func)
        return p

    p = instance_cmd("check-ef", "decide whether an assignment can be made envy-free", cmd_check_ef)
    p.add_argument("assignment", nargs="?", help="new apartments in agent order, e.g. a2,a1 (default: utilitarian)")
    p.add_argument("--tol", type=float, default=None)

    p = instance_cmd("solve-minenvy", "payments minimizing the maximum envy", cmd_solve_minenvy)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--assignment", help="new apartments in agent order (default: utilitarian)")
    group.add_argument("--exhaustive", action="store_true", help="also search all assignments (small n)")
    p.add_argument("--max-n", type=int, default=8)

    p = instance_cmd("solve-mindisprop", "minimum-disproportionality mechanism", cmd_solve_mindisprop)
    p.add_argument("--assignment", help="evaluate the payment rule on this assignment instead")

    p = instance_cmd("decide-prop", "decide whether a proportional allocation exists", cmd_decide_prop)
    p.add_argument("--tol", type=float, default=None)

    p = instance_cmd("analyze-manipulation", "classify a misreport over a scenario set", cmd_analyze_manipulation)
    p.add_argument("--agent", required=True, help="agent name or index")
    p.add_argument("--misreport", required=True,
                   help="comma list key=change (offsets; factors for multiplicative)")
    p.add_argument("--scenarios", default="given,rat", help="comma list of: given, rat, random:N")
    p.add_argument("--seed", type=int, default=0)

    p = instance_cmd("report", "envy and disproportionality under both payment rules", cmd_report, json_flag=False)
    p.add_argument("--assignment")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")

    def population_args(p):
        p.add_argument("--agents", type=int, required=True)
        p.add_argument("--seed", type=int, required=True)
        p.add_argument("--model", choices=("additive", "multiplicative"), default="multiplicative")
        p.add_argument("--endowment", action="store_true", help="apply endowment-effect adjustment")
        p.add_argument("--normalize", type=float, default=DEFAULT_THRESHOLD,
                       help="normalization threshold W (<= 0 disables)")
        p.add_argument("--significance", type=float, default=None,
                       help="ignore endowment coefficients with p-value at or above this cutoff")

    p = sub.add_parser("generate", help="write a seeded synthetic instance")
    population_args(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="compare both payment rules on synthetic populations")
    population_args(p)
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InstanceFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RecondivError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        witness = getattr(exc, "witness", None)
        if witness is not None:
            print(f"witness: {witness}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
