"""Command-line front end: ``cardmpc run|verify|audit|costs``.

Exit codes: 0 success or audit pass, 1 audit fail (or verification
mismatch), 2 usage error, 3 budget exceeded.
"""
from __future__ import annotations

import argparse
import json
import secrets
import sys
from typing import Sequence

from .audit import (
    BudgetExceededError,
    check_security,
    check_security_sampled,
    default_budget,
    output_sort_key,
    verify_correctness,
)
from .cards import CardError, CardMatrix, InputVector
from .protocols import COST_PROTOCOLS, PROTOCOLS, cost_model, format_output, get_protocol
from .shuffles import SEED_BITS, RandomnessTape, SeededSource, ShuffleError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _parse_inputs(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--inputs must be comma-separated integers, got {text!r}") from None


def _check_kn(args) -> None:
    if args.k < 2:
        raise UsageError(f"--k must be at least 2, got {args.k}")
    if args.n < 1:
        raise UsageError(f"--n must be at least 1, got {args.n}")


def _budget(args) -> int:
    return args.budget if args.budget is not None else default_budget()


class _TraceRecorder:
    """Collects face-up-only matrix views; hidden cards render as ``?``."""

    def __init__(self) -> None:
        self.frames: list[tuple[str, list[str]]] = []

    def __call__(self, label: str, m: CardMatrix, origins) -> None:
        self.frames.append((label, m.render()))


STEP_TITLES = {
    "step1": "build matrix",
    "step2a": "shuffle",
    "step2b": "turn over row",
    "step2c": "overwrite row 1",
    "step2d": "turn face-up cards down",
    "step3": "shuffle",
    "step4": "turn over final row",
    "step4:realign": "rotate marker Club back to column 1",
    "step5": "turn over row 1",
}


def cmd_run(args) -> int:
    _check_kn(args)
    if args.inputs is None:
        raise UsageError("run needs --inputs")
    values = _parse_inputs(args.inputs)
    if len(values) != args.n:
        raise UsageError(f"--inputs has {len(values)} values but --n is {args.n}")
    inputs = InputVector(tuple(values), args.k)
    spec = get_protocol(args.protocol)
    if args.tape is not None:
        if args.seed is not None:
            raise UsageError("--seed and --tape are mutually exclusive")
        with open(args.tape, encoding="utf-8") as fh:
            source = RandomnessTape.loads(fh.read())
        seed = None
    else:
        seed = args.seed if args.seed is not None else secrets.randbits(SEED_BITS)
        source = SeededSource(seed)
    trace = _TraceRecorder()
    run = spec.run(inputs, source, trace)
    if isinstance(source, RandomnessTape) and source.remaining:
        raise UsageError(f"tape has {source.remaining} unused decision(s); a run needs exactly {run.shuffles_used}")

    if args.format == "json":
        record = run.to_json()
        if seed is not None:
            record["seed"] = seed
        print(_dump(record))
        return EXIT_OK

    print(f"protocol: {spec.name}  k={inputs.k}  n={inputs.n}")
    print(f"seed: {seed}" if seed is not None else f"tape: {args.tape}")
    for label, rows in trace.frames:
        base = label.split(":i=")[0]
        suffix = f" (i={label.split(':i=')[1]})" if ":i=" in label else ""
        print(f"\n[{label}] {STEP_TITLES.get(base, base)}{suffix}")
        for x, line in enumerate(rows, start=1):
            print(f"  {x:>2} | {line}")
    print("\ntranscript:")
    for event in run.transcript:
        print(f"  {event.step:<12} row {event.row}: {event.pattern_str}")
    print(f"shuffles used: {run.shuffles_used}")
    print(f"output: {format_output(run.output)}")
    return EXIT_OK


def _forbid_inputs(args) -> None:
    if getattr(args, "inputs", None) is not None:
        raise UsageError(f"{args.command} sweeps every input; --inputs is not allowed")


def cmd_verify(args) -> int:
    _check_kn(args)
    _forbid_inputs(args)
    report = verify_correctness(args.protocol, args.k, args.n, budget=_budget(args))
    if args.format == "json":
        print(_dump(report.to_json()))
    else:
        print(f"{report.protocol} k={report.k} n={report.n}: {report.runs} runs, {report.mismatches} mismatches")
        if report.first_mismatch:
            print(f"first mismatch: {_dump(report.first_mismatch)}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_audit(args) -> int:
    _check_kn(args)
    _forbid_inputs(args)
    if args.sampled:
        seed = args.seed if args.seed is not None else 0
        report = check_security_sampled(
            args.protocol, args.k, args.n, samples=args.samples, seed=seed, threshold=args.threshold
        )
    else:
        report = check_security(args.protocol, args.k, args.n, budget=_budget(args))
    if args.format == "json":
        print(_dump(report.to_json()))
    else:
        kind = "exhaustive" if report.mode == "exact" else "statistical"
        print(f"{report.protocol} k={report.k} n={report.n}: {kind} audit over {report.runs} runs")
        for key in sorted(report.classes, key=output_sort_key):
            dist = report.classes[key]
            print(f"  output {format_output(key)}: {len(dist.counts)} distinct transcripts")
            final_step = next(iter(dist.counts)).split("|")[-1].partition("@")[0]
            law = ", ".join(f"{p} {f}" for p, f in dist.event_law(final_step).items())
            print(f"    final reveal: {law}")
        if report.statistic is not None:
            print(f"  statistic {report.statistic} (threshold {report.threshold})")
        print(f"verdict: {report.verdict}{'' if report.mode == 'exact' else ' (statistical)'}")
        if report.counterexample:
            print(f"counterexample: {_dump(report.counterexample)}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_costs(args) -> int:
    _check_kn(args)
    rows = [(name, *cost_model(name, args.k, args.n)) for name in COST_PROTOCOLS]
    if args.format == "json":
        print(_dump({"k": args.k, "n": args.n,
                     "costs": [{"protocol": p, "cards": c, "shuffles": s} for p, c, s in rows]}))
        return EXIT_OK
    print(f"k={args.k} n={args.n}")
    print(f"{'protocol':<16}{'cards':>7}{'shuffles':>10}")
    for p, c, s in rows:
        print(f"{p:<16}{c:>7}{s:>10}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cardmpc", description="Card-based secure computation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, protocol=True):
        if protocol:
            p.add_argument("--protocol", required=True, choices=sorted(PROTOCOLS))
        p.add_argument("--k", type=int, required=True, help="number of possible values per player")
        p.add_argument("--n", type=int, required=True, help="number of players")
        p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("run", help="execute one run and print its step trace")
    common(p)
    p.add_argument("--inputs", help="comma-separated values a_1..a_n")
    p.add_argument("--seed", type=int)
    p.add_argument("--tape", help="replay a JSON tape file")
    p.set_defaults(func=cmd_run)

    for name, func, text in (
        ("verify", cmd_verify, "check every input against every tape"),
        ("audit", cmd_audit, "check transcript indistinguishability"),
    ):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--inputs", help=argparse.SUPPRESS)
        p.add_argument("--budget", type=int, help="maximum protocol runs (default: $CARDMPC_BUDGET or 10^7)")
        p.set_defaults(func=func)
        if name == "audit":
            p.add_argument("--sampled", action="store_true")
            p.add_argument("--samples", type=int, default=100_000)
            p.add_argument("--seed", type=int)
            p.add_argument("--threshold", type=float, default=0.01)

    p = sub.add_parser("costs", help="card and shuffle counts")
    common(p, protocol=False)
    p.set_defaults(func=cmd_costs)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, CardError, ShuffleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
