"""Exhaustive correctness checks and transcript-distribution security audits.

Security is checked as transcript indistinguishability: for any two inputs
``a`` and ``b`` with ``f(a) == f(b)``, the distribution of the public
transcript over all shuffle outcomes must be identical.  In exact mode every
tape in the randomness universe is run and distributions are integer count
maps over a common universe size, so equality is exact.  Sampled mode gives a
statistical verdict only.
"""
from __future__ import annotations

import itertools
import math
import os
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

import numpy as np

from .cards import InputVector
from .protocols import Output, ProtocolSpec, get_protocol, output_to_json
from .shuffles import SeededSource, enumerate_tapes, universe_size

DEFAULT_BUDGET = 10**7
BUDGET_ENV = "CARDMPC_BUDGET"

SECURITY_DEFINITION = (
    "transcript indistinguishability: inputs with equal function output must induce "
    "identical distributions of the revealed-card transcript over all shuffle outcomes"
)


class BudgetExceededError(RuntimeError):
    """The requested exhaustive computation exceeds the run budget."""


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{BUDGET_ENV} must be positive, got {value}")
    return value


def all_inputs(k: int, n: int) -> Iterator[InputVector]:
    for values in itertools.product(range(k), repeat=n):
        yield InputVector(values, k)


def output_sort_key(value: Output):
    if isinstance(value, frozenset):
        return (len(value), tuple(sorted(value)))
    return (value,)


def exhaustive_runs(protocol: str | ProtocolSpec, k: int, n: int) -> int:
    spec = get_protocol(protocol)
    return k**n * universe_size(spec.shuffle_kinds(n), k)


def _check_budget(runs: int, budget: int | None, what: str) -> None:
    budget = default_budget() if budget is None else budget
    if runs > budget:
        raise BudgetExceededError(
            f"{what} needs {runs} protocol runs, over the budget of {budget}; "
            "use sampled mode or raise the budget"
        )


@dataclass(frozen=True)
class TranscriptDistribution:
    """Occurrence counts of canonical transcripts over a universe of tapes."""

    counts: dict[str, int]
    universe_size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", dict(sorted(self.counts.items())))
        if sum(self.counts.values()) != self.universe_size:
            raise ValueError("transcript counts do not sum to the universe size")

    def probability(self, transcript: str) -> Fraction:
        return Fraction(self.counts.get(transcript, 0), self.universe_size)

    def probabilities(self) -> dict[str, Fraction]:
        return {t: Fraction(c, self.universe_size) for t, c in self.counts.items()}

    def event_law(self, step: str) -> dict[str, Fraction]:
        """Marginal distribution of the pattern revealed at ``step``."""
        law: Counter[str] = Counter()
        for t, c in self.counts.items():
            for event in t.split("|"):
                label, _, rest = event.partition("@")
                if label == step:
                    law[rest.partition("=")[2]] += c
        return {p: Fraction(c, self.universe_size) for p, c in sorted(law.items())}

    def to_json(self) -> list[dict]:
        return [{"transcript_hashless_canonical": t, "count": c} for t, c in self.counts.items()]


def _tally(spec: ProtocolSpec, inputs: InputVector, tapes: list) -> tuple[Counter, list]:
    counts: Counter[str] = Counter()
    outputs = []
    for tape in tapes:
        tape.cursor = 0
        run = spec.run(inputs, tape)
        counts[run.transcript.canonical()] += 1
        outputs.append(run.output)
    return counts, outputs


def transcript_distribution(
    protocol: str | ProtocolSpec, inputs: InputVector, budget: int | None = None
) -> TranscriptDistribution:
    spec = get_protocol(protocol)
    kinds = spec.shuffle_kinds(inputs.n)
    size = universe_size(kinds, inputs.k)
    _check_budget(size, budget, f"{spec.name} transcript distribution")
    counts, _ = _tally(spec, inputs, list(enumerate_tapes(kinds, inputs.k)))
    return TranscriptDistribution(dict(counts), size)


@dataclass
class AuditReport:
    protocol: str
    k: int
    n: int
    mode: str
    universe: int
    runs: int
    classes: dict = field(default_factory=dict)
    verdict: str = "pass"
    counterexample: dict | None = None
    statistic: float | None = None
    threshold: float | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        out = {
            "protocol": self.protocol,
            "k": self.k,
            "n": self.n,
            "mode": self.mode,
            "security_definition": SECURITY_DEFINITION,
            "verdict_kind": "exhaustive" if self.mode == "exact" else "statistical",
            "universe": self.universe,
            "runs": self.runs,
            "classes": [
                {"output": output_to_json(key), "distribution": self.classes[key].to_json()}
                for key in sorted(self.classes, key=output_sort_key)
            ],
            "verdict": self.verdict,
            "counterexample": self.counterexample,
        }
        if self.mode == "sampled":
            out["statistic"] = self.statistic
            out["threshold"] = self.threshold
        return out


def _first_difference(a: Counter, b: Counter) -> str:
    return next(t for t in sorted(set(a) | set(b)) if a.get(t, 0) != b.get(t, 0))


def check_security(protocol: str | ProtocolSpec, k: int, n: int, budget: int | None = None) -> AuditReport:
    """Exact audit: compare every input's transcript distribution within its output class.

    Stops at the first input whose distribution differs from its class.
    """
    spec = get_protocol(protocol)
    kinds = spec.shuffle_kinds(n)
    size = universe_size(kinds, k)
    _check_budget(k**n * size, budget, f"exact {spec.name} audit (k={k}, n={n})")
    tapes = list(enumerate_tapes(kinds, k))
    report = AuditReport(spec.name, k, n, "exact", size, 0)
    reference: dict = {}
    for inputs in all_inputs(k, n):
        counts, _ = _tally(spec, inputs, tapes)
        report.runs += size
        key = spec.oracle(inputs)
        if key not in reference:
            reference[key] = (inputs, counts)
            report.classes[key] = TranscriptDistribution(dict(counts), size)
        elif counts != reference[key][1]:
            first, ref = reference[key]
            t = _first_difference(ref, counts)
            report.verdict = "fail"
            report.counterexample = {
                "output": output_to_json(key),
                "inputs": [list(first.values), list(inputs.values)],
                "transcript": t,
                "counts": [ref.get(t, 0), counts.get(t, 0)],
            }
            break
    return report


def _tvd_rows(counts: np.ndarray) -> np.ndarray:
    """TVD between each group's empirical law and the pooled law of the other groups."""
    total = counts.sum(axis=0)
    sizes = counts.sum(axis=1, keepdims=True)
    rest = total - counts
    p = counts / sizes
    q = rest / (sizes.sum() - sizes)
    return 0.5 * np.abs(p - q).sum(axis=1)


def _max_tvd(labels: np.ndarray, codes: np.ndarray, groups: int, width: int) -> tuple[float, int]:
    counts = np.bincount(labels * width + codes, minlength=groups * width).reshape(groups, width)
    tvd = _tvd_rows(counts)
    g = int(tvd.argmax())
    return float(tvd[g]), g


def _features(events: list[tuple[str, ...]]) -> Iterator[tuple[str, list]]:
    """Single-reveal marginals and consecutive-reveal pairs, as label/value columns."""
    width = len(events[0])
    for e in range(width):
        yield f"reveal {e + 1}", [ev[e] for ev in events]
    for e in range(width - 1):
        yield f"reveals {e + 1}+{e + 2}", [ev[e] + "|" + ev[e + 1] for ev in events]


def _candidate_inputs(spec: ProtocolSpec, k: int, n: int, rng: random.Random) -> dict:
    by_class: dict = {}
    if k**n <= 200_000:
        pool: Iterable[InputVector] = all_inputs(k, n)
    else:
        pool = {InputVector(tuple(rng.randrange(k) for _ in range(n)), k) for _ in range(20_000)}
        pool = sorted(pool, key=lambda iv: iv.values)
    for inputs in pool:
        by_class.setdefault(spec.oracle(inputs), []).append(inputs)
    return by_class


def check_security_sampled(
    protocol: str | ProtocolSpec,
    k: int,
    n: int,
    samples: int = 100_000,
    seed: int = 0,
    threshold: float = 0.01,
    inputs_per_class: int = 4,
    permutations: int = 40,
) -> AuditReport:
    """Statistical audit for parameters beyond the exact budget.

    Up to ``inputs_per_class`` inputs are drawn from each output class and
    share the sample budget equally.  For every reveal and every pair of
    consecutive reveals, each input's empirical law is compared with the rest
    of its class by total variation distance (TVD).  Small-sample TVD is biased
    upwards, so the statistic is the observed maximum TVD minus the largest
    maximum seen under ``permutations`` random relabellings of the same
    samples.  The audit passes when that excess is at most ``threshold``.
    """
    if samples < 10_000:
        raise ValueError(f"sampled audits need at least 10^4 samples, got {samples}")
    spec = get_protocol(protocol)
    rng = random.Random(seed)
    nprng = np.random.default_rng(seed)
    by_class = _candidate_inputs(spec, k, n, rng)
    chosen = {
        key: sorted(rng.sample(members, min(inputs_per_class, len(members))), key=lambda iv: iv.values)
        for key, members in sorted(by_class.items(), key=lambda kv: output_sort_key(kv[0]))
    }
    per_input = max(1, samples // sum(len(v) for v in chosen.values()))
    report = AuditReport(
        spec.name, k, n, "sampled", math.prod([k**n, universe_size(spec.shuffle_kinds(n), k)]), 0,
        statistic=0.0, threshold=threshold,
    )
    worst = None
    for key, members in chosen.items():
        pooled: Counter[str] = Counter()
        events: list[tuple[str, ...]] = []
        labels: list[int] = []
        for g, inputs in enumerate(members):
            source = SeededSource(rng.getrandbits(64))
            for _ in range(per_input):
                t = spec.run(inputs, source).transcript
                pooled[t.canonical()] += 1
                events.append(tuple(e.canonical() for e in t.events))
                labels.append(g)
        report.runs += len(events)
        report.classes[key] = TranscriptDistribution(dict(pooled), len(events))
        if len(members) < 2:
            continue
        label_arr = np.asarray(labels)
        for name, column in _features(events):
            index: dict[str, int] = {}
            codes = np.fromiter((index.setdefault(v, len(index)) for v in column), dtype=np.int64)
            observed, g = _max_tvd(label_arr, codes, len(members), len(index))
            null = max(
                _max_tvd(nprng.permutation(label_arr), codes, len(members), len(index))[0]
                for _ in range(permutations)
            )
            excess = observed - null
            if worst is None or excess > worst[0]:
                worst = (excess, key, members[g], name, observed, null)
    if worst is not None:
        excess, key, inputs, name, observed, null = worst
        report.statistic = round(excess, 6)
        if excess > threshold:
            report.verdict = "fail"
            report.counterexample = {
                "output": output_to_json(key),
                "inputs": list(inputs.values),
                "compared_with": "rest of class",
                "feature": name,
                "tvd": round(observed, 6),
                "null_tvd": round(null, 6),
            }
    return report


@dataclass
class CorrectnessReport:
    protocol: str
    k: int
    n: int
    runs: int = 0
    mismatches: int = 0
    first_mismatch: dict | None = None

    @property
    def passed(self) -> bool:
        return self.mismatches == 0

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "k": self.k,
            "n": self.n,
            "runs": self.runs,
            "mismatches": self.mismatches,
            "first_mismatch": self.first_mismatch,
        }


def verify_correctness(
    protocol: str | ProtocolSpec, k: int, n: int, budget: int | None = None
) -> CorrectnessReport:
    """Run every input against every tape and compare with the reference function."""
    spec = get_protocol(protocol)
    kinds = spec.shuffle_kinds(n)
    _check_budget(exhaustive_runs(spec, k, n), budget, f"{spec.name} verification (k={k}, n={n})")
    tapes = list(enumerate_tapes(kinds, k))
    report = CorrectnessReport(spec.name, k, n)
    for inputs in all_inputs(k, n):
        expected = spec.oracle(inputs)
        for tape in tapes:
            tape.cursor = 0
            got = spec.run(inputs, tape).output
            report.runs += 1
            if got != expected:
                report.mismatches += 1
                if report.first_mismatch is None:
                    report.first_mismatch = {
                        "inputs": list(inputs.values),
                        "tape": tape.to_json(),
                        "expected": output_to_json(expected),
                        "got": output_to_json(got),
                    }
    return report
