import dataclasses
import functools

import pytest

from cardmpc.protocols import PROTOCOLS, ProtocolSpec, _run_overwrite, _run_set
from cardmpc.cards import Suit


def skip_final_shuffle(name: str) -> ProtocolSpec:
    """A broken variant of ``name`` that omits the shuffle before the final reveal."""
    spec = PROTOCOLS[name]
    if name == "set":
        run = functools.partial(_run_set, final_shuffle=False)
    else:
        target = Suit.HEART if name == "equality" else Suit.CLUB

        def run(inputs, source, observer=None):
            return _run_overwrite(name, inputs, source, target, observer, final_shuffle=False)

    return dataclasses.replace(spec, name=f"{name}/no-final-shuffle", run=run, shuffle_count=lambda n: n - 1)


class _FirstDrawIdentity:
    """Wraps a source so the first loop shuffle is replaced by the identity."""

    def __init__(self, source):
        self.source = source
        self.first = True

    def draw(self, kind, k):
        d = self.source.draw(kind, k)
        if self.first:
            self.first = False
            from cardmpc.shuffles import Scramble, Shift
            return Scramble(tuple(range(1, k + 1))) if isinstance(d, Scramble) else Shift(0)
        return d


def identity_first_shuffle(name: str) -> ProtocolSpec:
    """A broken variant whose first loop shuffle never moves anything."""
    spec = PROTOCOLS[name]

    def run(inputs, source, observer=None):
        return spec.run(inputs, _FirstDrawIdentity(source), observer)

    return dataclasses.replace(spec, name=f"{name}/no-first-shuffle", run=run)


@pytest.fixture
def mutants():
    return {"skip_final_shuffle": skip_final_shuffle, "identity_first_shuffle": identity_first_shuffle}


_ACCEPTANCE: dict[str, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE[name] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, (outcome, detail) in _ACCEPTANCE.items():
        terminalreporter.write_line(f"[{outcome}] {name}: {detail}")
