"""Runtime checks of the structural facts the correctness and security arguments rely on."""
from __future__ import annotations

from .cards import CardMatrix, InputVector, Suit
from .protocols import ProtocolRun, ProtocolSpec, get_protocol
from .shuffles import RandomSource


class InvariantMonitor:
    """Observer that records every invariant violation seen during one run.

    Pass an instance as the ``observer`` of a ``run_*`` call, then call
    :meth:`finish` with the returned run.  ``violations`` is empty on success.
    """

    def __init__(self, protocol: str | ProtocolSpec, inputs: InputVector):
        self.spec = get_protocol(protocol)
        self.inputs = inputs
        self.n, self.k = inputs.n, inputs.k
        self.rows = self.n + 1 if self.spec.name == "set" else self.n
        self.violations: list[str] = []
        self._hearts = -1
        self._sticky: set[int] = set()

    def _fail(self, label: str, msg: str) -> None:
        self.violations.append(f"{label}: {msg}")

    def __call__(self, label: str, m: CardMatrix, origins: tuple[int, ...]) -> None:
        if (m.rows, m.cols) != (self.rows, self.k):
            self._fail(label, f"matrix is {m.rows}x{m.cols}, expected {self.rows}x{self.k}")
        clubs = m.count(Suit.CLUB)
        if clubs != self.spec.clubs(self.n):
            self._fail(label, f"{clubs} Clubs in the grid, expected {self.spec.clubs(self.n)}")
        top = m.row(1)

        if self.spec.name == "equality":
            hearts = sum(c.suit is Suit.HEART for c in top)
            if hearts < self._hearts:
                self._fail(label, f"row-1 Hearts fell from {self._hearts} to {hearts}")
            self._hearts = hearts
        else:
            clubs_at = {origins[j] for j, c in enumerate(top) if c.suit is Suit.CLUB}
            if not self._sticky <= clubs_at:
                self._fail(label, f"row-1 Club(s) from columns {sorted(self._sticky - clubs_at)} disappeared")
            self._sticky = clubs_at

        up_rows = {x for x, _ in m.face_up_positions()}
        if label.startswith("step2b:i="):
            i = int(label.split("=")[1])
            if up_rows != {i}:
                self._fail(label, f"face-up rows {sorted(up_rows)}, expected only row {i}")
            revealed = [c.suit for c in m.row(i)]
            if revealed.count(Suit.CLUB) != 1:
                self._fail(label, f"revealed row {i} holds {revealed.count(Suit.CLUB)} Clubs, expected 1")
        elif label.startswith("step2d") and up_rows:
            self._fail(label, f"rows {sorted(up_rows)} still face up after turning cards down")
        elif label == "step4" and self.spec.name == "set":
            marker = [c.suit for c in m.row(self.n + 1)]
            if marker.count(Suit.CLUB) != 1:
                self._fail(label, f"marker row holds {marker.count(Suit.CLUB)} Clubs, expected 1")
        elif label == "step4:realign" and origins != tuple(range(1, self.k + 1)):
            self._fail(label, f"column order {list(origins)} is not the original order")
        elif label == "step4" and self.spec.name == "equality":
            clubs_top = sum(c.suit is Suit.CLUB for c in top)
            if clubs_top not in (0, 1):
                self._fail(label, f"final row 1 holds {clubs_top} Clubs; expected one or none")

    def finish(self, run: ProtocolRun) -> list[str]:
        expected_shuffles = self.spec.shuffle_count(self.n)
        if run.shuffles_used != expected_shuffles:
            self._fail("end", f"{run.shuffles_used} shuffles used, expected {expected_shuffles}")
        expected_events = self.n + 1 if self.spec.name == "set" else self.n
        if len(run.transcript) != expected_events:
            self._fail("end", f"{len(run.transcript)} reveals, expected {expected_events}")
        for event in run.transcript:
            if event.step.startswith("step2b") and event.pattern.count(Suit.CLUB) != 1:
                self._fail("end", f"transcript {event.step} shows {event.pattern_str}")
        if run.output != self.spec.oracle(self.inputs):
            self._fail("end", f"output {run.output!r} disagrees with the reference function")
        return self.violations


def check_run_invariants(
    protocol: str | ProtocolSpec, inputs: InputVector, source: RandomSource
) -> tuple[ProtocolRun, list[str]]:
    spec = get_protocol(protocol)
    monitor = InvariantMonitor(spec, inputs)
    run = spec.run(inputs, source, monitor)
    return run, monitor.finish(run)
