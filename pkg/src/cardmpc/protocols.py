"""Step machines for the equality, set-size and set protocols.

Each ``run_*`` function takes the players' inputs and a randomness source,
executes the protocol on a :class:`~cardmpc.cards.CardMatrix`, and returns a
:class:`ProtocolRun` holding the output together with the public transcript
(the ordered list of card patterns that were turned face up).

An optional ``observer`` is called after every step as
``observer(label, matrix, origins)``, where ``origins[c - 1]`` is the original
column of the pile now lying in column ``c``.  Observers see hidden state and
exist for invariant checking and tracing; protocol outputs never depend on them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from .cards import (
    CLUB_DOWN,
    CLUB_UP,
    HEART_DOWN,
    HEART_UP,
    CardMatrix,
    Facing,
    InputVector,
    Suit,
    build_matrix,
    format_suits,
)
from .oracles import oracle_equality, oracle_set, oracle_set_size
from .shuffles import (
    RandomnessTape,
    RandomSource,
    Scramble,
    ShuffleDecision,
    ShuffleKind,
    cyclic_permutation,
    decision_permutation,
    permute_columns,
)

_UP = Facing.UP
_CLUB = Suit.CLUB

Output = Union[int, frozenset]
Observer = Callable[[str, CardMatrix, tuple], None]


class ProtocolStateError(RuntimeError):
    """A step was attempted from a state the protocol can never reach."""


@dataclass(frozen=True)
class RevealEvent:
    step: str
    row: int
    pattern: tuple[Suit, ...]

    @property
    def pattern_str(self) -> str:
        return format_suits(self.pattern)

    def canonical(self) -> str:
        return f"{self.step}@{self.row}={self.pattern_str}"

    def to_json(self) -> dict:
        return {"step": self.step, "row": self.row, "pattern": self.pattern_str}


@dataclass(frozen=True)
class Transcript:
    events: tuple[RevealEvent, ...] = ()

    def canonical(self) -> str:
        return "|".join(e.canonical() for e in self.events)

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.events]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, i: int) -> RevealEvent:
        return self.events[i]


def format_output(value: Output) -> str:
    if isinstance(value, frozenset):
        return "{" + ",".join(str(v) for v in sorted(value)) + "}"
    return str(value)


def output_to_json(value: Output):
    return sorted(value) if isinstance(value, frozenset) else value


@dataclass
class ProtocolRun:
    protocol: str
    inputs: InputVector
    output: Output
    transcript: Transcript
    shuffles_used: int
    final_matrix: CardMatrix
    tape: RandomnessTape = field(default_factory=RandomnessTape)

    def to_json(self) -> dict:
        return {
            "protocol": self.protocol,
            "k": self.inputs.k,
            "n": self.inputs.n,
            "inputs": list(self.inputs.values),
            "tape": self.tape.to_json(),
            "output": output_to_json(self.output),
            "transcript": self.transcript.to_json(),
            "shuffles_used": self.shuffles_used,
        }


def overwrite_step(m: CardMatrix, i: int, target: Suit) -> CardMatrix:
    """Swap every card of face-up row ``i`` that shows ``target`` with the card above it in row 1.

    Swapped cards keep their facing, so the revealed card lands face up in
    row 1 until the following turn-down step.
    """
    if not 2 <= i <= m.rows:
        raise ProtocolStateError(f"overwrite row must lie in 2..{m.rows}, got {i}")
    grid = m.grid
    for x, r in enumerate(grid, start=1):
        want_up = x == i
        if any((c.facing is _UP) is not want_up for c in r):
            raise ProtocolStateError(
                f"overwrite needs row {i} fully face up and every other row face down; row {x} is not"
            )
    top, row = list(grid[0]), list(grid[i - 1])
    for j in range(m.cols):
        if row[j].suit is target:
            top[j], row[j] = row[j], top[j]
    new = list(grid)
    new[0], new[i - 1] = tuple(top), tuple(row)
    return CardMatrix._trusted(tuple(new))


class _Execution:
    """Shared bookkeeping for one run: shuffles, reveals, observer calls.

    Works on a private mutable grid; :attr:`m` snapshots it as a CardMatrix.
    The public pure operations (``pile_scramble``, ``overwrite_step``, ...)
    define the semantics and the test suite checks this fast path against them.
    """

    def __init__(self, m: CardMatrix, source: RandomSource, observer: Observer | None):
        self.grid = [list(r) for r in m.grid]
        self.k = m.cols
        self.source = source
        self.observer = observer
        self.used: list[ShuffleDecision] = []
        self.events: list[RevealEvent] = []
        self.origins = tuple(range(1, self.k + 1))
        self.note("step1")

    @property
    def m(self) -> CardMatrix:
        return CardMatrix._trusted(tuple(tuple(r) for r in self.grid))

    def note(self, label: str) -> None:
        if self.observer is not None:
            self.observer(label, self.m, self.origins)

    def _rotate(self, r: int) -> None:
        if r:
            self.grid = [row[-r:] + row[:-r] for row in self.grid]

    def shuffle(self, kind: ShuffleKind, label: str) -> None:
        k = self.k
        d = self.source.draw(kind, k)
        if isinstance(d, Scramble):
            if len(d.perm) != k:
                raise ProtocolStateError(f"permutation of size {len(d.perm)} drawn for {k} columns")
            sources = [0] * k
            for src, dst in enumerate(d.perm):
                sources[dst - 1] = src
            self.grid = [list(map(row.__getitem__, sources)) for row in self.grid]
        else:
            if not 0 <= d.r < k:
                raise ProtocolStateError(f"rotation {d.r} drawn for {k} columns")
            self._rotate(d.r)
        self.used.append(d)
        if self.observer is not None:
            self.origins = permute_columns(self.origins, decision_permutation(d, k))
        self.note(label)

    def realign(self, r: int, label: str) -> None:
        self._rotate(r)
        if self.observer is not None:
            self.origins = permute_columns(self.origins, cyclic_permutation(r, self.k))
        self.note(label)

    def reveal(self, x: int, label: str) -> tuple[Suit, ...]:
        pattern = tuple(c.suit for c in self.grid[x - 1])
        self.grid[x - 1] = [CLUB_UP if s is _CLUB else HEART_UP for s in pattern]
        self.events.append(RevealEvent(label, x, pattern))
        self.note(label)
        return pattern

    def overwrite(self, i: int, target: Suit, label: str) -> None:
        top, row = self.grid[0], self.grid[i - 1]
        for j, c in enumerate(row):
            if c.suit is target:
                top[j], row[j] = c, top[j]
        self.note(label)

    def turn_down(self, label: str) -> None:
        for row in self.grid:
            for j, c in enumerate(row):
                if c.facing is _UP:
                    row[j] = CLUB_DOWN if c.suit is _CLUB else HEART_DOWN
        self.note(label)

    def finish(self, protocol: str, inputs: InputVector, output: Output) -> ProtocolRun:
        return ProtocolRun(
            protocol=protocol,
            inputs=inputs,
            output=output,
            transcript=Transcript(tuple(self.events)),
            shuffles_used=len(self.used),
            final_matrix=self.m,
            tape=RandomnessTape(self.used),
        )


def _overwrite_loop(ex: _Execution, n: int, kind: ShuffleKind, target: Suit) -> None:
    for i in range(2, n + 1):
        ex.shuffle(kind, f"step2a:i={i}")
        ex.reveal(i, f"step2b:i={i}")
        ex.overwrite(i, target, f"step2c:i={i}")
        ex.turn_down(f"step2d:i={i}")


def _run_overwrite(
    protocol: str,
    inputs: InputVector,
    source: RandomSource,
    target: Suit,
    observer: Observer | None = None,
    final_shuffle: bool = True,
) -> ProtocolRun:
    ex = _Execution(build_matrix(inputs), source, observer)
    _overwrite_loop(ex, inputs.n, ShuffleKind.SCRAMBLE, target)
    if final_shuffle:
        ex.shuffle(ShuffleKind.SCRAMBLE, "step3")
    final = ex.reveal(1, "step4")
    clubs = final.count(Suit.CLUB)
    if protocol == "equality":
        output = int(clubs == 1)
    else:
        output = clubs
    return ex.finish(protocol, inputs, output)


def run_equality(inputs: InputVector, source: RandomSource, observer: Observer | None = None) -> ProtocolRun:
    """Output 1 iff all inputs are equal.

    Every revealed Heart in row i overwrites the row-1 card above it, so row 1
    keeps its Club only when every player's Club sits in the same column.
    """
    return _run_overwrite("equality", inputs, source, Suit.HEART, observer)


def run_set_size(inputs: InputVector, source: RandomSource, observer: Observer | None = None) -> ProtocolRun:
    """Output the number of distinct input values (Clubs overwrite instead of Hearts)."""
    return _run_overwrite("set-size", inputs, source, Suit.CLUB, observer)


def _run_set(
    inputs: InputVector,
    source: RandomSource,
    observer: Observer | None = None,
    final_shuffle: bool = True,
) -> ProtocolRun:
    n, k = inputs.n, inputs.k
    ex = _Execution(build_matrix(inputs, extra_zero_row=True), source, observer)
    _overwrite_loop(ex, n, ShuffleKind.SHIFT, Suit.CLUB)
    if final_shuffle:
        ex.shuffle(ShuffleKind.SHIFT, "step3")
    marker = ex.reveal(n + 1, "step4")
    # Rotate so the marker row's Club returns to column 1; only public data is used.
    club_col = marker.index(Suit.CLUB) + 1
    ex.realign((1 - club_col) % k, "step4:realign")
    top = ex.reveal(1, "step5")
    output = frozenset(j for j, s in enumerate(top) if s is Suit.CLUB)
    return ex.finish("set", inputs, output)


def run_set(inputs: InputVector, source: RandomSource, observer: Observer | None = None) -> ProtocolRun:
    """Output the set of values chosen by at least one player.

    Only cyclic shifts are used, so the extra marker row ``E_k(0)`` tells us
    how far to rotate back to the original column order.
    """
    return _run_set(inputs, source, observer)


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    run: Callable[..., ProtocolRun]
    oracle: Callable[[InputVector], Output]
    shuffle_kind: ShuffleKind
    shuffle_count: Callable[[int], int] = lambda n: n
    clubs: Callable[[int], int] = lambda n: n

    def shuffle_kinds(self, n: int) -> list[ShuffleKind]:
        return [self.shuffle_kind] * self.shuffle_count(n)


PROTOCOLS: dict[str, ProtocolSpec] = {
    "equality": ProtocolSpec("equality", run_equality, oracle_equality, ShuffleKind.SCRAMBLE),
    "set-size": ProtocolSpec("set-size", run_set_size, oracle_set_size, ShuffleKind.SCRAMBLE),
    "set": ProtocolSpec("set", run_set, oracle_set, ShuffleKind.SHIFT, clubs=lambda n: n + 1),
}


def get_protocol(protocol: str | ProtocolSpec) -> ProtocolSpec:
    if isinstance(protocol, ProtocolSpec):
        return protocol
    try:
        return PROTOCOLS[protocol]
    except KeyError:
        raise ValueError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}") from None


COST_PROTOCOLS = ("equality", "set-size", "set", "binary-baseline")


def ceil_lg(k: int) -> int:
    return (k - 1).bit_length()


def cost_model(protocol: str, k: int, n: int) -> tuple[int, int]:
    """(cards, shuffles) needed by ``protocol`` for k candidates and n players.

    ``binary-baseline`` is the earlier equality protocol that writes every
    input in binary and compares bit by bit.
    """
    if k < 2 or n < 1:
        raise ValueError(f"need k >= 2 and n >= 1, got k={k}, n={n}")
    if protocol in ("equality", "set-size"):
        return k * n, n
    if protocol == "set":
        return k * (n + 1), n
    if protocol == "binary-baseline":
        bits = ceil_lg(k)
        return 2 * bits * n, bits * n - 1
    raise ValueError(f"unknown protocol {protocol!r}; choose from {', '.join(COST_PROTOCOLS)}")


def inputs_of(values: Iterable[int], k: int) -> InputVector:
    return InputVector(tuple(values), k)
