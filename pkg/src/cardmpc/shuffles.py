"""Column shuffles and the randomness sources that drive them.

A permutation ``p = (p_1, ..., p_k)`` is read as "column i moves to column
p_i" (1-based).  Protocol code never calls a PRNG directly; it asks a source
for a :class:`Scramble` or :class:`Shift` decision.  Three sources share that
interface:

* :class:`SeededSource` - a deterministic PRNG keyed by a 64-bit seed,
* :class:`RandomnessTape` - replays a recorded list of decisions,
* :class:`EnumerationSource` - walks every branch of the randomness tree,
  one complete run at a time.
"""
from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Protocol, Sequence, TypeVar, Union

from .cards import CardMatrix

T = TypeVar("T")

SEED_BITS = 64


class ShuffleError(ValueError):
    """Invalid permutation, rotation or tape contents."""


class TapeUnderrunError(ShuffleError):
    """A replay tape ran out of decisions, or held the wrong kind."""


class ShuffleKind(Enum):
    SCRAMBLE = "scramble"
    SHIFT = "shift"


def check_permutation(p: Sequence[int], k: int | None = None) -> tuple[int, ...]:
    p = tuple(p)
    size = len(p) if k is None else k
    if len(p) != size or sorted(p) != list(range(1, size + 1)):
        raise ShuffleError(f"{list(p)} is not a permutation of 1..{size}")
    return p


@dataclass(frozen=True)
class Scramble:
    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "perm", check_permutation(self.perm))

    kind = ShuffleKind.SCRAMBLE

    def to_json(self) -> dict:
        return {"scramble": list(self.perm)}


@dataclass(frozen=True)
class Shift:
    r: int

    def __post_init__(self) -> None:
        if not isinstance(self.r, int) or self.r < 0:
            raise ShuffleError(f"rotation must be a non-negative integer, got {self.r!r}")

    kind = ShuffleKind.SHIFT

    def to_json(self) -> dict:
        return {"shift": self.r}


ShuffleDecision = Union[Scramble, Shift]


def permute_columns(items: Sequence[T], p: Sequence[int]) -> tuple[T, ...]:
    """Move ``items[i]`` to position ``p_i`` (both 1-based)."""
    out: list = [None] * len(items)
    for src, dst in enumerate(p):
        out[dst - 1] = items[src]
    return tuple(out)


def inverse_permutation(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for src, dst in enumerate(p, start=1):
        inv[dst - 1] = src
    return tuple(inv)


def compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """The permutation applying ``p`` first, then ``q``."""
    return tuple(q[dst - 1] for dst in p)


def cyclic_permutation(r: int, k: int) -> tuple[int, ...]:
    if not 0 <= r < k:
        raise ShuffleError(f"rotation {r} outside 0..{k - 1}")
    return tuple((i + r) % k + 1 for i in range(k))


def pile_scramble(m: CardMatrix, p: Sequence[int]) -> CardMatrix:
    """Rearrange whole columns of ``m``: output(x, p_i) = input(x, i)."""
    return _scramble(m, check_permutation(p, m.cols))


def _scramble(m: CardMatrix, p: tuple[int, ...]) -> CardMatrix:
    # Output column c takes the source column that moves to c.
    sources = [0] * len(p)
    for src, dst in enumerate(p):
        sources[dst - 1] = src
    return CardMatrix._trusted(tuple(tuple(map(r.__getitem__, sources)) for r in m.grid))


def pile_shift(m: CardMatrix, r: int) -> CardMatrix:
    """Rotate columns right by ``r``, wrapping around."""
    if not isinstance(r, int) or not 0 <= r < m.cols:
        raise ShuffleError(f"rotation {r!r} outside 0..{m.cols - 1}")
    if r == 0:
        return m
    return CardMatrix._trusted(tuple(row[-r:] + row[:-r] for row in m.grid))


def apply_decision(m: CardMatrix, d: ShuffleDecision) -> CardMatrix:
    if isinstance(d, Scramble):
        if len(d.perm) != m.cols:
            raise ShuffleError(f"permutation of size {len(d.perm)} applied to {m.cols} columns")
        return _scramble(m, d.perm)  # validated when the Scramble was built
    return pile_shift(m, d.r)


def decision_permutation(d: ShuffleDecision, k: int) -> tuple[int, ...]:
    if isinstance(d, Scramble):
        return check_permutation(d.perm, k)
    return cyclic_permutation(d.r, k)


def all_decisions(kind: ShuffleKind, k: int) -> list[ShuffleDecision]:
    """Every possible decision of ``kind`` in lexicographic order."""
    if kind is ShuffleKind.SCRAMBLE:
        return [Scramble(p) for p in itertools.permutations(range(1, k + 1))]
    return [Shift(r) for r in range(k)]


def branch_count(kind: ShuffleKind, k: int) -> int:
    return math.factorial(k) if kind is ShuffleKind.SCRAMBLE else k


class RandomSource(Protocol):
    def draw(self, kind: ShuffleKind, k: int) -> ShuffleDecision: ...


class SeededSource:
    """Deterministic source keyed by a 64-bit seed.

    Uses :class:`random.Random` (Mersenne Twister).  Permutations come from
    ``Random.shuffle`` (Fisher-Yates over ``_randbelow``, which rejects rather
    than reducing modulo), so every permutation is equally likely.
    """

    def __init__(self, seed: int):
        if not isinstance(seed, int) or not 0 <= seed < 2**SEED_BITS:
            raise ShuffleError(f"seed must be an integer in [0, 2**{SEED_BITS}), got {seed!r}")
        self.seed = seed
        self._rng = random.Random(seed)

    def draw(self, kind: ShuffleKind, k: int) -> ShuffleDecision:
        if kind is ShuffleKind.SCRAMBLE:
            p = list(range(1, k + 1))
            self._rng.shuffle(p)
            return Scramble(tuple(p))
        return Shift(self._rng.randrange(k))


class RandomnessTape:
    """An ordered list of decisions consumed strictly in order."""

    def __init__(self, decisions: Iterable[ShuffleDecision] = ()):
        self.decisions: tuple[ShuffleDecision, ...] = tuple(decisions)
        self.cursor = 0

    def draw(self, kind: ShuffleKind, k: int) -> ShuffleDecision:
        if self.cursor >= len(self.decisions):
            raise TapeUnderrunError(
                f"tape exhausted: {kind.value} requested after all {len(self.decisions)} decisions were used"
            )
        d = self.decisions[self.cursor]
        if d.kind is not kind:
            raise TapeUnderrunError(
                f"tape entry {self.cursor + 1} is a {d.kind.value}, but the protocol needs a {kind.value}"
            )
        if isinstance(d, Scramble):
            if len(d.perm) != k:
                raise ShuffleError(f"tape entry {self.cursor + 1}: permutation has size {len(d.perm)}, need {k}")
        elif d.r >= k:
            raise ShuffleError(f"tape entry {self.cursor + 1}: rotation {d.r} outside 0..{k - 1}")
        self.cursor += 1
        return d

    @property
    def remaining(self) -> int:
        return len(self.decisions) - self.cursor

    def rewind(self) -> RandomnessTape:
        self.cursor = 0
        return self

    def __len__(self) -> int:
        return len(self.decisions)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RandomnessTape):
            return NotImplemented
        return self.decisions == other.decisions

    def __hash__(self) -> int:
        return hash(self.decisions)

    def __repr__(self) -> str:
        return f"RandomnessTape({self.to_json()!r})"

    def to_json(self) -> list[dict]:
        return [d.to_json() for d in self.decisions]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, data: list) -> RandomnessTape:
        if not isinstance(data, list):
            raise ShuffleError("a tape must be a JSON list of decisions")
        out: list[ShuffleDecision] = []
        for pos, entry in enumerate(data, start=1):
            if not isinstance(entry, dict) or len(entry) != 1:
                raise ShuffleError(f"tape entry {pos}: expected {{\"scramble\": [...]}} or {{\"shift\": r}}")
            (key, val), = entry.items()
            if key == "scramble" and isinstance(val, list):
                out.append(Scramble(tuple(val)))
            elif key == "shift" and isinstance(val, int):
                out.append(Shift(val))
            else:
                raise ShuffleError(f"tape entry {pos}: unrecognised decision {entry!r}")
        return cls(out)

    @classmethod
    def loads(cls, text: str) -> RandomnessTape:
        return cls.from_json(json.loads(text))


class EnumerationSource:
    """Depth-first walk over every branch of the randomness tree.

    Run the protocol once per branch; call :meth:`next_branch` between runs.
    It returns False once every combination has been produced::

        src = EnumerationSource()
        while True:
            run_equality(inputs, src)
            if not src.next_branch():
                break
    """

    def __init__(self) -> None:
        self._choices: list[list[ShuffleDecision]] = []
        self._index: list[int] = []
        self._depth = 0

    def draw(self, kind: ShuffleKind, k: int) -> ShuffleDecision:
        if self._depth == len(self._choices):
            self._choices.append(all_decisions(kind, k))
            self._index.append(0)
        d = self._choices[self._depth][self._index[self._depth]]
        if d.kind is not kind:
            raise ShuffleError("randomness tree changed shape between runs")
        self._depth += 1
        return d

    def next_branch(self) -> bool:
        # Odometer increment over the choice points used by the last run.
        del self._choices[self._depth:], self._index[self._depth:]
        self._depth = 0
        while self._index:
            self._index[-1] += 1
            if self._index[-1] < len(self._choices[-1]):
                return True
            self._index.pop()
            self._choices.pop()
        return False


def draw_uniform(source: RandomSource, kind: ShuffleKind, k: int) -> ShuffleDecision:
    return source.draw(kind, k)


def universe_size(kinds: Iterable[ShuffleKind], k: int) -> int:
    return math.prod(branch_count(kind, k) for kind in kinds)


def enumerate_tapes(kinds: Sequence[ShuffleKind], k: int) -> Iterator[RandomnessTape]:
    """Every tape for the given shuffle sequence, in lexicographic order."""
    pools = [all_decisions(kind, k) for kind in kinds]
    for combo in itertools.product(*pools):
        yield RandomnessTape(combo)
