"""Cards, encoded sequences and the card matrix.

All public addressing is 1-based: ``matrix[1, 1]`` is the top-left card.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Iterator


class CardError(ValueError):
    """Raised for out-of-range values or malformed card sequences."""


class Suit(Enum):
    CLUB = "C"
    HEART = "H"

    def __str__(self) -> str:
        return self.value


class Facing(Enum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True, slots=True)
class Card:
    suit: Suit
    facing: Facing = Facing.DOWN

    @property
    def face_up(self) -> bool:
        return self.facing is _UP

    def flipped(self) -> Card:
        return self.turned(Facing.DOWN if self.facing is _UP else _UP)

    def turned(self, facing: Facing) -> Card:
        if self.suit is Suit.CLUB:
            return CLUB_UP if facing is _UP else CLUB_DOWN
        return HEART_UP if facing is _UP else HEART_DOWN

    def __str__(self) -> str:
        return self.suit.value if self.face_up else "?"


_UP = Facing.UP

# Cards are values, so the four possible cards are shared.
CLUB_UP = Card(Suit.CLUB, Facing.UP)
CLUB_DOWN = Card(Suit.CLUB, Facing.DOWN)
HEART_UP = Card(Suit.HEART, Facing.UP)
HEART_DOWN = Card(Suit.HEART, Facing.DOWN)

_CLUB = Suit.CLUB

CardRow = tuple[Card, ...]


def format_suits(cards: Iterable[Card | Suit]) -> str:
    """Canonical text form of a row, e.g. ``"HCHH"`` (facing is ignored)."""
    return "".join(c.value if isinstance(c, Suit) else c.suit.value for c in cards)


def parse_suits(text: str) -> tuple[Suit, ...]:
    try:
        return tuple(Suit(ch) for ch in text.strip().upper())
    except ValueError:
        raise CardError(f"invalid suit string {text!r}; use only 'C' and 'H'") from None


def parse_sequence(text: str) -> CardRow:
    return tuple(CLUB_DOWN if s is Suit.CLUB else HEART_DOWN for s in parse_suits(text))


def _check_k(k: int) -> None:
    if not isinstance(k, int) or k < 2:
        raise CardError(f"k must be an integer >= 2, got {k!r}")


def encode(i: int, k: int) -> CardRow:
    """Return the face-down sequence committing to ``i``: a Club at position i+1, Hearts elsewhere."""
    _check_k(k)
    if not isinstance(i, int) or not 0 <= i < k:
        raise CardError(f"value {i!r} out of range for k={k}; expected 0..{k - 1}")
    return _encoded(i, k)


@lru_cache(maxsize=4096)
def _encoded(i: int, k: int) -> CardRow:
    return tuple(CLUB_DOWN if j == i else HEART_DOWN for j in range(k))


def decode(cards: Iterable[Card | Suit]) -> int:
    suits = [c if isinstance(c, Suit) else c.suit for c in cards]
    clubs = [j for j, s in enumerate(suits) if s is Suit.CLUB]
    if len(clubs) != 1:
        raise CardError(
            f"malformed sequence {format_suits(suits)!r}: expected exactly one Club, found {len(clubs)}"
        )
    return clubs[0]


@dataclass(frozen=True)
class InputVector:
    """The players' private values ``a_1..a_n``, each in ``0..k-1``."""

    values: tuple[int, ...]
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(self.values))
        _check_k(self.k)
        if not self.values:
            raise CardError("at least one input value is required (n >= 1)")
        for pos, a in enumerate(self.values, start=1):
            if not isinstance(a, int) or isinstance(a, bool) or not 0 <= a < self.k:
                raise CardError(f"input a_{pos}={a!r} out of range for k={self.k}; expected 0..{self.k - 1}")

    @property
    def n(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[int]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)


class CardMatrix:
    """An immutable rows x cols grid of cards.

    Every transforming method returns a new matrix; rows are tuples of shared
    :class:`Card` values, so copies are shallow and cheap.
    """

    __slots__ = ("_grid",)

    def __init__(self, rows: Iterable[Iterable[Card]]):
        grid = tuple(tuple(r) for r in rows)
        if not grid or not grid[0]:
            raise CardError("a card matrix needs at least one row and one column")
        width = len(grid[0])
        for x, r in enumerate(grid, start=1):
            if len(r) != width:
                raise CardError(f"row {x} has {len(r)} cards, expected {width}")
        self._grid = grid

    @classmethod
    def _trusted(cls, grid: tuple[CardRow, ...]) -> CardMatrix:
        m = object.__new__(cls)
        m._grid = grid
        return m

    @property
    def rows(self) -> int:
        return len(self._grid)

    @property
    def cols(self) -> int:
        return len(self._grid[0])

    @property
    def grid(self) -> tuple[CardRow, ...]:
        return self._grid

    def row(self, x: int) -> CardRow:
        self._check_row(x)
        return self._grid[x - 1]

    def __getitem__(self, pos: tuple[int, int]) -> Card:
        x, y = pos
        self._check_row(x)
        if not 1 <= y <= self.cols:
            raise IndexError(f"column {y} outside 1..{self.cols}")
        return self._grid[x - 1][y - 1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CardMatrix):
            return NotImplemented
        return self._grid == other._grid

    def __hash__(self) -> int:
        return hash(self._grid)

    def __repr__(self) -> str:
        return f"CardMatrix({self.suit_rows()!r})"

    def _check_row(self, x: int) -> None:
        if not 1 <= x <= self.rows:
            raise IndexError(f"row {x} outside 1..{self.rows}")

    def suit_rows(self) -> list[str]:
        return [format_suits(r) for r in self._grid]

    def count(self, suit: Suit) -> int:
        return sum(c.suit is suit for r in self._grid for c in r)

    def face_up_positions(self) -> list[tuple[int, int]]:
        return [
            (x, y)
            for x, r in enumerate(self._grid, start=1)
            for y, c in enumerate(r, start=1)
            if c.face_up
        ]

    def turn_row(self, x: int, facing: Facing = Facing.UP) -> CardMatrix:
        self._check_row(x)
        grid = list(self._grid)
        club, heart = (CLUB_UP, HEART_UP) if facing is _UP else (CLUB_DOWN, HEART_DOWN)
        grid[x - 1] = tuple(club if c.suit is _CLUB else heart for c in grid[x - 1])
        return CardMatrix._trusted(tuple(grid))

    def turn_all_down(self) -> CardMatrix:
        return CardMatrix._trusted(
            tuple(
                tuple(CLUB_DOWN if c.suit is _CLUB else HEART_DOWN for c in r)
                if any(c.facing is _UP for c in r) else r
                for r in self._grid
            )
        )

    def swap(self, a: tuple[int, int], b: tuple[int, int]) -> CardMatrix:
        """Exchange two cards; each keeps its own facing."""
        (xa, ya), (xb, yb) = a, b
        ca, cb = self[xa, ya], self[xb, yb]
        grid = [list(r) for r in self._grid]
        grid[xa - 1][ya - 1] = cb
        grid[xb - 1][yb - 1] = ca
        return CardMatrix._trusted(tuple(tuple(r) for r in grid))

    def render(self) -> list[str]:
        """One string per row; face-down cards show as ``?``."""
        return [" ".join(str(c) for c in r) for r in self._grid]


def build_matrix(inputs: InputVector, extra_zero_row: bool = False) -> CardMatrix:
    rows = [encode(a, inputs.k) for a in inputs.values]
    if extra_zero_row:
        rows.append(encode(0, inputs.k))
    return CardMatrix._trusted(tuple(rows))
