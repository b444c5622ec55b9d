"""Ground-truth evaluation of the three target functions, straight from their definitions."""
from __future__ import annotations

from typing import Iterable

from .cards import InputVector


def _values(inputs: InputVector | Iterable[int]) -> tuple[int, ...]:
    return inputs.values if isinstance(inputs, InputVector) else tuple(inputs)


def oracle_equality(inputs: InputVector | Iterable[int]) -> int:
    """1 if every input is the same value, else 0."""
    return int(len(set(_values(inputs))) == 1)


def oracle_set(inputs: InputVector | Iterable[int]) -> frozenset[int]:
    """The values chosen by at least one player."""
    return frozenset(_values(inputs))


def oracle_set_size(inputs: InputVector | Iterable[int]) -> int:
    return len(oracle_set(inputs))
