import random

import pytest
from hypothesis import given, settings, strategies as st

from cardmpc.cards import CardMatrix, Facing, InputVector, Suit, build_matrix, parse_sequence
from cardmpc.oracles import oracle_equality, oracle_set, oracle_set_size
from cardmpc.protocols import (
    PROTOCOLS,
    ProtocolStateError,
    cost_model,
    format_output,
    overwrite_step,
    run_equality,
    run_set,
    run_set_size,
)
from cardmpc.shuffles import (
    RandomnessTape,
    Scramble,
    SeededSource,
    Shift,
    ShuffleKind,
    TapeUnderrunError,
    enumerate_tapes,
    pile_scramble,
    pile_shift,
)


def reference_run(name, inputs, tape):
    """Re-execute a protocol with the public pure operations only."""
    n, k = inputs.n, inputs.k
    m = build_matrix(inputs, extra_zero_row=name == "set")
    target = Suit.HEART if name == "equality" else Suit.CLUB
    events = []
    decisions = iter(tape.decisions)

    def shuffle(m):
        d = next(decisions)
        return pile_scramble(m, d.perm) if isinstance(d, Scramble) else pile_shift(m, d.r)

    for i in range(2, n + 1):
        m = shuffle(m).turn_row(i)
        events.append((f"step2b:i={i}", i, m.row(i)))
        m = overwrite_step(m, i, target).turn_all_down()
    m = shuffle(m)
    if name == "set":
        m = m.turn_row(n + 1)
        events.append(("step4", n + 1, m.row(n + 1)))
        club = [c.suit for c in m.row(n + 1)].index(Suit.CLUB) + 1
        m = pile_shift(m, (1 - club) % k).turn_row(1)
        events.append(("step5", 1, m.row(1)))
    else:
        m = m.turn_row(1)
        events.append(("step4", 1, m.row(1)))
    events = [(s, x, tuple(c.suit for c in r)) for s, x, r in events]
    return m, events


def random_case(rnd: random.Random, name: str, max_k=6, max_n=6):
    k, n = rnd.randint(2, max_k), rnd.randint(1, max_n)
    inputs = InputVector(tuple(rnd.randrange(k) for _ in range(n)), k)
    return inputs, SeededSource(rnd.getrandbits(64))


@pytest.mark.parametrize("name", sorted(PROTOCOLS))
@given(seed=st.integers(0, 2**32))
@settings(max_examples=60)
def test_engine_matches_pure_reference(name, seed):
    inputs, source = random_case(random.Random(seed), name)
    run = PROTOCOLS[name].run(inputs, source)
    m, events = reference_run(name, inputs, run.tape)
    assert run.final_matrix == m
    assert [(e.step, e.row, e.pattern) for e in run.transcript] == events


def test_equality_unequal_inputs_give_zero():
    for seed in range(20):
        assert run_equality(InputVector((2, 3, 2, 0, 2), 6), SeededSource(seed)).output == 0


def test_equality_equal_inputs_give_one():
    for seed in range(20):
        assert run_equality(InputVector((1, 1, 1), 3), SeededSource(seed)).output == 1


@pytest.mark.parametrize(
    "run, values, k, kind",
    [
        (run_equality, (0, 1), 2, ShuffleKind.SCRAMBLE),
        (run_set_size, (0, 2), 3, ShuffleKind.SCRAMBLE),
        (run_set, (1, 2), 3, ShuffleKind.SHIFT),
    ],
)
def test_every_tape_small_cases(run, values, k, kind):
    inputs = InputVector(values, k)
    expected = {run_equality: oracle_equality, run_set_size: oracle_set_size, run_set: oracle_set}[run](inputs)
    tapes = list(enumerate_tapes([kind] * len(values), k))
    assert len(tapes) == {ShuffleKind.SCRAMBLE: 4 if k == 2 else 36, ShuffleKind.SHIFT: 9}[kind]
    assert {run(inputs, t).output for t in tapes} == {expected}


def test_worked_example_set_and_size():
    inputs = InputVector((3, 2, 3, 0, 5, 0), 6)
    for seed in range(10):
        assert run_set_size(inputs, SeededSource(seed)).output == 4
        assert run_set(inputs, SeededSource(seed)).output == frozenset({0, 2, 3, 5})


@pytest.mark.parametrize("c", [0, 2, 4])
def test_all_equal_inputs(c):
    inputs = InputVector((c,) * 4, 5)
    assert run_set_size(inputs, SeededSource(c)).output == 1
    assert run_set(inputs, SeededSource(c)).output == frozenset({c})


@pytest.mark.parametrize("a", [0, 3])
def test_single_player(a):
    inputs = InputVector((a,), 4)
    for run, expected in ((run_equality, 1), (run_set_size, 1), (run_set, frozenset({a}))):
        r = run(inputs, SeededSource(1))
        assert r.output == expected
        assert r.shuffles_used == 1
        assert len(r.transcript) == (2 if run is run_set else 1)


def test_transcript_labels_and_rows():
    r = run_set(InputVector((0, 1, 2), 3), SeededSource(3))
    assert [(e.step, e.row) for e in r.transcript] == [("step2b:i=2", 2), ("step2b:i=3", 3), ("step4", 4), ("step5", 1)]
    r = run_equality(InputVector((0, 1, 2), 3), SeededSource(3))
    assert [(e.step, e.row) for e in r.transcript] == [("step2b:i=2", 2), ("step2b:i=3", 3), ("step4", 1)]


def test_tape_underrun_is_an_error():
    with pytest.raises(TapeUnderrunError):
        run_equality(InputVector((0, 1, 1), 2), RandomnessTape([Scramble((1, 2))]))
    with pytest.raises(TapeUnderrunError):
        run_set(InputVector((0, 1), 2), RandomnessTape([Scramble((1, 2)), Scramble((2, 1))]))


def test_run_records_replayable_tape():
    inputs = InputVector((2, 0, 2, 1), 4)
    first = run_set_size(inputs, SeededSource(99))
    again = run_set_size(inputs, RandomnessTape(first.tape.decisions))
    assert again.transcript == first.transcript and again.final_matrix == first.final_matrix


def test_run_record_json():
    r = run_set(InputVector((1, 0), 3), RandomnessTape([Shift(2), Shift(1)]))
    assert r.to_json() == {
        "protocol": "set",
        "k": 3,
        "n": 2,
        "inputs": [1, 0],
        "tape": [{"shift": 2}, {"shift": 1}],
        "output": [0, 1],
        "transcript": [
            {"step": "step2b:i=2", "row": 2, "pattern": "HHC"},
            {"step": "step4", "row": 3, "pattern": "CHH"},
            {"step": "step5", "row": 1, "pattern": "CCH"},
        ],
        "shuffles_used": 2,
    }
    assert format_output(r.output) == "{0,1}"


def test_overwrite_all_hearts_exchanges_rows():
    m = CardMatrix([parse_sequence("CHH"), parse_sequence("HHH")]).turn_row(2)
    out = overwrite_step(m, 2, Suit.HEART)
    assert out.suit_rows() == ["HHH", "CHH"]
    assert [c.facing for c in out.row(1)] == [Facing.UP] * 3


def test_overwrite_single_club():
    m = CardMatrix([parse_sequence("CHH"), parse_sequence("HCH")]).turn_row(2)
    out = overwrite_step(m, 2, Suit.CLUB)
    assert out.suit_rows() == ["CCH", "HHH"]
    assert out[1, 2].face_up and not out[2, 2].face_up and out[1, 1].facing is Facing.DOWN


def test_overwrite_same_column_clubs_leaves_row_one_pattern():
    m = build_matrix(InputVector((2, 2), 4)).turn_row(2)
    assert overwrite_step(m, 2, Suit.HEART).suit_rows()[0] == "HHCH"


def test_overwrite_checks_facing():
    m = build_matrix(InputVector((0, 1), 2))
    with pytest.raises(ProtocolStateError):
        overwrite_step(m, 2, Suit.CLUB)
    with pytest.raises(ProtocolStateError):
        overwrite_step(m.turn_row(2).turn_row(1), 2, Suit.CLUB)
    with pytest.raises(ProtocolStateError):
        overwrite_step(m.turn_row(1), 1, Suit.CLUB)


@pytest.mark.parametrize(
    "protocol, k, n, expected",
    [("equality", 6, 5, (30, 5)), ("set", 3, 2, (9, 2)), ("binary-baseline", 5, 3, (18, 8)), ("set-size", 4, 2, (8, 2))],
)
def test_cost_model_examples(protocol, k, n, expected):
    assert cost_model(protocol, k, n) == expected


def test_cost_model_rejects_bad_arguments():
    with pytest.raises(ValueError):
        cost_model("equality", 1, 3)
    with pytest.raises(ValueError):
        cost_model("majority", 3, 3)


@pytest.mark.parametrize("name", sorted(PROTOCOLS))
def test_shuffle_accounting_matches_cost_model(name):
    rnd = random.Random(11)
    for _ in range(50):
        inputs, source = random_case(rnd, name)
        run = PROTOCOLS[name].run(inputs, source)
        assert run.shuffles_used == cost_model(name, inputs.k, inputs.n)[1] == inputs.n
        clubs = run.final_matrix.count(Suit.CLUB)
        cards = run.final_matrix.rows * run.final_matrix.cols
        assert cards == cost_model(name, inputs.k, inputs.n)[0]
        assert clubs == (inputs.n + 1 if name == "set" else inputs.n)
