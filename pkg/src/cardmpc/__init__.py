"""Simulator, verifier and security auditor for card-based equality, set-size and set protocols."""
from .audit import (
    AuditReport,
    BudgetExceededError,
    CorrectnessReport,
    TranscriptDistribution,
    check_security,
    check_security_sampled,
    transcript_distribution,
    verify_correctness,
)
from .cards import Card, CardError, CardMatrix, Facing, InputVector, Suit, build_matrix, decode, encode
from .invariants import InvariantMonitor, check_run_invariants
from .oracles import oracle_equality, oracle_set, oracle_set_size
from .protocols import (
    PROTOCOLS,
    ProtocolRun,
    ProtocolStateError,
    RevealEvent,
    Transcript,
    cost_model,
    overwrite_step,
    run_equality,
    run_set,
    run_set_size,
)
from .shuffles import (
    EnumerationSource,
    RandomnessTape,
    Scramble,
    SeededSource,
    Shift,
    ShuffleError,
    ShuffleKind,
    TapeUnderrunError,
    draw_uniform,
    enumerate_tapes,
    pile_scramble,
    pile_shift,
)

__version__ = "0.1.0"
