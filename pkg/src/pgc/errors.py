"""Exception taxonomy shared across the engine.

Protocol failures that a peer must hear about are raised as AbortError and
mirrored onto the wire as abort frames; everything else is a local usage or
format error.
"""

from __future__ import annotations


class PgcError(Exception):
    """Base class for every error raised by this package."""


class CircuitFormatError(PgcError):
    """Text-format circuit could not be parsed."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, col {column}: {message}" if line else message)
        self.line = line
        self.column = column


class CircuitValidationError(PgcError):
    """Structurally invalid circuit (bad wire refs, non-topological order, ...)."""


class GarblingError(PgcError):
    """Garbling-layer misuse: bad label sizes, free-XOR violation, unknown wires."""


class CorruptGateError(PgcError):
    """A garbled row failed its validity pad during evaluation."""

    def __init__(self, gate_id: int, message: str = ""):
        super().__init__(message or f"gate {gate_id}: row validity pad nonzero")
        self.gate_id = gate_id


class OTError(PgcError):
    """Oblivious-transfer failure (malformed matrix, count mismatch, bad opening)."""


class CommitmentError(PgcError):
    """Label commitment failed to verify."""


class StateFormatError(PgcError):
    """Persisted key or saved-wire file is malformed or version-incompatible."""


class StateMissingError(PgcError):
    """Chain step requested but no prior execution state exists."""


class FrameFormatError(PgcError):
    """Transport frame violates the wire format (bad length, phase, truncation)."""


class ConfigMismatchError(PgcError):
    """Parties disagree on the execution configuration digest."""


class AbortError(PgcError):
    """Protocol-level abort: cheating detected or an unrecoverable mismatch.

    phase is 1..7, circuit_index is -1 when not circuit-specific, remote is
    True when the abort was received from a peer rather than raised locally.
    """

    def __init__(self, phase: int, reason: str, circuit_index: int = -1,
                 remote: bool = False):
        where = f"phase {phase}"
        if circuit_index >= 0:
            where += f", circuit {circuit_index}"
        super().__init__(f"abort at {where}: {reason}")
        self.phase = phase
        self.reason = reason
        self.circuit_index = circuit_index
        self.remote = remote
