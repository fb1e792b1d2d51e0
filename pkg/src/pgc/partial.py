"""Garbled wire reuse: saving output labels and remapping them as inputs.

After an execution the generator keeps both labels of every saved wire and the
cloud keeps what it legitimately has (the single evaluated label on evaluation
circuits, both labels on check circuits). The next circuit consumes them
through partial input gates: a two-row table per wire translating a blinded
hash of the old label into the new circuit's label for the same plaintext bit.
Check circuits regenerate the tables byte-for-byte; evaluation circuits
decrypt one row. Semi-honest mode replaces the tables with plain XOR offsets.

State is persisted per party in a versioned binary file; key material is
embedded as the cut-and-choose key-file blob.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache

from .cutchoose import (ROLE_CLD, ROLE_EVL, ROLE_GEN, CircuitSplit,
                        decode_key_file, encode_key_file)
from .errors import (AbortError, GarblingError, StateFormatError,
                     StateMissingError)
from .garbling import label_len, mask_label
from .primitives import (RandomSource, bits_to_bytes, bytes_to_bits, get_bit,
                         thash, xor_bytes)

STATE_MAGIC = b"PGCS"
STATE_VERSION = 1


def partial_label(pout: bytes, r: bytes, circuit: int, wire: int, k: int) -> bytes:
    """Blinded translation of a saved label: hash(pout XOR r) tweaked per wire."""
    return mask_label(
        thash(label_len(k), b"partial", xor_bytes(pout, r),
              struct.pack(">II", circuit, wire)), k)


@lru_cache(maxsize=16384)
def _pp_order(perm_seed: bytes, k: int) -> tuple[int, ...]:
    # pure in its arguments; cached because the cloud re-derives the same
    # permutation the generator used when it audits a check circuit
    return tuple(RandomSource(perm_seed).shuffled(list(range(k))))


def set_pp_bit_gen(t0: bytes, t1: bytes, seed: bytes, wire: int,
                   k: int) -> tuple[bytes, bytes, int]:
    """Pick the permutation-bit location for a fresh pair: the first position,
    in a permutation of 0..k-1 seeded by (seed, wire), where t0 and t1 differ."""
    if t0 == t1:
        raise GarblingError(
            f"saved-wire hash collision on wire {wire}: cannot place permutation bit")
    order = _pp_order(thash(32, b"pp-perm", seed, struct.pack(">I", wire)), k)
    for loc in order:
        if get_bit(t0, loc) != get_bit(t1, loc):
            return t0, t1, loc
    raise GarblingError("unreachable: differing labels with no differing bit")


@dataclass(slots=True)
class PartialInputGate:
    loc: int
    rows: tuple[bytes, bytes]  # indexed by the permutation bit of PIn


def generate_partial_input_gates(pout_pairs: list[tuple[bytes, bytes]],
                                 gin_pairs: list[tuple[bytes, bytes]],
                                 r: bytes, seed: bytes, circuit: int, k: int,
                                 delta: bytes | None = None
                                 ) -> list[PartialInputGate]:
    """Build one translation gate per saved wire.

    gin_pairs are the new circuit's label pairs for the partial input wires;
    when delta is given they are checked against the new circuit's XOR offset.
    """
    if len(pout_pairs) != len(gin_pairs):
        raise GarblingError("saved wire count does not match new input count")
    gates = []
    for j, ((p0, p1), (g0, g1)) in enumerate(zip(pout_pairs, gin_pairs)):
        if delta is not None and xor_bytes(g0, delta) != g1:
            raise GarblingError(f"new input pair {j} does not obey the XOR offset")
        t0 = partial_label(p0, r, circuit, j, k)
        t1 = partial_label(p1, r, circuit, j, k)
        pin0, pin1, loc = set_pp_bit_gen(t0, t1, seed, j, k)
        rows: list[bytes] = [b"", b""]
        rows[get_bit(pin0, loc)] = xor_bytes(g0, pin0)
        rows[get_bit(pin1, loc)] = xor_bytes(g1, pin1)
        gates.append(PartialInputGate(loc, (rows[0], rows[1])))
    return gates


def evaluate_partial_input_gate(pout: bytes, gate: PartialInputGate, r: bytes,
                                circuit: int, wire: int, k: int) -> bytes:
    pin = partial_label(pout, r, circuit, wire, k)
    return xor_bytes(gate.rows[get_bit(pin, gate.loc)], pin)


def check_partial_input_gates(pout_pairs: list[tuple[bytes, bytes]],
                              gin_pairs: list[tuple[bytes, bytes]],
                              r: bytes, seed: bytes, circuit: int, k: int,
                              received: list[PartialInputGate]) -> None:
    """Cloud-side check-circuit verification: regenerate and compare exactly."""
    if len(received) != len(pout_pairs):
        raise AbortError(4, "partial gate count mismatch", circuit_index=circuit)
    expected = generate_partial_input_gates(pout_pairs, gin_pairs, r, seed,
                                            circuit, k)
    for j, (want, got) in enumerate(zip(expected, received)):
        if want.loc != got.loc or want.rows != got.rows:
            raise AbortError(4, f"partial gate mismatch at wire {j}",
                             circuit_index=circuit)


def encode_partial_gates(r: bytes, gates: list[PartialInputGate],
                         k: int) -> bytes:
    ll = label_len(k)
    out = bytearray(r)
    out += struct.pack(">I", len(gates))
    for g in gates:
        if len(g.rows[0]) != ll or len(g.rows[1]) != ll or not 0 <= g.loc < k:
            raise StateFormatError("partial gate fields out of range")
        out.append(g.loc)
        out += g.rows[0] + g.rows[1]
    return bytes(out)


def decode_partial_gates(data: bytes, k: int) -> tuple[bytes, list[PartialInputGate]]:
    ll = label_len(k)
    if len(data) < ll + 4:
        raise StateFormatError("partial gate batch truncated")
    r = data[:ll]
    (count,) = struct.unpack_from(">I", data, ll)
    rec = 1 + 2 * ll
    if len(data) != ll + 4 + count * rec:
        raise StateFormatError("partial gate batch has wrong size")
    gates = []
    for j in range(count):
        off = ll + 4 + j * rec
        loc = data[off]
        if loc >= k:
            raise StateFormatError("partial gate location out of range")
        gates.append(PartialInputGate(
            loc, (data[off + 1:off + 1 + ll], data[off + 1 + ll:off + rec])))
    return r, gates


def build_remap_msgs(prev_pair: tuple[bytes, bytes],
                     new_pair: tuple[bytes, bytes],
                     loc: int = 0) -> tuple[bytes, bytes]:
    """Semi-honest translation offsets, indexed by the old label's permutation
    bit at loc (0 for ordinary wires, stored location for input-derived ones)."""
    msgs: list[bytes] = [b"", b""]
    b0 = get_bit(prev_pair[0], loc)
    if get_bit(prev_pair[1], loc) == b0:
        raise GarblingError(f"old label pair does not differ at bit {loc}")
    msgs[b0] = xor_bytes(prev_pair[0], new_pair[0])
    msgs[b0 ^ 1] = xor_bytes(prev_pair[1], new_pair[1])
    return msgs[0], msgs[1]


def semi_honest_remap(w_prev: bytes, pair_msgs: tuple[bytes, bytes],
                      loc: int = 0) -> bytes:
    return xor_bytes(w_prev, pair_msgs[get_bit(w_prev, loc)])


@dataclass(slots=True)
class SavedWireRecord:
    """One saved wire: whichever labels this party may hold, plus the wire's
    permutation-bit location (nonzero only for input-derived pairs)."""
    label0: bytes | None = None
    label1: bytes | None = None
    loc: int = 0

    def pair(self) -> tuple[bytes, bytes]:
        if self.label0 is None or self.label1 is None:
            raise StateMissingError("record does not hold both labels")
        return self.label0, self.label1

    def single(self) -> bytes:
        if self.label0 is not None and self.label1 is None:
            return self.label0
        if self.label1 is not None and self.label0 is None:
            return self.label1
        raise StateMissingError("record does not hold exactly one label")


@dataclass
class SavedState:
    """Everything one party carries between executions of a chain."""
    role: int
    t: int                      # completed executions; next execution id
    s: int
    k: int
    semi_honest: bool = False
    poisoned: bool = False
    split: CircuitSplit = field(default_factory=lambda: CircuitSplit([]))
    key_pairs: list[tuple[bytes, bytes]] | None = None       # generator
    key_selected: list[tuple[int, bytes]] | None = None      # cloud
    wires: list[list[SavedWireRecord]] = field(default_factory=list)

    def validate(self) -> None:
        if self.role not in (ROLE_GEN, ROLE_EVL, ROLE_CLD):
            raise StateFormatError(f"unknown role {self.role}")
        if self.split.s != self.s:
            raise StateFormatError("split length does not match circuit count")
        self.split.validate()
        if self.role == ROLE_GEN and not self.semi_honest:
            if self.key_pairs is None or len(self.key_pairs) != self.s:
                raise StateFormatError("generator state needs one key pair per circuit")
        if self.role == ROLE_CLD and not self.semi_honest:
            if self.key_selected is None or len(self.key_selected) != self.s:
                raise StateFormatError("cloud state needs one selected key per circuit")
            for (b, _), sb in zip(self.key_selected, self.split.selection):
                if b != sb:
                    raise StateFormatError("selected-key bits disagree with split")
        if self.wires and len(self.wires) != self.s:
            raise StateFormatError("wire section must cover every circuit")
        counts = {len(recs) for recs in self.wires}
        if len(counts) > 1:
            raise StateFormatError("saved wire counts differ across circuits")

    @property
    def saved_wire_count(self) -> int:
        return len(self.wires[0]) if self.wires else 0


def encode_state(st: SavedState) -> bytes:
    st.validate()
    ll = label_len(st.k)
    out = bytearray(STATE_MAGIC)
    out += struct.pack(">BBIIBB", STATE_VERSION, st.role, st.t, st.s, st.k,
                       (1 if st.poisoned else 0) | (2 if st.semi_honest else 0))
    out += bits_to_bytes(st.split.selection)
    if st.semi_honest or st.role == ROLE_EVL:
        key_blob = b""
    else:
        key_blob = encode_key_file(st.role, st.split, ll,
                                   pairs=st.key_pairs, selected=st.key_selected)
    out += struct.pack(">I", len(key_blob))
    out += key_blob
    for recs in st.wires:
        out += struct.pack(">I", len(recs))
        for rec in recs:
            flags = (1 if rec.label0 is not None else 0) | \
                    (2 if rec.label1 is not None else 0)
            out += bytes([flags, rec.loc])
            out += (rec.label0 or b"\x00" * ll) + (rec.label1 or b"\x00" * ll)
    return bytes(out)


def decode_state(data: bytes) -> SavedState:
    if len(data) < 4 or data[:4] != STATE_MAGIC:
        raise StateFormatError("bad state magic")
    if len(data) < 16:
        raise StateFormatError("state header truncated")
    version, role, t, s, k, flags = struct.unpack_from(">BBIIBB", data, 4)
    if version != STATE_VERSION:
        raise StateFormatError(f"unsupported state version {version}")
    off = 16
    sb = (s + 7) // 8
    if len(data) < off + sb + 4:
        raise StateFormatError("state split section truncated")
    split = CircuitSplit(bytes_to_bits(data[off:off + sb], s))
    off += sb
    (key_len,) = struct.unpack_from(">I", data, off)
    off += 4
    if len(data) < off + key_len:
        raise StateFormatError("state key section truncated")
    key_blob = data[off:off + key_len]
    off += key_len
    pairs = selected = None
    if key_blob:
        krole, ksplit, pairs, selected = decode_key_file(key_blob)
        if krole != role or ksplit.selection != split.selection:
            raise StateFormatError("key section disagrees with state header")
    st = SavedState(role=role, t=t, s=s, k=k,
                    semi_honest=bool(flags & 2), poisoned=bool(flags & 1),
                    split=split, key_pairs=pairs, key_selected=selected)
    ll = label_len(k)
    rec_size = 2 + 2 * ll
    wires: list[list[SavedWireRecord]] = []
    while off < len(data):
        if len(data) < off + 4:
            raise StateFormatError("wire section truncated")
        (count,) = struct.unpack_from(">I", data, off)
        off += 4
        if len(data) < off + count * rec_size:
            raise StateFormatError("wire records truncated")
        recs = []
        for _ in range(count):
            rflags, loc = data[off], data[off + 1]
            if rflags > 3 or loc >= k:
                raise StateFormatError("wire record fields out of range")
            l0 = data[off + 2:off + 2 + ll]
            l1 = data[off + 2 + ll:off + rec_size]
            recs.append(SavedWireRecord(
                l0 if rflags & 1 else None, l1 if rflags & 2 else None, loc))
            off += rec_size
        wires.append(recs)
    if wires and len(wires) != s:
        raise StateFormatError("wire section must cover every circuit")
    st.wires = wires
    st.validate()
    return st


def persist_state(path: str, st: SavedState) -> None:
    blob = encode_state(st)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(blob)
    os.replace(tmp, path)


def load_state(path: str) -> SavedState:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except FileNotFoundError:
        raise StateMissingError(
            f"no prior execution: state file {path} not found") from None
    return decode_state(data)
