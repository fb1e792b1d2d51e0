"""Garbled-gate construction and evaluation.

Labels are K-bit byte strings (whole bytes, unused high bits zero). Wires are
"regular" when their two labels differ by the circuit-wide delta; those use
bit 0 as the permutation bit and XOR/NOT gates on them are free. Wires whose
label pair is fixed externally from per-circuit hashes (evaluator inputs)
cannot satisfy the delta relation, so they carry a seed-derived permutation-bit
location instead and every gate consuming them is garbled as a full table.

Non-free gates hold 4 rows of len(label)+1 bytes: row = H(la, lb, gate_id) XOR
(out_label || 0x00); the trailing zero byte is the validity pad checked during
evaluation. Gates whose two inputs are the same wire can only ever produce two
of the four row indices; the unreachable rows are filled with seed-derived
filler so regeneration from the seed is byte-exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .circuit import CircuitIR
from .errors import CorruptGateError, GarblingError
from .primitives import get_bit, thash, xor_bytes

DEFAULT_K = 80


def label_len(k: int) -> int:
    return (k + 7) // 8


def mask_label(data: bytes, k: int) -> bytes:
    """Zero any bits at positions >= k in the final byte."""
    rem = k & 7
    if rem == 0:
        return data
    out = bytearray(data)
    out[-1] &= (1 << rem) - 1
    return bytes(out)


def derive_delta(seed: bytes, k: int) -> bytes:
    d = mask_label(thash(label_len(k), b"delta", seed), k)
    if not get_bit(d, 0):
        d = bytes([d[0] | 1]) + d[1:]
    return d


def derive_wire_label(seed: bytes, wire: int, k: int) -> bytes:
    return mask_label(
        thash(label_len(k), b"label0", seed, struct.pack(">I", wire)), k)


def pp_location_for_pair(seed: bytes, tag: bytes, l0: bytes, l1: bytes,
                         k: int) -> int:
    """Pseudorandom bit position where the two labels differ.

    Uniform over the differing positions, seeded by (seed, tag); equivalent to
    taking the first differing index of a seeded permutation of 0..k-1.
    """
    if l0 == l1:
        raise GarblingError("label pair collision: cannot place permutation bit")
    d = int.from_bytes(l0, "little") ^ int.from_bytes(l1, "little")
    positions = []
    i = 0
    while d:
        if d & 1:
            positions.append(i)
        d >>= 1
        i += 1
    idx = int.from_bytes(thash(4, b"pp-loc", seed, tag), "big") % len(positions)
    return positions[idx]


@dataclass(slots=True)
class GarblingContext:
    """All wire label pairs of one circuit, derived from one seed."""
    seed: bytes
    k: int
    delta: bytes
    label0: list[bytes]
    label1: list[bytes]
    pp_loc: list[int]
    regular: list[bool]

    def label_for(self, wire: int, bit: int) -> bytes:
        return self.label1[wire] if bit else self.label0[wire]

    def pair(self, wire: int) -> tuple[bytes, bytes]:
        return self.label0[wire], self.label1[wire]

    def decode_bit(self, wire: int) -> int:
        """Permutation bit of the 0-label; XOR with a held label's permutation
        bit to decode its plaintext value."""
        return get_bit(self.label0[wire], self.pp_loc[wire])


def derive_context(seed: bytes, c: CircuitIR, k: int = DEFAULT_K,
                   injected: dict[int, tuple[bytes, bytes]] | None = None,
                   injected_regular: dict[int, tuple[bytes, bytes]] | None = None,
                   ) -> GarblingContext:
    """Deterministically expand a circuit seed into every wire's label pair.

    injected: externally fixed pairs (evaluator-input wires); these get a
    seed-derived permutation-bit location. injected_regular: externally fixed
    pairs claimed to obey free-XOR; rejected unless label1 = label0 XOR delta.
    Generator-input and partial-input wires not injected are derived from the
    seed, partial pairs being the GIn pairs the partial-value layer exports.
    """
    injected = injected or {}
    injected_regular = injected_regular or {}
    ll = label_len(k)
    delta = derive_delta(seed, k)
    n = c.wire_count
    label0: list[bytes] = [b""] * n
    label1: list[bytes] = [b""] * n
    pp_loc: list[int] = [0] * n
    regular: list[bool] = [True] * n

    for w in range(c.input_count):
        if w in injected:
            l0, l1 = injected[w]
            if len(l0) != ll or len(l1) != ll:
                raise GarblingError(f"wire {w}: injected label length != {ll}")
            label0[w], label1[w] = l0, l1
            if xor_bytes(l0, l1) != delta:
                regular[w] = False
                pp_loc[w] = pp_location_for_pair(
                    seed, b"inj" + struct.pack(">I", w), l0, l1, k)
        elif w in injected_regular:
            l0, l1 = injected_regular[w]
            if len(l0) != ll or len(l1) != ll:
                raise GarblingError(f"wire {w}: injected label length != {ll}")
            if xor_bytes(l0, l1) != delta:
                raise GarblingError(
                    f"wire {w}: injected label pair must differ by delta")
            label0[w], label1[w] = l0, l1
        else:
            l0 = derive_wire_label(seed, w, k)
            label0[w] = l0
            label1[w] = xor_bytes(l0, delta)

    for g in c.gates:
        w = g.out
        if g.op == "NOT":
            label0[w], label1[w] = label1[g.a], label0[g.a]
            pp_loc[w] = pp_loc[g.a]
            regular[w] = regular[g.a]
        elif g.op == "XOR" and regular[g.a] and regular[g.b]:
            l0 = xor_bytes(label0[g.a], label0[g.b])
            label0[w] = l0
            label1[w] = xor_bytes(l0, delta)
        else:
            l0 = derive_wire_label(seed, w, k)
            label0[w] = l0
            label1[w] = xor_bytes(l0, delta)
    return GarblingContext(seed, k, delta, label0, label1, pp_loc, regular)


def gate_is_free(ctx: GarblingContext, gate) -> bool:
    if gate.op == "NOT":
        return True
    return gate.op == "XOR" and ctx.regular[gate.a] and ctx.regular[gate.b]


def _row_pad(ctx: GarblingContext, gate_id: int, row: int, size: int) -> bytes:
    return thash(size, b"junk-row", ctx.seed, struct.pack(">IB", gate_id, row))


def garble_gate(ctx: GarblingContext, gate) -> bytes:
    """Encode one gate: gate_id (4B BE), row count (1B), rows."""
    if gate_is_free(ctx, gate):
        return struct.pack(">IB", gate.out, 0)
    ll = label_len(ctx.k)
    rows: list[bytes | None] = [None] * 4
    a, b = gate.a, gate.b
    loc_a, loc_b = ctx.pp_loc[a], ctx.pp_loc[b]
    gid = struct.pack(">I", gate.out)
    for va in (0, 1):
        la = ctx.label_for(a, va)
        for vb in (0, 1):
            if a == b and va != vb:
                continue  # same source wire can never present differing bits
            lb = ctx.label_for(b, vb)
            if gate.op == "AND":
                v = va & vb
            elif gate.op == "XOR":
                v = va ^ vb
            else:
                raise GarblingError(f"cannot garble op {gate.op!r}")
            idx = (get_bit(la, loc_a) << 1) | get_bit(lb, loc_b)
            plain = ctx.label_for(gate.out, v) + b"\x00"
            mask = thash(ll + 1, b"row", la, lb, gid)
            if rows[idx] is not None:
                raise GarblingError(f"gate {gate.out}: permutation-bit collision")
            rows[idx] = xor_bytes(mask, plain)
    out = [struct.pack(">IB", gate.out, 4)]
    for i in range(4):
        out.append(rows[i] if rows[i] is not None
                   else _row_pad(ctx, gate.out, i, ll + 1))
    return b"".join(out)


def garble_circuit(ctx: GarblingContext, c: CircuitIR) -> bytes:
    """Concatenated gate records in circuit order (free gates as 0-row records)."""
    return b"".join(garble_gate(ctx, g) for g in c.gates)


def verify_gate(expected: bytes, received: bytes) -> bool:
    """Check-circuit comparison: regenerated record must match byte for byte."""
    return expected == received


def parse_gate_stream(data: bytes, k: int) -> list[tuple[int, list[bytes]]]:
    """Split a stream into (gate_id, rows) records; validates sizes."""
    ll = label_len(k)
    out = []
    off = 0
    n = len(data)
    while off < n:
        if off + 5 > n:
            raise GarblingError("truncated gate record header")
        gid, count = struct.unpack_from(">IB", data, off)
        off += 5
        if count not in (0, 2, 4):
            raise GarblingError(f"gate {gid}: bad row count {count}")
        need = count * (ll + 1)
        if off + need > n:
            raise GarblingError(f"gate {gid}: truncated rows")
        rows = [data[off + i * (ll + 1): off + (i + 1) * (ll + 1)]
                for i in range(count)]
        off += need
        out.append((gid, rows))
    return out


def evaluate_gate(gate, rows: list[bytes], la: bytes, lb: bytes,
                  loc_a: int, loc_b: int, k: int) -> bytes:
    """Produce the output label for one gate from held input labels."""
    if gate.op == "NOT":
        return la
    if not rows:
        if gate.op != "XOR":
            raise CorruptGateError(gate.out, f"gate {gate.out}: missing rows")
        return xor_bytes(la, lb)
    ll = label_len(k)
    idx = (get_bit(la, loc_a) << 1) | get_bit(lb, loc_b)
    mask = thash(ll + 1, b"row", la, lb, struct.pack(">I", gate.out))
    plain = xor_bytes(mask, rows[idx])
    if plain[-1] != 0:
        raise CorruptGateError(gate.out)
    return plain[:-1]


def evaluate_circuit(c: CircuitIR, stream: bytes, input_labels: list[bytes],
                     pp_locs: dict[int, int], k: int) -> list[bytes]:
    """Evaluate every gate; returns one held label per wire.

    input_labels covers wires 0..input_count-1 in order; pp_locs carries the
    permutation-bit locations of irregular (evaluator-input) wires.
    """
    if len(input_labels) != c.input_count:
        raise GarblingError("input label count mismatch")
    records = parse_gate_stream(stream, k)
    if len(records) != len(c.gates):
        raise GarblingError(
            f"stream has {len(records)} gates, circuit has {len(c.gates)}")
    labels: list[bytes] = list(input_labels)
    loc = [0] * c.wire_count
    for w, l in pp_locs.items():
        loc[w] = l
    for g, (gid, rows) in zip(c.gates, records):
        if gid != g.out:
            raise GarblingError(f"stream gate id {gid} != circuit gate {g.out}")
        la = labels[g.a]
        lb = labels[g.b] if g.b != -1 else la
        labels.append(evaluate_gate(g, rows, la, lb, loc[g.a],
                                    loc[g.b] if g.b != -1 else 0, k))
        if g.op == "NOT":
            loc[g.out] = loc[g.a]  # NOT passes labels through, irregularity too
    return labels
