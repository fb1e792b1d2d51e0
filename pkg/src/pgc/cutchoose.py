"""Circuit-split selection, per-circuit key pairs, split verification, evolution.

The cloud picks which circuits it will open (check) versus evaluate, and
obliviously fetches one key per circuit from the generator: the evaluation key
unlocks the generator's garbled input, the check key unlocks the circuit seed
plus every possible evaluator input. The generator never learns the split; the
evaluator learns it by comparing key hashes from both peers.

After the first execution the same split is reused and both sides evolve their
keys by hashing, so no further key transfers are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import AbortError, OTError, StateFormatError
from .primitives import RandomSource, bits_to_bytes, bytes_to_bits, thash

MAGIC = b"PGC1"
ROLE_GEN, ROLE_EVL, ROLE_CLD = 0, 1, 2


def eval_count(s: int) -> int:
    return (2 * s) // 5


@dataclass
class CircuitSplit:
    """selection[i] = 0 for evaluation circuits, 1 for check circuits."""

    selection: list[int]

    @property
    def s(self) -> int:
        return len(self.selection)

    @property
    def n_eval(self) -> int:
        return self.selection.count(0)

    @property
    def n_check(self) -> int:
        return self.selection.count(1)

    def validate(self) -> None:
        if any(b not in (0, 1) for b in self.selection):
            raise StateFormatError("split bits must be 0 or 1")


def select_split(s: int, rng: RandomSource) -> CircuitSplit:
    """Uniform split with exactly floor(2s/5) evaluation circuits."""
    if s < 5:
        raise ValueError(f"need at least 5 circuits for a split, got {s}")
    n = eval_count(s)
    return CircuitSplit(rng.shuffled([0] * n + [1] * (s - n)))


def key_bytes(k: int) -> int:
    return (k + 7) // 8


def fresh_key_pairs(s: int, k: int, rng: RandomSource) -> list[tuple[bytes, bytes]]:
    """(eval_key, check_key) per circuit, index matching the OT choice bit."""
    kb = key_bytes(k)
    return [(rng.bytes(kb), rng.bytes(kb)) for _ in range(s)]


def key_pad(key: bytes, length: int, tag: bytes) -> bytes:
    """One-time pad stretched from a circuit key; tag separates payload kinds."""
    return thash(length, b"key-pad", key, tag)


# Key transfer runs as one base-OT batch per execution chain: circuit counts
# are small, and with a dealer provider the sender's recorded view is the
# offered pairs alone, byte-identical whatever split the cloud picked.
def cut_and_choose_ot_send(chan, provider, key_pairs) -> None:
    try:
        provider.base_sender(chan, key_pairs)
    except OTError as e:
        raise AbortError(1, f"circuit-key transfer failed: {e}") from e


def cut_and_choose_ot_recv(chan, provider, split: CircuitSplit,
                           k: int) -> list[bytes]:
    try:
        return provider.base_receiver(chan, split.selection, key_bytes(k))
    except OTError as e:
        raise AbortError(1, f"circuit-key transfer failed: {e}") from e


def split_key_hash(key: bytes) -> bytes:
    return thash(32, b"split-key-hash", key)


def gen_hash_pairs(key_pairs: list[tuple[bytes, bytes]]) -> list[tuple[bytes, bytes]]:
    """Hash pair per circuit, index matching the selection-bit semantics."""
    return [(split_key_hash(ek), split_key_hash(ck)) for ek, ck in key_pairs]


def verify_split_hashes(gen_pairs: list[tuple[bytes, bytes]],
                        cloud_hashes: list[bytes],
                        cloud_bits: list[int]) -> CircuitSplit:
    """Evaluator-side: accept the cloud's claimed split iff each claimed key
    hashes to the matching half of the generator's pair."""
    if not (len(gen_pairs) == len(cloud_hashes) == len(cloud_bits)):
        raise AbortError(1, "split hash count mismatch")
    for i, (pair, h, b) in enumerate(zip(gen_pairs, cloud_hashes, cloud_bits)):
        if b not in (0, 1):
            raise AbortError(1, "split bit out of range", circuit_index=i)
        if pair[b] != h:
            raise AbortError(1, "split hash mismatch", circuit_index=i)
    return CircuitSplit(list(cloud_bits))


def evolve_key(key: bytes) -> bytes:
    return thash(len(key), b"key-evolve", key)


def evolve_key_pairs(pairs: list[tuple[bytes, bytes]]) -> list[tuple[bytes, bytes]]:
    return [(evolve_key(ek), evolve_key(ck)) for ek, ck in pairs]


def evolve_selected(selected: list[tuple[int, bytes]]) -> list[tuple[int, bytes]]:
    return [(b, evolve_key(key)) for b, key in selected]


# key file: magic, role, S, split bits, key byte-length, key records
def encode_key_file(role: int, split: CircuitSplit, klen: int,
                    pairs: list[tuple[bytes, bytes]] | None = None,
                    selected: list[tuple[int, bytes]] | None = None) -> bytes:
    out = bytearray(MAGIC)
    out.append(role)
    out += split.s.to_bytes(4, "big")
    out += bits_to_bytes(split.selection)
    out.append(klen)
    if role == ROLE_GEN:
        if pairs is None or len(pairs) != split.s:
            raise StateFormatError("generator key file needs one pair per circuit")
        for ek, ck in pairs:
            out += ek + ck
    elif role == ROLE_CLD:
        if selected is None or len(selected) != split.s:
            raise StateFormatError("cloud key file needs one selected key per circuit")
        for b, key in selected:
            out.append(b)
            out += key
    elif role != ROLE_EVL:
        raise StateFormatError(f"unknown role {role}")
    return bytes(out)


def decode_key_file(data: bytes) -> tuple[int, CircuitSplit,
                                          list[tuple[bytes, bytes]] | None,
                                          list[tuple[int, bytes]] | None]:
    """Returns (role, split, pairs, selected); missing sections are None."""
    if len(data) < 10 or data[:4] != MAGIC:
        raise StateFormatError("bad key file magic")
    role = data[4]
    s = int.from_bytes(data[5:9], "big")
    sb = (s + 7) // 8
    off = 9 + sb
    if len(data) < off + 1:
        raise StateFormatError("key file truncated before key section")
    split = CircuitSplit(bytes_to_bits(data[9:9 + sb], s))
    klen = data[off]
    off += 1
    body = data[off:]
    if role == ROLE_GEN:
        if len(body) != 2 * klen * s:
            raise StateFormatError("generator key section has wrong size")
        pairs = [(body[i * 2 * klen:i * 2 * klen + klen],
                  body[i * 2 * klen + klen:(i + 1) * 2 * klen])
                 for i in range(s)]
        return role, split, pairs, None
    if role == ROLE_CLD:
        if len(body) != (1 + klen) * s:
            raise StateFormatError("cloud key section has wrong size")
        selected = []
        for i in range(s):
            rec = body[i * (1 + klen):(i + 1) * (1 + klen)]
            if rec[0] not in (0, 1):
                raise StateFormatError("cloud key record has bad selection bit")
            selected.append((rec[0], rec[1:]))
        return role, split, None, selected
    if role == ROLE_EVL:
        if body:
            raise StateFormatError("evaluator key section must be empty")
        return role, split, None, None
    raise StateFormatError(f"unknown role {role}")
