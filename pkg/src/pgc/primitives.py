"""Byte-level primitives: tweakable hashing, PRG expansion, bit access, MAC.

Every derived value in the protocol comes from thash()/prg_bytes() under a
distinct domain string, so transcripts from different subsystems can never
collide. Labels are plain bytes; bit i of a byte string is bit (i % 8) of
byte (i // 8), LSB first.
"""

from __future__ import annotations

import hashlib
import secrets
import struct


def thash(out_len: int, domain: bytes, *parts: bytes) -> bytes:
    """Domain-separated hash with arbitrary output length.

    Parts are length-prefixed before hashing so (b"ab", b"c") and (b"a", b"bc")
    digest differently. Output beyond one SHA-256 block is counter-expanded.
    """
    h = hashlib.sha256()
    h.update(struct.pack(">B", len(domain)))
    h.update(domain)
    for p in parts:
        h.update(struct.pack(">I", len(p)))
        h.update(p)
    seed = h.digest()
    if out_len <= 32:
        return seed[:out_len]
    out = bytearray()
    ctr = 0
    while len(out) < out_len:
        out += hashlib.sha256(seed + struct.pack(">I", ctr)).digest()
        ctr += 1
    return bytes(out[:out_len])


def prg_bytes(seed: bytes, out_len: int, domain: bytes = b"prg") -> bytes:
    """Deterministic expansion of a seed; same contract as thash."""
    return thash(out_len, domain, seed)


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"xor length mismatch: {len(a)} vs {len(b)}")
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(
        len(a), "little")


def get_bit(data: bytes, index: int) -> int:
    return (data[index >> 3] >> (index & 7)) & 1


def set_bit(data: bytes, index: int, value: int) -> bytes:
    out = bytearray(data)
    if value:
        out[index >> 3] |= 1 << (index & 7)
    else:
        out[index >> 3] &= ~(1 << (index & 7)) & 0xFF
    return bytes(out)


def bits_to_bytes(bits: list[int]) -> bytes:
    out = bytearray((len(bits) + 7) // 8)
    for i, b in enumerate(bits):
        if b:
            out[i >> 3] |= 1 << (i & 7)
    return bytes(out)


def bytes_to_bits(data: bytes, count: int) -> list[int]:
    return [get_bit(data, i) for i in range(count)]


def int_to_bits(value: int, width: int) -> list[int]:
    """Little-endian bit vector of a nonnegative integer."""
    return [(value >> i) & 1 for i in range(width)]


def bits_to_int(bits: list[int]) -> int:
    out = 0
    for i, b in enumerate(bits):
        out |= (b & 1) << i
    return out


class RandomSource:
    """Seedable randomness: deterministic streams for tests, OS entropy otherwise.

    Deterministic mode hands out independent substreams keyed by a counter, so
    call order inside one source is the only thing that matters.
    """

    def __init__(self, seed: bytes | None = None):
        self._seed = seed
        self._counter = 0
        if seed is not None:
            # same bytes thash() would feed for (domain, seed, counter) up to
            # the 8-byte counter itself; copied per draw instead of rebuilt
            h = hashlib.sha256()
            h.update(struct.pack(">B", 10) + b"rng-stream"
                     + struct.pack(">I", len(seed)) + seed
                     + struct.pack(">I", 8))
            self._prefix = h

    def bytes(self, n: int) -> bytes:
        if self._seed is None:
            return secrets.token_bytes(n)
        self._counter += 1
        h = self._prefix.copy()
        h.update(struct.pack(">Q", self._counter))
        seed = h.digest()
        if n <= 32:
            return seed[:n]
        out = bytearray()
        ctr = 0
        while len(out) < n:
            out += hashlib.sha256(seed + struct.pack(">I", ctr)).digest()
            ctr += 1
        return bytes(out[:n])

    def bit(self) -> int:
        return self.bytes(1)[0] & 1

    def bits(self, n: int) -> list[int]:
        data = self.bytes((n + 7) // 8)
        return bytes_to_bits(data, n)

    def shuffled(self, items: list) -> list:
        """Fisher-Yates over a copy, driven by this source."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = int.from_bytes(self.bytes(4), "big") % (i + 1)
            out[i], out[j] = out[j], out[i]
        return out

    def child(self, tag: bytes) -> "RandomSource":
        if self._seed is None:
            return RandomSource(None)
        return RandomSource(thash(32, b"rng-child", self._seed, tag))


def toeplitz_mac_key_bits(out_bits: int, tag_bits: int) -> int:
    """Key width for the GF(2) Toeplitz MAC: diagonals plus whitening."""
    if tag_bits <= 0 or out_bits <= 0:
        return 0
    return (tag_bits + out_bits - 1) + tag_bits


def toeplitz_mac(key_bits: list[int], message_bits: list[int], tag_bits: int) -> list[int]:
    """Reference GF(2) Toeplitz MAC; the circuit augmenter builds the same map in gates.

    tag[t] = whiten[t] XOR sum_l diag[t+l] AND msg[l], diagonals first in the key.
    """
    n = len(message_bits)
    if tag_bits <= 0 or n == 0:
        return []
    expect = toeplitz_mac_key_bits(n, tag_bits)
    if len(key_bits) != expect:
        raise ValueError(f"MAC key must be {expect} bits, got {len(key_bits)}")
    diag = key_bits[: tag_bits + n - 1]
    whiten = key_bits[tag_bits + n - 1:]
    tag = []
    for t in range(tag_bits):
        acc = whiten[t]
        for l in range(n):
            acc ^= diag[t + l] & message_bits[l]
        tag.append(acc)
    return tag


def commit(value: bytes, opening: bytes) -> bytes:
    """Binding/hiding hash commitment; opening must be high-entropy."""
    return thash(32, b"commitment", value, opening)


def commit_verify(commitment: bytes, value: bytes, opening: bytes) -> bool:
    return commit(value, opening) == commitment
