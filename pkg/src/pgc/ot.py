"""Oblivious transfer: base OT, IKNP extension, input encoding, outsourcing.

Base transfers come from a provider: a trusted dealer (test harnesses; both
endpoints share one dealer object) or a discrete-log construction over the
2048-bit MODP group. The extension layer always runs over real channels so
measured traffic is meaningful regardless of provider.

The extension includes a receiver-consistency check: after the base transfers
the sender broadcasts a challenge seed, both sides derive a binary challenge
matrix, and the receiver answers with masked row parities. A receiver that
used different choice vectors in different columns fails the check and the
sender aborts. Extra blinding rows keep the answers from leaking the real
choice bits.

Channels are duck-typed: .send(bytes) and .recv() -> bytes.
"""

from __future__ import annotations

import queue
import secrets
import struct

import numpy as np

from .errors import OTError
from .garbling import label_len, mask_label
from .primitives import (RandomSource, bits_to_bytes, bytes_to_bits, commit,
                         get_bit, thash, xor_bytes)

CHECK_EQUATIONS = 40  # parity equations in the consistency check
BLIND_ROWS = 40       # extra receiver rows consumed by the check

# RFC 3526 group 14 (2048-bit MODP), generator 2.
_P = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF",
    16)
_G = 2
_ELEM = 256  # serialized group element size


class TrustedDealer:
    """In-process base-OT functionary for tests; share one instance per session.

    Records sender views so tests can assert the sender's transcript is
    independent of the receiver's choices.
    """

    def __init__(self):
        self._bits: queue.Queue = queue.Queue()
        self._selected: queue.Queue = queue.Queue()
        self.sessions = 0
        self.sender_views: list[tuple[bytes, ...]] = []

    def base_sender(self, chan, pairs: list[tuple[bytes, bytes]]) -> None:
        bits = self._bits.get()
        if len(bits) != len(pairs):
            raise OTError("dealer: count mismatch")
        self.sessions += 1
        self.sender_views.append(tuple(m for pair in pairs for m in pair))
        self._selected.put([pairs[j][b] for j, b in enumerate(bits)])

    def base_receiver(self, chan, bits: list[int], mlen: int) -> list[bytes]:
        self._bits.put(list(bits))
        return self._selected.get()


class GroupProvider:
    """Discrete-log base OT: sender publishes A=g^a, receiver answers
    B=g^x or A*g^x per choice bit, keys are hashes of the shared secrets."""

    def __init__(self):
        self.sessions = 0

    def base_sender(self, chan, pairs: list[tuple[bytes, bytes]]) -> None:
        self.sessions += 1
        if not pairs:
            chan.send(b"")
            return
        mlen = len(pairs[0][0])
        if any(len(m) != mlen for pair in pairs for m in pair):
            raise OTError("base OT messages must share one length")
        a = secrets.randbelow(_P - 2) + 1
        big_a = pow(_G, a, _P)
        chan.send(big_a.to_bytes(_ELEM, "big"))
        blob = chan.recv()
        if len(blob) != _ELEM * len(pairs):
            raise OTError("base OT: bad receiver batch")
        a_inv = pow(big_a, _P - 2, _P)
        out = []
        for j, (m0, m1) in enumerate(pairs):
            b_elem = int.from_bytes(blob[j * _ELEM:(j + 1) * _ELEM], "big")
            if not (1 < b_elem < _P):
                raise OTError("base OT: receiver element out of range")
            tag = struct.pack(">I", j)
            k0 = thash(mlen, b"base-ot", pow(b_elem, a, _P).to_bytes(_ELEM, "big"),
                       tag, b"\x00")
            k1 = thash(mlen, b"base-ot",
                       pow(b_elem * a_inv % _P, a, _P).to_bytes(_ELEM, "big"),
                       tag, b"\x01")
            out.append(xor_bytes(m0, k0) + xor_bytes(m1, k1))
        chan.send(b"".join(out))

    def base_receiver(self, chan, bits: list[int], mlen: int) -> list[bytes]:
        if not bits:
            chan.recv()
            return []
        big_a = int.from_bytes(chan.recv(), "big")
        if not (1 < big_a < _P):
            raise OTError("base OT: bad sender element")
        xs = []
        blob = []
        for b in bits:
            x = secrets.randbelow(_P - 2) + 1
            xs.append(x)
            elem = pow(_G, x, _P)
            if b:
                elem = elem * big_a % _P
            blob.append(elem.to_bytes(_ELEM, "big"))
        chan.send(b"".join(blob))
        cts = chan.recv()
        if len(cts) != 2 * mlen * len(bits):
            raise OTError("base OT: bad ciphertext batch")
        out = []
        for j, (b, x) in enumerate(zip(bits, xs)):
            key = thash(mlen, b"base-ot", pow(big_a, x, _P).to_bytes(_ELEM, "big"),
                        struct.pack(">I", j), bytes([b]))
            ct = cts[j * 2 * mlen + b * mlen: j * 2 * mlen + (b + 1) * mlen]
            out.append(xor_bytes(ct, key))
        return out


def _challenge_matrix(seed: bytes, rows: int, cols: int) -> np.ndarray:
    raw = thash(rows * ((cols + 7) // 8), b"ext-chal", seed)
    mat = np.frombuffer(raw, dtype=np.uint8).reshape(rows, (cols + 7) // 8)
    return np.unpackbits(mat, axis=1, bitorder="little")[:, :cols]


def _cols_to_rows(cols: list[bytes], total: int, k: int) -> tuple[np.ndarray, list[bytes]]:
    """Transpose k column bit-vectors into per-transfer row byte strings."""
    mat = np.frombuffer(b"".join(cols), dtype=np.uint8).reshape(k, len(cols[0]))
    bits = np.unpackbits(mat, axis=1, bitorder="little")[:, :total]  # k x total
    row_bits = np.ascontiguousarray(bits.T)  # total x k
    packed = np.packbits(row_bits, axis=1, bitorder="little")
    return row_bits, [packed[j].tobytes() for j in range(total)]


def _ext_pad(row: bytes, j: int, mlen: int) -> bytes:
    return thash(mlen, b"ext-pad", row, struct.pack(">I", j))


def extension_sender_pads(chan, provider, count: int, mlen: int, k: int,
                          rng: RandomSource) -> list[tuple[bytes, bytes]]:
    """Sender half of the extension; returns (pad0, pad1) per transfer.

    Raises OTError when the receiver's check answers are inconsistent with a
    single choice vector.
    """
    total = count + BLIND_ROWS
    s_bits = rng.bits(k)
    col_len = (total + 7) // 8
    cols = provider.base_receiver(chan, s_bits, col_len)
    q_bits, q_rows = _cols_to_rows(cols, total, k)

    chal_seed = rng.bytes(16)
    chan.send(chal_seed)
    resp = chan.recv()
    want = CHECK_EQUATIONS * ((k + 7) // 8) + (CHECK_EQUATIONS + 7) // 8
    if len(resp) != want:
        raise OTError("extension: bad check response size")
    x_part = resp[: CHECK_EQUATIONS * ((k + 7) // 8)]
    z_bits = bytes_to_bits(resp[len(x_part):], CHECK_EQUATIONS)
    chal = _challenge_matrix(chal_seed, CHECK_EQUATIONS, total)
    lhs = (chal.astype(np.uint32) @ q_bits.astype(np.uint32)) & 1  # eq x k
    s_vec = np.array(s_bits, dtype=np.uint8)
    kb = (k + 7) // 8
    for t in range(CHECK_EQUATIONS):
        x_row = np.array(bytes_to_bits(x_part[t * kb:(t + 1) * kb], k), dtype=np.uint8)
        rhs = x_row ^ (s_vec if z_bits[t] else 0)
        if not np.array_equal(lhs[t].astype(np.uint8), rhs):
            raise OTError("extension: receiver matrix failed consistency check")

    s_packed = bits_to_bytes(s_bits)
    out = []
    for j in range(count):
        q = q_rows[j]
        out.append((_ext_pad(q, j, mlen), _ext_pad(xor_bytes(q, s_packed), j, mlen)))
    return out


def extension_receiver_pads(chan, provider, bits: list[int], mlen: int, k: int,
                            rng: RandomSource,
                            column_choices: list[list[int]] | None = None
                            ) -> list[bytes]:
    """Receiver half; returns the pad matching each choice bit.

    column_choices is a test hook: per-column choice vectors that let a
    malicious receiver present inconsistent columns to exercise the abort.
    """
    count = len(bits)
    total = count + BLIND_ROWS
    all_bits = list(bits) + rng.bits(BLIND_ROWS)
    col_len = (total + 7) // 8

    t_cols = [rng.bytes(col_len) for _ in range(k)]
    pairs = []
    for i in range(k):
        choice = all_bits if column_choices is None else column_choices[i]
        r_packed = bits_to_bytes(choice + [0] * (col_len * 8 - total))
        pairs.append((t_cols[i], xor_bytes(t_cols[i], r_packed)))
    provider.base_sender(chan, pairs)
    t_bits, t_rows = _cols_to_rows(t_cols, total, k)

    chal_seed = chan.recv()
    chal = _challenge_matrix(chal_seed, CHECK_EQUATIONS, total)
    x = (chal.astype(np.uint32) @ t_bits.astype(np.uint32)) & 1
    x_packed = np.packbits(x.astype(np.uint8), axis=1, bitorder="little").tobytes()
    r_vec = np.array(all_bits, dtype=np.uint8)
    z = ((chal.astype(np.uint32) @ r_vec.astype(np.uint32)) & 1).astype(np.uint8)
    chan.send(x_packed + bits_to_bytes(list(z)))

    return [_ext_pad(t_rows[j], j, mlen) for j in range(count)]


def extend_ot_sender(chan, provider, pairs: list[tuple[bytes, bytes]], k: int,
                     rng: RandomSource) -> None:
    """Full extension send: derive pads, ship both ciphertexts per transfer."""
    if not pairs:
        return
    mlen = len(pairs[0][0])
    if any(len(m) != mlen for pair in pairs for m in pair):
        raise OTError("extension: messages must share one length")
    pads = extension_sender_pads(chan, provider, len(pairs), mlen, k, rng)
    blob = []
    for (m0, m1), (p0, p1) in zip(pairs, pads):
        blob.append(xor_bytes(m0, p0) + xor_bytes(m1, p1))
    chan.send(b"".join(blob))


def extend_ot_receiver(chan, provider, bits: list[int], mlen: int, k: int,
                       rng: RandomSource) -> list[bytes]:
    if not bits:
        return []
    pads = extension_receiver_pads(chan, provider, bits, mlen, k, rng)
    blob = chan.recv()
    if len(blob) != 2 * mlen * len(bits):
        raise OTError("extension: bad ciphertext batch")
    out = []
    for j, (b, pad) in enumerate(zip(bits, pads)):
        ct = blob[j * 2 * mlen + b * mlen: j * 2 * mlen + (b + 1) * mlen]
        out.append(xor_bytes(ct, pad))
    return out


def encode_input(bits: list[int], kappa: int, rng: RandomSource) -> list[int]:
    """XOR-share each input bit into kappa select bits (selective-failure guard).

    The first kappa-1 shares are uniform; the last makes the XOR come out to
    the true bit, so any proper subset of shares carries no information.
    """
    if kappa < 1:
        raise OTError("encoding width must be >= 1")
    out: list[int] = []
    for b in bits:
        if kappa == 1:
            out.append(b & 1)
            continue
        shares = rng.bits(kappa - 1)
        shares.append((b ^ (sum(shares) & 1)) & 1)
        out.extend(shares)
    return out


def eval_input_label(ikey: bytes, seed: bytes, k: int) -> bytes:
    """Per-circuit evaluator input label: hash(circuit key, selected seed)."""
    return mask_label(thash(label_len(k), b"evl-label", ikey, seed), k)


def derive_eval_input_labels(ikey: bytes, seeds: list[bytes], k: int) -> list[bytes]:
    return [eval_input_label(ikey, s, k) for s in seeds]


def commitment_opening(ikey: bytes, seed: bytes) -> bytes:
    """Opening randomness derivable by whoever legitimately holds the seed."""
    return thash(32, b"commit-open", ikey, seed)


def label_commitment(label: bytes, opening: bytes) -> bytes:
    return commit(label, opening)


def oot_generator(chan_evl, chan_cloud, seed_pairs: list[tuple[bytes, bytes]],
                  k: int, provider, rng: RandomSource) -> None:
    """Offer seed pairs; ciphertexts go to the cloud, permuted by the
    evaluator's permutation string so the cloud's selection index is masked."""
    m = len(seed_pairs)
    if m == 0:
        return
    mlen = len(seed_pairs[0][0])
    p_bits = bytes_to_bits(chan_evl.recv(), m)
    pads = extension_sender_pads(chan_evl, provider, m, mlen, k, rng)
    blob = []
    for j, ((m0, m1), (p0, p1)) in enumerate(zip(seed_pairs, pads)):
        e = (xor_bytes(m0, p0), xor_bytes(m1, p1))
        pj = p_bits[j]
        blob.append(e[pj] + e[1 - pj])
    chan_cloud.send(b"".join(blob))


def oot_evaluator(chan_gen, chan_cloud, bits: list[int], mlen: int, k: int,
                  provider, rng: RandomSource) -> None:
    """Select with private bits; hand the cloud one pad and a masked index per
    transfer. The evaluator never sees ciphertexts, the cloud never sees bits."""
    m = len(bits)
    if m == 0:
        return
    p_bits = rng.bits(m)
    chan_gen.send(bits_to_bytes(p_bits))
    pads = extension_receiver_pads(chan_gen, provider, bits, mlen, k, rng)
    idx = [b ^ p for b, p in zip(bits, p_bits)]
    chan_cloud.send(b"".join(pads) + bits_to_bytes(idx))


def oot_cloud(chan_gen, chan_evl, count: int, mlen: int) -> list[bytes]:
    """Receive the selected message per transfer."""
    if count == 0:
        return []
    pair_blob = chan_gen.recv()
    if len(pair_blob) != 2 * mlen * count:
        raise OTError("outsourced OT: bad ciphertext batch")
    evl_blob = chan_evl.recv()
    if len(evl_blob) != mlen * count + (count + 7) // 8:
        raise OTError("outsourced OT: bad evaluator batch")
    pads = evl_blob[: mlen * count]
    idx = bytes_to_bits(evl_blob[mlen * count:], count)
    out = []
    for j in range(count):
        ct = pair_blob[j * 2 * mlen + idx[j] * mlen:
                       j * 2 * mlen + (idx[j] + 1) * mlen]
        out.append(xor_bytes(ct, pads[j * mlen:(j + 1) * mlen]))
    return out
