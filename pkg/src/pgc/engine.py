"""Three-party protocol engine: generator, evaluator, cloud.

One execution walks phases 1..7: config check and circuit packages (1),
outsourced transfer of the evaluator's input seeds (2), generator
input-consistency audit (3), saved-wire translation gates (4), circuit
streaming with check-circuit regeneration (5), majority vote plus
authenticated output release (6), and state persistence (7).

The evaluator's data stays hidden from the cloud behind per-wire seeds, the
generator's behind one-time-padded packages; outputs reach each party padded
and MAC'd by keys only that party entered in phase 1. A malicious generator is
caught by the opened check circuits, a malicious cloud by the output MACs.

Semi-honest mode strips the machinery to one circuit: labels travel in the
clear between generator and cloud, saved wires are translated by XOR offsets,
and the output padding/MAC stays on because the cloud still must not read
results.
"""

from __future__ import annotations

import struct
import threading
from dataclasses import dataclass, field

from . import framing as fr
from .circuit import AugmentationSpec, AugmentedCircuit, CircuitIR, augment_for_protocol, emit_circuit
from .cutchoose import (ROLE_CLD, ROLE_EVL, ROLE_GEN, CircuitSplit,
                        cut_and_choose_ot_recv, cut_and_choose_ot_send,
                        evolve_key_pairs, evolve_selected, fresh_key_pairs,
                        gen_hash_pairs, key_pad, select_split, split_key_hash,
                        verify_split_hashes)
from .errors import (AbortError, ConfigMismatchError, CorruptGateError,
                     FrameFormatError, GarblingError, OTError,
                     StateMissingError)
from .garbling import DEFAULT_K, derive_context, evaluate_circuit, garble_circuit, label_len
from .ot import (GroupProvider, encode_input, eval_input_label, oot_cloud,
                 oot_evaluator, oot_generator)
from .partial import (SavedState, SavedWireRecord, build_remap_msgs,
                      check_partial_input_gates, decode_partial_gates,
                      encode_partial_gates, evaluate_partial_input_gate,
                      generate_partial_input_gates, load_state, persist_state,
                      semi_honest_remap)
from .primitives import (RandomSource, bits_to_bytes, bytes_to_bits, get_bit,
                         thash, toeplitz_mac, xor_bytes)

SEED_LEN = 16


@dataclass(slots=True)
class TamperPlan:
    """Test hook: inject one deliberate corruption at a protocol point.

    kinds: gates (row bytes of one circuit), partial (translation gate bytes),
    claim (inconsistent input witness for one circuit), gen_input (package
    label bytes), output (cloud flips an output bit), split_lie (cloud claims
    a wrong split bit to the evaluator).

    circuit_index -1 hits every circuit for gen_input and partial; for the
    output kind the field picks the flipped bit instead.
    """
    kind: str
    circuit_index: int = 0


@dataclass
class EngineConfig:
    circuit: CircuitIR
    s: int = 5
    k: int = DEFAULT_K
    encoding_width: int = 8
    tag_bits: int = 32
    semi_honest: bool = False
    state_path: str | None = None
    t_override: int | None = None
    seed: bytes | None = None
    tamper: TamperPlan | None = None
    providers: dict[str, object] | None = None  # "kot" / "oot"

    def validate(self) -> None:
        if self.semi_honest:
            if self.s != 1:
                raise ConfigMismatchError("semi-honest mode requires exactly 1 circuit")
        elif self.s < 5:
            raise ConfigMismatchError("malicious mode requires at least 5 circuits")
        if not 8 <= self.k <= 255:
            raise ConfigMismatchError("security parameter out of range")

    def provider(self, purpose: str):
        if self.providers and purpose in self.providers:
            return self.providers[purpose]
        if self.providers is None:
            self.providers = {}
        return self.providers.setdefault(purpose, GroupProvider())


@dataclass
class PartyResult:
    output_bits: list[int] | None
    t: int
    counters: dict[str, tuple[int, int]] = field(default_factory=dict)


class Link:
    """Typed frame conduit to one peer: phase/type checking, abort handling."""

    def __init__(self, chan, exec_id: int, peer: str):
        self.chan = chan
        self.exec_id = exec_id
        self.peer = peer

    def send(self, phase: int, mtype: int, payload: bytes) -> None:
        self.chan.send(fr.encode_frame(phase, mtype, self.exec_id, payload))

    def send_abort(self, phase: int, reason: str, circuit_index: int = -1) -> None:
        payload = struct.pack(">i", circuit_index) + reason.encode()
        try:
            self.chan.send(fr.encode_frame(phase, fr.ABORT, self.exec_id, payload))
        except Exception:
            pass  # peer may already be gone; the local abort still raises

    def recv(self, phase: int, mtype: int, timeout: float = 60.0) -> bytes:
        frame = self.chan.recv(timeout=timeout)
        got_phase, got_type, exec_id, payload, _ = fr.decode_frame(frame)
        if got_type == fr.ABORT:
            (ci,) = struct.unpack_from(">i", payload)
            raise AbortError(got_phase, payload[4:].decode(errors="replace"),
                             circuit_index=ci, remote=True)
        if exec_id != self.exec_id:
            raise FrameFormatError(
                f"expected execution {self.exec_id}, frame says {exec_id}")
        if (got_phase, got_type) != (phase, mtype):
            raise FrameFormatError(
                f"expected frame ({phase},{mtype}) from {self.peer}, "
                f"got ({got_phase},{got_type})")
        return payload


class _SubChan:
    """Raw-bytes adapter over a Link for the OT layer."""

    def __init__(self, link: Link, phase: int, out_type: int, in_type: int):
        self.link, self.phase = link, phase
        self.out_type, self.in_type = out_type, in_type

    def send(self, data: bytes) -> None:
        self.link.send(self.phase, self.out_type, data)

    def recv(self) -> bytes:
        return self.link.recv(self.phase, self.in_type)


def _split_labels(blob: bytes, ll: int) -> list[bytes]:
    if len(blob) % ll:
        raise AbortError(1, "label blob not a multiple of the label size")
    return [blob[i:i + ll] for i in range(0, len(blob), ll)]


def _flip_row_byte(stream: bytes, ll: int) -> bytes:
    """Corrupt every row of the first non-free gate record (test hook)."""
    out = bytearray(stream)
    off = 0
    while off < len(out):
        gid, count = struct.unpack_from(">IB", out, off)
        off += 5
        if count:
            for r in range(count):
                out[off + (r + 1) * (ll + 1) - 1] ^= 0x01
            return bytes(out)
        off += count * (ll + 1)
    raise GarblingError("no non-free gate to corrupt")


class _Party:
    """Shared plumbing: config resolution, state loading, abort broadcast."""

    ROLE: int = -1
    NAME: str = "?"

    def __init__(self, cfg: EngineConfig):
        cfg.validate()
        self.cfg = cfg
        self.aug: AugmentedCircuit = augment_for_protocol(
            cfg.circuit, AugmentationSpec(cfg.encoding_width, cfg.tag_bits, True))
        self.rng = RandomSource(cfg.seed)
        self.k = cfg.k
        self.ll = label_len(cfg.k)
        self.state: SavedState | None = None
        if cfg.state_path:
            try:
                self.state = load_state(cfg.state_path)
            except StateMissingError:
                if cfg.t_override:
                    raise
                self.state = None
        if self.state is not None:
            if self.state.poisoned:
                raise AbortError(1, "chain poisoned by an earlier abort")
            if self.state.role != self.ROLE:
                raise ConfigMismatchError("state file belongs to another role")
            if (self.state.s, self.state.k, self.state.semi_honest) != (
                    cfg.s, cfg.k, cfg.semi_honest):
                raise ConfigMismatchError(
                    "saved chain was started with different parameters")
            if cfg.t_override is not None and cfg.t_override != self.state.t:
                raise ConfigMismatchError(
                    f"state is at execution {self.state.t}, caller expects "
                    f"{cfg.t_override}")
        self.t = (self.state.t if self.state is not None
                  else (cfg.t_override or 0))
        if (self.t == 0 and self.aug.ir.partial_inputs
                and self.ROLE in (ROLE_GEN, ROLE_CLD)):
            # these two roles would need saved wire labels they do not have;
            # the evaluator only needs chain agreement, checked in phase 1
            raise StateMissingError(
                "circuit consumes saved wires but no prior execution exists")
        self.links: list[Link] = []
        self._abort_seen = False

    # every party compares one digest covering everything that must agree
    def config_digest(self) -> bytes:
        return thash(32, b"config-digest",
                     struct.pack(">IBHHBQ", self.cfg.s, self.cfg.k,
                                 self.cfg.encoding_width, self.cfg.tag_bits,
                                 1 if self.cfg.semi_honest else 0, self.t),
                     emit_circuit(self.aug.ir).encode())

    def _exchange_config(self, my_type: int, peers: list[tuple[Link, int]]) -> None:
        digest = self.config_digest()
        for link, _ in peers:
            link.send(1, my_type, digest)
        for link, their_type in peers:
            try:
                theirs = link.recv(1, their_type)
            except FrameFormatError:
                # wrong exec id means the peer is at a different chain position
                self.abort(1, f"configuration disagreement with {link.peer}")
            if theirs != digest:
                self.abort(1, f"configuration digest mismatch with {link.peer}")

    def abort(self, phase: int, reason: str, circuit_index: int = -1):
        """Broadcast an abort to every peer, poison the chain, raise locally."""
        if not self._abort_seen:
            self._abort_seen = True
            for link in self.links:
                link.send_abort(phase, reason, circuit_index)
        self._poison()
        raise AbortError(phase, reason, circuit_index=circuit_index)

    def _forward_abort(self, err: AbortError, source: Link) -> None:
        if self._abort_seen:
            return
        self._abort_seen = True
        for link in self.links:
            if link is not source:
                link.send_abort(err.phase, err.reason, err.circuit_index)
        self._poison()

    def _poison(self) -> None:
        if self.cfg.state_path and self.state is not None:
            self.state.poisoned = True
            persist_state(self.cfg.state_path, self.state)

    def _counters(self, **chans) -> dict[str, tuple[int, int]]:
        return {name: (c.sent_bytes, c.recv_bytes) for name, c in chans.items()}

    def run(self, chan_a, chan_b) -> PartyResult:
        """Execute the party's protocol; aborts reach peers before raising."""
        try:
            return self._run(chan_a, chan_b)
        except AbortError as e:
            # locally raised by a library layer: peers were not told yet
            if not e.remote and not self._abort_seen:
                self._abort_seen = True
                for link in self.links:
                    link.send_abort(e.phase, e.reason, e.circuit_index)
                self._poison()
            raise
        except OTError as e:
            try:
                self.abort(2, f"oblivious transfer failed: {e}")
            except AbortError as ab:
                raise ab from e


def _recv_abort_aware(party: _Party, link: Link, phase: int, mtype: int,
                      timeout: float = 60.0) -> bytes:
    """recv that marks the link an abort came from, for forwarding."""
    try:
        return link.recv(phase, mtype, timeout)
    except AbortError as e:
        party._forward_abort(e, link)
        raise


class GeneratorEngine(_Party):
    ROLE = ROLE_GEN
    NAME = fr.GEN

    def __init__(self, cfg: EngineConfig, input_bits: list[int]):
        super().__init__(cfg)
        if len(input_bits) != self.aug.orig_gen_bits:
            raise ConfigMismatchError(
                f"generator expects {self.aug.orig_gen_bits} input bits")
        self.input_bits = list(input_bits)

    def _run(self, chan_evl, chan_cloud) -> PartyResult:
        cfg, aug, k, ll = self.cfg, self.aug, self.k, self.ll
        ir = aug.ir
        s = cfg.s
        le = Link(chan_evl, self.t, fr.EVL)
        lc = Link(chan_cloud, self.t, fr.CLD)
        self.links = [le, lc]
        recv = lambda link, ph, mt, to=60.0: _recv_abort_aware(self, link, ph, mt, to)

        self._exchange_config(fr.CFG_FROM_GEN,
                              [(le, fr.CFG_FROM_EVL), (lc, fr.CFG_FROM_CLD)])

        # fresh per-execution secrets
        cseeds = [self.rng.bytes(SEED_LEN) for _ in range(s)]
        ikeys = [self.rng.bytes(SEED_LEN) for _ in range(s)]
        evl_wires = list(ir.evl_input_wires())
        seed_pairs = [(self.rng.bytes(SEED_LEN), self.rng.bytes(SEED_LEN))
                      for _ in evl_wires]
        pad_bits = self.rng.bits(aug.gen_pad_bits)
        mac_bits = self.rng.bits(aug.gen_mac_bits)
        gen_vec = aug.gen_input_vector(self.input_bits, pad_bits, mac_bits)

        ctxs = []
        for i in range(s):
            inj = {w: (eval_input_label(ikeys[i], seed_pairs[j][0], k),
                       eval_input_label(ikeys[i], seed_pairs[j][1], k))
                   for j, w in enumerate(evl_wires)}
            ctxs.append(derive_context(cseeds[i], ir, k, injected=inj))

        gen_inputs = [b"".join(ctxs[i].label_for(w, gen_vec[w])
                               for w in ir.gen_input_wires())
                      for i in range(s)]
        if cfg.tamper and cfg.tamper.kind == "gen_input":
            ti = cfg.tamper.circuit_index  # -1 hits every circuit
            for i in range(s):
                if ti in (i, -1):
                    blob = bytearray(gen_inputs[i])
                    blob[0] ^= 0x01
                    gen_inputs[i] = bytes(blob)

        if cfg.semi_honest:
            lc.send(1, fr.PACKAGES, gen_inputs[0])
            key_pairs = None
        else:
            if self.t == 0:
                key_pairs = fresh_key_pairs(s, k, self.rng)
            else:
                key_pairs = evolve_key_pairs(self.state.key_pairs)
            # packages: generator input under the evaluation key, seed and
            # possible evaluator inputs under the check key
            pkg = bytearray()
            for i in range(s):
                ek, ck = key_pairs[i]
                enc_gen = xor_bytes(gen_inputs[i],
                                    key_pad(ek, len(gen_inputs[i]), b"gen-input"))
                enc_seed = xor_bytes(cseeds[i], key_pad(ck, SEED_LEN, b"seed"))
                pairs_blob = b"".join(ctxs[i].label0[w] + ctxs[i].label1[w]
                                      for w in evl_wires)
                enc_evl = xor_bytes(pairs_blob,
                                    key_pad(ck, len(pairs_blob), b"evl-inputs")) \
                    if pairs_blob else b""
                pkg += enc_gen + enc_seed + enc_evl
            lc.send(1, fr.PACKAGES, bytes(pkg))

            # input-consistency claims: one witness for the whole execution
            rho = self.rng.bytes(16)
            witness = thash(32, b"input-witness",
                            bits_to_bytes(self.input_bits), rho)
            claims = bytearray()
            for i in range(s):
                w_i = witness
                if cfg.tamper and cfg.tamper.kind == "claim" \
                        and i == cfg.tamper.circuit_index:
                    w_i = xor_bytes(witness, b"\x01" * 32)
                beta = thash(32, b"input-claim", w_i, gen_inputs[i])
                claims += w_i + beta
            lc.send(1, fr.CLAIMS, bytes(claims))

            if self.t == 0:
                cut_and_choose_ot_send(
                    _SubChan(lc, 1, fr.KOT_TO_CLD, fr.KOT_TO_GEN),
                    cfg.provider("kot"), key_pairs)
                le.send(1, fr.SPLITHASH_GEN,
                        b"".join(h0 + h1 for h0, h1 in gen_hash_pairs(key_pairs)))
                recv(le, 1, fr.SPLIT_OK)

        # phase 2: evaluator input seeds go to the cloud; wire keys via evaluator
        if evl_wires:
            oot_generator(_SubChan(le, 2, fr.OOT_TO_EVL, fr.OOT_TO_GEN),
                          _SubChan(lc, 2, fr.OOT_CTS, 0),
                          seed_pairs, k, cfg.provider("oot"), self.rng)
        le.send(2, fr.IKEYS, b"".join(ikeys))

        if not cfg.semi_honest:
            recv(lc, 3, fr.UHF_SEED)

        # phase 4: translate saved wires into the new circuits
        if self.t >= 1 and ir.partial_inputs:
            if self.state.saved_wire_count != ir.partial_inputs:
                self.abort(4, "saved wire count does not match circuit")
            pw = list(ir.partial_input_wires())
            if cfg.semi_honest:
                body = bytearray()
                for rec, w in zip(self.state.wires[0], pw):
                    m0, m1 = build_remap_msgs(rec.pair(), ctxs[0].pair(w), rec.loc)
                    body += bytes([rec.loc]) + m0 + m1
                lc.send(4, fr.REMAP, bytes(body))
            else:
                body = bytearray()
                for i in range(s):
                    r_i = self.rng.bytes(ll)
                    gates = generate_partial_input_gates(
                        [rec.pair() for rec in self.state.wires[i]],
                        [ctxs[i].pair(w) for w in pw],
                        r_i, cseeds[i], i, k, delta=ctxs[i].delta)
                    blob = encode_partial_gates(r_i, gates, k)
                    if cfg.tamper and cfg.tamper.kind == "partial" \
                            and cfg.tamper.circuit_index in (i, -1):
                        mod = bytearray(blob)
                        mod[-1] ^= 0x01
                        blob = bytes(mod)
                    body += struct.pack(">I", len(blob)) + blob
                lc.send(4, fr.PARTIAL_GATES, bytes(body))

        # phase 5: stream headers and gates
        out_wires = ir.evl_outputs + ir.gen_outputs
        for i in range(s):
            hdr = struct.pack(">I", i)
            hdr += bytes(ctxs[i].pp_loc[w] for w in evl_wires)
            hdr += bits_to_bytes([ctxs[i].decode_bit(w) for w in out_wires])
            lc.send(5, fr.CIRC_HDR, hdr)
            stream = garble_circuit(ctxs[i], ir)
            if cfg.tamper and cfg.tamper.kind == "gates" \
                    and i == cfg.tamper.circuit_index:
                stream = _flip_row_byte(stream, ll)
            lc.send(5, fr.GATES, struct.pack(">I", i) + stream)

        # phase 6: receive, unpad, authenticate
        out_blob = recv(lc, 6, fr.OUT_GEN, 120.0)
        n_out = len(ir.gen_outputs)
        if len(out_blob) != (n_out + 7) // 8:
            self.abort(6, "output payload has wrong size")
        bits = bytes_to_bits(out_blob, n_out) if n_out else []
        data = bits[:aug.gen_data_out_bits]
        tag = bits[aug.gen_data_out_bits:]
        plain = [d ^ p for d, p in zip(data, pad_bits)]
        if toeplitz_mac(mac_bits, plain, aug.gen_tag_bits) != tag:
            self.abort(6, "generator output failed authentication")
        lc.send(6, fr.OUT_ACK_GEN, b"")
        recv(lc, 7, fr.FINISH_GEN, 120.0)

        # phase 7: persist both labels of every saved wire
        if cfg.state_path:
            wires = [[SavedWireRecord(ctxs[i].label0[w], ctxs[i].label1[w],
                                      ctxs[i].pp_loc[w])
                      for w in ir.saved_wires] for i in range(s)]
            split = (self.state.split if self.state is not None
                     else CircuitSplit([0] * s))
            st = SavedState(role=ROLE_GEN, t=self.t + 1, s=s, k=k,
                            semi_honest=cfg.semi_honest, split=split,
                            key_pairs=key_pairs, wires=wires)
            persist_state(cfg.state_path, st)
        return PartyResult(plain, self.t,
                           self._counters(evl=chan_evl, cloud=chan_cloud))


class EvaluatorEngine(_Party):
    ROLE = ROLE_EVL
    NAME = fr.EVL

    def __init__(self, cfg: EngineConfig, input_bits: list[int]):
        super().__init__(cfg)
        if len(input_bits) != self.aug.orig_evl_bits:
            raise ConfigMismatchError(
                f"evaluator expects {self.aug.orig_evl_bits} input bits")
        self.input_bits = list(input_bits)

    def _run(self, chan_gen, chan_cloud) -> PartyResult:
        cfg, aug = self.cfg, self.aug
        ir = aug.ir
        lg = Link(chan_gen, self.t, fr.GEN)
        lc = Link(chan_cloud, self.t, fr.CLD)
        self.links = [lg, lc]
        recv = lambda link, ph, mt, to=60.0: _recv_abort_aware(self, link, ph, mt, to)

        self._exchange_config(fr.CFG_FROM_EVL,
                              [(lg, fr.CFG_FROM_GEN), (lc, fr.CFG_FROM_CLD)])

        split = self.state.split if self.state is not None else None
        if not cfg.semi_honest and self.t == 0:
            gen_blob = recv(lg, 1, fr.SPLITHASH_GEN)
            cld_blob = recv(lc, 1, fr.SPLITHASH_CLD)
            if len(gen_blob) != 64 * cfg.s or len(cld_blob) != 33 * cfg.s:
                self.abort(1, "split hash payload has wrong size")
            pairs = [(gen_blob[i * 64:i * 64 + 32], gen_blob[i * 64 + 32:(i + 1) * 64])
                     for i in range(cfg.s)]
            bits = [cld_blob[i * 33] for i in range(cfg.s)]
            hashes = [cld_blob[i * 33 + 1:(i + 1) * 33] for i in range(cfg.s)]
            try:
                split = verify_split_hashes(pairs, hashes, bits)
            except AbortError as e:
                self.abort(e.phase, e.reason, e.circuit_index)
            lg.send(1, fr.SPLIT_OK, b"")
            lc.send(1, fr.SPLIT_OK, b"")

        # phase 2: select input seeds through the outsourced transfer
        pad_bits = self.rng.bits(aug.evl_pad_bits)
        mac_bits = self.rng.bits(aug.evl_mac_bits)
        shares = encode_input(self.input_bits, cfg.encoding_width, self.rng)
        evl_vec = shares + aug.evl_aux_vector(pad_bits, mac_bits)
        if evl_vec:
            oot_evaluator(_SubChan(lg, 2, fr.OOT_TO_GEN, fr.OOT_TO_EVL),
                          _SubChan(lc, 2, fr.OOT_PADS, 0),
                          evl_vec, SEED_LEN, cfg.k, cfg.provider("oot"), self.rng)
        ikeys = recv(lg, 2, fr.IKEYS)
        lc.send(2, fr.IKEYS_EVAL, ikeys)

        # phases 3-5 are generator/cloud work; wait for the outcome
        out_blob = recv(lc, 6, fr.OUT_EVL, 120.0)
        n_out = len(ir.evl_outputs)
        if len(out_blob) != (n_out + 7) // 8:
            self.abort(6, "output payload has wrong size")
        bits = bytes_to_bits(out_blob, n_out) if n_out else []
        data = bits[:aug.evl_data_out_bits]
        tag = bits[aug.evl_data_out_bits:]
        plain = [d ^ p for d, p in zip(data, pad_bits)]
        if toeplitz_mac(mac_bits, plain, aug.evl_tag_bits) != tag:
            self.abort(6, "evaluator output failed authentication")
        lc.send(6, fr.OUT_ACK_EVL, b"")
        recv(lc, 7, fr.FINISH_EVL, 120.0)

        if cfg.state_path:
            st = SavedState(role=ROLE_EVL, t=self.t + 1, s=cfg.s, k=cfg.k,
                            semi_honest=cfg.semi_honest,
                            split=split or CircuitSplit([0] * cfg.s))
            persist_state(cfg.state_path, st)
        return PartyResult(plain, self.t,
                           self._counters(gen=chan_gen, cloud=chan_cloud))


class CloudEngine(_Party):
    ROLE = ROLE_CLD
    NAME = fr.CLD

    def _run(self, chan_gen, chan_evl) -> PartyResult:
        cfg, aug, k, ll = self.cfg, self.aug, self.k, self.ll
        ir = aug.ir
        s = cfg.s
        lg = Link(chan_gen, self.t, fr.GEN)
        le = Link(chan_evl, self.t, fr.EVL)
        self.links = [lg, le]
        recv = lambda link, ph, mt, to=60.0: _recv_abort_aware(self, link, ph, mt, to)

        self._exchange_config(fr.CFG_FROM_CLD,
                              [(lg, fr.CFG_FROM_GEN), (le, fr.CFG_FROM_EVL)])

        evl_wires = list(ir.evl_input_wires())
        gen_wires = list(ir.gen_input_wires())
        n_gen_blob = len(gen_wires) * ll
        n_evl_blob = len(evl_wires) * 2 * ll

        gen_inputs: list[bytes] = []       # evaluation circuits: label blob
        cseeds: list[bytes | None] = [None] * s
        evl_pairs: list[list[tuple[bytes, bytes]] | None] = [None] * s

        if cfg.semi_honest:
            split = CircuitSplit([0])
            selected = None
            blob = recv(lg, 1, fr.PACKAGES)
            if len(blob) != n_gen_blob:
                self.abort(1, "generator input blob has wrong size")
            gen_inputs = [blob]
            claims = None
        else:
            rec_size = n_gen_blob + SEED_LEN + n_evl_blob
            pkg = recv(lg, 1, fr.PACKAGES)
            if len(pkg) != rec_size * s:
                self.abort(1, "circuit package payload has wrong size")
            claims_blob = recv(lg, 1, fr.CLAIMS)
            if len(claims_blob) != 64 * s:
                self.abort(1, "claims payload has wrong size")
            claims = [(claims_blob[i * 64:i * 64 + 32],
                       claims_blob[i * 64 + 32:(i + 1) * 64]) for i in range(s)]

            if self.t == 0:
                split = select_split(s, self.rng)
                keys = cut_and_choose_ot_recv(
                    _SubChan(lg, 1, fr.KOT_TO_GEN, fr.KOT_TO_CLD),
                    cfg.provider("kot"), split, k)
                selected = list(zip(split.selection, keys))
            else:
                split = self.state.split
                selected = evolve_selected(self.state.key_selected)

            for i, (bit, key) in enumerate(selected):
                rec = pkg[i * rec_size:(i + 1) * rec_size]
                if bit == 0:
                    gen_inputs.append(xor_bytes(
                        rec[:n_gen_blob], key_pad(key, n_gen_blob, b"gen-input")))
                else:
                    gen_inputs.append(b"")
                    cseeds[i] = xor_bytes(
                        rec[n_gen_blob:n_gen_blob + SEED_LEN],
                        key_pad(key, SEED_LEN, b"seed"))
                    if n_evl_blob:
                        pairs_blob = xor_bytes(
                            rec[n_gen_blob + SEED_LEN:],
                            key_pad(key, n_evl_blob, b"evl-inputs"))
                        evl_pairs[i] = [
                            (pairs_blob[j * 2 * ll:j * 2 * ll + ll],
                             pairs_blob[j * 2 * ll + ll:(j + 1) * 2 * ll])
                            for j in range(len(evl_wires))]
                    else:
                        evl_pairs[i] = []

            if self.t == 0:
                body = bytearray()
                for i, (bit, key) in enumerate(selected):
                    claim_bit = bit
                    if cfg.tamper and cfg.tamper.kind == "split_lie" \
                            and i == cfg.tamper.circuit_index:
                        claim_bit = bit ^ 1
                    body += bytes([claim_bit]) + split_key_hash(key)
                le.send(1, fr.SPLITHASH_CLD, bytes(body))
                recv(le, 1, fr.SPLIT_OK)

        # phase 2: selected seeds arrive; circuit keys come via the evaluator
        if evl_wires:
            seeds = oot_cloud(_SubChan(lg, 2, 0, fr.OOT_CTS),
                              _SubChan(le, 2, 0, fr.OOT_PADS),
                              len(evl_wires), SEED_LEN)
        else:
            seeds = []
        ikey_blob = recv(le, 2, fr.IKEYS_EVAL)
        if len(ikey_blob) != SEED_LEN * s:
            self.abort(2, "circuit key payload has wrong size")
        ikeys = [ikey_blob[i * SEED_LEN:(i + 1) * SEED_LEN] for i in range(s)]
        evl_labels = [[eval_input_label(ikeys[i], seeds[j], k)
                       for j in range(len(evl_wires))] for i in range(s)]

        # phase 3: audit the generator's input claims on evaluation circuits
        if not cfg.semi_honest:
            h = self.rng.bytes(16)
            lg.send(3, fr.UHF_SEED, h)
            digest = None
            for i in range(s):
                if split.selection[i] != 0:
                    continue
                w_i, beta = claims[i]
                if thash(32, b"input-claim", w_i, gen_inputs[i]) != beta:
                    self.abort(3, "input claim does not match delivered labels",
                               circuit_index=i)
                t_i = thash(32, b"input-consistency", h, w_i)
                if digest is None:
                    digest = t_i
                elif t_i != digest:
                    self.abort(3, "generator input claims inconsistent",
                               circuit_index=i)

        # regenerate check circuits from their seeds
        check_ctxs: dict[int, object] = {}
        if not cfg.semi_honest:
            for i in range(s):
                if split.selection[i] == 1:
                    inj = {w: evl_pairs[i][j] for j, w in enumerate(evl_wires)}
                    try:
                        check_ctxs[i] = derive_context(cseeds[i], ir, k,
                                                       injected=inj)
                    except GarblingError:
                        self.abort(5, "check circuit seed regeneration failed",
                                   circuit_index=i)

        # phase 4: saved-wire translation
        gin_labels: list[list[bytes]] = [[] for _ in range(s)]
        if self.t >= 1 and ir.partial_inputs:
            if self.state.saved_wire_count != ir.partial_inputs:
                self.abort(4, "saved wire count does not match circuit")
            pw = list(ir.partial_input_wires())
            if cfg.semi_honest:
                body = recv(lg, 4, fr.REMAP)
                rec = 1 + 2 * ll
                if len(body) != rec * len(pw):
                    self.abort(4, "translation payload has wrong size")
                for j in range(len(pw)):
                    loc = body[j * rec]
                    m0 = body[j * rec + 1:j * rec + 1 + ll]
                    m1 = body[j * rec + 1 + ll:(j + 1) * rec]
                    prev = self.state.wires[0][j].single()
                    gin_labels[0].append(semi_honest_remap(prev, (m0, m1), loc))
            else:
                body = recv(lg, 4, fr.PARTIAL_GATES, 120.0)
                off = 0
                for i in range(s):
                    if len(body) < off + 4:
                        self.abort(4, "translation payload truncated")
                    (blen,) = struct.unpack_from(">I", body, off)
                    off += 4
                    try:
                        r_i, gates = decode_partial_gates(body[off:off + blen], k)
                    except Exception:
                        self.abort(4, "translation gates malformed",
                                   circuit_index=i)
                    off += blen
                    if len(gates) != len(pw):
                        self.abort(4, "translation gate count mismatch",
                                   circuit_index=i)
                    if split.selection[i] == 1:
                        ctx = check_ctxs[i]
                        try:
                            check_partial_input_gates(
                                [rec2.pair() for rec2 in self.state.wires[i]],
                                [ctx.pair(w) for w in pw],
                                r_i, cseeds[i], i, k, gates)
                        except AbortError as e:
                            self.abort(4, e.reason, circuit_index=i)
                    else:
                        for j, g in enumerate(gates):
                            gin_labels[i].append(evaluate_partial_input_gate(
                                self.state.wires[i][j].single(), g, r_i, i, j, k))

        # phase 5: receive circuits; verify check ones, evaluate the rest
        out_wires = ir.evl_outputs + ir.gen_outputs
        hdr_size = 4 + len(evl_wires) + (len(out_wires) + 7) // 8
        excluded = [False] * s
        wire_labels: list[list[bytes] | None] = [None] * s
        decode_bits: list[list[int] | None] = [None] * s
        for i in range(s):
            hdr = recv(lg, 5, fr.CIRC_HDR)
            if len(hdr) != hdr_size or struct.unpack_from(">I", hdr)[0] != i:
                self.abort(5, "circuit header malformed", circuit_index=i)
            locs = list(hdr[4:4 + len(evl_wires)])
            dbits = bytes_to_bits(hdr[4 + len(evl_wires):], len(out_wires))
            gates_blob = recv(lg, 5, fr.GATES, 300.0)
            if len(gates_blob) < 4 or struct.unpack_from(">I", gates_blob)[0] != i:
                self.abort(5, "gate stream header malformed", circuit_index=i)
            stream = gates_blob[4:]

            if not cfg.semi_honest and split.selection[i] == 1:
                ctx = check_ctxs[i]
                # possible evaluator inputs must include the labels this cloud
                # can derive itself from the transferred seeds
                for j in range(len(evl_wires)):
                    if evl_labels[i][j] not in evl_pairs[i][j]:
                        self.abort(5, "evaluator input labels disagree with seeds",
                                   circuit_index=i)
                want_locs = [ctx.pp_loc[w] for w in evl_wires]
                want_bits = [ctx.decode_bit(w) for w in out_wires]
                if locs != want_locs or dbits != want_bits:
                    self.abort(5, "circuit header does not regenerate",
                               circuit_index=i)
                if garble_circuit(ctx, ir) != stream:
                    self.abort(5, "garbled circuit does not regenerate",
                               circuit_index=i)
                continue

            # evaluation circuit
            inputs = (_split_labels(gen_inputs[i], ll) + evl_labels[i]
                      + gin_labels[i])
            pp_locs = {w: locs[j] for j, w in enumerate(evl_wires)}
            try:
                wire_labels[i] = evaluate_circuit(ir, stream, inputs, pp_locs, k)
            except (CorruptGateError, GarblingError):
                excluded[i] = True
                continue
            decode_bits[i] = dbits

        # phase 6: vote, release authenticated outputs
        votes: list[list[int]] = []
        for i in range(s):
            if split.selection[i] != 0 or excluded[i] or wire_labels[i] is None:
                continue
            labels = wire_labels[i]
            votes.append([get_bit(labels[w], 0) ^ decode_bits[i][p]
                          for p, w in enumerate(out_wires)])
        if not votes:
            self.abort(6, "no usable evaluation circuit output")
        final: list[int] = []
        for p in range(len(out_wires)):
            ones = sum(v[p] for v in votes)
            zeros = len(votes) - ones
            if ones == zeros:
                self.abort(6, "output vote tied; result unreliable")
            final.append(1 if ones > zeros else 0)

        n_evl_out = len(ir.evl_outputs)
        evl_out = final[:n_evl_out]
        gen_out = final[n_evl_out:]
        if cfg.tamper and cfg.tamper.kind == "output" and evl_out:
            evl_out = list(evl_out)
            evl_out[cfg.tamper.circuit_index % len(evl_out)] ^= 1
        lg.send(6, fr.OUT_GEN, bits_to_bytes(gen_out))
        le.send(6, fr.OUT_EVL, bits_to_bytes(evl_out))
        recv(lg, 6, fr.OUT_ACK_GEN, 120.0)
        recv(le, 6, fr.OUT_ACK_EVL, 120.0)

        # phase 7: persist what this party legitimately holds
        if cfg.state_path:
            wires: list[list[SavedWireRecord]] = []
            for i in range(s):
                recs: list[SavedWireRecord] = []
                if split.selection[i] == 0:
                    if excluded[i] or wire_labels[i] is None:
                        self.abort(7, "cannot save wires of a corrupt circuit",
                                   circuit_index=i)
                    for w in ir.saved_wires:
                        recs.append(SavedWireRecord(wire_labels[i][w], None, 0))
                else:
                    ctx = check_ctxs[i]
                    for w in ir.saved_wires:
                        recs.append(SavedWireRecord(ctx.label0[w], ctx.label1[w],
                                                    ctx.pp_loc[w]))
                wires.append(recs)
            st = SavedState(role=ROLE_CLD, t=self.t + 1, s=s, k=k,
                            semi_honest=cfg.semi_honest, split=split,
                            key_selected=selected, wires=wires)
            persist_state(cfg.state_path, st)
        lg.send(7, fr.FINISH_GEN, b"")
        le.send(7, fr.FINISH_EVL, b"")
        return PartyResult(None, self.t,
                           self._counters(gen=chan_gen, evl=chan_evl))


@dataclass
class LocalRun:
    """Outcome of an in-process three-party execution."""
    gen: PartyResult | BaseException
    evl: PartyResult | BaseException
    cloud: PartyResult | BaseException

    @property
    def ok(self) -> bool:
        return all(isinstance(x, PartyResult) for x in (self.gen, self.evl, self.cloud))

    @property
    def gen_output(self) -> list[int]:
        assert isinstance(self.gen, PartyResult)
        return self.gen.output_bits

    @property
    def evl_output(self) -> list[int]:
        assert isinstance(self.evl, PartyResult)
        return self.evl.output_bits

    def abort_of(self, who: str) -> AbortError:
        err = getattr(self, who)
        assert isinstance(err, AbortError), f"{who}: {err!r}"
        return err


def run_local_execution(gen: GeneratorEngine, evl: EvaluatorEngine,
                        cloud: CloudEngine, record: bool = False,
                        timeout: float = 300.0) -> LocalRun:
    """Drive one execution over in-process channels, one thread per party.

    Protocol aborts come back in the result; any other exception is re-raised.
    When record is set, each engine gains a .transcript of every frame it saw.
    """
    ge_g, ge_e = fr.local_pair()
    gc_g, gc_c = fr.local_pair()
    ec_e, ec_c = fr.local_pair()
    if record:
        for party, chans in ((gen, (ge_g, gc_g)), (evl, (ge_e, ec_e)),
                             (cloud, (gc_c, ec_c))):
            rec: list[bytes] = []
            for ch in chans:
                ch.record = rec
            party.transcript = rec

    box: dict[str, PartyResult | BaseException] = {}

    def wrap(name, fn, *chans):
        try:
            box[name] = fn(*chans)
        except BaseException as e:  # noqa: BLE001 - sorted out below
            box[name] = e

    threads = [
        threading.Thread(target=wrap, args=("gen", gen.run, ge_g, gc_g), daemon=True),
        threading.Thread(target=wrap, args=("evl", evl.run, ge_e, ec_e), daemon=True),
        threading.Thread(target=wrap, args=("cloud", cloud.run, gc_c, ec_c), daemon=True),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join(timeout=timeout)
    if any(t.is_alive() for t in threads):
        raise TimeoutError(f"party threads hung; finished: {sorted(box)}")
    for name in ("gen", "evl", "cloud"):
        err = box[name]
        if isinstance(err, BaseException) and not isinstance(err, AbortError):
            raise err
    return LocalRun(box["gen"], box["evl"], box["cloud"])
