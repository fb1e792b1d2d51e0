"""Wire framing and transports.

Frame layout: length (4B big-endian, counts everything after itself), phase
tag (1B, 1..7), message type (1B), execution id (8B big-endian), payload.
Phase tags are strictly non-decreasing per sender within an execution; the
registry below maps (phase, type) to the unique sending role so recorded
transcripts can be audited offline.

Transports: an in-process queue pair and a blocking TCP wrapper, both counting
bytes and optionally recording every frame that passes through.
"""

from __future__ import annotations

import queue
import socket
import struct
from dataclasses import dataclass, field

from .errors import FrameFormatError

PHASE_MIN, PHASE_MAX = 1, 7
HEADER = 10  # phase + type + exec id
DEFAULT_MAX_FRAME = 16 * 1024 * 1024

GEN, EVL, CLD = "gen", "evl", "cloud"

# message type codes
ABORT = 2
CFG_FROM_GEN, CFG_FROM_EVL, CFG_FROM_CLD = 1, 30, 31
COMMITS, CLAIMS, PACKAGES = 3, 4, 5
KOT_TO_CLD, KOT_TO_GEN = 6, 7
OOT_TO_GEN, OOT_TO_EVL = 8, 9
OOT_CTS, OOT_PADS = 10, 11
SPLITHASH_GEN, SPLITHASH_CLD, SPLIT_OK = 12, 13, 14
IKEYS, IKEYS_EVAL = 15, 16
UHF_SEED = 17
PARTIAL_GATES, REMAP = 19, 20
CIRC_HDR, GATES = 21, 22
OUT_GEN, OUT_EVL = 23, 24
FINISH_GEN, FINISH_EVL = 25, 26
OUT_ACK_GEN, OUT_ACK_EVL = 27, 28

# (phase, type) -> (sender, receiver); ABORT is legal from anyone at any phase.
REGISTRY: dict[tuple[int, int], tuple[str, str]] = {
    (1, CFG_FROM_GEN): (GEN, "*"),
    (1, CFG_FROM_EVL): (EVL, "*"),
    (1, CFG_FROM_CLD): (CLD, "*"),
    (1, COMMITS): (GEN, CLD),
    (1, CLAIMS): (GEN, CLD),
    (1, PACKAGES): (GEN, CLD),
    (1, KOT_TO_CLD): (GEN, CLD),
    (1, KOT_TO_GEN): (CLD, GEN),
    (1, SPLITHASH_GEN): (GEN, EVL),
    (1, SPLITHASH_CLD): (CLD, EVL),
    (1, SPLIT_OK): (EVL, "*"),
    (2, OOT_TO_GEN): (EVL, GEN),
    (2, OOT_TO_EVL): (GEN, EVL),
    (2, OOT_CTS): (GEN, CLD),
    (2, OOT_PADS): (EVL, CLD),
    (2, IKEYS): (GEN, EVL),
    (2, IKEYS_EVAL): (EVL, CLD),
    (3, UHF_SEED): (CLD, GEN),
    (4, PARTIAL_GATES): (GEN, CLD),
    (4, REMAP): (GEN, CLD),
    (5, CIRC_HDR): (GEN, CLD),
    (5, GATES): (GEN, CLD),
    (6, OUT_GEN): (CLD, GEN),
    (6, OUT_EVL): (CLD, EVL),
    (6, OUT_ACK_GEN): (GEN, CLD),
    (6, OUT_ACK_EVL): (EVL, CLD),
    (7, FINISH_GEN): (CLD, GEN),
    (7, FINISH_EVL): (CLD, EVL),
}


def encode_frame(phase: int, mtype: int, exec_id: int, payload: bytes) -> bytes:
    if not (PHASE_MIN <= phase <= PHASE_MAX):
        raise FrameFormatError(f"phase {phase} out of range")
    return struct.pack(">IBBQ", HEADER + len(payload), phase, mtype,
                       exec_id) + payload


def decode_frame(data: bytes, offset: int = 0,
                 max_frame: int = DEFAULT_MAX_FRAME
                 ) -> tuple[int, int, int, bytes, int]:
    """Returns (phase, type, exec_id, payload, next_offset)."""
    if len(data) - offset < 4:
        raise FrameFormatError("truncated frame length")
    (length,) = struct.unpack_from(">I", data, offset)
    if length < HEADER:
        raise FrameFormatError(f"frame length {length} below header size")
    if length > max_frame:
        raise FrameFormatError(f"frame length {length} exceeds cap {max_frame}")
    if len(data) - offset - 4 < length:
        raise FrameFormatError("truncated frame body")
    phase, mtype, exec_id = struct.unpack_from(">BBQ", data, offset + 4)
    if not (PHASE_MIN <= phase <= PHASE_MAX):
        raise FrameFormatError(f"phase {phase} out of range")
    payload = data[offset + 14: offset + 4 + length]
    return phase, mtype, exec_id, payload, offset + 4 + length


def split_frames(data: bytes) -> list[tuple[int, int, int, bytes]]:
    """Parse a transcript blob into frames; raises on any malformation."""
    out = []
    off = 0
    while off < len(data):
        phase, mtype, exec_id, payload, off = decode_frame(data, off)
        out.append((phase, mtype, exec_id, payload))
    return out


class LocalChannel:
    """One endpoint of an in-process duplex frame channel."""

    def __init__(self):
        self._inbox: queue.Queue = queue.Queue()
        self._peer: "LocalChannel | None" = None
        self.sent_bytes = 0
        self.recv_bytes = 0
        self.record: list[bytes] | None = None

    def send(self, frame: bytes) -> None:
        self.sent_bytes += len(frame)
        if self.record is not None:
            self.record.append(frame)
        self._peer._inbox.put(frame)

    def recv(self, timeout: float | None = 60.0) -> bytes:
        try:
            frame = self._inbox.get(timeout=timeout)
        except queue.Empty:
            raise FrameFormatError("channel receive timed out") from None
        self.recv_bytes += len(frame)
        if self.record is not None:
            self.record.append(frame)
        return frame

    def close(self) -> None:
        pass


def local_pair() -> tuple[LocalChannel, LocalChannel]:
    a, b = LocalChannel(), LocalChannel()
    a._peer, b._peer = b, a
    return a, b


class TcpChannel:
    """Blocking socket endpoint speaking length-prefixed frames."""

    def __init__(self, sock: socket.socket, max_frame: int = DEFAULT_MAX_FRAME):
        self._sock = sock
        self._max = max_frame
        self.sent_bytes = 0
        self.recv_bytes = 0
        self.record: list[bytes] | None = None

    def send(self, frame: bytes) -> None:
        self.sent_bytes += len(frame)
        if self.record is not None:
            self.record.append(frame)
        self._sock.sendall(frame)

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            chunk = self._sock.recv(n - len(buf))
            if not chunk:
                raise FrameFormatError("connection closed mid-frame")
            buf += chunk
        return bytes(buf)

    def recv(self, timeout: float | None = 60.0) -> bytes:
        self._sock.settimeout(timeout)
        head = self._read_exact(4)
        (length,) = struct.unpack(">I", head)
        if length < HEADER or length > self._max:
            raise FrameFormatError(f"bad frame length {length}")
        frame = head + self._read_exact(length)
        self.recv_bytes += len(frame)
        if self.record is not None:
            self.record.append(frame)
        return frame

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


@dataclass
class ChannelStats:
    sent: int = 0
    received: int = 0

    @property
    def total(self) -> int:
        return self.sent + self.received


def channel_stats(chan) -> ChannelStats:
    return ChannelStats(chan.sent_bytes, chan.recv_bytes)


@dataclass
class ReplayReport:
    """Offline audit of one party's recorded transcript."""
    frames: int = 0
    checks: dict[str, bool] = field(default_factory=dict)
    failing_frame: int = -1
    detail: str = ""

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def replay_transcript(data: bytes) -> ReplayReport:
    """Re-run the deterministic transcript checks: framing, registry
    membership, per-sender phase monotonicity, single execution id."""
    rep = ReplayReport()
    try:
        frames = split_frames(data)
    except FrameFormatError as e:
        rep.checks["framing"] = False
        rep.detail = str(e)
        return rep
    rep.frames = len(frames)
    rep.checks["framing"] = True

    known = True
    monotone = True
    one_exec = True
    last_phase: dict[str, int] = {}
    exec_ids = set()
    for i, (phase, mtype, exec_id, _payload) in enumerate(frames):
        exec_ids.add(exec_id)
        if mtype == ABORT:
            continue
        entry = REGISTRY.get((phase, mtype))
        if entry is None:
            known = False
            rep.failing_frame = i
            rep.detail = f"frame {i}: unknown (phase={phase}, type={mtype})"
            break
        sender = entry[0]
        if last_phase.get(sender, PHASE_MIN) > phase:
            monotone = False
            rep.failing_frame = i
            rep.detail = (f"frame {i}: sender {sender} phase {phase} after "
                          f"{last_phase[sender]}")
            break
        last_phase[sender] = phase
    if len(exec_ids) > 1:
        one_exec = False
        rep.detail = rep.detail or f"multiple execution ids: {sorted(exec_ids)}"
    rep.checks["registry"] = known
    rep.checks["phase_order"] = monotone
    rep.checks["single_execution"] = one_exec
    return rep
