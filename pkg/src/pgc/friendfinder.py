"""Friend-finder gateway: a shared location map evaluated under the protocol.

The HTTP layer acts as the evaluator for each user action while a generator
and a cloud peer live for the whole session and carry the map between
executions as saved wires. Cell values never leave the protocol frames; only
the user-facing JSON responses contain plaintext.

A set action costs at most three executions: read the target cell, write the
user id, clear the previous cell. A get costs exactly one.

Run with: uvicorn pgc.friendfinder:app
"""

from __future__ import annotations

import asyncio
import os
import secrets
import tempfile
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, Header, HTTPException, WebSocket, WebSocketDisconnect

from .circuit import CircuitIR
from .engine import (CloudEngine, EngineConfig, EvaluatorEngine,
                     GeneratorEngine, run_local_execution)
from .errors import AbortError
from .ot import TrustedDealer
from .primitives import bits_to_int, int_to_bits
from .programs import map_get, map_set, map_start

CELL_BITS = 8
MAX_USERS = 255  # ids must fit one cell


class _FifoGate:
    """Strict first-come-first-served mutual exclusion."""

    def __init__(self):
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._next_ticket = 0
        self._serving = 0

    def __enter__(self):
        with self._cond:
            ticket = self._next_ticket
            self._next_ticket += 1
            while self._serving != ticket:
                self._cond.wait()
        return self

    def __exit__(self, *exc):
        with self._cond:
            self._serving += 1
            self._cond.notify_all()


@dataclass
class _User:
    uid: int
    name: str
    token: str
    cell: int | None = None


@dataclass
class MapSession:
    sid: str
    cells: int
    state_dir: str
    s: int
    k: int
    encoding: int
    tag_bits: int
    dealer_ot: bool
    users: dict[int, _User] = field(default_factory=dict)
    tokens: dict[str, int] = field(default_factory=dict)
    gate: _FifoGate = field(default_factory=_FifoGate)
    executions: int = 0
    transcripts: list[bytes] = field(default_factory=list)
    subscribers: list[tuple[asyncio.AbstractEventLoop, asyncio.Queue]] = \
        field(default_factory=list)
    sub_lock: threading.Lock = field(default_factory=threading.Lock)

    def notify(self, event: dict) -> None:
        with self.sub_lock:
            targets = list(self.subscribers)
        for loop, q in targets:
            loop.call_soon_threadsafe(q.put_nowait, event)

    def _engines(self, ir: CircuitIR, evl_bits: list[int]):
        if self.dealer_ot:
            providers = {"kot": TrustedDealer(), "oot": TrustedDealer()}
        else:
            providers = None

        def cfg(who: str) -> EngineConfig:
            return EngineConfig(
                circuit=ir, s=self.s, k=self.k, encoding_width=self.encoding,
                tag_bits=self.tag_bits,
                state_path=os.path.join(self.state_dir, who + ".state"),
                providers=providers)

        return (GeneratorEngine(cfg("gen"), []),
                EvaluatorEngine(cfg("evl"), evl_bits),
                CloudEngine(cfg("cloud")))

    def execute(self, op: str, ir: CircuitIR, evl_bits: list[int]) -> list[int]:
        """One protocol execution under the FIFO gate; returns output bits."""
        with self.gate:
            self.notify({"type": "started", "op": op, "execution": self.executions})
            try:
                gen, evl, cld = self._engines(ir, evl_bits)
                run = run_local_execution(gen, evl, cld, record=True)
            except AbortError as e:
                self.notify({"type": "aborted", "op": op, "phase": e.phase})
                raise HTTPException(
                    502, f"protocol abort at phase {e.phase}: {e.reason}")
            self.executions += 1
            for party in (gen, evl, cld):
                self.transcripts.extend(party.transcript)
            if not run.ok:
                err = next(r for r in (run.cloud, run.evl, run.gen)
                           if isinstance(r, AbortError))
                self.notify({"type": "aborted", "op": op, "phase": err.phase})
                raise HTTPException(
                    502, f"protocol abort at phase {err.phase}: {err.reason}")
            self.notify({"type": "completed", "op": op})
            return run.evl_output

    def addr_bits(self) -> int:
        return max(1, (self.cells - 1).bit_length())

    def read_cell(self, cell: int) -> int:
        bits = self.execute("get", map_get(self.cells, CELL_BITS),
                            int_to_bits(cell, self.addr_bits()))
        return bits_to_int(bits)

    def write_cell(self, cell: int, value: int) -> None:
        self.execute("set", map_set(self.cells, CELL_BITS),
                     int_to_bits(value, CELL_BITS)
                     + int_to_bits(cell, self.addr_bits()))


def create_app(s: int = 5, k: int = 64, encoding: int = 2, tag_bits: int = 8,
               dealer_ot: bool = True, state_root: str | None = None) -> FastAPI:
    app = FastAPI(title="friend finder")
    sessions: dict[str, MapSession] = {}
    registry_lock = threading.Lock()
    root = state_root or tempfile.mkdtemp(prefix="friendfinder-")

    def session_of(sid: str) -> MapSession:
        sess = sessions.get(sid)
        if sess is None:
            raise HTTPException(404, "unknown session")
        return sess

    def auth_user(sess: MapSession, uid: int, authorization: str | None) -> _User:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, "bearer token required")
        token = authorization.removeprefix("Bearer ")
        if sess.tokens.get(token) != uid:
            raise HTTPException(401, "token does not match user")
        return sess.users[uid]

    @app.post("/session")
    def start_session(body: dict):
        cells = body.get("cells")
        if not isinstance(cells, int) or not 1 <= cells <= 4096:
            raise HTTPException(400, "cells must be an integer in 1..4096")
        sid = body.get("session") or secrets.token_hex(8)
        if not isinstance(sid, str):
            raise HTTPException(400, "session must be a string")
        with registry_lock:
            if sid in sessions:
                raise HTTPException(409, "session already started")
            state_dir = os.path.join(root, sid)
            os.makedirs(state_dir, exist_ok=True)
            sess = MapSession(sid, cells, state_dir, s, k, encoding,
                              tag_bits, dealer_ot)
            sessions[sid] = sess
        # first chain execution zeroes the whole map
        sess.execute("start", map_start(cells, CELL_BITS), [0])
        return {"session": sid, "cells": cells}

    @app.post("/session/{sid}/user")
    def register_user(sid: str, body: dict):
        sess = session_of(sid)
        name = body.get("name")
        if not isinstance(name, str) or not name:
            raise HTTPException(400, "name required")
        with registry_lock:
            uid = len(sess.users) + 1
            if uid > MAX_USERS:
                raise HTTPException(409, "user registry full")
            token = secrets.token_hex(16)
            sess.users[uid] = _User(uid, name, token)
            sess.tokens[token] = uid
        return {"user": uid, "token": token}

    @app.post("/session/{sid}/set")
    def set_location(sid: str, body: dict,
                     authorization: str | None = Header(default=None)):
        sess = session_of(sid)
        uid, cell = body.get("user"), body.get("cell")
        if not isinstance(uid, int) or uid not in sess.users:
            raise HTTPException(400, "unknown user")
        user = auth_user(sess, uid, authorization)
        if not isinstance(cell, int) or not 0 <= cell < sess.cells:
            raise HTTPException(400, "cell index out of range")

        current = sess.read_cell(cell)
        if current not in (0, uid):
            return {"result": "occupied", "occupied_by": current,
                    "occupant": sess.users.get(current, _User(0, "?", "")).name}
        if current != uid:
            sess.write_cell(cell, uid)
        previous = user.cell
        if previous is not None and previous != cell:
            sess.write_cell(previous, 0)
        user.cell = cell
        return {"result": "moved"}

    @app.get("/session/{sid}/cell/{n}")
    def get_cell(sid: str, n: int):
        sess = session_of(sid)
        if not 0 <= n < sess.cells:
            raise HTTPException(400, "cell index out of range")
        return {"value": sess.read_cell(n)}

    @app.get("/session/{sid}/stats")
    def stats(sid: str):
        sess = session_of(sid)
        return {"executions": sess.executions, "users": len(sess.users),
                "cells": sess.cells}

    @app.websocket("/session/{sid}/events")
    async def events(ws: WebSocket, sid: str):
        sess = sessions.get(sid)
        if sess is None:
            await ws.close(code=4404)
            return
        await ws.accept()
        loop = asyncio.get_running_loop()
        q: asyncio.Queue = asyncio.Queue()
        with sess.sub_lock:
            sess.subscribers.append((loop, q))
        try:
            while True:
                event = await q.get()
                await ws.send_json(event)
        except WebSocketDisconnect:
            pass
        finally:
            with sess.sub_lock:
                sess.subscribers.remove((loop, q))

    app.state.sessions = sessions
    return app


app = create_app()
