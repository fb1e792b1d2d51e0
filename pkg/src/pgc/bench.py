"""Workload runners and the save/load microbenchmark.

Timing uses the monotonic clock and reports milliseconds. Runs here are
in-process (three party threads over queue channels); the CLI wires the same
engines over TCP for real deployments.
"""

from __future__ import annotations

import csv
import os
import time
from dataclasses import dataclass, fields

from .circuit import CircuitIR
from .cutchoose import CircuitSplit, key_bytes
from .engine import (CloudEngine, EngineConfig, EvaluatorEngine,
                     GeneratorEngine, PartyResult, TamperPlan,
                     run_local_execution)
from .errors import AbortError
from .garbling import derive_context, label_len
from .ot import TrustedDealer
from .partial import (SavedState, SavedWireRecord, _pp_order,
                      generate_partial_input_gates, load_state, persist_state)
from .primitives import RandomSource, int_to_bits

CSV_HEADER = ["trial", "program", "role", "s", "k", "encoding", "tag_bits",
              "mode", "t", "millis", "result", "abort_phase", "abort_reason",
              "gen_sent", "gen_recv", "evl_sent", "evl_recv",
              "cloud_sent", "cloud_recv", "gates"]


@dataclass
class TrialRow:
    trial: int
    program: str
    role: str
    s: int
    k: int
    encoding: int
    tag_bits: int
    mode: str
    t: int
    millis: float
    result: str
    abort_phase: str = ""
    abort_reason: str = ""
    gen_sent: str = ""
    gen_recv: str = ""
    evl_sent: str = ""
    evl_recv: str = ""
    cloud_sent: str = ""
    cloud_recv: str = ""
    gates: int = 0

    def as_list(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


def write_csv(path: str, rows: list) -> None:
    """Append rows, writing the fixed header only when the file is new."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if fresh:
            w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow(row.as_list() if isinstance(row, TrialRow) else row)


def _party_counters(run_result) -> dict[str, int]:
    out = {}
    for who in ("gen", "evl", "cloud"):
        res = getattr(run_result, who)
        if isinstance(res, PartyResult):
            out[who + "_sent"] = sum(a for a, _ in res.counters.values())
            out[who + "_recv"] = sum(b for _, b in res.counters.values())
    return out


def run_local_trials(ir: CircuitIR, program_label: str, gen_value: int,
                     evl_value: int, s: int = 5, k: int = 64,
                     encoding: int = 8, tag_bits: int = 32,
                     semi: bool = False, trials: int = 1,
                     seed: bytes | None = None, state_dir: str | None = None,
                     tamper: TamperPlan | None = None,
                     dealer_ot: bool = True) -> list[TrialRow]:
    """Drive `trials` full executions in-process; one row per trial.

    With a state_dir the trials chain (each consumes the previous state);
    without one every trial is an independent first execution.
    """
    rows: list[TrialRow] = []
    root = RandomSource(seed)
    paths = None
    if state_dir:
        paths = {who: os.path.join(state_dir, f"{who}.state")
                 for who in ("gen", "evl", "cloud")}
    mode = "semi" if semi else "malicious"
    for trial in range(trials):
        if dealer_ot:
            providers = {"kot": TrustedDealer(), "oot": TrustedDealer()}
        else:
            providers = None

        def mk(who: str) -> EngineConfig:
            return EngineConfig(
                circuit=ir, s=s, k=k, encoding_width=encoding,
                tag_bits=tag_bits, semi_honest=semi,
                seed=root.child(b"%s-%d" % (who.encode(), trial)).bytes(32)
                if seed is not None else None,
                state_path=paths[who] if paths else None,
                tamper=tamper if who == "gen" else None,
                providers=providers)

        gen_bits = int_to_bits(gen_value, ir.gen_inputs)
        evl_bits = int_to_bits(evl_value, ir.evl_inputs)
        start = time.monotonic()
        try:
            run = run_local_execution(GeneratorEngine(mk("gen"), gen_bits),
                                      EvaluatorEngine(mk("evl"), evl_bits),
                                      CloudEngine(mk("cloud")))
        except AbortError as e:
            # raised during engine construction, before any thread started
            rows.append(TrialRow(trial, program_label, "all", s, k, encoding,
                                 tag_bits, mode, 0, 0.0, "abort",
                                 str(e.phase), e.reason))
            break
        millis = (time.monotonic() - start) * 1000.0
        counters = _party_counters(run)
        if run.ok:
            rows.append(TrialRow(trial, program_label, "all", s, k, encoding,
                                 tag_bits, mode, run.gen.t, millis, "ok",
                                 gates=ir_gate_count(ir), **counters))
        else:
            err = next(r for r in (run.cloud, run.gen, run.evl)
                       if isinstance(r, AbortError))
            rows.append(TrialRow(trial, program_label, "all", s, k, encoding,
                                 tag_bits, mode, 0, millis, "abort",
                                 str(err.phase), err.reason, **counters))
            break
    return rows


def ir_gate_count(ir: CircuitIR) -> int:
    return len(ir.gates)


SAVELOAD_HEADER = ["wires", "s", "k", "save_total_ms", "load_total_ms",
                   "save_us_per_bit", "load_us_per_bit"]


@dataclass
class SaveLoadRow:
    wires: int
    s: int
    k: int
    save_total_ms: float
    load_total_ms: float
    save_us_per_bit: float
    load_us_per_bit: float

    def as_list(self) -> list:
        return [self.wires, self.s, self.k,
                f"{self.save_total_ms:.3f}", f"{self.load_total_ms:.3f}",
                f"{self.save_us_per_bit:.3f}", f"{self.load_us_per_bit:.3f}"]


def bench_saveload(path_dir: str, wire_counts: list[int],
                   s_values: list[int] | None = None, k: int = 64,
                   seed: bytes = b"saveload-bench",
                   repeats: int = 3) -> list[SaveLoadRow]:
    """Time persisting saved wires versus loading them back into translation
    gates. Loading covers file read plus gate creation, so it carries the
    hashing cost that saving does not.
    """
    rows: list[SaveLoadRow] = []
    rng = RandomSource(seed)
    ll = label_len(k)
    for s in (s_values or [5]):
        for n in wire_counts:
            # a circuit whose first n wires are saved; contexts supply
            # delta-consistent label pairs for the translation targets
            ir = CircuitIR(n, 0, 0, evl_outputs=[], gen_outputs=[],
                           saved_wires=list(range(n)))
            ctxs = [derive_context(rng.bytes(16), ir, k) for _ in range(s)]
            old = [[(rng.bytes(ll), rng.bytes(ll)) for _ in range(n)]
                   for _ in range(s)]
            state_path = os.path.join(path_dir, f"bench-{s}-{n}.state")

            best_save = best_load = float("inf")
            for _ in range(repeats):
                wires = [[SavedWireRecord(p0, p1, 0) for p0, p1 in old[i]]
                         for i in range(s)]
                kb = key_bytes(k)
                st = SavedState(role=0, t=1, s=s, k=k,
                                key_pairs=[(rng.bytes(kb), rng.bytes(kb))
                                           for _ in range(s)],
                                split=CircuitSplit([0] * s), wires=wires)
                t0 = time.monotonic()
                persist_state(state_path, st)
                best_save = min(best_save, time.monotonic() - t0)

                _pp_order.cache_clear()  # time the cold path every repeat
                t0 = time.monotonic()
                loaded = load_state(state_path)
                for i in range(s):
                    generate_partial_input_gates(
                        [r.pair() for r in loaded.wires[i]],
                        [ctxs[i].pair(w) for w in ir.saved_wires],
                        rng.bytes(ll), ctxs[i].seed, i, k,
                        delta=ctxs[i].delta)
                best_load = min(best_load, time.monotonic() - t0)
            os.unlink(state_path)

            bits = s * n
            rows.append(SaveLoadRow(
                n, s, k, best_save * 1000.0, best_load * 1000.0,
                best_save * 1e6 / bits if bits else 0.0,
                best_load * 1e6 / bits if bits else 0.0))
    return rows


def write_saveload_csv(path: str, rows: list[SaveLoadRow]) -> None:
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if fresh:
            w.writerow(SAVELOAD_HEADER)
        for row in rows:
            w.writerow(row.as_list())
