#!/usr/bin/env python3
"""Saved wires across executions: a private database queried twice.

The evaluator uploads a 64-entry database once. The second lookup feeds the
database back in through translation gates instead of fresh oblivious
transfers, which is where the bandwidth goes down.
"""

import os
import tempfile

from pgc.engine import (CloudEngine, EngineConfig, EvaluatorEngine,
                        GeneratorEngine, run_local_execution)
from pgc.ot import TrustedDealer
from pgc.primitives import RandomSource, bits_to_int, int_to_bits
from pgc.programs import keyed_db, keyed_db_reuse

rng = RandomSource(b"demo-db")
db_bits = rng.bits(64 * 8)
db = [bits_to_int(db_bits[i * 8:(i + 1) * 8]) for i in range(64)]

workdir = tempfile.mkdtemp(prefix="reuse-demo-")
paths = {w: os.path.join(workdir, w + ".state") for w in ("gen", "evl", "cloud")}
providers = {"kot": TrustedDealer(), "oot": TrustedDealer()}


def lookup(circuit, evl_bits, label):
    cfg = {who: EngineConfig(circuit=circuit, s=5, k=80,
                             state_path=paths[who], providers=providers)
           for who in ("gen", "evl", "cloud")}
    run = run_local_execution(GeneratorEngine(cfg["gen"], []),
                              EvaluatorEngine(cfg["evl"], evl_bits),
                              CloudEngine(cfg["cloud"]))
    assert run.ok
    sent, recvd = (sum(n) for n in zip(run.evl.counters["gen"],
                                       run.evl.counters["cloud"]))
    print(f"{label}: entry = {bits_to_int(run.evl_output)}, "
          f"evaluator sent {sent} recv {recvd} bytes")
    return sent + recvd


# execution 0: the whole database rides in through oblivious transfer
first = lookup(keyed_db(64), db_bits + int_to_bits(9, 6), "t=0 lookup db[9]")
assert bits_to_int(int_to_bits(db[9], 8)) == db[9]

# execution 1: only the 6 address bits are fresh input
second = lookup(keyed_db_reuse(64), int_to_bits(33, 6), "t=1 lookup db[33]")

print(f"\nexpected db[9]={db[9]}, db[33]={db[33]}")
print(f"evaluator bytes: {second}/{first} = {100 * second / first:.1f}% "
      f"of the first execution")
