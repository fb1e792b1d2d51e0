#!/usr/bin/env python3
"""
Two millionaires, one cloud
===========================

Alice (the generator) and Bob (the evaluator) each hold a 4-bit fortune.
Bob's phone is weak, so a cloud does the heavy lifting -- without learning
either fortune or the answer. The same run is then repeated with a generator
who corrupts one garbled circuit, to show the cut-and-choose check firing.
"""

from pgc.engine import (CloudEngine, EngineConfig, EvaluatorEngine,
                        GeneratorEngine, TamperPlan, run_local_execution)
from pgc.ot import TrustedDealer
from pgc.primitives import int_to_bits
from pgc.programs import millionaires

ALICE = 11
BOB = 9

circuit = millionaires(4)
print(f"circuit: {len(circuit.gates)} gates, "
      f"{circuit.gen_inputs}+{circuit.evl_inputs} input bits")


def configs(tamper=None):
    # one trusted-dealer OT endpoint pair per purpose, shared by the parties;
    # fixed seeds keep the run (and the circuit split) reproducible
    providers = {"kot": TrustedDealer(), "oot": TrustedDealer()}
    return {who: EngineConfig(circuit=circuit, s=5, k=80, providers=providers,
                              seed=f"demo-{who}".encode(),
                              tamper=tamper if who == "gen" else None)
            for who in ("gen", "evl", "cloud")}


cfg = configs()
run = run_local_execution(GeneratorEngine(cfg["gen"], int_to_bits(ALICE, 4)),
                          EvaluatorEngine(cfg["evl"], int_to_bits(BOB, 4)),
                          CloudEngine(cfg["cloud"]))

print(f"\nAlice has {ALICE}, Bob has {BOB}")
print(f"is Alice richer? gen sees {run.gen_output}, evl sees {run.evl_output}")
for who, party in (("generator", run.gen), ("evaluator", run.evl)):
    moved = sum(sum(v) for v in party.counters.values())
    print(f"{who} moved {moved} bytes across both links")

# Same computation, but the generator garbles one circuit wrong. Three of
# the five circuits are opened and checked; under these seeds circuit 2 is
# one of them, so the corruption is a byte-level mismatch against the
# regeneration from its seed.
print("\nnow the generator cheats on circuit 2...")
cfg = configs(tamper=TamperPlan("gates", 2))
run = run_local_execution(GeneratorEngine(cfg["gen"], int_to_bits(ALICE, 4)),
                          EvaluatorEngine(cfg["evl"], int_to_bits(BOB, 4)),
                          CloudEngine(cfg["cloud"]))
for who in ("cloud", "gen", "evl"):
    err = run.abort_of(who)
    if err:
        tag = "detected" if not err.remote else "notified"
        print(f"{who}: {tag} abort in phase {err.phase}: {err.reason}")
