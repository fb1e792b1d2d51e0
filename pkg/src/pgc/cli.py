"""Command-line entry points for the three protocol roles.

Without --role the command runs all three parties in one process over local
channels, which is the quickest way to try a program or produce CSV numbers.
With --role it drives one party over TCP; each pairwise link is declared by
exactly one side with --listen and the other with --connect, for example:

  pgc run --role cloud --program millionaires:8 --listen gen=0.0.0.0:7101,evl=0.0.0.0:7102
  pgc run --role gen   --program millionaires:8 --input 200 \
          --connect cloud=HOST:7101 --listen evl=0.0.0.0:7103
  pgc run --role evl   --program millionaires:8 --input 90 \
          --connect cloud=HOST:7102,gen=HOST:7103

Exit codes: 0 success, 1 usage or connection failure, 2 protocol abort
(cheating detected or chain refused).
"""

from __future__ import annotations

import argparse
import os
import socket
import sys
import time

from . import framing as fr
from .bench import (TrialRow, bench_saveload, run_local_trials, write_csv,
                    write_saveload_csv)
from .cutchoose import verify_split_hashes
from .engine import (CloudEngine, EngineConfig, EvaluatorEngine,
                     GeneratorEngine, TamperPlan)
from .errors import AbortError, PgcError
from .primitives import int_to_bits
from .programs import build_program, parse_program_spec

ROLES = ("gen", "evl", "cloud")


def _parse_endpoints(spec: str) -> dict[str, tuple[str, int]]:
    out: dict[str, tuple[str, int]] = {}
    for part in spec.split(","):
        if "=" not in part or ":" not in part:
            raise argparse.ArgumentTypeError(
                f"endpoint {part!r} must look like role=host:port")
        role, addr = part.split("=", 1)
        host, port = addr.rsplit(":", 1)
        if role not in ROLES:
            raise argparse.ArgumentTypeError(f"unknown role {role!r}")
        out[role] = (host, int(port))
    return out


def _parse_tamper(spec: str) -> TamperPlan:
    if os.environ.get("PGC_ALLOW_TAMPER") != "1":
        raise argparse.ArgumentTypeError(
            "--tamper needs PGC_ALLOW_TAMPER=1 in the environment")
    kind, _, idx = spec.partition(":")
    return TamperPlan(kind, int(idx) if idx else 0)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pgc", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="cmd", required=True)

    run = sub.add_parser("run", help="execute a program")
    run.add_argument("--role", choices=ROLES,
                     help="network party; omit to run all three locally")
    run.add_argument("--program", required=True,
                     help="name:params, e.g. millionaires:8 or keyed_db:16,4")
    run.add_argument("--circuits", type=int, default=5, metavar="S")
    run.add_argument("--security", type=int, default=80, metavar="K")
    run.add_argument("--encoding", type=int, default=8, metavar="KAPPA")
    run.add_argument("--tag-bits", type=int, default=32)
    run.add_argument("--mode", choices=("malicious", "semi"),
                     default="malicious")
    run.add_argument("--listen", type=_parse_endpoints, default={},
                     metavar="ROLE=HOST:PORT,...")
    run.add_argument("--connect", type=_parse_endpoints, default={},
                     metavar="ROLE=HOST:PORT,...")
    run.add_argument("--state", help="state file (network) or directory "
                     "(local); default $PGC_STATE_DIR when set")
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--csv", help="append per-trial rows to this file")
    run.add_argument("--seed", help="hex seed: deterministic test mode")
    run.add_argument("--input", type=int, default=0,
                     help="this party's input value (network mode)")
    run.add_argument("--gen-input", type=int, default=0)
    run.add_argument("--evl-input", type=int, default=0)
    run.add_argument("--tamper", type=_parse_tamper,
                     help="kind[:circuit], test builds only")
    run.add_argument("--transcript", help="record every frame seen to a file")
    run.add_argument("--group-ot", action="store_true",
                     help="local mode: real public-key base OT instead of "
                          "the trusted-dealer test mode")

    bench = sub.add_parser("bench-saveload",
                           help="save/load microbenchmark for saved wires")
    bench.add_argument("--wires", default="64,256,1024",
                       help="comma list of wire counts")
    bench.add_argument("--circuits", default="5",
                       help="comma list of S values")
    bench.add_argument("--security", type=int, default=64)
    bench.add_argument("--repeats", type=int, default=3)
    bench.add_argument("--csv", help="append rows to this file")
    bench.add_argument("--dir", default=".", help="scratch directory")

    rep = sub.add_parser("replay", help="audit a recorded transcript")
    rep.add_argument("transcript")
    return p


def _default_state(role: str, explicit: str | None) -> str | None:
    if explicit:
        return explicit
    root = os.environ.get("PGC_STATE_DIR")
    if root:
        return os.path.join(root, f"pgc-{role}.state")
    return None


def cmd_run_local(args) -> int:
    name, params = parse_program_spec(args.program)
    ir = build_program(name, params)
    state_dir = args.state or os.environ.get("PGC_STATE_DIR")
    if state_dir:
        os.makedirs(state_dir, exist_ok=True)
    rows = run_local_trials(
        ir, args.program, args.gen_input, args.evl_input,
        s=args.circuits, k=args.security, encoding=args.encoding,
        tag_bits=args.tag_bits, semi=args.mode == "semi",
        trials=args.trials, seed=bytes.fromhex(args.seed) if args.seed else None,
        state_dir=state_dir, tamper=args.tamper,
        dealer_ot=not args.group_ot)
    if args.csv:
        write_csv(args.csv, rows)
    for row in rows:
        print(",".join(str(v) for v in row.as_list()))
    return 0 if all(r.result == "ok" for r in rows) else 2


def _listen_one(host: str, port: int, timeout: float) -> fr.TcpChannel:
    srv = socket.create_server((host, port))
    srv.settimeout(timeout)
    conn, _ = srv.accept()
    srv.close()
    conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return fr.TcpChannel(conn)


def _connect_one(host: str, port: int, timeout: float) -> fr.TcpChannel:
    deadline = time.monotonic() + timeout
    while True:
        try:
            sock = socket.create_connection((host, port), timeout=5.0)
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            return fr.TcpChannel(sock)
        except OSError:
            if time.monotonic() >= deadline:
                raise
            time.sleep(0.2)


def _build_channels(role: str, listen: dict, connect: dict,
                    timeout: float = 60.0) -> dict[str, fr.TcpChannel]:
    peers = [r for r in ROLES if r != role]
    chans: dict[str, fr.TcpChannel] = {}
    for peer in peers:
        if peer in listen and peer in connect:
            raise SystemExit(f"peer {peer} appears in both --listen and --connect")
        if peer in listen:
            chans[peer] = _listen_one(*listen[peer], timeout)
        elif peer in connect:
            chans[peer] = _connect_one(*connect[peer], timeout)
        else:
            raise SystemExit(f"no endpoint for peer {peer}; "
                             f"add it to --listen or --connect")
    return chans


def cmd_run_network(args) -> int:
    name, params = parse_program_spec(args.program)
    ir = build_program(name, params)
    role = args.role
    state_path = _default_state(role, args.state)
    chans = _build_channels(role, args.listen, args.connect)
    record: list[bytes] | None = [] if args.transcript else None
    if record is not None:
        for ch in chans.values():
            ch.record = record

    rows: list[TrialRow] = []
    code = 0
    mode = "semi" if args.mode == "semi" else "malicious"
    for trial in range(args.trials):
        cfg = EngineConfig(
            circuit=ir, s=args.circuits, k=args.security,
            encoding_width=args.encoding, tag_bits=args.tag_bits,
            semi_honest=args.mode == "semi",
            state_path=state_path,
            seed=bytes.fromhex(args.seed) if args.seed else None,
            tamper=args.tamper)
        before = {p: (c.sent_bytes, c.recv_bytes) for p, c in chans.items()}
        start = time.monotonic()
        try:
            if role == "gen":
                eng = GeneratorEngine(cfg, int_to_bits(args.input, ir.gen_inputs))
                res = eng.run(chans["evl"], chans["cloud"])
            elif role == "evl":
                eng = EvaluatorEngine(cfg, int_to_bits(args.input, ir.evl_inputs))
                res = eng.run(chans["gen"], chans["cloud"])
            else:
                eng = CloudEngine(cfg)
                res = eng.run(chans["gen"], chans["evl"])
        except AbortError as e:
            millis = (time.monotonic() - start) * 1000.0
            rows.append(TrialRow(trial, args.program, role, args.circuits,
                                 args.security, args.encoding, args.tag_bits,
                                 mode, 0, millis, "abort", str(e.phase),
                                 e.reason))
            print(f"abort at phase {e.phase}: {e.reason}", file=sys.stderr)
            code = 2
            break
        millis = (time.monotonic() - start) * 1000.0
        sent = sum(c.sent_bytes - before[p][0] for p, c in chans.items())
        recv = sum(c.recv_bytes - before[p][1] for p, c in chans.items())
        row = TrialRow(trial, args.program, role, args.circuits,
                       args.security, args.encoding, args.tag_bits, mode,
                       res.t, millis, "ok", gates=len(ir.gates))
        setattr(row, f"{'cloud' if role == 'cloud' else role}_sent", sent)
        setattr(row, f"{'cloud' if role == 'cloud' else role}_recv", recv)
        rows.append(row)
        if res.output_bits is not None:
            value = sum(b << i for i, b in enumerate(res.output_bits))
            print(f"trial {trial}: output bits {res.output_bits} "
                  f"(value {value}), {millis:.1f} ms")
        else:
            print(f"trial {trial}: done, {millis:.1f} ms")

    for ch in chans.values():
        ch.close()
    if args.csv:
        write_csv(args.csv, rows)
    if args.transcript and record is not None:
        with open(args.transcript, "wb") as fh:
            fh.write(b"".join(record))
    return code


def cmd_bench(args) -> int:
    wires = [int(x) for x in args.wires.split(",")]
    s_values = [int(x) for x in args.circuits.split(",")]
    rows = bench_saveload(args.dir, wires, s_values, k=args.security,
                          repeats=args.repeats)
    for r in rows:
        print(f"wires={r.wires} s={r.s} save {r.save_us_per_bit:.2f} us/bit "
              f"load {r.load_us_per_bit:.2f} us/bit")
    if args.csv:
        write_saveload_csv(args.csv, rows)
    return 0


def cmd_replay(args) -> int:
    with open(args.transcript, "rb") as fh:
        data = fh.read()
    rep = fr.replay_transcript(data)
    checks = dict(rep.checks)

    # when both split-hash messages were seen, re-verify the claimed split
    if checks.get("framing"):
        frames = fr.split_frames(data)
        gen_blob = cld_blob = None
        for phase, mtype, _, payload in frames:
            if (phase, mtype) == (1, fr.SPLITHASH_GEN):
                gen_blob = payload
            elif (phase, mtype) == (1, fr.SPLITHASH_CLD):
                cld_blob = payload
        if gen_blob is not None and cld_blob is not None \
                and len(gen_blob) % 64 == 0 and len(cld_blob) % 33 == 0 \
                and len(gen_blob) // 64 == len(cld_blob) // 33:
            s = len(gen_blob) // 64
            pairs = [(gen_blob[i * 64:i * 64 + 32],
                      gen_blob[i * 64 + 32:(i + 1) * 64]) for i in range(s)]
            bits = [cld_blob[i * 33] for i in range(s)]
            hashes = [cld_blob[i * 33 + 1:(i + 1) * 33] for i in range(s)]
            try:
                verify_split_hashes(pairs, hashes, bits)
                checks["split_hashes"] = True
            except AbortError:
                checks["split_hashes"] = False

    ok = all(checks.values())
    print(f"frames: {rep.frames}")
    for name, passed in checks.items():
        print(f"{name}: {'ok' if passed else 'FAIL'}")
    if not ok and rep.failing_frame >= 0:
        print(f"first failing frame: {rep.failing_frame} ({rep.detail})")
    elif not ok and rep.detail:
        print(rep.detail)
    return 0 if ok else 2


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "run":
            if args.role:
                return cmd_run_network(args)
            return cmd_run_local(args)
        if args.cmd == "bench-saveload":
            return cmd_bench(args)
        return cmd_replay(args)
    except PgcError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"connection error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
