"""CLI surface: local runs, CSV emission, tamper gating, TCP runs, replay."""

import csv
import socket
import subprocess
import sys
import time

import pytest

from pgc.bench import CSV_HEADER, bench_saveload
from pgc.cli import main

CHECK_IDX = 1  # any index works: detection just needs it to land on a check


def test_local_run_emits_csv_rows(tmp_path):
    out = tmp_path / "rows.csv"
    code = main(["run", "--program", "millionaires:4", "--trials", "3",
                 "--circuits", "5", "--security", "64", "--encoding", "2",
                 "--tag-bits", "8", "--seed", "aa55", "--csv", str(out)])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 4
    assert all(r[10] == "ok" for r in rows[1:])


def test_local_chain_through_state_dir(tmp_path, capsys):
    state = tmp_path / "chain"
    for prog in ("counter_init:4", "counter:4", "counter:4"):
        code = main(["run", "--program", prog, "--evl-input", "6",
                     "--circuits", "5", "--security", "64", "--encoding", "2",
                     "--tag-bits", "8", "--seed", "0badc0de",
                     "--state", str(state)])
        assert code == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert lines[-1].split(",")[10] == "ok"


def test_tamper_flag_requires_env(monkeypatch):
    monkeypatch.delenv("PGC_ALLOW_TAMPER", raising=False)
    with pytest.raises(SystemExit):
        main(["run", "--program", "millionaires:3", "--tamper", "gates:0"])


def test_tamper_run_reports_detected_cheat(monkeypatch, tmp_path):
    monkeypatch.setenv("PGC_ALLOW_TAMPER", "1")
    # corrupting every circuit guarantees either a check-circuit abort or an
    # empty vote, whichever the random split delivers
    code = main(["run", "--program", "millionaires:3", "--gen-input", "5",
                 "--evl-input", "2", "--circuits", "5", "--security", "64",
                 "--encoding", "2", "--tag-bits", "8", "--seed", "1234",
                 "--tamper", "gen_input:-1", "--csv",
                 str(tmp_path / "t.csv")])
    assert code == 2


def test_bench_saveload_zero_wires_row(tmp_path):
    rows = bench_saveload(str(tmp_path), [0], s_values=[5], repeats=1)
    assert rows[0].save_us_per_bit == 0.0
    assert rows[0].load_us_per_bit == 0.0


def test_bench_saveload_cli(tmp_path):
    out = tmp_path / "bench.csv"
    code = main(["bench-saveload", "--wires", "0,32", "--circuits", "5",
                 "--repeats", "1", "--dir", str(tmp_path), "--csv", str(out)])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3
    assert float(rows[2][6]) > float(rows[2][5])  # load beats save per bit


def _free_ports(n):
    socks = [socket.socket() for _ in range(n)]
    for s in socks:
        s.bind(("127.0.0.1", 0))
    ports = [s.getsockname()[1] for s in socks]
    for s in socks:
        s.close()
    return ports


def _spawn(args):
    return subprocess.Popen([sys.executable, "-m", "pgc.cli"] + args,
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                            text=True)


def test_three_process_tcp_run(tmp_path):
    pc_g, pc_e, pg_e = _free_ports(3)
    common = ["run", "--program", "millionaires:4", "--circuits", "5",
              "--security", "64", "--encoding", "2", "--tag-bits", "8",
              "--seed", "feed"]
    transcript = tmp_path / "evl.transcript"
    cloud = _spawn(common + ["--role", "cloud",
                             "--listen", f"gen=127.0.0.1:{pc_g},evl=127.0.0.1:{pc_e}"])
    time.sleep(0.3)
    gen = _spawn(common + ["--role", "gen", "--input", "9",
                           "--connect", f"cloud=127.0.0.1:{pc_g}",
                           "--listen", f"evl=127.0.0.1:{pg_e}"])
    evl = _spawn(common + ["--role", "evl", "--input", "4",
                           "--connect", f"cloud=127.0.0.1:{pc_e},gen=127.0.0.1:{pg_e}",
                           "--transcript", str(transcript)])
    outs = {}
    for name, proc in (("cloud", cloud), ("gen", gen), ("evl", evl)):
        out, err = proc.communicate(timeout=90)
        outs[name] = out
        assert proc.returncode == 0, (name, out, err)
    assert "value 1" in outs["evl"]   # 9 > 4
    assert "value 1" in outs["gen"]

    # the recorded transcript replays clean, including the split-hash check
    rep = subprocess.run([sys.executable, "-m", "pgc.cli", "replay",
                          str(transcript)], capture_output=True, text=True)
    assert rep.returncode == 0, rep.stdout
    assert "split_hashes: ok" in rep.stdout

    # corrupt one byte (lands in the final frame's execution id): loud failure
    blob = bytearray(transcript.read_bytes())
    blob[-1] ^= 0xFF
    bad = tmp_path / "bad.transcript"
    bad.write_bytes(bytes(blob))
    rep = subprocess.run([sys.executable, "-m", "pgc.cli", "replay", str(bad)],
                         capture_output=True, text=True)
    assert rep.returncode == 2


def test_replay_missing_file_is_an_error():
    assert main(["replay", "/nonexistent/transcript.bin"]) == 1
