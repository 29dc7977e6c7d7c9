import json
import subprocess
import sys

import pytest

from otpforge.analysis import predict_runs, split_runs
from otpforge.cli import main
from otpforge.scenario import delay_scenario


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_press_fifty_second_schedule(capsys):
    schedule = ",".join(str(50 * i) for i in range(29))
    code, out, _ = run(capsys, "press", "--schedule", schedule, "--phase", "0")
    assert code == 0
    rows = [l.split() for l in out.splitlines()[1:]]
    assert len(rows) == 29
    pattern = [int(r[3]) for r in rows[1:]]
    assert split_runs(pattern, 0, drop_leading=True).lengths <= predict_runs(50)


def test_press_empty_schedule_header_only(capsys):
    code, out, _ = run(capsys, "press", "--schedule", "")
    assert code == 0 and len(out.splitlines()) == 1


def test_press_redisplay_marked(capsys):
    code, out, _ = run(capsys, "press", "--schedule", "0,100,145,300")
    lines = out.splitlines()[1:]
    assert lines[2].split()[0] == "-" and "redisplay" in lines[2]
    assert [l.split()[0] for l in lines] == ["0", "1", "-", "2"]


def test_press_unsorted_schedule(capsys):
    code, _, err = run(capsys, "press", "--schedule", "10,5")
    assert code == 2 and "sorted" in err


def test_press_csv_roundtrips_through_analyze(tmp_path, capsys):
    trace = tmp_path / "t.csv"
    assert main(["press", "--interval", "0:53+", "--count", "300", "--phase", "7",
                 "--format", "csv", "--out", str(trace)]) == 0
    code, out, _ = run(capsys, "analyze", str(trace))
    assert code == 0
    assert "0:53+" in out and "consistent" in out and "INCONSISTENT" not in out
    code, out, _ = run(capsys, "analyze", str(trace), "--format", "csv")
    assert out.splitlines()[0].startswith("kind,table,position")


def test_analyze_published_reproduces_counts(capsys):
    code, out, _ = run(capsys, "analyze", "--published")
    assert code == 0
    assert "814 distinct" in out
    assert "b   102   92   94  109  102  105   53   59   48   50" in out


def test_analyze_empty_and_bad_input(tmp_path, capsys):
    code, _, err = run(capsys, "analyze")
    assert code != 0 and "nothing to analyze" in err
    bad = tmp_path / "bad.csv"
    bad.write_text("table,index,combination,pattern\nx,0,12,\n")
    code, _, err = run(capsys, "analyze", str(bad))
    assert code != 0 and "line 2" in err


def test_replay_delay_experiment(tmp_path, capsys):
    sc = tmp_path / "t4.jsonl"
    sc.write_text(delay_scenario())
    log = tmp_path / "events.jsonl"
    code, out, _ = run(capsys, "replay", str(sc), "--log", str(log))
    assert code == 0
    summary = json.loads(out.splitlines()[-1])
    assert summary == {"accepted": 4, "auth_events": 8, "presses": 8, "rejected": 4}
    first = log.read_bytes()
    run(capsys, "replay", str(sc), "--log", str(log))
    assert log.read_bytes() == first


def test_replay_parse_error(tmp_path, capsys):
    sc = tmp_path / "bad.jsonl"
    sc.write_text('{"t": 1, "action": "press", "actor": "a"}\n{oops\n')
    code, _, err = run(capsys, "replay", str(sc))
    assert code == 2 and "line 2" in err


def test_attack_analytic_table(capsys):
    code, out, _ = run(capsys, "attack", "--analytic")
    assert out.split("\n")[1].split()[2:] == ["0.0036", "0.0072", "0.0109", "0.0145", "0.0181",
                                              "0.0217"]


def test_attack_zero_attempts_and_outputs(tmp_path, capsys):
    out_dir = tmp_path / "rep"
    code, out, _ = run(capsys, "attack", "--customers", "15", "--attempts", "0", "--out", str(out_dir))
    assert code == 0
    assert json.loads(out.splitlines()[0])["compromised"] == 0
    assert {p.name for p in out_dir.iterdir()} == {"campaign.csv", "summary.json", "yearly.txt",
                                                   "yearly.csv"}


def test_attack_invalid_flags(capsys):
    with pytest.raises(SystemExit):
        main(["attack", "--strategy", "loud"])
    code, _, err = run(capsys, "attack", "--customers", "-3")
    assert code == 2


def test_provision_and_serve_stdio(tmp_path, capsys):
    snap, log = tmp_path / "reg.jsonl", tmp_path / "ev.jsonl"
    key = "3132333435363738393031323334353637383930"
    assert main(["provision", "--snapshot", str(snap), "--id", "alice", "--key", key,
                 "--static", "pw"]) == 0
    capsys.readouterr()
    code, out, _ = run(capsys, "press", "--key", key, "--schedule", "1024")
    otp = out.splitlines()[1].split()[2]
    frames = "\n".join([
        json.dumps({"type": "auth", "customer": "alice", "static": "pw", "otp": otp, "at": 1030}),
        json.dumps({"type": "auth", "customer": "alice", "static": "pw", "otp": otp, "at": 1031}),
    ]) + "\n"
    proc = subprocess.run([sys.executable, "-m", "otpforge.cli", "serve", "--snapshot", str(snap),
                           "--log", str(log), "--listen", "stdio"],
                          input=frames.encode(), capture_output=True, check=True)
    replies = [json.loads(l) for l in proc.stdout.splitlines()]
    assert [r["reason"] for r in replies] == ["ok", "replay"]
    assert log.read_text().count("\n") == 2


def test_provision_rejects_bad_key(tmp_path, capsys):
    code, _, err = run(capsys, "provision", "--snapshot", str(tmp_path / "s"), "--id", "x",
                       "--key", "zz", "--static", "pw")
    assert code == 2 and "hex" in err


def test_rate_command(capsys):
    code, out, _ = run(capsys, "rate", "--trials", "3000", "--seed", "1")
    assert code == 0 and json.loads(out)["trials"] == 3000


def test_console_script_help():
    proc = subprocess.run(["otpforge", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "analyze" in proc.stdout
