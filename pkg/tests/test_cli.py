"""CLI surface: subcommands, exit codes, determinism through the entry point."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
import yaml

from verba_arm.cli import main

ROOT = Path(__file__).resolve().parent.parent
FIG5 = ROOT / "scenarios" / "fig5.yaml"


def test_config_check_prints_effective_config(capsys):
    assert main(["config", "check"]) == 0
    out = capsys.readouterr().out
    assert "backend" in out and "scene" in out


def test_config_check_rejects_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("dt: 5.0\n")
    assert main(["--config", str(bad), "config", "check"]) == 2
    assert "dt" in capsys.readouterr().err


def test_config_unknown_key_rejected(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("dtt: 0.001\n")
    assert main(["--config", str(bad), "config", "check"]) == 2


def test_run_scenario_passes_and_writes_log(tmp_path, capsys):
    code = main(["--log-dir", str(tmp_path), "run", str(FIG5)])
    out = capsys.readouterr().out
    assert code == 0, out
    assert "result: PASS" in out
    assert (tmp_path / "fig5.jsonl").exists()


def test_run_scenario_byte_identical_logs(tmp_path):
    for sub in ("one", "two"):
        assert main(["--log-dir", str(tmp_path / sub), "run", str(FIG5)]) == 0
    a = (tmp_path / "one" / "fig5.jsonl").read_bytes()
    b = (tmp_path / "two" / "fig5.jsonl").read_bytes()
    assert a == b


def test_run_scenario_failing_assertion_exits_3(tmp_path, capsys):
    doc = yaml.safe_load(FIG5.read_text())
    doc["scene"] = str(ROOT / "scenes" / "assembly.json")
    doc["assertions"] = [
        {"object": "screw", "pose": [0.0, 0.0, 0.0], "tolerance": 0.001}
    ]
    scenario = tmp_path / "fails.yaml"
    scenario.write_text(yaml.safe_dump(doc))
    code = main(["--log-dir", str(tmp_path), "run", str(scenario)])
    assert code == 3
    assert "FAIL" in capsys.readouterr().out


def test_run_missing_scenario_exits_2(tmp_path):
    assert main(["--log-dir", str(tmp_path), "run", "no/such.yaml"]) == 2


def test_live_backend_without_key_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("VERBA_ARM_API_KEY", raising=False)
    config = tmp_path / "live.yaml"
    config.write_text(
        "backend:\n  type: live\n  endpoint: https://example.invalid/v1\n"
        "  model: test-model\n"
    )
    code = main(["--config", str(config), "--log-dir", str(tmp_path), "repl"])
    assert code == 2
    assert "VERBA_ARM_API_KEY" in capsys.readouterr().err


def test_analyze_over_generated_logs(tmp_path, capsys):
    for sub, condition, pair in (("one", "assistant", "p1"), ("two", "fixed", "p1")):
        doc = yaml.safe_load(FIG5.read_text())
        doc["scene"] = str(ROOT / "scenes" / "assembly.json")
        doc["session_id"] = f"s-{sub}"
        doc["condition"] = condition
        doc["pair"] = pair
        path = tmp_path / f"{sub}.yaml"
        path.write_text(yaml.safe_dump(doc))
        assert main(["--log-dir", str(tmp_path / "logs"), "run", str(path)]) == 0
    out_json = tmp_path / "report.json"
    code = main(
        [
            "analyze",
            str(tmp_path / "logs" / "s-one.jsonl"),
            str(tmp_path / "logs" / "s-two.jsonl"),
            "--out",
            str(out_json),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "completion_s" in out
    payload = json.loads(out_json.read_text())
    assert len(payload["sessions"]) == 2


def test_analyze_rejects_missing_log(tmp_path):
    assert main(["analyze", str(tmp_path / "missing.jsonl")]) == 2


def test_repl_quits_cleanly_with_minimal_log(tmp_path, monkeypatch, capsys):
    lines = iter(["/quit"])
    monkeypatch.setattr("builtins.input", lambda prompt="": next(lines))
    config = tmp_path / "cfg.yaml"
    config.write_text(
        "backend:\n  type: echo\n"
        f"scene: {ROOT / 'scenes' / 'assembly.json'}\n"
    )
    code = main(["--config", str(config), "--log-dir", str(tmp_path), "repl"])
    assert code == 0
    logs = list(tmp_path.glob("repl-*.jsonl"))
    assert len(logs) == 1
    events = [
        json.loads(line)["payload"]["event"]
        for line in logs[0].read_text().splitlines()
        if json.loads(line)["topic"] == "session/event"
    ]
    assert events == ["start", "end"]


def test_repl_echo_backend_executes_typed_commands(tmp_path, monkeypatch, capsys):
    lines = iter(["Grab [screw]", "/done", "/quit"])
    monkeypatch.setattr("builtins.input", lambda prompt="": next(lines))
    config = tmp_path / "cfg.yaml"
    config.write_text(
        "backend:\n  type: echo\n"
        f"scene: {ROOT / 'scenes' / 'assembly.json'}\n"
    )
    code = main(["--config", str(config), "--log-dir", str(tmp_path), "repl"])
    out = capsys.readouterr().out
    assert code == 0
    assert "[exec] done" in out
    log = next(tmp_path.glob("repl-*.jsonl"))
    events = [
        json.loads(line)["payload"].get("event")
        for line in log.read_text().splitlines()
        if json.loads(line)["topic"] == "session/event"
    ]
    assert "task_complete" in events


def test_scripted_backend_flag_requires_path(tmp_path, capsys):
    code = main(["--backend", "scripted", "--log-dir", str(tmp_path), "repl"])
    assert code == 2


def test_empty_utterance_list_passes_immediately(tmp_path, capsys):
    scenario = tmp_path / "idle.yaml"
    scenario.write_text(
        yaml.safe_dump(
            {
                "name": "idle",
                "scene": str(ROOT / "scenes" / "assembly.json"),
                "utterances": [],
                "replies": [],
                "assertions": [],
            }
        )
    )
    code = main(["--log-dir", str(tmp_path), "run", str(scenario)])
    out = capsys.readouterr().out
    assert code == 0
    assert "result: PASS" in out
    log_lines = (tmp_path / "idle.jsonl").read_text().splitlines()
    assert not any('"robot/command"' in line for line in log_lines)


def test_analyze_writes_structured_report_by_default(tmp_path, capsys):
    for i, (condition, completion) in enumerate(
        (("fixed", 90_000), ("assistant", 60_000))
    ):
        from verba_arm.bus import Envelope, encode_envelope

        lines = [
            Envelope("session/event", 1, 0,
                     {"event": "start", "session_id": f"s{i}", "condition": condition}),
            Envelope("session/event", 2, completion, {"event": "task_complete"}),
        ]
        (tmp_path / f"s{i}.jsonl").write_text(
            "".join(encode_envelope(e) + "\n" for e in lines)
        )
    code = main(["analyze", str(tmp_path / "s0.jsonl"), str(tmp_path / "s1.jsonl")])
    assert code == 0
    assert (tmp_path / "analysis.json").exists()


def test_repl_with_pinned_session_id_is_byte_reproducible(tmp_path, monkeypatch):
    fixture = tmp_path / "replies.txt"
    fixture.write_text("Okay, what first?\n---\nGrab [screw]\n")
    config = tmp_path / "cfg.yaml"
    config.write_text(
        "backend:\n  type: scripted\n"
        f"  path: {fixture}\n"
        f"scene: {ROOT / 'scenes' / 'assembly.json'}\n"
    )
    blobs = []
    for attempt in ("a", "b"):
        lines = iter(["hello", "fetch the screw", "/quit"])
        monkeypatch.setattr("builtins.input", lambda prompt="": next(lines))
        code = main(
            [
                "--config", str(config),
                "--log-dir", str(tmp_path / attempt),
                "--session-id", "repl-golden",
                "repl",
            ]
        )
        assert code == 0
        blobs.append((tmp_path / attempt / "repl-golden.jsonl").read_bytes())
    assert blobs[0] == blobs[1]


def test_serve_port_in_use_exits_4(tmp_path, capsys):
    import socket

    blocker = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    blocker.bind(("127.0.0.1", 0))
    blocker.listen(1)
    port = blocker.getsockname()[1]
    try:
        config = tmp_path / "cfg.yaml"
        config.write_text(
            "backend:\n  type: echo\n"
            f"scene: {ROOT / 'scenes' / 'assembly.json'}\n"
            f"port: {port}\n"
        )
        code = main(["--config", str(config), "--log-dir", str(tmp_path), "serve"])
        assert code == 4
        assert "cannot bind" in capsys.readouterr().err
    finally:
        blocker.close()
