"""Command-line entry points: repl, run, serve, analyze, config check.

Exit codes: 0 success, 2 configuration error, 3 scenario failure,
4 backend/network error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .analysis import AnalysisError, analyze_logs, write_report
from .backends import BackendError
from .bus import Envelope
from .config import Config, ConfigError, load_config
from .dialogue import DialogueError, EmptyUtterance
from .scenario import Scenario, ScenarioError, ScenarioTimeout, run_scenario
from .scene import Scene, SceneError
from .server import BridgeServer, PortInUse
from .session import Session, SessionSettings

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SCENARIO = 3
EXIT_BACKEND = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verba-arm",
        description=(
            "Conversational pick-and-place control of a simulated "
            "impedance-controlled arm"
        ),
    )
    parser.add_argument("--config", metavar="PATH", help="YAML config file")
    parser.add_argument(
        "--backend",
        choices=["scripted", "live", "echo"],
        help="override the configured reply backend",
    )
    parser.add_argument("--scene", metavar="PATH", help="scene JSON file")
    parser.add_argument("--port", type=int, metavar="N", help="serve-mode port")
    parser.add_argument("--log-dir", metavar="PATH", help="session log directory")
    parser.add_argument(
        "--session-id",
        metavar="ID",
        help=(
            "fixed session id for repl mode (pins the log filename and makes "
            "scripted repl runs byte-reproducible); default is timestamped"
        ),
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("repl", help="interactive operator console on stdin/stdout")
    run_p = sub.add_parser("run", help="run a scripted scenario to completion")
    run_p.add_argument("scenario", help="scenario YAML file")
    sub.add_parser("serve", help="expose the TCP/WebSocket bridges and console")
    analyze_p = sub.add_parser("analyze", help="statistics over session logs")
    analyze_p.add_argument("logs", nargs="+", help="session log files (.jsonl)")
    analyze_p.add_argument("--csv", metavar="PATH", help="per-session metric CSV")
    analyze_p.add_argument(
        "--welch",
        action="store_true",
        help="use Welch's independent-samples t test instead of the paired test",
    )
    analyze_p.add_argument(
        "--out",
        metavar="PATH",
        help=(
            "where to write the structured report (JSON); defaults to "
            "analysis.json next to the first log"
        ),
    )
    config_p = sub.add_parser("config", help="configuration utilities")
    config_sub = config_p.add_subparsers(dest="config_command", required=True)
    config_sub.add_parser("check", help="validate and print the effective config")
    return parser


def _load(args: argparse.Namespace) -> Config:
    config = load_config(
        path=args.config,
        backend=args.backend,
        scene=args.scene,
        port=args.port,
        log_dir=args.log_dir,
    )
    config.validate()
    return config


def _make_session(config: Config, session_id: str, pacing: float = 0.0) -> Session:
    scene = Scene.from_file(config.scene)
    backend = config.backend.build()
    return Session(
        session_id=session_id,
        scene=scene,
        backend=backend,
        gains=config.gains(),
        omega1=config.omega1,
        settings=SessionSettings(
            dt=config.dt,
            state_publish_hz=config.state_publish_hz,
            condition=config.condition,
            pacing=pacing,
        ),
        log_path=Path(config.log_dir) / f"{session_id}.jsonl",
    )


def _cmd_repl(config: Config, session_id: str | None = None) -> int:
    session_id = session_id or time.strftime("repl-%Y%m%d-%H%M%S")
    try:
        session = _make_session(config, session_id)
    except (SceneError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def show(envelope: Envelope) -> None:
        payload = envelope.payload
        if envelope.topic == "assistant/reply":
            print(f"assistant: {payload['text']}")
        elif envelope.topic == "exec/status":
            state = payload.get("state")
            if state == "running":
                print(f"  [exec] {payload.get('primitive', '...')}")
            elif state == "done":
                print("  [exec] done")
            elif state == "failed":
                print(f"  [exec] FAILED: {payload.get('error')}")

    session.bus.add_tap(show)
    session.start()
    print(f"session {session_id}; /done marks the task complete, /quit exits")
    code = EXIT_OK
    try:
        while True:
            try:
                line = input("> ").strip()
            except EOFError:
                break
            if not line:
                continue
            if line == "/quit":
                break
            if line == "/done":
                session.mark_task_complete()
                print("task marked complete")
                continue
            try:
                session.handle_utterance(line)
            except EmptyUtterance:
                continue
            except DialogueError as exc:
                print(f"error: {exc}", file=sys.stderr)
            except BackendError as exc:
                print(f"backend error: {exc}", file=sys.stderr)
                code = EXIT_BACKEND
                break
    except KeyboardInterrupt:
        print()
    finally:
        session.end()
        print(f"log written to {Path(config.log_dir) / (session_id + '.jsonl')}")
    return code


def _cmd_run(config: Config, scenario_path: str) -> int:
    try:
        scenario = Scenario.from_file(scenario_path)
        result = run_scenario(scenario, config=config)
    except ScenarioTimeout as exc:
        print(f"scenario timeout: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except (ScenarioError, SceneError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    print(result.to_text())
    return EXIT_OK if result.passed else EXIT_SCENARIO


def _cmd_serve(config: Config) -> int:
    def factory(session_id: str) -> Session:
        return _make_session(config, session_id, pacing=1.0)

    try:
        # Build one session up front so config problems surface before bind.
        config.backend.validate()
        Scene.from_file(config.scene)
    except (SceneError, ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        server = BridgeServer(
            factory,
            port=config.port,
            static_dir=config.static_dir,
        )
    except PortInUse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    print(f"serving on 127.0.0.1:{server.port} (TCP lines, /ws WebSocket, static console)")
    server.serve_forever()
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        report = analyze_logs(
            args.logs, metrics_csv=args.csv, use_welch=args.welch
        )
    except (AnalysisError, OSError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(report.to_text())
    out = args.out or str(Path(args.logs[0]).parent / "analysis.json")
    write_report(report, out)
    print(f"structured report written to {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "config":
        print(config.describe())
        return EXIT_OK
    if args.command == "repl":
        return _cmd_repl(config, session_id=args.session_id)
    if args.command == "run":
        return _cmd_run(config, args.scenario)
    if args.command == "serve":
        return _cmd_serve(config)
    if args.command == "analyze":
        return _cmd_analyze(args)
    parser.error(f"unknown command {args.command!r}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
