"""Command line client (and server launcher).

Thin wrapper over the HTTP API: submit, status, stop, top, export, plus
`serve` to run the simulator and API in one process.  Exit codes: 0 success,
2 invalid config, 3 unknown session, 4 server unreachable.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
import threading
import time
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_FOUND = 3
EXIT_UNREACHABLE = 4

DEFAULT_SERVER = "http://127.0.0.1:8700"


class CliError(Exception):
    def __init__(self, exit_code: int, message: str):
        super().__init__(message)
        self.exit_code = exit_code


def _client(args: argparse.Namespace, injected: httpx.Client | None = None):
    """Context manager yielding an HTTP client.

    An injected client (tests) is reused and left open; otherwise a real one
    is built from --server / CHOPT_SERVER and closed on exit.
    """
    if injected is not None:
        return contextlib.nullcontext(injected)
    server = args.server or os.environ.get("CHOPT_SERVER") or DEFAULT_SERVER
    return httpx.Client(base_url=server, timeout=30.0)


def _request(client: httpx.Client, method: str, url: str, **kwargs) -> httpx.Response:
    try:
        response = client.request(method, url, **kwargs)
    except httpx.TransportError as e:
        raise CliError(EXIT_UNREACHABLE, f"cannot reach server: {e}") from None
    if response.status_code == 404:
        raise CliError(EXIT_NOT_FOUND, _error_message(response))
    if response.status_code >= 400:
        raise CliError(EXIT_INVALID, _error_message(response))
    return response


def _error_message(response: httpx.Response) -> str:
    try:
        payload = response.json()
        return payload.get("message") or json.dumps(payload)
    except (json.JSONDecodeError, ValueError):
        return response.text or f"HTTP {response.status_code}"


def _fmt_metric(value) -> str:
    if value is None:
        return "-"
    return f"{value:.4f}"


def cmd_submit(args: argparse.Namespace, client: httpx.Client | None = None) -> int:
    path = Path(args.config)
    if not path.is_file():
        raise CliError(EXIT_INVALID, f"no such config file: {path}")
    body = path.read_bytes()
    with _client(args, client) as http:
        response = _request(http, "POST", "/sessions", content=body)
    print(response.json()["id"])
    return EXIT_OK


def cmd_status(args: argparse.Namespace, client: httpx.Client | None = None) -> int:
    with _client(args, client) as http:
        if args.session:
            record = _request(http, "GET", f"/sessions/{args.session}").json()
            if args.json:
                print(json.dumps(record, indent=2))
                return EXIT_OK
            print(f"id:       {record['id']}")
            print(f"status:   {record['status']}" + (f" ({record['reason']})" if record.get("reason") else ""))
            print(f"agent:    {record.get('agent') or '-'}")
            print(f"grant:    {record.get('grant', 0)}")
            print(f"trials:   {record.get('trials_created', 0)}")
            best = record.get("best")
            if best:
                print(f"best:     trial {best['trial']} {record['measure']}={_fmt_metric(best['metric'])}")
            else:
                print("best:     -")
            return EXIT_OK
        sessions = _request(http, "GET", "/sessions").json()["sessions"]
    if args.json:
        print(json.dumps(sessions, indent=2))
        return EXIT_OK
    print(f"{'ID':<8} {'STATUS':<12} {'TRIALS':>6} {'GRANT':>5}  BEST")
    for record in sessions:
        best = record.get("best")
        best_text = "-" if not best else f"t{best['trial']} {_fmt_metric(best['metric'])}"
        status = record["status"]
        if record.get("reason"):
            status += f"({record['reason']})"
        print(
            f"{record['id']:<8} {status:<12} {record.get('trials_created', 0):>6} "
            f"{record.get('grant', 0):>5}  {best_text}"
        )
    return EXIT_OK


def cmd_stop(args: argparse.Namespace, client: httpx.Client | None = None) -> int:
    with _client(args, client) as http:
        response = _request(http, "POST", f"/sessions/{args.session}/stop")
    payload = response.json()
    print(f"{payload['id']} {payload['status']}")
    return EXIT_OK


def cmd_top(args: argparse.Namespace, client: httpx.Client | None = None) -> int:
    with _client(args, client) as http:
        payload = _request(
            http, "GET", f"/sessions/{args.session}/top", params={"k": args.k}
        ).json()
    if args.json:
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    print(f"{'TRIAL':>5} {'METRIC':>10} {'EPOCHS':>6} {'STATE':<9} ASSIGNMENT")
    for trial in payload["trials"]:
        print(
            f"{trial['id']:>5} {_fmt_metric(trial['metric']):>10} "
            f"{trial['epochs']:>6} {trial['state']:<9} {json.dumps(trial['assignment'])}"
        )
    return EXIT_OK


def cmd_export(args: argparse.Namespace, client: httpx.Client | None = None) -> int:
    with _client(args, client) as http:
        response = _request(
            http,
            "GET",
            f"/sessions/{args.session}/export",
            params={"format": args.format},
        )
    if args.output:
        Path(args.output).write_text(response.text, encoding="utf-8")
    else:
        sys.stdout.write(response.text)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace, client: httpx.Client | None = None) -> int:
    import uvicorn

    from chopt.api import create_app
    from chopt.runtime import ClusterSetup, Runtime
    from chopt.simcluster import DemandTrace, non_chopt_trace
    from chopt.store import SessionStore

    if args.cluster:
        setup = ClusterSetup.from_dict(json.loads(Path(args.cluster).read_text()))
    else:
        setup = ClusterSetup(capacity=args.capacity)
    trace = DemandTrace()
    if args.trace:
        trace = non_chopt_trace(Path(args.trace).read_text())
    runtime = Runtime(setup, SessionStore(args.store), trace)
    lock = threading.Lock()
    static_dir = args.ui or os.environ.get("CHOPT_UI_DIR")
    app = create_app(runtime, lock=lock, static_dir=static_dir)

    if args.interval > 0:
        def ticker() -> None:
            while True:
                time.sleep(args.interval)
                with lock:
                    runtime.step()

        threading.Thread(target=ticker, daemon=True).start()

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chopt", description="CHOPT client")
    parser.add_argument("--server", help=f"API base URL (default {DEFAULT_SERVER})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("submit", help="submit a session config")
    p.add_argument("config", help="path to a JSON config file")
    p.set_defaults(func=cmd_submit)

    p = sub.add_parser("status", help="list sessions or show one")
    p.add_argument("session", nargs="?", help="session id")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_status)

    p = sub.add_parser("stop", help="stop a session")
    p.add_argument("session")
    p.set_defaults(func=cmd_stop)

    p = sub.add_parser("top", help="best trials of a session")
    p.add_argument("session")
    p.add_argument("-k", type=int, default=10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_top)

    p = sub.add_parser("export", help="export trial table")
    p.add_argument("session")
    p.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    p.add_argument("-o", "--output", help="write to file instead of stdout")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="run the simulator and API server")
    p.add_argument("--store", default="./chopt-store")
    p.add_argument("--cluster", help="cluster config JSON file")
    p.add_argument("--capacity", type=int, default=100)
    p.add_argument("--trace", help="non-CHOPT demand trace CSV")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--interval", type=float, default=0.5, help="seconds per tick, 0 disables")
    p.add_argument("--ui", help="directory with the built dashboard")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None, client: httpx.Client | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, client)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
