"""Command-line front end; a thin client over the HTTP service.

Each subcommand reads local files, ships their contents to the evaluation
service, and writes whatever comes back.  By default the service runs
in-process so no server is required; `--server http://host:port` points the
same commands at a deployment started with `spectrapool serve`.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .evaluation import RunReport, report_csv
from .pool import PoolConfig


class CliError(Exception):
    """User-facing failure; printed without a traceback."""


class _ReportRow:
    """Adapter so service run payloads can feed `report_csv` unchanged."""

    def __init__(self, payload: dict):
        self._payload = payload
        self.segments = payload["segments"]
        self.segment_accuracy = payload.get("segment_accuracy") or []

    def to_dict(self) -> dict:
        return self._payload


def _failed_row(name: str, error: str) -> _ReportRow:
    rep = RunReport(
        config=PoolConfig(), segments=0, n_records=0, segment_accuracy=[],
        overall_accuracy=0.0, accuracy_std=0.0, avg_pool_memory_kb=0.0,
        reuse_count=0, drift_count=0, status=f"failed: {error}", name=name,
    )
    return _ReportRow(rep.to_dict())


class Client:
    """POST wrapper over the in-process app or a remote server."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._http = httpx.Client(base_url=server, timeout=600.0)
        else:
            from fastapi.testclient import TestClient

            from .service import app

            self._http = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        try:
            r = self._http.post(path, json=payload)
        except Exception as exc:
            raise CliError(f"cannot reach service: {exc}") from None
        if r.status_code != 200:
            try:
                detail = r.json().get("detail", r.text)
            except Exception:
                detail = r.text
            raise CliError(f"{path} failed ({r.status_code}): {detail}")
        return r.json()


def _read(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"no such file: {p}")
    return p.read_text(encoding="utf-8")


def _scan_extras(config_text: str) -> dict:
    """Pull the input-naming keys without validating the rest.

    Config validation belongs to the service; a config it will reject must
    still reach it, so sweeps can record the rejection as a failed row.
    """
    extras = {}
    for raw in config_text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if "=" not in line:
            continue
        key, _, val = line.partition("=")
        if key.strip() in ("stream", "schedule"):
            extras[key.strip()] = val.strip()
    return extras


def _stream_payload(stream_arg, config_text: str, config_dir: Path) -> dict:
    """Pick the run input: --stream wins, else config stream=/schedule= keys.

    Relative paths inside a config resolve against the config's directory.
    """
    if stream_arg:
        return {"stream_csv": _read(stream_arg)}
    extras = _scan_extras(config_text)
    if "stream" in extras:
        return {"stream_csv": _read(config_dir / extras["stream"])}
    if "schedule" in extras:
        return {"schedule": {"schedule_text": _read(config_dir / extras["schedule"])}}
    raise CliError(
        "no input stream: pass --stream or set stream = / schedule = in the config"
    )


def cmd_generate(args) -> int:
    client = Client(args.server)
    resp = client.post(
        "/streams/generate",
        {"schedule_text": _read(args.schedule), "include_csv": True},
    )
    Path(args.out).write_text(resp["csv"], encoding="utf-8")
    print(
        f"{args.out}: {resp['n_records']} records, {resp['n_attrs']} attributes, "
        f"cardinality {resp['cardinality']}"
    )
    return 0


def cmd_run(args) -> int:
    client = Client(args.server)
    config_path = Path(args.config)
    config_text = _read(config_path)
    payload = {"config_text": config_text, "name": args.name or config_path.stem}
    payload.update(_stream_payload(args.stream, config_text, config_path.parent))
    t0 = time.perf_counter()
    resp = client.post("/runs", payload)
    elapsed = time.perf_counter() - t0
    if args.report:
        Path(args.report).write_text(report_csv([_ReportRow(resp)]), encoding="utf-8")
    rate = resp["n_records"] / elapsed if elapsed > 0 else 0.0
    print(
        f"{resp['name']}: accuracy {resp['overall_accuracy']:.4f} "
        f"(std {resp['accuracy_std']:.4f}) over {resp['n_records']} records, "
        f"drifts {resp['drift_count']}, reuse {resp['reuse_count']}, "
        f"pool {resp['avg_pool_memory_kb']:.2f} KB, {rate:.0f} records/s"
    )
    if args.report:
        print(f"report written to {args.report}")
    return 0


def cmd_sweep(args) -> int:
    client = Client(args.server)
    config_dir = Path(args.configs)
    if not config_dir.is_dir():
        raise CliError(f"no such directory: {config_dir}")
    paths = sorted(
        p for p in config_dir.iterdir()
        if p.is_file() and not p.name.startswith(".")
    )
    if not paths:
        raise CliError(f"no config files in {config_dir}")

    # one row per config file, in name order; a job the client cannot even
    # assemble (missing stream file, no input named) fails as a row too
    rows: list = []
    jobs = []
    slots = []
    for p in paths:
        try:
            config_text = _read(p)
            job = {"config_text": config_text, "name": p.stem}
            job.update(_stream_payload(None, config_text, p.parent))
        except CliError as exc:
            rows.append(_failed_row(p.stem, str(exc)))
            continue
        slots.append(len(rows))
        rows.append(None)
        jobs.append(job)
    elapsed = 0.0
    if jobs:
        t0 = time.perf_counter()
        resp = client.post("/sweeps", {"jobs": jobs})
        elapsed = time.perf_counter() - t0
        for slot, rep in zip(slots, resp["reports"]):
            rows[slot] = _ReportRow(rep)
    Path(args.report).write_text(report_csv(rows), encoding="utf-8")

    dicts = [r.to_dict() for r in rows]
    n_ok = sum(1 for d in dicts if d["status"] == "ok")
    total = sum(d["n_records"] for d in dicts)
    rate = total / elapsed if elapsed > 0 else 0.0
    for d in dicts:
        tag = (
            f"accuracy {d['overall_accuracy']:.4f}"
            if d["status"] == "ok" else d["status"]
        )
        print(f"{d['name']}: {tag}")
    print(
        f"{n_ok}/{len(rows)} runs ok, {total} records, {rate:.0f} records/s, "
        f"report written to {args.report}"
    )
    return 0 if n_ok == len(rows) else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectrapool",
        description="Stream classification with a pool of spectral concept models.",
    )
    parser.add_argument(
        "--server",
        metavar="URL",
        help="target a running service instead of executing in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a stream CSV from a schedule file")
    g.add_argument("--schedule", required=True, help="concept schedule file")
    g.add_argument("--out", required=True, help="output stream CSV path")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="one prequential run from a config file")
    r.add_argument("--config", required=True, help="key = value config file")
    r.add_argument("--stream", help="stream CSV (overrides stream=/schedule= in config)")
    r.add_argument("--report", help="write a one-row report CSV here")
    r.add_argument("--name", help="run name for the report (default: config stem)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run every config file in a directory")
    s.add_argument("--configs", required=True, help="directory of config files")
    s.add_argument("--report", required=True, help="combined report CSV path")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("serve", help="start the HTTP service")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8000)
    v.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
