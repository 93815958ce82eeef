"""Command line front end.

Subcommands: mine (stream logs into templates), resume (continue from a
snapshot), export (dump the template table), analyze (per-minute group
patterns), bench (throughput per batch), serve (HTTP service).  mine,
export and analyze also run against a remote service via --server.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error.
Per-line problems (blank lines, unparseable headers) never change the
exit code; they are counted and reported on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from datetime import datetime
from typing import Iterator, Optional

import httpx

from .analyze import (cluster_groups, group_by_minute, render_report_csv,
                      render_report_text, report_patterns)
from .core import MiningConfig, TemplateMiner, render_template
from .ingest import (IngestReport, UdpListener, bench_pump, iter_stream,
                     pump, read_file)
from .state import (EXPORT_FORMATS, StateError, dump_doc, export_templates,
                    load_state, render_export, save_state, template_rows)
from .tokenizer import EmptyMessage, RawLine, TokenizerConfig, tokenize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2

REMOTE_BATCH = 1000


class UsageError(Exception):
    """Bad flags or configuration; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_header_mode(value: str) -> tuple[str, int]:
    """Map the CLI spelling to (header_mode, skip_count)."""
    if value == "classic-bsd":
        return "classic_bsd", 0
    if value in ("rfc5424", "none"):
        return value, 0
    if value.startswith("skip:"):
        try:
            n = int(value[5:])
        except ValueError:
            raise UsageError(f"bad --header-mode {value!r}: N must be an integer")
        if n < 0:
            raise UsageError("bad --header-mode: skip count must be >= 0")
        return "skip", n
    raise UsageError(
        f"bad --header-mode {value!r} "
        "(choices: classic-bsd, rfc5424, none, skip:N)")


def _config_flags(parser: _Parser) -> None:
    parser.add_argument("--tc", type=float, default=None, metavar="REAL",
                        help="cluster acceptance threshold (default 0.9)")
    parser.add_argument("--tp", type=int, default=None, metavar="INT",
                        help="positional similarity gate (default 3)")
    parser.add_argument("--header-mode", default=None, metavar="MODE",
                        help="classic-bsd | rfc5424 | none | skip:N "
                             "(default classic-bsd)")
    parser.add_argument("--drop-punct", action="store_true", default=None,
                        help="strip trailing ':' from words and drop "
                             "punctuation-only words")
    parser.add_argument("--short-message-policy", default=None,
                        metavar="POLICY", choices=("effective_min", "strict"),
                        help="positional gate on messages shorter than --tp "
                             "(default effective_min)")


def _explicit_configs(args) -> tuple[Optional[TokenizerConfig],
                                     Optional[MiningConfig]]:
    """Configs from explicitly passed flags only; None when untouched."""
    tk = None
    if args.header_mode is not None or args.drop_punct is not None:
        mode, skip = _parse_header_mode(args.header_mode or "classic-bsd")
        tk = TokenizerConfig(header_mode=mode, skip_count=skip,
                             drop_punct_tokens=bool(args.drop_punct))
    mc = None
    if (args.tc is not None or args.tp is not None
            or args.short_message_policy is not None):
        mc = MiningConfig(
            cluster_threshold=0.9 if args.tc is None else args.tc,
            position_threshold=3 if args.tp is None else args.tp,
            short_message_policy=args.short_message_policy or "effective_min")
    return tk, mc


def _build_miner(args) -> TemplateMiner:
    """New or resumed session; explicit flags must not contradict a
    resumed snapshot's stored configuration."""
    tk, mc = _explicit_configs(args)
    if args.state_in:
        miner = load_state(args.state_in)
        if tk is not None and tk != miner.tokenizer_config:
            raise UsageError(
                "tokenizer flags conflict with the configuration stored in "
                f"{args.state_in}")
        if mc is not None and mc != miner.mining_config:
            raise UsageError(
                "threshold flags conflict with the configuration stored in "
                f"{args.state_in}")
        return miner
    return TemplateMiner(tk or TokenizerConfig(), mc or MiningConfig())


def _open_inputs(args) -> Iterator[RawLine]:
    if args.listen:
        host, sep, port_s = args.listen.rpartition(":")
        if not sep or not port_s.isdigit():
            raise UsageError(f"bad --listen {args.listen!r}: want addr:port")
        listener = UdpListener(host or "127.0.0.1", int(port_s))
        print("listening on udp:%s:%d" % listener.address, file=sys.stderr)
        return iter(listener)
    if not args.paths:
        raise UsageError("no input: give file paths, '-', or --listen")
    if args.follow and (len(args.paths) != 1 or args.paths[0] == "-"):
        raise UsageError("--follow needs exactly one file path")

    def chain() -> Iterator[RawLine]:
        for path in args.paths:
            if path == "-":
                yield from iter_stream(sys.stdin, "stdin")
            else:
                yield from read_file(path, follow=args.follow)
    return chain()


def _warn_skips(report: IngestReport, miner: TemplateMiner) -> None:
    notes = []
    if report.empty_messages:
        notes.append(f"{report.empty_messages} empty/blank line(s) skipped")
    if report.truncated_lines:
        notes.append(f"{report.truncated_lines} overlong line(s) truncated")
    if miner.header_parse_failures:
        notes.append(
            f"{miner.header_parse_failures} line(s) with unparseable headers")
    if notes:
        print("note: " + "; ".join(notes), file=sys.stderr)


def _finish_mine(args, miner: TemplateMiner, messages: int,
                 elapsed: float) -> int:
    if args.state_out:
        save_state(miner, args.state_out)
    if args.export:
        fmt, path = args.export
        export_templates(miner.index, fmt, path)
    print(f"{messages} messages, {len(miner.index)} clusters, "
          f"{elapsed:.2f}s elapsed")
    return EXIT_OK


def _run_mine(args) -> int:
    if args.server:
        return _mine_remote(args)
    if args.export and args.export[0] not in EXPORT_FORMATS:
        raise UsageError(f"bad --export format {args.export[0]!r} "
                         f"(choices: {', '.join(EXPORT_FORMATS)})")
    miner = _build_miner(args)
    lines = _open_inputs(args)

    assignments_fh = None
    if args.assignments:
        assignments_fh = open(args.assignments, "w", encoding="latin-1")

    def on_line(line: RawLine, cluster_id: Optional[int], created: bool) -> None:
        if assignments_fh is not None and cluster_id is not None:
            assignments_fh.write(f"{cluster_id}\t{line.text}\n")

    report = IngestReport()
    t0 = time.perf_counter()
    try:
        pump(miner, lines, report, on_line)
    except KeyboardInterrupt:
        pass
    finally:
        if assignments_fh is not None:
            assignments_fh.close()
    elapsed = time.perf_counter() - t0
    _warn_skips(report, miner)
    # session totals, so a resumed run reports the whole session like the
    # cluster count already does
    return _finish_mine(args, miner, miner.messages_processed, elapsed)


def cmd_mine(args) -> int:
    return _run_mine(args)


def cmd_resume(args) -> int:
    if not args.state_in and not args.server:
        raise UsageError("resume needs --state-in")
    return _run_mine(args)


def cmd_export(args) -> int:
    if args.server:
        return _export_remote(args)
    if not args.state_in:
        raise UsageError("export needs --state-in (or --server)")
    miner = load_state(args.state_in)
    data = render_export(template_rows(miner.index), args.format)
    _write_output(args.output, data)
    return EXIT_OK


def _write_output(path: str, data: str) -> None:
    if path == "-":
        sys.stdout.write(data)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)


def _read_assignments(path: str, tk: TokenizerConfig,
                      counters: dict) -> list[tuple[int, Optional[datetime]]]:
    """Parse "cluster_id<TAB>raw text" lines; timestamps come from
    re-tokenizing the raw text with the session's tokenizer config."""
    records = []
    with open(path, encoding="latin-1") as fh:
        for raw in fh:
            raw = raw.rstrip("\r\n")
            if not raw:
                continue
            cid_s, sep, text = raw.partition("\t")
            try:
                cid = int(cid_s)
            except ValueError:
                sep = ""
            if not sep:
                counters["malformed"] = counters.get("malformed", 0) + 1
                continue
            try:
                msg = tokenize(RawLine(text, path, None), tk)
                ts = msg.msg_ts
            except EmptyMessage:
                ts = None
            records.append((cid, ts))
    return records


def cmd_analyze(args) -> int:
    if args.top_k < 1:
        raise UsageError("--top-k must be >= 1")
    if not 0.0 < args.distance_threshold < 1.0:
        raise UsageError("--distance-threshold must be in (0, 1)")
    if args.server:
        return _analyze_remote(args)
    if not args.state_in:
        raise UsageError("analyze needs --state-in (or --server)")

    miner = load_state(args.state_in)
    counters: dict[str, int] = {}
    records = _read_assignments(args.assignments, miner.tokenizer_config,
                                counters)
    groups = group_by_minute(records, counters)
    gcs = cluster_groups(groups, args.distance_threshold)
    report = report_patterns(gcs, args.top_k)
    names = {c.id: render_template(c.template) for c in miner.index}
    _emit_analyze(args, report, names, counters)
    return EXIT_OK


def _emit_analyze(args, report: dict, names: dict, counters: dict) -> None:
    missing = counters.get("missing_timestamp", 0)
    malformed = counters.get("malformed", 0)
    if missing:
        print(f"warning: {missing} record(s) without timestamps skipped",
              file=sys.stderr)
    if malformed:
        print(f"warning: {malformed} malformed assignment line(s) skipped",
              file=sys.stderr)
    if args.format == "csv":
        data = render_report_csv(report, names)
    else:
        data = render_report_text(report, names)
    _write_output(args.output, data)


def cmd_bench(args) -> int:
    if args.batch_size < 1:
        raise UsageError("--batch-size must be >= 1")
    miner = _build_miner(args)
    lines = _open_inputs(args)
    report, records = bench_pump(miner, lines, args.batch_size)

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["batch", "lines", "seconds", "lines_per_sec", "templates"])
    for r in records:
        writer.writerow([r.batch_index, r.lines, f"{r.seconds:.6f}",
                         f"{r.lines_per_sec:.1f}", r.templates])
    _write_output(args.output, buf.getvalue())
    _warn_skips(report, miner)
    print(f"{report.messages_processed} messages, {len(miner.index)} "
          f"clusters in {len(records)} batches", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    miner = _build_miner(args)
    app = create_app(miner)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _client(server: str) -> httpx.Client:
    return httpx.Client(base_url=server.rstrip("/"), timeout=60.0)


def _http_check(resp: httpx.Response):
    if resp.status_code >= 400:
        raise OSError(f"server error {resp.status_code}: {resp.text[:200]}")
    return resp.json()


def _mine_remote(args) -> int:
    tk, mc = _explicit_configs(args)
    if tk is not None or mc is not None:
        raise UsageError(
            "a --server session is configured on the server; "
            "start it with 'serve' flags or PUT a snapshot")
    if args.listen or args.follow:
        raise UsageError("--listen/--follow do not combine with --server")
    if args.export and args.export[0] not in EXPORT_FORMATS:
        raise UsageError(f"bad --export format {args.export[0]!r}")

    lines = _open_inputs(args)
    t0 = time.perf_counter()
    with _client(args.server) as client:
        if args.state_in:
            with open(args.state_in, encoding="utf-8") as fh:
                doc = json.load(fh)
            _http_check(client.put("/state", json=doc))

        assignments_fh = None
        if args.assignments:
            assignments_fh = open(args.assignments, "w", encoding="latin-1")
        empty = 0
        try:
            batch: list[str] = []

            def flush() -> None:
                nonlocal empty
                if not batch:
                    return
                out = _http_check(client.post(
                    "/lines", json={"lines": batch, "source_id": "cli"}))
                for text, res in zip(batch, out["results"]):
                    if res.get("empty"):
                        empty += 1
                    elif assignments_fh is not None:
                        assignments_fh.write(f"{res['cluster_id']}\t{text}\n")
                batch.clear()

            for line in lines:
                batch.append(line.text)
                if len(batch) >= REMOTE_BATCH:
                    flush()
            flush()
        finally:
            if assignments_fh is not None:
                assignments_fh.close()

        stats = _http_check(client.get("/stats"))
        if args.state_out:
            doc = _http_check(client.get("/state"))
            _write_output(args.state_out, dump_doc(doc))
        if args.export:
            fmt, path = args.export
            rows = _http_check(client.get("/templates"))
            _write_output(path, render_export(rows, fmt))
    elapsed = time.perf_counter() - t0
    if empty:
        print(f"note: {empty} empty/blank line(s) skipped", file=sys.stderr)
    print(f"{stats['messages_processed']} messages, {stats['clusters']} "
          f"clusters, {elapsed:.2f}s elapsed")
    return EXIT_OK


def _export_remote(args) -> int:
    with _client(args.server) as client:
        rows = _http_check(client.get("/templates"))
    _write_output(args.output, render_export(rows, args.format))
    return EXIT_OK


def _analyze_remote(args) -> int:
    with _client(args.server) as client:
        cfg = _http_check(client.get("/config"))
        tk = TokenizerConfig(**cfg["tokenizer"])
        counters: dict[str, int] = {}
        records = _read_assignments(args.assignments, tk, counters)
        payload = {
            "assignments": [
                {"cluster_id": cid,
                 "msg_ts": ts.isoformat() if ts is not None else None}
                for cid, ts in records
            ],
            "distance_threshold": args.distance_threshold,
            "top_k": args.top_k,
        }
        out = _http_check(client.post("/analyze", json=payload))
        rows = _http_check(client.get("/templates"))
    names = {row["id"]: row["template"] for row in rows}
    counters["missing_timestamp"] = out.get("skipped_records", 0)
    report = {
        "group_clusters": out["group_clusters"],
        "minutes": out["minutes"],
        "frequent": out["frequent"],
        "unique": out["unique"],
    }
    _emit_analyze(args, report, names, counters)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="lenma", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io_flags(p: _Parser, inputs: bool = True) -> None:
        if inputs:
            p.add_argument("paths", nargs="*", metavar="PATH",
                           help="log files to read; '-' for stdin")
        p.add_argument("--state-in", metavar="PATH",
                       help="resume from this snapshot")
        p.add_argument("--state-out", metavar="PATH",
                       help="write the final snapshot here")

    p_mine = sub.add_parser("mine", help="cluster log lines into templates")
    add_io_flags(p_mine)
    _config_flags(p_mine)
    p_mine.add_argument("--assignments", metavar="PATH",
                        help="write 'cluster_id<TAB>raw line' per message")
    p_mine.add_argument("--export", nargs=2, metavar=("FORMAT", "PATH"),
                        help="write the final template table "
                             "(json, csv, or text)")
    p_mine.add_argument("--listen", metavar="ADDR:PORT",
                        help="ingest UDP syslog datagrams instead of files")
    p_mine.add_argument("--follow", action="store_true",
                        help="keep reading as the file grows")
    p_mine.add_argument("--server", metavar="URL",
                        help="stream to a running service instead of "
                             "mining locally")
    p_mine.set_defaults(func=cmd_mine)

    p_resume = sub.add_parser("resume",
                              help="continue mining from a snapshot")
    add_io_flags(p_resume)
    _config_flags(p_resume)
    p_resume.add_argument("--assignments", metavar="PATH")
    p_resume.add_argument("--export", nargs=2, metavar=("FORMAT", "PATH"))
    p_resume.add_argument("--listen", metavar="ADDR:PORT")
    p_resume.add_argument("--follow", action="store_true")
    p_resume.add_argument("--server", metavar="URL")
    p_resume.set_defaults(func=cmd_resume)

    p_export = sub.add_parser("export", help="dump the template table")
    p_export.add_argument("--state-in", metavar="PATH")
    p_export.add_argument("--format", choices=EXPORT_FORMATS, default="text")
    p_export.add_argument("--output", default="-", metavar="PATH")
    p_export.add_argument("--server", metavar="URL")
    p_export.set_defaults(func=cmd_export)

    p_analyze = sub.add_parser(
        "analyze", help="per-minute group patterns from an assignment log")
    p_analyze.add_argument("--assignments", required=True, metavar="PATH")
    p_analyze.add_argument("--state-in", metavar="PATH")
    p_analyze.add_argument("--distance-threshold", type=float, default=0.5,
                           metavar="REAL")
    p_analyze.add_argument("--top-k", type=int, default=10, metavar="INT")
    p_analyze.add_argument("--format", choices=("text", "csv"),
                           default="text")
    p_analyze.add_argument("--output", default="-", metavar="PATH")
    p_analyze.add_argument("--server", metavar="URL")
    p_analyze.set_defaults(func=cmd_analyze)

    p_bench = sub.add_parser("bench", help="throughput per batch as csv")
    add_io_flags(p_bench)
    _config_flags(p_bench)
    p_bench.add_argument("--batch-size", type=int, default=10000,
                         metavar="INT")
    p_bench.add_argument("--output", default="-", metavar="PATH")
    p_bench.add_argument("--listen", default=None, help=argparse.SUPPRESS)
    p_bench.add_argument("--follow", action="store_true",
                         help=argparse.SUPPRESS)
    p_bench.set_defaults(func=cmd_bench)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    _config_flags(p_serve)
    p_serve.add_argument("--state-in", metavar="PATH")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8514)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except httpx.HTTPError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
