"""Line sources and the pump loop that feeds them to a mining session.

Files are read as latin-1 so arbitrary bytes survive round-trips and word
lengths count bytes.  Lines longer than MAX_LINE_BYTES are truncated at
the limit and flagged, never split into phantom extra lines.
"""

from __future__ import annotations

import os
import socket
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional

from .core import TemplateMiner
from .tokenizer import EmptyMessage, RawLine

__all__ = [
    "MAX_LINE_BYTES",
    "IngestReport",
    "read_file",
    "UdpListener",
    "pump",
    "bench_pump",
    "BatchRecord",
]

MAX_LINE_BYTES = 64 * 1024


@dataclass
class IngestReport:
    """Counters from one pump run."""
    lines_read: int = 0
    messages_processed: int = 0
    empty_messages: int = 0
    truncated_lines: int = 0
    clusters_created: int = 0


def _chop(line: str) -> tuple[str, bool]:
    if len(line) > MAX_LINE_BYTES:
        return line[:MAX_LINE_BYTES], True
    return line, False


def read_file(path: str, follow: bool = False,
              poll_interval: float = 0.2,
              stop: Optional[Callable[[], bool]] = None) -> Iterator[RawLine]:
    """Yield RawLines from a log file.

    With follow=True the reader keeps polling for appended data after
    EOF (tail -f) until stop() returns true.  Partial trailing lines
    without a newline are yielded only once complete, except at final
    EOF in non-follow mode where the remainder is flushed.
    """
    source_id = os.path.basename(path) or path
    with open(path, encoding="latin-1", newline="") as fh:
        buf = ""
        while True:
            chunk = fh.read(65536)
            if chunk:
                buf += chunk
                while True:
                    nl = buf.find("\n")
                    if nl < 0:
                        break
                    raw, buf = buf[:nl], buf[nl + 1:]
                    raw = raw.rstrip("\r")
                    text, truncated = _chop(raw)
                    yield RawLine(text, source_id, time.time(), truncated)
                continue
            if not follow:
                break
            if stop is not None and stop():
                break
            time.sleep(poll_interval)
        if buf:
            text, truncated = _chop(buf)
            yield RawLine(text, source_id, time.time(), truncated)


def iter_stream(fh, source_id: str) -> Iterator[RawLine]:
    """Yield RawLines from an already-open text stream (e.g. stdin)."""
    for raw in fh:
        raw = raw.rstrip("\r\n")
        text, truncated = _chop(raw)
        yield RawLine(text, source_id, time.time(), truncated)


def strip_pri(text: str) -> str:
    """Drop a leading <PRI> priority tag from a syslog datagram."""
    if text.startswith("<"):
        end = text.find(">", 1)
        if 1 <= end <= 4 and text[1:end].isdigit():
            return text[end + 1:]
    return text


class UdpListener:
    """Bind a UDP socket and yield one RawLine per datagram.

    Datagrams are decoded latin-1; a leading <PRI> tag is stripped
    before tokenizing.  Iteration stops when stop() returns true or
    close() is called from another thread.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 stop: Optional[Callable[[], bool]] = None):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._sock.settimeout(0.2)
        self._stop = stop
        self._closed = False

    @property
    def address(self) -> tuple[str, int]:
        return self._sock.getsockname()

    def close(self) -> None:
        self._closed = True
        self._sock.close()

    def __iter__(self) -> Iterator[RawLine]:
        source_id = "udp:%s:%d" % self.address
        while not self._closed:
            if self._stop is not None and self._stop():
                break
            try:
                data, _addr = self._sock.recvfrom(MAX_LINE_BYTES + 1)
            except socket.timeout:
                continue
            except OSError:
                break
            text = strip_pri(data.decode("latin-1"))
            text = text.rstrip("\r\n")
            text, truncated = _chop(text)
            yield RawLine(text, source_id, time.time(), truncated)


def pump(miner: TemplateMiner, lines: Iterable[RawLine],
         report: Optional[IngestReport] = None,
         on_line: Optional[Callable[[RawLine, Optional[int], bool], None]] = None,
         ) -> IngestReport:
    """Feed every line to the miner; blank/header-only lines are counted
    and skipped rather than failing the run."""
    if report is None:
        report = IngestReport()
    for line in lines:
        report.lines_read += 1
        if line.truncated:
            report.truncated_lines += 1
        try:
            cluster_id, created = miner.add_raw(line)
        except EmptyMessage:
            report.empty_messages += 1
            if on_line is not None:
                on_line(line, None, False)
            continue
        report.messages_processed += 1
        if created:
            report.clusters_created += 1
        if on_line is not None:
            on_line(line, cluster_id, created)
    return report


@dataclass
class BatchRecord:
    """Timing and template growth for one benchmark batch."""
    batch_index: int
    lines: int
    seconds: float
    lines_per_sec: float
    templates: int


def bench_pump(miner: TemplateMiner, lines: Iterable[RawLine],
               batch_size: int = 10_000) -> tuple[IngestReport, list[BatchRecord]]:
    """Pump in fixed-size batches, recording wall time per batch and the
    cumulative template count after each one."""
    report = IngestReport()
    records: list[BatchRecord] = []
    batch: list[RawLine] = []

    def flush() -> None:
        if not batch:
            return
        t0 = time.perf_counter()
        pump(miner, batch, report)
        dt = time.perf_counter() - t0
        rate = len(batch) / dt if dt > 0 else float("inf")
        records.append(BatchRecord(
            len(records), len(batch), dt, rate, len(miner.index)))
        batch.clear()

    for line in lines:
        batch.append(line)
        if len(batch) >= batch_size:
            flush()
    flush()
    return report, records
