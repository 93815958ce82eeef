"""Line sources: files, follow mode, UDP datagrams, the pump loop."""

import socket
import threading
import time

from lenma.core import MiningConfig, TemplateMiner
from lenma.ingest import (MAX_LINE_BYTES, IngestReport, UdpListener,
                          bench_pump, iter_stream, pump, read_file,
                          strip_pri)
from lenma.tokenizer import RawLine, TokenizerConfig

from conftest import MAIL_SSH_LINES


def fresh_miner(**mining):
    return TemplateMiner(TokenizerConfig(), MiningConfig(**mining))


class TestReadFile:
    def test_yields_lines_with_source(self, tmp_path):
        path = tmp_path / "x.log"
        path.write_text("one alpha\ntwo beta\n")
        lines = list(read_file(str(path)))
        assert [l.text for l in lines] == ["one alpha", "two beta"]
        assert lines[0].source_id == "x.log"

    def test_crlf_stripped(self, tmp_path):
        path = tmp_path / "x.log"
        path.write_bytes(b"alpha one\r\nbeta two\r\n")
        assert [l.text for l in read_file(str(path))] == ["alpha one",
                                                          "beta two"]

    def test_trailing_partial_line_flushed(self, tmp_path):
        path = tmp_path / "x.log"
        path.write_text("complete line\npartial tail")
        assert [l.text for l in read_file(str(path))][-1] == "partial tail"

    def test_overlong_line_truncated_not_split(self, tmp_path):
        path = tmp_path / "x.log"
        big = "x" * (MAX_LINE_BYTES + 500)
        path.write_text(f"{big}\nshort one\n")
        lines = list(read_file(str(path)))
        assert len(lines) == 2
        assert lines[0].truncated
        assert len(lines[0].text) == MAX_LINE_BYTES
        assert not lines[1].truncated

    def test_latin1_bytes_survive(self, tmp_path):
        path = tmp_path / "x.log"
        path.write_bytes(b"caf\xe9 au lait\n")
        line = next(read_file(str(path)))
        assert line.text.encode("latin-1") == b"caf\xe9 au lait"

    def test_follow_picks_up_appends(self, tmp_path):
        path = tmp_path / "x.log"
        path.write_text("first line\n")
        got: list[str] = []
        done = threading.Event()

        def consume():
            for line in read_file(str(path), follow=True,
                                  poll_interval=0.02,
                                  stop=lambda: done.is_set()):
                got.append(line.text)

        t = threading.Thread(target=consume)
        t.start()
        time.sleep(0.1)
        with open(path, "a") as fh:
            fh.write("second line\n")
        time.sleep(0.2)
        done.set()
        t.join(timeout=2)
        assert got == ["first line", "second line"]


class TestUdp:
    def test_datagrams_become_lines(self):
        stop = threading.Event()
        listener = UdpListener("127.0.0.1", 0, stop=stop.is_set)
        host, port = listener.address

        def send():
            s = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            for text in MAIL_SSH_LINES:
                s.sendto(b"<13>" + text.encode("latin-1"), (host, port))
            s.close()
            time.sleep(0.3)
            stop.set()

        t = threading.Thread(target=send)
        t.start()
        miner = fresh_miner()
        report = pump(miner, listener)
        t.join(timeout=2)
        listener.close()
        assert report.messages_processed == 4
        assert len(miner.index) == 2

    def test_pri_tag_stripping(self):
        assert strip_pri("<13>Dec  1 x") == "Dec  1 x"
        assert strip_pri("<165>rest") == "rest"
        assert strip_pri("no tag here") == "no tag here"
        assert strip_pri("<abc>not numeric") == "<abc>not numeric"
        assert strip_pri("<12345>too long") == "<12345>too long"


class TestPump:
    def test_counts_and_skips(self):
        miner = fresh_miner()
        lines = [RawLine(MAIL_SSH_LINES[0]), RawLine("   "),
                 RawLine(MAIL_SSH_LINES[1]), RawLine("", truncated=True)]
        report = pump(miner, lines)
        assert report.lines_read == 4
        assert report.messages_processed == 2
        assert report.empty_messages == 2
        assert report.truncated_lines == 1
        assert report.clusters_created == 1

    def test_on_line_callback_sees_assignments(self):
        miner = fresh_miner()
        seen = []
        pump(miner, [RawLine(t) for t in MAIL_SSH_LINES],
             on_line=lambda line, cid, created: seen.append((cid, created)))
        assert seen == [(0, True), (0, False), (1, True), (1, False)]

    def test_existing_report_accumulates(self):
        miner = fresh_miner()
        report = IngestReport()
        pump(miner, [RawLine(MAIL_SSH_LINES[0])], report)
        pump(miner, [RawLine(MAIL_SSH_LINES[1])], report)
        assert report.lines_read == 2
        assert report.clusters_created == 1


class TestBench:
    def test_batch_records_shape(self):
        miner = fresh_miner()
        lines = [RawLine(t) for t in MAIL_SSH_LINES * 6]  # 24 lines
        report, records = bench_pump(miner, lines, batch_size=10)
        assert [r.lines for r in records] == [10, 10, 4]
        assert [r.batch_index for r in records] == [0, 1, 2]
        assert report.messages_processed == 24
        assert all(r.seconds >= 0 for r in records)

    def test_template_counts_are_cumulative(self):
        miner = fresh_miner()
        lines = [RawLine(t) for t in MAIL_SSH_LINES]
        _, records = bench_pump(miner, lines, batch_size=2)
        assert [r.templates for r in records] == [1, 2]


class TestIterStream:
    def test_reads_text_stream(self):
        import io
        stream = io.StringIO("alpha one\nbeta two\n")
        lines = list(iter_stream(stream, "stdin"))
        assert [l.text for l in lines] == ["alpha one", "beta two"]
        assert lines[0].source_id == "stdin"
