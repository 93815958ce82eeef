"""Shared fixtures: the four worked-example lines and the large
synthetic run reused by several acceptance criteria."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthetic import make_templates, corpus  # noqa: E402

POSTFIX_1 = ("Dec  1 00:05:01 vm1.example.com postfix/cleanup[2767]: "
             "7EF561405E3: message-id=<20151130150501.7EF561405E3"
             "@vm1.example.com>")
POSTFIX_2 = ("Dec  1 00:10:01 vm1.example.com postfix/cleanup[3247]: "
             "898FD1405E3: message-id=<20151130151001.898FD1405E3"
             "@vm1.example.com>")
SSH_1 = "Dec  1 00:27:27 backup sshd[15406]: Invalid user admin from 222.186.30.174"
SSH_2 = "Dec  1 04:29:58 backup sshd[16287]: Invalid user a from 218.38.12.218"

MAIL_SSH_LINES = [POSTFIX_1, POSTFIX_2, SSH_1, SSH_2]


@pytest.fixture
def worked_lines() -> list[str]:
    return list(MAIL_SSH_LINES)


@pytest.fixture
def worked_log(tmp_path) -> str:
    path = tmp_path / "worked.log"
    path.write_text("\n".join(MAIL_SSH_LINES) + "\n")
    return str(path)


@pytest.fixture(scope="session")
def million_run():
    """Mine 1,000,000 synthetic lines once; several criteria share it.

    Returns (truth templates, ingest report, batch records, miner,
    wall seconds).
    """
    import time

    from lenma import MiningConfig, TemplateMiner, TokenizerConfig
    from lenma.ingest import bench_pump
    from lenma.tokenizer import RawLine

    templates = make_templates(50)
    lines = (RawLine(text, "synthetic", None)
             for text in corpus(1_000_000, templates))
    miner = TemplateMiner(TokenizerConfig(), MiningConfig())
    t0 = time.perf_counter()
    report, records = bench_pump(miner, lines, batch_size=10_000)
    elapsed = time.perf_counter() - t0
    return templates, report, records, miner, elapsed
