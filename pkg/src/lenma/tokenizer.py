"""Turn raw syslog lines into ordered word lists.

Splitting happens in three steps: optionally strip the transport header
(date, host) from the front of the line, replace a configurable set of
delimiter characters with spaces, then split on whitespace.  Word lengths
are counted in bytes; callers should feed byte-transparent text (decode
with latin-1 when reading raw streams).
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

__all__ = [
    "RawLine",
    "ParsedMessage",
    "TokenizerConfig",
    "EmptyMessage",
    "tokenize",
    "word_length_vector",
]

HEADER_MODES = ("classic_bsd", "rfc5424", "none", "skip")

DEFAULT_DELIMITERS = "[]()="

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}

_TIME_RE = re.compile(r"^(\d{2}):(\d{2}):(\d{2})$")

# version token of the newer syslog framing, optionally glued to a <PRI> tag
_RFC5424_VERSION_RE = re.compile(r"^(?:<\d{1,3}>)?\d{1,2}$")

_PUNCT = frozenset(string.punctuation)


class EmptyMessage(ValueError):
    """No body tokens remain after header stripping and splitting."""


@dataclass(slots=True)
class RawLine:
    """One log line plus transport metadata, before any parsing."""

    text: str
    source_id: str = ""
    arrival_ts: Optional[float] = None
    truncated: bool = False


@dataclass(slots=True)
class ParsedMessage:
    """Tokenized body of a log line.

    `words` never contains empty strings or whitespace.  `msg_ts` and
    `host` are filled only when the header parsed; `header_failed` marks
    lines that requested header stripping but did not match, in which case
    the full line is kept as the body.
    """

    words: list[str]
    msg_ts: Optional[datetime] = None
    host: Optional[str] = None
    raw: Optional[RawLine] = None
    header_failed: bool = False


@dataclass(frozen=True)
class TokenizerConfig:
    """Immutable splitting rules.

    header_mode: "classic_bsd" (Mon DD HH:MM:SS host), "rfc5424"
    (VERSION TIMESTAMP HOSTNAME), "none", or "skip" with skip_count
    leading whitespace tokens dropped blindly.  skip_count 0 behaves
    like "none".

    drop_punct_tokens also strips trailing ":" from every token before
    the punctuation-only filter, so tag-style tokens ("name:") keep
    only their name part.
    """

    header_mode: str = "classic_bsd"
    skip_count: int = 0
    delimiter_chars: str = DEFAULT_DELIMITERS
    drop_punct_tokens: bool = False

    def __post_init__(self) -> None:
        if self.header_mode not in HEADER_MODES:
            raise ValueError(f"unknown header_mode: {self.header_mode!r}")
        if self.skip_count < 0:
            raise ValueError("skip_count must be >= 0")
        if self.header_mode != "skip" and self.skip_count:
            raise ValueError("skip_count is only meaningful with header_mode='skip'")
        table = str.maketrans({c: " " for c in self.delimiter_chars})
        object.__setattr__(self, "_table", table)
        object.__setattr__(self, "_delimset", frozenset(self.delimiter_chars))

    # computed in __post_init__; declared for dataclass bookkeeping
    _table: dict = field(init=False, repr=False, compare=False, default_factory=dict)
    _delimset: frozenset = field(init=False, repr=False, compare=False,
                                 default_factory=frozenset)


def _parse_classic_header(tokens: list[str]) -> Optional[tuple[datetime, str]]:
    """Match "Mon DD HH:MM:SS host" against the first four tokens."""
    if len(tokens) < 4:
        return None
    month = _MONTHS.get(tokens[0])
    if month is None or not tokens[1].isdigit():
        return None
    m = _TIME_RE.match(tokens[2])
    if m is None:
        return None
    try:
        # classic headers carry no year; a fixed one keeps runs reproducible
        ts = datetime(1900, month, int(tokens[1]),
                      int(m.group(1)), int(m.group(2)), int(m.group(3)))
    except ValueError:
        return None
    return ts, tokens[3]


def _parse_rfc5424_header(tokens: list[str]) -> Optional[tuple[Optional[datetime], str]]:
    """Match "VERSION TIMESTAMP HOSTNAME" against the first three tokens."""
    if len(tokens) < 3:
        return None
    if not _RFC5424_VERSION_RE.match(tokens[0]):
        return None
    ts: Optional[datetime] = None
    stamp = tokens[1]
    if stamp != "-":
        try:
            parsed = datetime.fromisoformat(stamp.replace("Z", "+00:00"))
        except ValueError:
            return None
        if parsed.tzinfo is not None:
            parsed = parsed.astimezone(timezone.utc).replace(tzinfo=None)
        ts = parsed
    return ts, tokens[2]


def _split_body(tokens: list[str], cfg: TokenizerConfig) -> list[str]:
    table = cfg._table
    delims = cfg._delimset
    words: list[str] = []
    for tok in tokens:
        if delims and not delims.isdisjoint(tok):
            words.extend(tok.translate(table).split())
        else:
            words.append(tok)
    if cfg.drop_punct_tokens:
        kept = []
        for w in words:
            w = w.rstrip(":")
            if w and not _PUNCT.issuperset(w):
                kept.append(w)
        words = kept
    return words


def tokenize(line: RawLine, cfg: TokenizerConfig) -> ParsedMessage:
    """Split one raw line into a ParsedMessage under the given config.

    Raises EmptyMessage when nothing remains after stripping.  A header
    that fails to parse is not fatal: the whole line becomes the body and
    the message is flagged, so online mining never drops data.
    """
    tokens = line.text.split()
    if not tokens:
        raise EmptyMessage("blank line")

    msg_ts: Optional[datetime] = None
    host: Optional[str] = None
    header_failed = False
    body = tokens

    if cfg.header_mode == "classic_bsd":
        parsed = _parse_classic_header(tokens)
        if parsed is None:
            header_failed = True
        else:
            msg_ts, host = parsed
            body = tokens[4:]
    elif cfg.header_mode == "rfc5424":
        parsed5424 = _parse_rfc5424_header(tokens)
        if parsed5424 is None:
            header_failed = True
        else:
            msg_ts, host = parsed5424
            body = tokens[3:]
    elif cfg.header_mode == "skip":
        if len(tokens) <= cfg.skip_count:
            raise EmptyMessage("line shorter than skip_count")
        body = tokens[cfg.skip_count:]

    words = _split_body(body, cfg)
    if not words:
        raise EmptyMessage("no body tokens after stripping")
    return ParsedMessage(words=words, msg_ts=msg_ts, host=host, raw=line,
                         header_failed=header_failed)


def word_length_vector(msg: ParsedMessage) -> list[int]:
    """Per-word character counts, in word order."""
    return [len(w) for w in msg.words]
