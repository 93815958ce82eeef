"""Online template clustering keyed on word-length vectors.

Each cluster holds two parallel vectors over the same word positions: the
per-word character counts of the most recently absorbed message, and the
template words with variable positions replaced by a wildcard.  An incoming
message joins the best-scoring cluster of identical word count, where the
score is 1 for a template match, 0 when too few literal words line up, and
otherwise the cosine similarity of the two length vectors.  Clusters mutate
in place; one writer at a time per index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Iterator, Optional

from .tokenizer import ParsedMessage, RawLine, TokenizerConfig, tokenize

__all__ = [
    "WILDCARD",
    "LengthMismatch",
    "MiningConfig",
    "Cluster",
    "ClusterIndex",
    "TemplateMiner",
    "cosine_similarity",
    "positional_similarity",
    "template_matches",
    "similarity",
    "update_word_length_vector",
    "update_word_vector",
    "find_or_create_cluster",
    "snapshot_templates",
    "render_template",
]

# Wildcard marker for variable template positions.  None can never collide
# with a literal token, so messages containing a real "*" word survive.
WILDCARD = None

SHORT_MESSAGE_POLICIES = ("effective_min", "strict")


class LengthMismatch(ValueError):
    """Two vectors that must be position-aligned have different lengths."""


@dataclass(frozen=True)
class MiningConfig:
    """Clustering thresholds.

    cluster_threshold: minimum (exclusive) score to join a cluster.
    position_threshold: minimum count of shared literal words at equal
    positions; fewer forces the score to 0.
    short_message_policy: "effective_min" caps the positional gate at the
    message word count so very short messages are not forced into
    singleton clusters; "strict" applies position_threshold as-is.
    """

    cluster_threshold: float = 0.9
    position_threshold: int = 3
    short_message_policy: str = "effective_min"

    def __post_init__(self) -> None:
        if not 0.0 < self.cluster_threshold <= 1.0:
            raise ValueError("cluster_threshold must be in (0, 1]")
        if self.position_threshold < 0:
            raise ValueError("position_threshold must be >= 0")
        if self.short_message_policy not in SHORT_MESSAGE_POLICIES:
            raise ValueError(
                f"unknown short_message_policy: {self.short_message_policy!r}")

    def effective_position_threshold(self, word_count: int) -> int:
        if self.short_message_policy == "effective_min":
            return min(self.position_threshold, word_count)
        return self.position_threshold


class Cluster:
    """One inferred template: length vector, word vector, bookkeeping."""

    __slots__ = ("id", "lengths", "template", "match_count",
                 "first_seen", "last_seen", "_norm2")

    def __init__(self, cluster_id: int, lengths: list[int],
                 template: list[Optional[str]], match_count: int = 1,
                 first_seen: Optional[datetime] = None,
                 last_seen: Optional[datetime] = None) -> None:
        if len(lengths) != len(template):
            raise LengthMismatch("length vector and template differ in size")
        self.id = cluster_id
        self.lengths = lengths
        self.template = template
        self.match_count = match_count
        self.first_seen = first_seen
        self.last_seen = last_seen
        self._norm2 = sum(x * x for x in lengths)


def cosine_similarity(a: list[int], b: list[int]) -> float:
    """Cosine of two equal-length positive vectors, clamped into (0, 1]."""
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} != {len(b)}")
    if not a:
        raise LengthMismatch("empty vectors")
    dot = 0
    for x, y in zip(a, b):
        dot += x * y
    na = sum(x * x for x in a)
    nb = sum(y * y for y in b)
    # clamp: float rounding may push identical vectors a hair above 1
    return min(1.0, dot / math.sqrt(na * nb))


def positional_similarity(tc: list[Optional[str]], w: list[Optional[str]]) -> int:
    """Count positions where both sides hold the identical literal word."""
    if len(tc) != len(w):
        raise LengthMismatch(f"{len(tc)} != {len(w)}")
    count = 0
    for a, b in zip(tc, w):
        if a is not None and a == b:
            count += 1
    return count


def template_matches(tc: list[Optional[str]], w: list[str]) -> bool:
    """True when every template position is the wildcard or equals the word."""
    if len(tc) != len(w):
        return False
    for a, b in zip(tc, w):
        if a is not None and a != b:
            return False
    return True


def similarity(c: Cluster, v: list[int], w: list[str], cfg: MiningConfig) -> float:
    """Score a message (lengths v, words w) against one cluster.

    Checks run in fixed order: word-count gate, template match, positional
    gate, cosine.  All mismatches come back as 0 rather than errors.
    """
    if len(c.lengths) != len(v):
        return 0.0
    return _score(c, v, w, sum(x * x for x in v),
                  cfg.effective_position_threshold(len(v)))


def _score(c: Cluster, v: list[int], w: list[str], v_norm2: int,
           eff_tp: int) -> float:
    # one pass gives both the exact-match flag and the positional count
    s_p = 0
    exact = True
    for a, b in zip(c.template, w):
        if a is None:
            continue
        if a == b:
            s_p += 1
        else:
            exact = False
    if exact:
        return 1.0
    if s_p < eff_tp:
        return 0.0
    dot = 0
    for x, y in zip(c.lengths, v):
        dot += x * y
    return min(1.0, dot / math.sqrt(c._norm2 * v_norm2))


def update_word_length_vector(c: Cluster, v: list[int]) -> None:
    """Overwrite each differing position; the vector ends up equal to v."""
    lengths = c.lengths
    if len(lengths) != len(v):
        raise LengthMismatch(f"{len(lengths)} != {len(v)}")
    for i, value in enumerate(v):
        if lengths[i] != value:
            lengths[i] = value
    c._norm2 = sum(x * x for x in lengths)


def update_word_vector(c: Cluster, w: list[str]) -> None:
    """Wildcard every position whose word differs; wildcards never revert."""
    template = c.template
    if len(template) != len(w):
        raise LengthMismatch(f"{len(template)} != {len(w)}")
    for i, word in enumerate(w):
        if template[i] != word:
            template[i] = WILDCARD


class ClusterIndex:
    """All clusters, bucketed by word count for the length gate.

    Sequential state machine: callers serialize mutation.  Iteration and
    snapshots run in ascending cluster id (creation) order.
    """

    def __init__(self, next_cluster_id: int = 0) -> None:
        self.buckets: dict[int, list[Cluster]] = {}
        self.next_cluster_id = next_cluster_id
        self._order: list[Cluster] = []

    def __len__(self) -> int:
        return len(self._order)

    def __iter__(self) -> Iterator[Cluster]:
        return iter(self._order)

    def get(self, cluster_id: int) -> Optional[Cluster]:
        for c in self._order:
            if c.id == cluster_id:
                return c
        return None

    def insert(self, lengths: list[int], template: list[Optional[str]],
               match_count: int = 1, first_seen: Optional[datetime] = None,
               last_seen: Optional[datetime] = None,
               cluster_id: Optional[int] = None) -> Cluster:
        """Add a cluster; ids are handed out monotonically unless given."""
        if cluster_id is None:
            cluster_id = self.next_cluster_id
        c = Cluster(cluster_id, lengths, template, match_count,
                    first_seen, last_seen)
        self.next_cluster_id = max(self.next_cluster_id, cluster_id + 1)
        self.buckets.setdefault(len(lengths), []).append(c)
        self._order.append(c)
        return c


def find_or_create_cluster(index: ClusterIndex, msg: ParsedMessage,
                           cfg: MiningConfig) -> tuple[int, bool]:
    """Assign one message to a cluster, creating one when nothing scores
    above the threshold.

    Only the bucket with the message's word count is scanned.  The best
    strictly-above-threshold score wins; equal scores keep the oldest
    cluster.  The winner absorbs the message: lengths copied over,
    differing template words wildcarded, match count bumped.
    """
    words = msg.words
    v = [len(w) for w in words]
    v_norm2 = sum(x * x for x in v)
    eff_tp = cfg.effective_position_threshold(len(v))

    best: Optional[Cluster] = None
    best_score = cfg.cluster_threshold
    for c in index.buckets.get(len(v), ()):
        s = _score(c, v, words, v_norm2, eff_tp)
        if s > best_score:
            best, best_score = c, s
            if s == 1.0:
                # nothing can beat 1.0 and later ties lose to the oldest
                break

    ts = msg.msg_ts
    if best is None:
        created = index.insert(list(v), list(words), match_count=1,
                               first_seen=ts, last_seen=ts)
        return created.id, True

    update_word_length_vector(best, v)
    update_word_vector(best, words)
    best.match_count += 1
    if ts is not None:
        if best.first_seen is None:
            best.first_seen = ts
        best.last_seen = ts
    return best.id, False


def render_template(template: list[Optional[str]], wildcard: str = "*") -> str:
    """Join template words with single spaces, wildcards rendered as '*'."""
    return " ".join(wildcard if w is None else w for w in template)


def snapshot_templates(index: ClusterIndex) -> list[tuple[int, str, int]]:
    """(id, rendered template, match count) triples in ascending id order."""
    rows = [(c.id, render_template(c.template), c.match_count) for c in index]
    rows.sort(key=lambda r: r[0])
    return rows


class TemplateMiner:
    """Tokenizer plus cluster index plus run counters: the mining session.

    add_line is the single-writer entry point; callers that share a miner
    across threads must serialize calls themselves.
    """

    def __init__(self, tokenizer_config: Optional[TokenizerConfig] = None,
                 mining_config: Optional[MiningConfig] = None,
                 index: Optional[ClusterIndex] = None) -> None:
        self.tokenizer_config = tokenizer_config or TokenizerConfig()
        self.mining_config = mining_config or MiningConfig()
        self.index = index if index is not None else ClusterIndex()
        self.messages_processed = 0
        self.header_parse_failures = 0

    def add_line(self, text: str, source_id: str = "",
                 arrival_ts: Optional[float] = None) -> tuple[int, bool]:
        """Tokenize and cluster one line; raises EmptyMessage on blanks."""
        raw = RawLine(text=text, source_id=source_id, arrival_ts=arrival_ts)
        return self.add_raw(raw)

    def add_raw(self, raw: RawLine) -> tuple[int, bool]:
        msg = tokenize(raw, self.tokenizer_config)
        if msg.header_failed:
            self.header_parse_failures += 1
        cluster_id, created = find_or_create_cluster(
            self.index, msg, self.mining_config)
        self.messages_processed += 1
        return cluster_id, created

    def templates(self) -> list[tuple[int, str, int]]:
        return snapshot_templates(self.index)
