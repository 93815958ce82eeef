"""Persist and restore mining sessions; export template tables.

Snapshots are single JSON documents with an explicit format version,
written atomically (temp file + rename) and serialized canonically so
identical sessions produce identical bytes.  Wildcard positions are
stored as JSON null, which can never collide with a literal "*" word.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from datetime import datetime
from typing import Optional

from .core import ClusterIndex, MiningConfig, TemplateMiner, render_template
from .tokenizer import TokenizerConfig

__all__ = [
    "FORMAT_VERSION",
    "StateError",
    "VersionMismatch",
    "CorruptState",
    "snapshot_doc",
    "miner_from_doc",
    "dump_doc",
    "save_state",
    "load_state",
    "export_templates",
    "render_export",
    "template_rows",
]

FORMAT_VERSION = 1

EXPORT_FORMATS = ("json", "csv", "text")


class StateError(Exception):
    """Base error for snapshot handling."""


class VersionMismatch(StateError):
    """Snapshot written by an unsupported (newer) format version."""


class CorruptState(StateError):
    """Snapshot violates the document schema or a cluster invariant."""


def _ts_out(ts: Optional[datetime]) -> Optional[str]:
    return None if ts is None else ts.isoformat()


def _ts_in(value, what: str) -> Optional[datetime]:
    if value is None:
        return None
    try:
        return datetime.fromisoformat(value)
    except (TypeError, ValueError) as exc:
        raise CorruptState(f"bad timestamp in {what}: {value!r}") from exc


def snapshot_doc(miner: TemplateMiner) -> dict:
    """Self-describing document capturing the whole session."""
    tk = miner.tokenizer_config
    mc = miner.mining_config
    clusters = []
    for c in sorted(miner.index, key=lambda c: c.id):
        clusters.append({
            "id": c.id,
            "lengths": list(c.lengths),
            "template": list(c.template),
            "match_count": c.match_count,
            "first_seen": _ts_out(c.first_seen),
            "last_seen": _ts_out(c.last_seen),
        })
    return {
        "format_version": FORMAT_VERSION,
        "config": {
            "tokenizer": {
                "header_mode": tk.header_mode,
                "skip_count": tk.skip_count,
                "delimiter_chars": tk.delimiter_chars,
                "drop_punct_tokens": tk.drop_punct_tokens,
            },
            "mining": {
                "cluster_threshold": mc.cluster_threshold,
                "position_threshold": mc.position_threshold,
                "short_message_policy": mc.short_message_policy,
            },
        },
        "next_cluster_id": miner.index.next_cluster_id,
        "counters": {
            "messages_processed": miner.messages_processed,
            "header_parse_failures": miner.header_parse_failures,
        },
        "clusters": clusters,
    }


def _require(doc: dict, key: str, kind, what: str):
    if key not in doc:
        raise CorruptState(f"{what}: missing {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise CorruptState(f"{what}: {key!r} has wrong type")
    return value


def miner_from_doc(doc) -> TemplateMiner:
    """Rebuild a session from a snapshot document, re-checking invariants."""
    if not isinstance(doc, dict):
        raise CorruptState("snapshot root is not an object")
    version = _require(doc, "format_version", int, "snapshot")
    if version > FORMAT_VERSION:
        raise VersionMismatch(f"format_version {version} not supported")
    if version < 1:
        raise CorruptState(f"bad format_version {version}")

    config = _require(doc, "config", dict, "snapshot")
    tk_doc = _require(config, "tokenizer", dict, "config")
    mc_doc = _require(config, "mining", dict, "config")
    try:
        tk = TokenizerConfig(
            header_mode=tk_doc["header_mode"],
            skip_count=tk_doc["skip_count"],
            delimiter_chars=tk_doc["delimiter_chars"],
            drop_punct_tokens=tk_doc["drop_punct_tokens"],
        )
        mc = MiningConfig(
            cluster_threshold=mc_doc["cluster_threshold"],
            position_threshold=mc_doc["position_threshold"],
            short_message_policy=mc_doc["short_message_policy"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptState(f"bad config: {exc}") from exc

    next_id = _require(doc, "next_cluster_id", int, "snapshot")
    counters = _require(doc, "counters", dict, "snapshot")
    cluster_docs = _require(doc, "clusters", list, "snapshot")

    for cdoc in cluster_docs:
        if not isinstance(cdoc, dict):
            raise CorruptState("cluster entry is not an object")
        _require(cdoc, "id", int, "cluster")

    # Bucket scan order breaks score ties toward the oldest cluster, so
    # rebuild in ascending id order no matter how the doc lists them.
    index = ClusterIndex()
    seen_ids = set()
    for cdoc in sorted(cluster_docs, key=lambda d: d["id"]):
        cid = cdoc["id"]
        lengths = _require(cdoc, "lengths", list, f"cluster {cid}")
        template = _require(cdoc, "template", list, f"cluster {cid}")
        match_count = _require(cdoc, "match_count", int, f"cluster {cid}")
        if cid in seen_ids:
            raise CorruptState(f"duplicate cluster id {cid}")
        seen_ids.add(cid)
        if cid >= next_id:
            raise CorruptState(f"cluster id {cid} >= next_cluster_id {next_id}")
        if not lengths:
            raise CorruptState(f"cluster {cid}: empty length vector")
        if len(lengths) != len(template):
            raise CorruptState(f"cluster {cid}: vector/template size mismatch")
        for x in lengths:
            if not isinstance(x, int) or x < 1:
                raise CorruptState(f"cluster {cid}: bad word length {x!r}")
        for w in template:
            if w is None:
                continue
            if not isinstance(w, str) or not w or any(ch.isspace() for ch in w):
                raise CorruptState(f"cluster {cid}: bad template word {w!r}")
        if match_count < 1:
            raise CorruptState(f"cluster {cid}: match_count < 1")
        index.insert(
            [int(x) for x in lengths], list(template),
            match_count=match_count,
            first_seen=_ts_in(cdoc.get("first_seen"), f"cluster {cid}"),
            last_seen=_ts_in(cdoc.get("last_seen"), f"cluster {cid}"),
            cluster_id=cid,
        )
    index.next_cluster_id = next_id

    miner = TemplateMiner(tk, mc, index)
    miner.messages_processed = int(counters.get("messages_processed", 0))
    miner.header_parse_failures = int(counters.get("header_parse_failures", 0))
    return miner


def dump_doc(doc: dict) -> str:
    """Canonical snapshot serialization: key-sorted, indented, newline
    terminated, so equal sessions give byte-equal files."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _atomic_write(path: str, data: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".state")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_state(miner: TemplateMiner, path: str) -> None:
    """Write the session snapshot atomically."""
    _atomic_write(path, dump_doc(snapshot_doc(miner)))


def load_state(path: str) -> TemplateMiner:
    """Read a snapshot back into a fresh session.

    Raises CorruptState on malformed or truncated documents and
    VersionMismatch on documents from a newer format.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except ValueError as exc:
        raise CorruptState(f"not a JSON document: {exc}") from exc
    return miner_from_doc(doc)


def render_export(rows: list[dict], fmt: str) -> str:
    """Render template rows (id, template, count, first/last seen) to text.

    Formats: "json" (array of objects), "csv" (header row plus one line per
    cluster), "text" (template TAB count).
    """
    if fmt == "json":
        return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(
            buf, fieldnames=["id", "template", "count", "first_seen", "last_seen"])
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "text":
        return "".join(f"{r['template']}\t{r['count']}\n" for r in rows)
    raise ValueError(f"unknown export format: {fmt!r}")


def template_rows(index: ClusterIndex) -> list[dict]:
    """Export rows in ascending id order."""
    rows = []
    for c in sorted(index, key=lambda c: c.id):
        rows.append({
            "id": c.id,
            "template": render_template(c.template),
            "count": c.match_count,
            "first_seen": _ts_out(c.first_seen),
            "last_seen": _ts_out(c.last_seen),
        })
    return rows


def export_templates(index: ClusterIndex, fmt: str, path: str) -> None:
    """Write the template table to path in the given format."""
    if fmt not in EXPORT_FORMATS:
        raise ValueError(f"unknown export format: {fmt!r}")
    data = render_export(template_rows(index), fmt)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(data)
