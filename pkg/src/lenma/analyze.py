"""Offline grouping of mined assignments into per-minute patterns.

Assignments (cluster id + message timestamp) are bucketed into one
histogram per minute, the histograms are clustered online with a
normalized symmetric chi-square distance, and the resulting group
clusters are reported as frequent vs. unique patterns.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Mapping, Optional, Union

__all__ = [
    "MissingTimestamp",
    "MinuteGroup",
    "GroupCluster",
    "group_by_minute",
    "chi2_distance",
    "cluster_groups",
    "report_patterns",
    "render_report_text",
    "render_report_csv",
]

DEFAULT_DISTANCE_THRESHOLD = 0.5
DEFAULT_TOP_K = 10
DEFAULT_UNIQUE_CUTOFF = 2


class MissingTimestamp(ValueError):
    """Assignment record carries no parseable timestamp."""


@dataclass
class MinuteGroup:
    """All messages of one wall-clock minute as a template histogram."""
    minute_key: datetime
    histogram: dict[int, int] = field(default_factory=dict)

    def add(self, cluster_id: int) -> None:
        self.histogram[cluster_id] = self.histogram.get(cluster_id, 0) + 1

    def total(self) -> int:
        return sum(self.histogram.values())


@dataclass
class GroupCluster:
    """One recurring minute pattern: member minutes plus the running
    mean of their normalized histograms (sums to 1)."""
    id: int
    members: list[datetime] = field(default_factory=list)
    centroid: dict[int, float] = field(default_factory=dict)

    def absorb(self, group: MinuteGroup) -> None:
        n = len(self.members)
        norm = _normalize(group.histogram)
        keys = set(self.centroid) | set(norm)
        self.centroid = {
            k: (self.centroid.get(k, 0.0) * n + norm.get(k, 0.0)) / (n + 1)
            for k in keys
        }
        self.members.append(group.minute_key)


def group_by_minute(
        assignments: Iterable[tuple[int, Optional[datetime]]],
        counters: Optional[dict[str, int]] = None,
        strict: bool = False) -> list[MinuteGroup]:
    """Bucket (cluster_id, msg_ts) records into one group per minute.

    Records without a timestamp are skipped (tallied under
    counters["missing_timestamp"] when a counters dict is passed), or
    raise MissingTimestamp when strict is set.  Groups come back sorted
    by minute; minutes with no messages do not appear.
    """
    groups: dict[datetime, MinuteGroup] = {}
    for cluster_id, ts in assignments:
        if ts is None:
            if strict:
                raise MissingTimestamp(f"cluster {cluster_id} record has no timestamp")
            if counters is not None:
                counters["missing_timestamp"] = counters.get("missing_timestamp", 0) + 1
            continue
        key = ts.replace(second=0, microsecond=0)
        group = groups.get(key)
        if group is None:
            group = groups[key] = MinuteGroup(key)
        group.add(cluster_id)
    return [groups[k] for k in sorted(groups)]


def _normalize(hist: Mapping[int, float]) -> dict[int, float]:
    total = sum(hist.values())
    if total <= 0:
        return {}
    return {k: v / total for k, v in hist.items() if v}


Histogram = Union[MinuteGroup, Mapping[int, float]]


def chi2_distance(a: Histogram, b: Histogram) -> float:
    """Normalized symmetric chi-square distance between two histograms.

    Each side is scaled to sum 1, then over the union of keys:
    half the sum of (a_k - b_k)^2 / (a_k + b_k), zero-mass keys skipped.
    Symmetric, 0 iff the normalized histograms match, at most 1.
    """
    ha = _normalize(a.histogram if isinstance(a, MinuteGroup) else a)
    hb = _normalize(b.histogram if isinstance(b, MinuteGroup) else b)
    dist = 0.0
    for k in ha.keys() | hb.keys():
        x = ha.get(k, 0.0)
        y = hb.get(k, 0.0)
        denom = x + y
        if denom <= 0.0:
            continue
        dist += (x - y) ** 2 / denom
    return min(1.0, 0.5 * dist)


def cluster_groups(groups: Iterable[MinuteGroup],
                   distance_threshold: float = DEFAULT_DISTANCE_THRESHOLD,
                   ) -> list[GroupCluster]:
    """Online nearest-centroid clustering of minute groups.

    Each group joins the nearest existing cluster when its centroid
    distance is strictly below the threshold, otherwise founds a new
    cluster; ties keep the oldest.  Deterministic in input order.
    """
    if not 0.0 < distance_threshold < 1.0:
        raise ValueError("distance_threshold must be in (0, 1)")
    clusters: list[GroupCluster] = []
    for group in groups:
        best = None
        best_dist = distance_threshold
        for gc in clusters:
            d = chi2_distance(group, gc.centroid)
            if d < best_dist:
                best, best_dist = gc, d
                if d == 0.0:
                    break
        if best is None:
            best = GroupCluster(len(clusters))
            clusters.append(best)
        best.absorb(group)
    return clusters


def report_patterns(gcs: list[GroupCluster], top_k: int = DEFAULT_TOP_K,
                    unique_cutoff: int = DEFAULT_UNIQUE_CUTOFF) -> dict:
    """Split group clusters into the top_k most populous recurring ones
    (frequent patterns) and those seen fewer than unique_cutoff minutes
    (unique patterns).  The two lists never overlap; mid-size clusters
    past top_k appear in neither."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    ranked = sorted(gcs, key=lambda gc: (-len(gc.members), gc.id))
    frequent = [gc for gc in ranked[:top_k]
                if len(gc.members) >= unique_cutoff]
    unique = sorted((gc for gc in gcs if len(gc.members) < unique_cutoff),
                    key=lambda gc: gc.id)
    return {
        "group_clusters": len(gcs),
        "minutes": sum(len(gc.members) for gc in gcs),
        "frequent": [_entry(gc) for gc in frequent],
        "unique": [_entry(gc) for gc in unique],
    }


def _entry(gc: GroupCluster) -> dict:
    breakdown = sorted(gc.centroid.items(), key=lambda kv: (-kv[1], kv[0]))
    return {
        "group_cluster": gc.id,
        "size": len(gc.members),
        "first_minute": min(gc.members).isoformat(),
        "last_minute": max(gc.members).isoformat(),
        "centroid": [(cid, round(w, 6)) for cid, w in breakdown],
    }


def _breakdown_str(entry: dict, templates: Optional[Mapping[int, str]],
                   limit: int = 5) -> str:
    parts = []
    for cid, w in entry["centroid"][:limit]:
        name = templates.get(cid, str(cid)) if templates else str(cid)
        parts.append(f"{name}={w:.3f}")
    return " ".join(parts)


def render_report_text(report: dict,
                       templates: Optional[Mapping[int, str]] = None) -> str:
    """Human-readable report; template ids are replaced by rendered
    template strings when a mapping is supplied."""
    lines = [
        f"group clusters: {report['group_clusters']}",
        f"minutes covered: {report['minutes']}",
        "",
        f"frequent patterns ({len(report['frequent'])}):",
    ]
    for e in report["frequent"]:
        lines.append(
            "  #%d  %d minutes  %s .. %s" % (
                e["group_cluster"], e["size"],
                e["first_minute"], e["last_minute"]))
        lines.append("      " + _breakdown_str(e, templates))
    lines.append("")
    lines.append(f"unique patterns ({len(report['unique'])}):")
    for e in report["unique"]:
        lines.append(
            "  #%d  %d minute(s)  %s" % (
                e["group_cluster"], e["size"], e["first_minute"]))
        lines.append("      " + _breakdown_str(e, templates))
    return "\n".join(lines) + "\n"


def render_report_csv(report: dict,
                      templates: Optional[Mapping[int, str]] = None) -> str:
    """One row per reported cluster: kind, id, size, minute range, top
    centroid entries as "id:weight" pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["kind", "group_cluster", "size",
                     "first_minute", "last_minute", "top_templates"])
    for kind in ("frequent", "unique"):
        for e in report[kind]:
            tops = " ".join(f"{cid}:{w:.4f}" for cid, w in e["centroid"][:5])
            writer.writerow([kind, e["group_cluster"], e["size"],
                             e["first_minute"], e["last_minute"], tops])
    return buf.getvalue()
