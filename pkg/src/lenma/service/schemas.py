"""Request/response models for the mining service."""

from __future__ import annotations

from datetime import datetime
from typing import Optional

from pydantic import BaseModel, Field


class TokenizerConfigModel(BaseModel):
    header_mode: str = "classic_bsd"
    skip_count: int = 0
    delimiter_chars: str = "[]()="
    drop_punct_tokens: bool = False


class MiningConfigModel(BaseModel):
    cluster_threshold: float = 0.9
    position_threshold: int = 3
    short_message_policy: str = "effective_min"


class ConfigOut(BaseModel):
    tokenizer: TokenizerConfigModel
    mining: MiningConfigModel


class StatsOut(BaseModel):
    messages_processed: int
    header_parse_failures: int
    clusters: int


class LinesIn(BaseModel):
    lines: list[str]
    source_id: str = ""


class LineResult(BaseModel):
    cluster_id: Optional[int] = None
    created: bool = False
    empty: bool = False


class LinesOut(BaseModel):
    results: list[LineResult]
    messages_processed: int
    clusters: int


class TemplateRow(BaseModel):
    id: int
    template: str
    count: int
    first_seen: Optional[str] = None
    last_seen: Optional[str] = None


class ResetIn(BaseModel):
    tokenizer: Optional[TokenizerConfigModel] = None
    mining: Optional[MiningConfigModel] = None


class AssignmentRecord(BaseModel):
    cluster_id: int
    msg_ts: Optional[datetime] = None


class AnalyzeIn(BaseModel):
    assignments: list[AssignmentRecord]
    distance_threshold: float = Field(default=0.5, gt=0.0, lt=1.0)
    top_k: int = Field(default=10, ge=1)


class ReportEntry(BaseModel):
    group_cluster: int
    size: int
    first_minute: str
    last_minute: str
    centroid: list[tuple[int, float]]


class AnalyzeOut(BaseModel):
    group_clusters: int
    minutes: int
    skipped_records: int
    frequent: list[ReportEntry]
    unique: list[ReportEntry]
