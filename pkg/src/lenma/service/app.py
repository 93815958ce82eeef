"""FastAPI application wrapping one shared TemplateMiner.

All mutation goes through a single lock; the miner itself is not
thread-safe and uvicorn may run handlers from multiple threads.
"""

from __future__ import annotations

import threading
from typing import Optional

from fastapi import Body, FastAPI, HTTPException

from ..analyze import cluster_groups, group_by_minute, report_patterns
from ..core import MiningConfig, TemplateMiner
from ..state import StateError, miner_from_doc, snapshot_doc, template_rows
from ..tokenizer import EmptyMessage, TokenizerConfig
from .schemas import (AnalyzeIn, AnalyzeOut, ConfigOut, LineResult, LinesIn,
                      LinesOut, MiningConfigModel, ResetIn, StatsOut,
                      TemplateRow, TokenizerConfigModel)


def _config_out(miner: TemplateMiner) -> ConfigOut:
    tk = miner.tokenizer_config
    mc = miner.mining_config
    return ConfigOut(
        tokenizer=TokenizerConfigModel(
            header_mode=tk.header_mode,
            skip_count=tk.skip_count,
            delimiter_chars=tk.delimiter_chars,
            drop_punct_tokens=tk.drop_punct_tokens,
        ),
        mining=MiningConfigModel(
            cluster_threshold=mc.cluster_threshold,
            position_threshold=mc.position_threshold,
            short_message_policy=mc.short_message_policy,
        ),
    )


def create_app(miner: Optional[TemplateMiner] = None) -> FastAPI:
    """Build the service around an existing session (or a default one)."""
    if miner is None:
        miner = TemplateMiner(TokenizerConfig(), MiningConfig())
    app = FastAPI(title="lenma")
    lock = threading.Lock()
    app.state.miner = miner
    app.state.lock = lock

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/config", response_model=ConfigOut)
    def get_config() -> ConfigOut:
        with lock:
            return _config_out(app.state.miner)

    @app.get("/stats", response_model=StatsOut)
    def get_stats() -> StatsOut:
        with lock:
            m = app.state.miner
            return StatsOut(
                messages_processed=m.messages_processed,
                header_parse_failures=m.header_parse_failures,
                clusters=len(m.index),
            )

    @app.post("/lines", response_model=LinesOut)
    def post_lines(body: LinesIn) -> LinesOut:
        results = []
        with lock:
            m = app.state.miner
            for line in body.lines:
                try:
                    cluster_id, created = m.add_line(line, body.source_id)
                except EmptyMessage:
                    results.append(LineResult(empty=True))
                    continue
                results.append(LineResult(cluster_id=cluster_id, created=created))
            return LinesOut(
                results=results,
                messages_processed=m.messages_processed,
                clusters=len(m.index),
            )

    @app.get("/templates", response_model=list[TemplateRow])
    def get_templates() -> list[TemplateRow]:
        with lock:
            return [TemplateRow(**row)
                    for row in template_rows(app.state.miner.index)]

    @app.get("/state")
    def get_state() -> dict:
        with lock:
            return snapshot_doc(app.state.miner)

    @app.put("/state")
    def put_state(doc: dict = Body(...)) -> dict:
        try:
            restored = miner_from_doc(doc)
        except StateError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        with lock:
            app.state.miner = restored
            return {"clusters": len(restored.index),
                    "messages_processed": restored.messages_processed}

    @app.post("/reset")
    def reset(body: ResetIn) -> dict:
        try:
            tk = (TokenizerConfig(**body.tokenizer.model_dump())
                  if body.tokenizer else TokenizerConfig())
            mc = (MiningConfig(**body.mining.model_dump())
                  if body.mining else MiningConfig())
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        with lock:
            app.state.miner = TemplateMiner(tk, mc)
            return {"status": "reset"}

    @app.post("/analyze", response_model=AnalyzeOut)
    def analyze(body: AnalyzeIn) -> AnalyzeOut:
        counters: dict[str, int] = {}
        groups = group_by_minute(
            ((r.cluster_id, r.msg_ts) for r in body.assignments), counters)
        gcs = cluster_groups(groups, body.distance_threshold)
        report = report_patterns(gcs, body.top_k)
        return AnalyzeOut(
            group_clusters=report["group_clusters"],
            minutes=report["minutes"],
            skipped_records=counters.get("missing_timestamp", 0),
            frequent=report["frequent"],
            unique=report["unique"],
        )

    return app


app = create_app()
