"""HTTP face of the engine: one-shot runs, sweeps, and live sessions.

Runs and sweeps are stateless; sessions hold a live engine in memory so a
client can feed labeled records one at a time and watch the pool evolve.
"""

from __future__ import annotations

import io
import threading
import uuid

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..evaluation import (
    RunReport,
    SweepJob,
    parse_config,
    prequential_run,
    report_csv,
    sweep,
)
from ..pool import ConceptPoolEngine, PoolConfig
from ..space import AttributeSpace
from ..streams import ConceptSchedule, Stream, hyperplane_stream, load_stream_csv
from . import models


def _schedule_from_spec(spec: models.ScheduleSpec) -> ConceptSchedule:
    if spec.schedule_text is not None:
        return ConceptSchedule.from_text(spec.schedule_text)
    return ConceptSchedule(
        segments=[tuple(s) for s in spec.segments],
        noise_rate=spec.noise_rate,
        seed=spec.seed,
        n_attrs=spec.n_attrs,
        cardinality=spec.cardinality,
    )


def _resolve_stream(req: models.RunRequest) -> Stream:
    if req.stream_csv is not None:
        return load_stream_csv(io.StringIO(req.stream_csv))
    return hyperplane_stream(_schedule_from_spec(req.schedule))


def _run_response(report) -> models.RunResponse:
    return models.RunResponse(**report.to_dict())


def create_app() -> FastAPI:
    app = FastAPI(title="spectrapool", version=__version__)
    sessions: dict = {}
    lock = threading.Lock()

    def session_or_404(sid: str):
        with lock:
            eng = sessions.get(sid)
        if eng is None:
            raise HTTPException(status_code=404, detail=f"no session {sid!r}")
        return eng

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return models.HealthResponse(status="ok", version=__version__)

    @app.post("/streams/generate", response_model=models.GenerateResponse)
    def generate(req: models.GenerateRequest):
        try:
            sched = _schedule_from_spec(req)
            stream = hyperplane_stream(sched)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        from ..streams import stream_to_csv

        return models.GenerateResponse(
            n_records=len(stream),
            n_attrs=stream.space.d,
            cardinality=max(stream.space.cardinalities),
            csv=stream_to_csv(stream) if req.include_csv else None,
        )

    @app.post("/runs", response_model=models.RunResponse)
    def run(req: models.RunRequest):
        try:
            config, opts, _ = parse_config(req.config_text)
            stream = _resolve_stream(req)
            report = prequential_run(config, stream, opts)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        report.name = req.name
        return _run_response(report)

    @app.post("/sweeps", response_model=models.SweepResponse)
    def run_sweep(req: models.SweepRequest):
        # a job that cannot even be built still yields a failed row, so one
        # bad config never sinks the rest of the sweep
        runnable = []
        failed = {}
        for i, job in enumerate(req.jobs):
            name = job.name or f"job-{i}"
            try:
                config, opts, _ = parse_config(job.config_text)
                stream = _resolve_stream(job)
            except ValueError as exc:
                failed[i] = RunReport(
                    config=PoolConfig(), segments=0, n_records=0,
                    segment_accuracy=[], overall_accuracy=0.0,
                    accuracy_std=0.0, avg_pool_memory_kb=0.0, reuse_count=0,
                    drift_count=0, status=f"failed: {exc}", name=name,
                )
                continue
            runnable.append((i, SweepJob(name, config, opts, stream)))
        done = sweep([j for _, j in runnable]) if runnable else []
        by_pos = dict(failed)
        for (pos, _), rep in zip(runnable, done):
            by_pos[pos] = rep
        reports = [by_pos[i] for i in range(len(req.jobs))]
        return models.SweepResponse(
            reports=[_run_response(r) for r in reports],
            csv=report_csv(reports),
        )

    @app.post("/sessions", response_model=models.SessionInfo)
    def create_session(req: models.SessionCreateRequest):
        try:
            space = AttributeSpace(req.cardinalities, req.names)
            config, _, _ = parse_config(req.config_text)
            engine = ConceptPoolEngine(space, config)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        sid = uuid.uuid4().hex[:12]
        with lock:
            sessions[sid] = engine
        return _session_info(sid, engine)

    def _session_info(sid: str, engine: ConceptPoolEngine) -> models.SessionInfo:
        snap = engine.snapshot()
        return models.SessionInfo(
            session_id=sid,
            n_seen=snap["n_seen"],
            drift_count=snap["drift_count"],
            reuse_count=snap["reuse_count"],
            pool_entries=snap["pool_entries"],
            pool_memory_kb=snap["pool_memory_bytes"] / 1024.0,
            current=snap["current"],
            forest_nodes=snap["forest_nodes"],
            variant=engine.cfg.variant,
        )

    @app.get("/sessions/{sid}", response_model=models.SessionInfo)
    def get_session(sid: str):
        return _session_info(sid, session_or_404(sid))

    @app.post("/sessions/{sid}/observe", response_model=models.ObserveResponse)
    def observe(sid: str, req: models.ObserveRequest):
        engine = session_or_404(sid)
        before = engine.drift_count
        try:
            with lock:
                pred = engine.step(tuple(req.values), req.label)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return models.ObserveResponse(
            prediction=pred,
            correct=pred == req.label,
            drift=engine.drift_count > before,
            n_seen=engine.n_seen,
            current=engine.current_classifier(),
        )

    @app.post("/sessions/{sid}/observe-batch", response_model=models.ObserveBatchResponse)
    def observe_batch(sid: str, req: models.ObserveBatchRequest):
        engine = session_or_404(sid)
        preds = []
        hits = 0
        before = engine.drift_count
        try:
            with lock:
                for row, y in zip(req.values, req.labels):
                    p = engine.step(tuple(row), y)
                    preds.append(p)
                    hits += 1 if p == y else 0
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return models.ObserveBatchResponse(
            predictions=preds, hits=hits, n=len(preds),
            drift_count=engine.drift_count - before,
        )

    @app.get("/sessions/{sid}/pool", response_model=models.PoolResponse)
    def get_pool(sid: str):
        engine = session_or_404(sid)
        entries = [
            models.PoolEntryInfo(
                index=k,
                weight_sum=e.weight_sum,
                usage=e.usage,
                created_seq=e.created_seq,
                n_coefficients=len(e.spectrum.coeffs),
                memory_kb=e.spectrum.memory_bytes() / 1024.0,
            )
            for k, e in enumerate(engine.pool)
        ]
        return models.PoolResponse(
            variant=engine.cfg.variant,
            n_entries=len(entries),
            memory_kb=engine.pool_memory_bytes() / 1024.0,
            entries=entries,
            dump=engine.dump_pool(),
        )

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str):
        with lock:
            if sid not in sessions:
                raise HTTPException(status_code=404, detail=f"no session {sid!r}")
            del sessions[sid]
        return {"deleted": sid}

    return app


app = create_app()
