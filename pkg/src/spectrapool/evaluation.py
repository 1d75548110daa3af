"""Prequential evaluation, run reports, config files, and sweeps.

One run is a strict test-then-train loop: every record is scored by the
engine's current classifier before it updates anything.  The stream is cut
into equal segments (default 10) for the per-segment accuracy profile; pool
memory is sampled every 1,000 instances using the fixed accounting formula
(16 bytes per coefficient + d digit bytes + 64 bytes per entry).

Wall-clock throughput is measured on every run and printed by the CLI, but
the report CSV cell stays empty unless the config asks for `timing = on`:
reports are byte-reproducible for fixed config and seed, and a timing number
would break that.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field

import numpy as np

from .pool import ConceptPoolEngine, PoolConfig
from .space import CODE_CACHE_LIMIT
from .streams import Stream

MEMORY_SAMPLE_EVERY = 1000


@dataclass
class EvalOptions:
    segments: int = 10
    timing: bool = False

    def __post_init__(self):
        if self.segments < 1:
            raise ValueError("segments must be at least 1")


@dataclass
class RunReport:
    config: PoolConfig
    segments: int
    n_records: int
    segment_accuracy: list
    overall_accuracy: float
    accuracy_std: float
    avg_pool_memory_kb: float
    reuse_count: int
    drift_count: int
    instances_per_sec: float | None = None
    status: str = "ok"
    name: str = ""

    def to_dict(self) -> dict:
        d = {
            "status": self.status,
            "name": self.name,
            "segments": self.segments,
            "n_records": self.n_records,
            "segment_accuracy": list(self.segment_accuracy),
            "overall_accuracy": self.overall_accuracy,
            "accuracy_std": self.accuracy_std,
            "avg_pool_memory_kb": self.avg_pool_memory_kb,
            "reuse_count": self.reuse_count,
            "drift_count": self.drift_count,
            "instances_per_sec": self.instances_per_sec,
        }
        for f in (
            "variant", "pool_size", "energy_threshold", "tie_threshold", "alpha",
            "detector", "drift_significance", "seed", "node_budget",
        ):
            d[f] = getattr(self.config, f)
        return d


def pool_memory_kb(pool) -> float:
    """Model-based pool footprint in KB; accepts an engine or an entry list."""
    entries = pool.pool if isinstance(pool, ConceptPoolEngine) else pool
    total = sum(e.spectrum.memory_bytes() for e in entries)
    return total / 1024.0


def segment_bounds(n: int, segments: int):
    """Split n records into `segments` nearly equal contiguous spans."""
    base, extra = divmod(n, segments)
    bounds = []
    start = 0
    for s in range(segments):
        size = base + (1 if s < extra else 0)
        bounds.append((start, start + size))
        start += size
    return bounds


def prequential_run(config: PoolConfig, stream: Stream,
                    options: EvalOptions | None = None) -> RunReport:
    """Run one engine over one stream and collect the report."""
    opts = options or EvalOptions()
    n = len(stream)
    if n == 0:
        raise ValueError("stream is empty")
    engine = ConceptPoolEngine(stream.space, config)
    labels = stream.labels.tolist()
    correct = np.zeros(n, dtype=np.int8)
    mem_samples = []
    t0 = time.perf_counter()
    if stream.space.size <= CODE_CACHE_LIMIT:
        codes = stream.codes().tolist()
        step = engine.step_code
        for i in range(n):
            y = labels[i]
            if step(codes[i], y) == y:
                correct[i] = 1
            if engine.n_seen % MEMORY_SAMPLE_EVERY == 0:
                mem_samples.append(engine.pool_memory_bytes())
    else:
        rows = [tuple(int(v) for v in row) for row in stream.values]
        step = engine.step
        for i in range(n):
            y = labels[i]
            if step(rows[i], y) == y:
                correct[i] = 1
            if engine.n_seen % MEMORY_SAMPLE_EVERY == 0:
                mem_samples.append(engine.pool_memory_bytes())
    elapsed = time.perf_counter() - t0
    if not mem_samples:
        mem_samples.append(engine.pool_memory_bytes())

    seg_acc = []
    for lo, hi in segment_bounds(n, opts.segments):
        span = hi - lo
        seg_acc.append(float(correct[lo:hi].sum()) / span if span else 0.0)
    overall = float(correct.sum()) / n
    std = float(np.std(np.asarray(seg_acc))) if seg_acc else 0.0
    return RunReport(
        config=config,
        segments=opts.segments,
        n_records=n,
        segment_accuracy=seg_acc,
        overall_accuracy=overall,
        accuracy_std=std,
        avg_pool_memory_kb=(sum(mem_samples) / len(mem_samples)) / 1024.0,
        reuse_count=engine.reuse_count,
        drift_count=engine.drift_count,
        instances_per_sec=(n / elapsed) if opts.timing and elapsed > 0 else None,
    )


# -------------------------------------------------------------- config files

CONFIG_EXTRA_KEYS = ("segments", "timing", "stream", "schedule")


def parse_config(text: str):
    """Parse a `key = value` config file into (PoolConfig, EvalOptions, extras).

    Engine keys go to PoolConfig; `segments` and `timing` shape the
    evaluation; `stream`/`schedule` name the input and are returned raw for
    the caller to resolve.
    """
    engine_items = {}
    extras = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {ln}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in CONFIG_EXTRA_KEYS:
            extras[key] = val
        else:
            engine_items[key] = val
    config = PoolConfig.from_mapping(engine_items)
    opts = EvalOptions(
        segments=int(extras.pop("segments", 10)),
        timing=extras.pop("timing", "off").lower() in ("on", "true", "1", "yes"),
    )
    return config, opts, extras


# --------------------------------------------------------------- report CSV

FIXED_COLUMNS = (
    "status", "name", "variant", "pool_size", "energy_threshold",
    "tie_threshold", "alpha", "detector", "drift_significance", "seed",
    "node_budget", "segments", "n_records", "overall_accuracy",
    "accuracy_std", "avg_pool_memory_kb", "reuse_count", "drift_count",
    "instances_per_sec",
)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        # shortest exact decimal, so rows survive a JSON hop byte-identically
        return repr(float(v))
    return str(v)


def report_csv(reports) -> str:
    """Fixed-order CSV, one row per run; identical runs give identical bytes."""
    import csv as _csv

    reports = list(reports)
    max_seg = max((r.segments for r in reports), default=0)
    header = list(FIXED_COLUMNS) + [f"seg_{i + 1}" for i in range(max_seg)]
    out = io.StringIO()
    writer = _csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for r in reports:
        d = r.to_dict()
        row = [_fmt(d.get(c)) for c in FIXED_COLUMNS]
        segs = list(r.segment_accuracy) + [None] * (max_seg - len(r.segment_accuracy))
        row += [_fmt(s) for s in segs]
        writer.writerow(row)
    return out.getvalue()


@dataclass
class SweepJob:
    name: str
    config: PoolConfig
    options: EvalOptions
    stream: Stream


def sweep(jobs) -> list:
    """Run each job in order; a failed run becomes a failed row, not a crash."""
    jobs = list(jobs)
    if not jobs:
        raise ValueError("sweep needs at least one config")
    reports = []
    for job in jobs:
        try:
            rep = prequential_run(job.config, job.stream, job.options)
            rep.name = job.name
            reports.append(rep)
        except Exception as exc:  # noqa: BLE001 - failed rows must not stop the sweep
            reports.append(RunReport(
                config=job.config,
                segments=job.options.segments,
                n_records=len(job.stream) if job.stream is not None else 0,
                segment_accuracy=[],
                overall_accuracy=0.0,
                accuracy_std=0.0,
                avg_pool_memory_kb=0.0,
                reuse_count=0,
                drift_count=0,
                status=f"failed: {exc}",
                name=job.name,
            ))
    return reports
