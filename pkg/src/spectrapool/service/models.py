"""Request and response shapes for the HTTP service.

Every endpoint takes file *contents*, never paths: the CLI (or any other
client) reads config/schedule/stream files locally and ships the text, so
the service stays stateless about the filesystem.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class HealthResponse(BaseModel):
    status: str
    version: str


class ScheduleSpec(BaseModel):
    """A concept schedule, either as the text file format or structured."""

    schedule_text: str | None = None
    segments: list[tuple[int, int]] | None = None
    noise_rate: float = 0.1
    seed: int = 0
    n_attrs: int = 10
    cardinality: int = 2

    @model_validator(mode="after")
    def _one_source(self):
        if (self.schedule_text is None) == (self.segments is None):
            raise ValueError("provide exactly one of schedule_text or segments")
        return self


class GenerateRequest(ScheduleSpec):
    include_csv: bool = True


class GenerateResponse(BaseModel):
    n_records: int
    n_attrs: int
    cardinality: int
    csv: str | None = None


class RunRequest(BaseModel):
    """One prequential run: a config plus exactly one stream source."""

    config_text: str
    stream_csv: str | None = None
    schedule: ScheduleSpec | None = None
    name: str = ""

    @model_validator(mode="after")
    def _one_stream(self):
        if (self.stream_csv is None) == (self.schedule is None):
            raise ValueError("provide exactly one of stream_csv or schedule")
        return self


class RunResponse(BaseModel):
    status: str
    name: str
    segments: int
    n_records: int
    segment_accuracy: list[float]
    overall_accuracy: float
    accuracy_std: float
    avg_pool_memory_kb: float
    reuse_count: int
    drift_count: int
    instances_per_sec: float | None = None
    variant: str
    pool_size: int
    energy_threshold: float
    tie_threshold: float
    alpha: float
    detector: str
    drift_significance: float
    seed: int
    node_budget: int


class SweepRequest(BaseModel):
    jobs: list[RunRequest] = Field(min_length=1)


class SweepResponse(BaseModel):
    reports: list[RunResponse]
    csv: str


class SessionCreateRequest(BaseModel):
    cardinalities: list[int] = Field(min_length=1)
    names: list[str] | None = None
    config_text: str = ""


class SessionInfo(BaseModel):
    session_id: str
    n_seen: int
    drift_count: int
    reuse_count: int
    pool_entries: int
    pool_memory_kb: float
    current: str
    forest_nodes: int
    variant: str


class ObserveRequest(BaseModel):
    values: list[int]
    label: int


class ObserveResponse(BaseModel):
    prediction: int
    correct: bool
    drift: bool
    n_seen: int
    current: str


class ObserveBatchRequest(BaseModel):
    values: list[list[int]]
    labels: list[int]

    @model_validator(mode="after")
    def _lengths_match(self):
        if len(self.values) != len(self.labels):
            raise ValueError("values and labels must have the same length")
        return self


class ObserveBatchResponse(BaseModel):
    predictions: list[int]
    hits: int
    n: int
    drift_count: int  # drifts detected inside this batch, not the session total


class PoolEntryInfo(BaseModel):
    index: int
    weight_sum: float
    usage: int
    created_seq: int
    n_coefficients: int
    memory_kb: float


class PoolResponse(BaseModel):
    variant: str
    n_entries: int
    memory_kb: float
    entries: list[PoolEntryInfo]
    dump: str
