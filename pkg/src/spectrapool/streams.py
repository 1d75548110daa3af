"""Stream synthesis and tabular ingestion.

The synthetic generator rotates through hyperplane concepts on a discrete
attribute space: each concept id owns a weight vector and threshold drawn
from its own seeded generator, so a concept that recurs later in the
schedule labels instances exactly the same way.  Attribute values are drawn
directly as uniform integer codes and the hyperplane is evaluated on those
codes; label noise flips each label independently.

Loaders ingest CSV (header row) and a plain ARFF subset, mapping nominal
values to dense codes and equal-width binning numeric columns.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .space import AttributeSpace

log = logging.getLogger(__name__)


@dataclass
class Stream:
    """Materialized record sequence over one attribute space."""

    space: AttributeSpace
    values: np.ndarray          # (n, d) integer codes
    labels: np.ndarray          # (n,) bits
    concept_ids: np.ndarray | None = None
    skipped: int = 0
    _codes: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.labels)

    def codes(self) -> np.ndarray:
        if self._codes is None:
            self._codes = self.space.encode_array(self.values)
        return self._codes


@dataclass
class ConceptSchedule:
    """Segment plan plus the knobs that pin the generator down."""

    segments: list          # ordered (concept_id, length) pairs
    noise_rate: float = 0.1
    seed: int = 0
    n_attrs: int = 10
    cardinality: int = 2

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        for cid, length in self.segments:
            if length <= 0:
                raise ValueError(f"segment length must be positive, got {length}")
            if cid < 0:
                raise ValueError("concept ids must be nonnegative")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must be in [0, 1)")
        if self.n_attrs < 1 or self.cardinality < 2:
            raise ValueError("need n_attrs >= 1 and cardinality >= 2")

    @classmethod
    def from_text(cls, text: str) -> "ConceptSchedule":
        """Parse the schedule file format: `concept_id,length` lines plus
        `key = value` lines for noise_rate/seed/n_attrs/cardinality."""
        segments = []
        keys = {}
        for ln, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, val = line.partition("=")
                key = key.strip()
                if key not in ("noise_rate", "seed", "n_attrs", "cardinality"):
                    raise ValueError(f"line {ln}: unknown schedule key {key!r}")
                keys[key] = val.strip()
            elif "," in line:
                cid, _, length = line.partition(",")
                segments.append((int(cid), int(length)))
            else:
                raise ValueError(f"line {ln}: expected 'concept_id,length' or 'key = value'")
        kwargs = {}
        if "noise_rate" in keys:
            kwargs["noise_rate"] = float(keys["noise_rate"])
        for k in ("seed", "n_attrs", "cardinality"):
            if k in keys:
                kwargs[k] = int(keys[k])
        return cls(segments, **kwargs)

    def to_text(self) -> str:
        lines = [
            f"noise_rate = {self.noise_rate}",
            f"seed = {self.seed}",
            f"n_attrs = {self.n_attrs}",
            f"cardinality = {self.cardinality}",
        ]
        lines += [f"{cid},{length}" for cid, length in self.segments]
        return "\n".join(lines) + "\n"

    def space(self) -> AttributeSpace:
        return AttributeSpace([self.cardinality] * self.n_attrs)

    def concept_params(self, concept_id: int):
        """Weights and threshold for one concept, fixed by (seed, id).

        The threshold is the median weighted sum over a seeded sample, so
        labels come out roughly balanced whatever the weights are.
        """
        rng = np.random.default_rng([self.seed, concept_id])
        w = rng.uniform(-1.0, 1.0, self.n_attrs)
        probe = rng.integers(0, self.cardinality, size=(10000, self.n_attrs))
        theta = float(np.median(probe @ w))
        return w, theta


def hyperplane_stream(schedule: ConceptSchedule, space: AttributeSpace | None = None) -> Stream:
    """Materialize the scheduled segments into one labeled stream."""
    if space is None:
        space = schedule.space()
    elif space.cardinalities != (schedule.cardinality,) * schedule.n_attrs:
        raise ValueError("space does not match the schedule's attribute plan")
    rng = np.random.default_rng([schedule.seed])
    params = {}
    chunks, label_chunks, cid_chunks = [], [], []
    for cid, length in schedule.segments:
        if cid not in params:
            params[cid] = schedule.concept_params(cid)
        w, theta = params[cid]
        x = rng.integers(0, schedule.cardinality,
                         size=(length, schedule.n_attrs), dtype=np.int64)
        y = (x @ w >= theta).astype(np.int64)
        if schedule.noise_rate > 0:
            flips = rng.random(length) < schedule.noise_rate
            y ^= flips.astype(np.int64)
        chunks.append(x)
        label_chunks.append(y)
        cid_chunks.append(np.full(length, cid, dtype=np.int64))
    return Stream(
        space,
        np.concatenate(chunks),
        np.concatenate(label_chunks),
        np.concatenate(cid_chunks),
    )


# ---------------------------------------------------------------- stream CSV

def stream_to_csv(stream: Stream) -> str:
    """Render a stream as CSV: one attribute column per name plus `class`."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(stream.space.names) + ["class"])
    for row, y in zip(stream.values, stream.labels):
        writer.writerow([int(v) for v in row] + [int(y)])
    return buf.getvalue()


def save_stream_csv(stream: Stream, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(stream_to_csv(stream))


def load_stream_csv(path_or_file, class_column: str = "class") -> Stream:
    """Load a CSV of native integer codes (the `stream_to_csv` format).

    Every attribute cell must already be a code in [0, cardinality); the
    cardinality of each column is inferred as max+1 (at least 2).  Use
    `load_csv` instead for external tabular data that needs discretization.
    """
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValueError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if class_column not in header:
        raise ValueError(f"class column {class_column!r} not in header {header}")
    class_idx = header.index(class_column)
    attr_idx = [i for i in range(len(header)) if i != class_idx]
    if not rows[1:]:
        raise ValueError("CSV has a header but no data rows")
    try:
        body = np.array([[int(c) for c in r] for r in rows[1:]], dtype=np.int64)
    except ValueError as exc:
        raise ValueError(f"non-integer cell in code CSV: {exc}") from None
    if body.shape[1] != len(header):
        raise ValueError("ragged CSV body")
    values = body[:, attr_idx]
    labels = body[:, class_idx]
    if values.min() < 0:
        raise ValueError("negative attribute code")
    if not set(np.unique(labels)) <= {0, 1}:
        raise ValueError("class column must be 0/1")
    cards = np.maximum(values.max(axis=0) + 1, 2).tolist()
    space = AttributeSpace(cards, [header[i] for i in attr_idx])
    return Stream(space, values, labels)


def load_csv(path_or_file, class_column: str = "class", bins: int = 2) -> Stream:
    """Load a labeled CSV into a stream, inferring an attribute space.

    Nominal columns map to dense codes in first-appearance order; numeric
    columns are equal-width binned into `bins` bins with min/max taken from
    a first pass.  Unparseable rows are skipped and counted.
    """
    if bins < 2:
        raise ValueError("bins must be at least 2")
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ValueError("empty CSV")
    header = [h.strip() for h in rows[0]]
    if class_column not in header:
        raise ValueError(f"class column {class_column!r} not in header {header}")
    class_idx = header.index(class_column)
    attr_names = [h for i, h in enumerate(header) if i != class_idx]
    attr_idx = [i for i in range(len(header)) if i != class_idx]
    body = rows[1:]
    if not body:
        raise ValueError("CSV has a header but no data rows")

    skipped = 0
    kept = []
    for r in body:
        if len(r) != len(header):
            skipped += 1
            continue
        kept.append([cell.strip() for cell in r])
    if not kept:
        raise ValueError("every CSV row was skipped")

    # first pass: column typing and ranges
    numeric = []
    for i in attr_idx:
        try:
            for r in kept:
                float(r[i])
            numeric.append(True)
        except ValueError:
            numeric.append(False)
    lo = {}
    hi = {}
    nominal_codes = [dict() for _ in attr_idx]
    for pos, i in enumerate(attr_idx):
        if numeric[pos]:
            vals = [float(r[i]) for r in kept]
            lo[pos], hi[pos] = min(vals), max(vals)

    class_map = {}
    values = []
    labels = []
    for r in kept:
        raw_y = r[class_idx]
        if raw_y not in class_map:
            if raw_y in ("0", "1") and set(class_map.values()) <= {0, 1}:
                class_map[raw_y] = int(raw_y)
            else:
                if len(class_map) >= 2:
                    raise ValueError(
                        f"class column has more than two values: {raw_y!r}"
                    )
                class_map[raw_y] = len(class_map)
        y = class_map[raw_y]
        row_vals = []
        for pos, i in enumerate(attr_idx):
            cell = r[i]
            if numeric[pos]:
                v = float(cell)
                width = hi[pos] - lo[pos]
                if width <= 0:
                    code = 0
                else:
                    code = min(int((v - lo[pos]) / width * bins), bins - 1)
            else:
                codes = nominal_codes[pos]
                if cell not in codes:
                    codes[cell] = len(codes)
                code = codes[cell]
            row_vals.append(code)
        values.append(row_vals)
        labels.append(y)

    cards = []
    for pos in range(len(attr_idx)):
        if numeric[pos]:
            cards.append(bins)
        else:
            cards.append(max(len(nominal_codes[pos]), 2))
    space = AttributeSpace(cards, attr_names)
    if skipped:
        log.warning("load_csv skipped %d malformed rows", skipped)
    return Stream(
        space,
        np.array(values, dtype=np.int64).reshape(len(values), len(attr_idx)),
        np.array(labels, dtype=np.int64),
        skipped=skipped,
    )


def load_arff(path_or_file, class_column: str = "class", bins: int = 2) -> Stream:
    """Load the plain ARFF subset: nominal value lists, numeric columns,
    dense `@data` body.  Nominal codes follow the declared value order."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file, "r", encoding="utf-8") as fh:
            text = fh.read()
    names = []
    kinds = []      # ("nominal", [values]) or ("numeric", None)
    data_lines = []
    in_data = False
    for raw in text.splitlines():
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if in_data:
            data_lines.append(line)
        elif low.startswith("@attribute"):
            rest = line[len("@attribute"):].strip()
            if "{" in rest:
                name, _, tail = rest.partition("{")
                vals = [v.strip() for v in tail.rstrip("}").split(",")]
                names.append(name.strip().strip("'\""))
                kinds.append(("nominal", vals))
            else:
                parts = rest.split()
                if len(parts) < 2 or parts[-1].lower() not in ("numeric", "real", "integer"):
                    raise ValueError(f"unsupported ARFF attribute: {line}")
                names.append(" ".join(parts[:-1]).strip("'\""))
                kinds.append(("numeric", None))
        elif low.startswith("@data"):
            in_data = True
        elif low.startswith("@relation"):
            continue
        else:
            raise ValueError(f"unsupported ARFF construct: {line}")
    if not in_data:
        raise ValueError("ARFF file has no @data section")
    if class_column not in names:
        raise ValueError(f"class attribute {class_column!r} not declared")
    header = ",".join(names)
    body = "\n".join(data_lines)
    csv_text = header + "\n" + body

    # reuse the CSV path for parsing, then re-map nominal columns to the
    # declared ARFF order instead of first-appearance order
    stream = load_csv(io.StringIO(csv_text), class_column=class_column, bins=bins)
    class_i = names.index(class_column)
    attr_kinds = [k for i, k in enumerate(kinds) if i != class_i]
    rows = list(csv.reader(io.StringIO(body)))
    rows = [r for r in rows if len(r) == len(names)]
    cards = []
    cols = []
    for pos, (kind, vals) in enumerate(attr_kinds):
        src = [i for i in range(len(names)) if i != class_i][pos]
        if kind == "nominal":
            mapping = {v: c for c, v in enumerate(vals)}
            cols.append([mapping[r[src].strip()] for r in rows])
            cards.append(max(len(vals), 2))
        else:
            cols.append([int(v) for v in stream.values[:, pos]])
            cards.append(stream.space.cardinalities[pos])
    space = AttributeSpace(cards, [n for i, n in enumerate(names) if i != class_i])
    values = np.array(cols, dtype=np.int64).T.reshape(len(rows), space.d)
    return Stream(space, values, stream.labels, skipped=stream.skipped)


def moving_average_label(series, window: int):
    """Label each step 1 when the windowed mean rises, else 0.

    The mean at step t covers the last `window` values ending at t; early
    steps fall back to the prefix mean.  The first label is 0 (nothing to
    compare against).
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    vals = [float(v) for v in series]
    if len(vals) < 2:
        raise ValueError("series must have at least 2 points")
    means = []
    acc = 0.0
    for t, v in enumerate(vals):
        acc += v
        if t >= window:
            acc -= vals[t - window]
            means.append(acc / window)
        else:
            means.append(acc / (t + 1))
    labels = [0]
    for t in range(1, len(vals)):
        labels.append(1 if means[t] > means[t - 1] else 0)
    return labels
