"""Concept pool engine: capture, reuse, and aggregation of tree spectra.

The engine runs a forest of incremental trees plus a bounded pool of frozen
spectra, each classifier paired with its own drift detector.  Every labeled
instance is classified by everything, detectors see the 0/1 errors, and the
forest keeps learning.  The emitted prediction always comes from the current
best classifier, where "best" is re-evaluated every instance from the
detectors' accuracy estimates (ties prefer forest trees, then the lowest
index), so a classifier holds the floor only while its estimate stays on top.
Only the best classifier's own detector can signal drift; at a drift point
the engine may encode the best tree into the pool.

Variants:

* ``fct``: every captured spectrum is inserted as its own pool entry.
* ``ep``: a captured spectrum merges into the structurally nearest entry
  (disagreement rate at most alpha) or is inserted as new.
* ``epa``: like ep but nearness is measured by detector accuracy gap.
* ``cbdt``: the bare forest baseline, no pool at all.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, fields

from .drift import make_detector
from .fourier import Spectrum, aggregate, dft_from_tree, expand_spectrum
from .space import CODE_CACHE_LIMIT, AttributeSpace
from .trees import HoeffdingForest

VARIANTS = ("fct", "ep", "epa", "cbdt")

# observations a fresh pool entry's detector must see before its accuracy
# estimate can compete for the floor; one block of the sequential detector
_MIN_EVIDENCE = 200

# estimate gaps this small are within detector noise, so they count as ties,
# and ties keep the floor with the forest (the learner that still adapts)
_TIE_EPS = 0.005


@dataclass
class PoolConfig:
    variant: str = "ep"
    pool_size: int = 10
    energy_threshold: float = 0.95
    tie_threshold: float = 0.01
    alpha: float = 0.1
    seed: int = 0
    detector: str = "block-seq"
    drift_significance: float = 0.01
    node_budget: int = 5000
    split_confidence: float = 1e-7
    grace_period: int = 200
    tie_delta: float = 0.05

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r} (choose from {VARIANTS})")
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        if not 0.0 < self.energy_threshold <= 1.0:
            raise ValueError("energy_threshold must be in (0, 1]")
        if self.tie_threshold < 0:
            raise ValueError("tie_threshold must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 < self.drift_significance < 1.0:
            raise ValueError("drift_significance must be in (0, 1)")

    @classmethod
    def from_mapping(cls, mapping):
        """Build from string-keyed config items, coercing value types."""
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in mapping.items():
            if key not in types:
                raise ValueError(f"unknown engine config key {key!r}")
            t = types[key]
            if t == "int":
                kwargs[key] = int(raw)
            elif t == "float":
                kwargs[key] = float(raw)
            else:
                kwargs[key] = str(raw)
        return cls(**kwargs)


class PoolEntry:
    """One frozen ensemble entry: a weighted spectrum sum plus its counters."""

    __slots__ = ("spectrum", "weight_sum", "detector", "usage", "created_seq",
                 "disagree", "pred_cache")

    def __init__(self, spectrum: Spectrum, weight_sum: float, detector, created_seq: int):
        self.spectrum = spectrum
        self.weight_sum = weight_sum
        self.detector = detector
        self.usage = 0
        self.created_seq = created_seq
        self.disagree = 0
        self.pred_cache = None

    def rebuild_cache(self):
        if self.spectrum.space.size <= CODE_CACHE_LIMIT:
            scores = self.spectrum.scores_all()
            self.pred_cache = (scores >= 0.5 * self.weight_sum).astype("int8").tolist()

    def predict(self, values) -> int:
        # ensemble vote: normalized score >= 0.5, ties predict 1
        return 1 if self.spectrum.score(values) >= 0.5 * self.weight_sum else 0


class ConceptPoolEngine:
    """Prequential stream classifier with a reusable pool of tree spectra."""

    def __init__(self, space: AttributeSpace, config: PoolConfig | None = None):
        self.space = space
        self.cfg = config or PoolConfig()
        cfg = self.cfg
        self.forest = HoeffdingForest(
            space,
            node_budget=cfg.node_budget,
            split_confidence=cfg.split_confidence,
            grace_period=cfg.grace_period,
            tie_delta=cfg.tie_delta,
        )
        self.tree_dets = [make_detector(cfg.detector, cfg.drift_significance)
                          for _ in range(space.d)]
        self.pool: list[PoolEntry] = []
        self._seq = 0
        # before any evidence arrives the floor goes to a seeded random tree
        self.cur_is_tree = True
        self.cur_idx = random.Random(cfg.seed).randrange(space.d)
        self.n_seen = 0
        self.n_since_drift = 0
        self.drift_count = 0
        self.reuse_count = 0
        self._small = space.size <= CODE_CACHE_LIMIT

    # ------------------------------------------------------------------ step

    def step(self, values, label: int) -> int:
        """Classify one instance, then learn from it.  Returns the emitted
        prediction (made before the label is consumed)."""
        if not self.space.validate_values(values):
            raise ValueError(f"instance {values!r} is outside the space")
        if label not in (0, 1):
            raise ValueError(f"label {label!r} is not in {{0, 1}}")
        if self._small:
            return self.step_code(self.space.encode(values), label)
        return self._step_general(values, label)

    def _step_general(self, values, label: int) -> int:
        tree_preds = self.forest.classify_each(values)
        entry_preds = [e.predict(values) for e in self.pool]
        return self._consume(tree_preds, entry_preds, values, label, None)

    def step_code(self, code: int, label: int) -> int:
        """Integer-code fast path; only valid on cacheable spaces."""
        tree_preds = [t.pred[t.leaf_map[code]] for t in self.forest.trees]
        entry_preds = [e.pred_cache[code] for e in self.pool]
        return self._consume(tree_preds, entry_preds, None, label, code)

    def _consume(self, tree_preds, entry_preds, values, label, code) -> int:
        # re-evaluate the floor from the detectors' estimates before this
        # instance touches them; ties keep trees ahead of entries, then the
        # lowest index wins
        dets = self.tree_dets
        if self.n_seen == 0:
            best_tree, best_tree_acc = self.cur_idx, 0.5
        else:
            best_tree, best_tree_acc = 0, dets[0].accuracy()
            for i in range(1, len(dets)):
                a = dets[i].accuracy()
                if a > best_tree_acc:
                    best_tree, best_tree_acc = i, a
        cur_is_tree, cur_idx, cur_acc = True, best_tree, best_tree_acc
        if self.cfg.variant != "cbdt":
            bar = best_tree_acc + _TIE_EPS
            for k, e in enumerate(self.pool):
                det = e.detector
                if det.n < _MIN_EVIDENCE:
                    continue  # freshly planted, estimate still unstable
                a = det.accuracy()
                if a > bar and a > cur_acc:
                    cur_is_tree, cur_idx, cur_acc = False, k, a
        if cur_is_tree:
            emit = tree_preds[cur_idx]
        else:
            # model reuse is reported per instance a stored spectrum answers
            self.reuse_count += 1
            emit = entry_preds[cur_idx]
        self.cur_is_tree, self.cur_idx = cur_is_tree, cur_idx

        drift = False
        for i, p in enumerate(tree_preds):
            fired = dets[i].add(1 if p != label else 0)
            if fired and cur_is_tree and i == cur_idx:
                drift = True
        for k, e in enumerate(self.pool):
            fired = e.detector.add(1 if entry_preds[k] != label else 0)
            if fired and not cur_is_tree and k == cur_idx:
                drift = True

        self.n_since_drift += 1
        if self.pool:
            # entries track disagreement with the would-be capture source,
            # the best tree of the moment
            ct = tree_preds[best_tree]
            for e2, p2 in zip(self.pool, entry_preds):
                if p2 != ct:
                    e2.disagree += 1

        # in code mode every tree dispatches on the code; values stay unused
        self.forest.learn(values, label, code, trusted=True)
        self.n_seen += 1
        if drift:
            self._handle_drift()
        return emit

    # ----------------------------------------------------------- drift logic

    def _handle_drift(self):
        cfg = self.cfg
        self.drift_count += 1
        if cfg.variant != "cbdt" and self.cur_is_tree:
            # the firing detector has just purged its window, so its live
            # accuracy reflects the crash that triggered the alarm; the
            # snapshot taken before the purge is the tree's record on the
            # concept that ended, which is what the capture decision needs
            acc_c = self.tree_dets[self.cur_idx].pre_drift_accuracy
            best_entry = self._best_entry_idx()
            encode = (
                best_entry is None
                or acc_c - self.pool[best_entry].detector.accuracy() > cfg.tie_threshold
            )
            if encode:
                fstar = dft_from_tree(
                    self.forest.trees[self.cur_idx], self.space, cfg.energy_threshold
                )
                if not self._is_duplicate(fstar):
                    self._merge_or_insert(fstar, acc_c)
        # the next instance re-evaluates the floor from the purged estimates;
        # the usage counter books which entry the drift point handed it to
        is_tree, idx = self._best_classifier()
        if not is_tree:
            self.pool[idx].usage += 1
        self.n_since_drift = 0
        for e in self.pool:
            e.disagree = 0

    def _best_classifier(self):
        """Post-drift argmax across trees and warm entries, trees first."""
        dets = self.tree_dets
        idx, acc = 0, dets[0].accuracy()
        for i in range(1, len(dets)):
            a = dets[i].accuracy()
            if a > acc:
                idx, acc = i, a
        is_tree = True
        bar = acc + _TIE_EPS
        if self.cfg.variant != "cbdt":
            for k, e in enumerate(self.pool):
                if e.detector.n < _MIN_EVIDENCE:
                    continue
                a = e.detector.accuracy()
                if a > bar and a > acc:
                    is_tree, idx, acc = False, k, a
        return is_tree, idx

    def _best_entry_idx(self):
        best, best_acc = None, -1.0
        for k, e in enumerate(self.pool):
            if e.detector.n < _MIN_EVIDENCE:
                continue  # estimate not yet trustworthy
            acc = e.detector.accuracy()
            if acc > best_acc:
                best, best_acc = k, acc
        return best

    def _is_duplicate(self, fstar: Spectrum) -> bool:
        # exact coefficient equality after thresholding, compared in product
        # form (entry stores weight_sum * coefficient) so a re-encoded
        # identical tree matches the entry it originally seeded bit for bit;
        # near misses fall through to the normal merge/insert dispatch
        fc = fstar.coeffs
        for e in self.pool:
            ec = e.spectrum.coeffs
            if len(ec) != len(fc):
                continue
            w = e.weight_sum
            if all(ec.get(j) == w * v for j, v in fc.items()):
                return True
        return False

    def structural_distance(self, entry_idx: int) -> float:
        """Fraction of instances since the last drift point where the entry
        disagreed with the current tree; 1.0 when nothing was observed."""
        e = self.pool[entry_idx]
        if self.n_since_drift == 0:
            return 1.0
        return e.disagree / self.n_since_drift

    def _merge_or_insert(self, fstar: Spectrum, acc: float):
        cfg = self.cfg
        weight = max(acc, 1e-9)  # keep weight_sum strictly positive
        target = None
        if self.pool and cfg.variant == "ep":
            dists = [self.structural_distance(k) for k in range(len(self.pool))]
            k = min(range(len(self.pool)), key=lambda i: (dists[i], i))
            if dists[k] <= cfg.alpha:
                target = k
        elif self.pool and cfg.variant == "epa":
            gaps = [abs(e.detector.accuracy() - acc) for e in self.pool]
            k = min(range(len(self.pool)), key=lambda i: (gaps[i], i))
            if gaps[k] <= cfg.tie_threshold:
                target = k
        if target is not None:
            self._merge(self.pool[target], fstar, weight)
        else:
            self._insert(fstar, weight)

    def _merge(self, entry: PoolEntry, fstar: Spectrum, weight: float):
        union = tuple(sorted(set(entry.spectrum.attr_set) | set(fstar.attr_set)))
        entry.spectrum = aggregate(
            expand_spectrum(entry.spectrum, union),
            expand_spectrum(fstar, union),
            weight,
        )
        entry.weight_sum += weight
        entry.rebuild_cache()

    def _insert(self, fstar: Spectrum, weight: float):
        if len(self.pool) >= self.cfg.pool_size:
            victim = min(
                range(len(self.pool)),
                key=lambda k: (self.pool[k].usage, self.pool[k].created_seq),
            )
            self.pool.pop(victim)
            if not self.cur_is_tree:
                # the floor is re-evaluated next instance; keep the index sane
                if self.cur_idx == victim:
                    self.cur_is_tree, self.cur_idx = True, 0
                elif self.cur_idx > victim:
                    self.cur_idx -= 1
        scaled = aggregate(
            Spectrum.empty(self.space, fstar.attr_set, fstar.energy_threshold),
            fstar,
            weight,
        )
        entry = PoolEntry(
            scaled, weight,
            make_detector(self.cfg.detector, self.cfg.drift_significance),
            self._seq,
        )
        self._seq += 1
        entry.rebuild_cache()
        self.pool.append(entry)

    # ------------------------------------------------------------- reporting

    def current_classifier(self) -> str:
        kind = "tree" if self.cur_is_tree else "entry"
        return f"{kind}:{self.cur_idx}"

    def pool_memory_bytes(self) -> int:
        return sum(e.spectrum.memory_bytes() for e in self.pool)

    def snapshot(self) -> dict:
        return {
            "n_seen": self.n_seen,
            "drift_count": self.drift_count,
            "reuse_count": self.reuse_count,
            "pool_entries": len(self.pool),
            "pool_memory_bytes": self.pool_memory_bytes(),
            "current": self.current_classifier(),
            "forest_nodes": self.forest.node_count(),
            "rejects": self.forest.rejects,
        }

    def dump_pool(self) -> str:
        """Serialized pool: per-entry counters plus the spectrum text."""
        lines = [f"pool variant={self.cfg.variant} entries={len(self.pool)}"]
        for k, e in enumerate(self.pool):
            lines.append(
                "entry %d weight_sum=%.17g usage=%d created=%d"
                % (k, e.weight_sum, e.usage, e.created_seq)
            )
            lines.append(e.spectrum.to_text().rstrip("\n"))
        return "\n".join(lines) + "\n"
