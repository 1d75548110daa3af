"""Engine control flow: capture, merge/insert dispatch, eviction, reuse."""

import numpy as np
import pytest

from spectrapool.evaluation import pool_memory_kb
from spectrapool.fourier import Spectrum, dft_from_tree
from spectrapool.pool import ConceptPoolEngine, PoolConfig
from spectrapool.space import WILDCARD, AttributeSpace, Schema
from spectrapool.streams import ConceptSchedule, hyperplane_stream

TOY_PATHS = [
    Schema((WILDCARD, WILDCARD, 0), 1),
    Schema((0, WILDCARD, 1), 1),
    Schema((1, WILDCARD, 1), 0),
]


def toy_engine(**kw):
    space = AttributeSpace([2, 2, 2])
    kw.setdefault("node_budget", 100)
    return ConceptPoolEngine(space, PoolConfig(**kw)), space


def run_stream(engine, stream):
    codes = stream.codes().tolist()
    labels = stream.labels.tolist()
    hits = 0
    for c, y in zip(codes, labels):
        hits += engine.step_code(c, y) == y
    return hits / len(labels)


def test_config_validation():
    with pytest.raises(ValueError):
        PoolConfig(variant="magic")
    with pytest.raises(ValueError):
        PoolConfig(pool_size=0)
    with pytest.raises(ValueError):
        PoolConfig(energy_threshold=0.0)
    with pytest.raises(ValueError):
        PoolConfig(alpha=2.0)
    with pytest.raises(ValueError):
        PoolConfig.from_mapping({"mystery": "1"})
    cfg = PoolConfig.from_mapping({"variant": "fct", "pool_size": "4", "alpha": "0.2"})
    assert (cfg.variant, cfg.pool_size, cfg.alpha) == ("fct", 4, 0.2)


def test_pool_memory_formula():
    engine, space = toy_engine(variant="fct")
    fstar = dft_from_tree(TOY_PATHS, space)
    assert len(fstar.coeffs) == 4
    engine._insert(fstar, 0.5)
    want = (4 * (16 + 3) + 64) / 1024
    assert pool_memory_kb(engine) == pytest.approx(want)
    assert pool_memory_kb([]) == 0.0


def test_duplicate_detection_is_exact():
    engine, space = toy_engine(variant="fct")
    fstar = dft_from_tree(TOY_PATHS, space)
    engine._insert(fstar, 0.9137)
    assert engine._is_duplicate(fstar)
    bumped = Spectrum(
        space,
        {**fstar.coeffs, (0, 1, 0): 0.125 + 0j},
        (0, 1, 2),
        fstar.energy_threshold,
    )
    assert not engine._is_duplicate(bumped)


def test_eviction_prefers_low_usage_then_age():
    engine, space = toy_engine(variant="fct", pool_size=2)
    a = dft_from_tree([Schema((0, WILDCARD, WILDCARD), 1),
                       Schema((1, WILDCARD, WILDCARD), 0)], space)
    b = dft_from_tree([Schema((WILDCARD, 0, WILDCARD), 1),
                       Schema((WILDCARD, 1, WILDCARD), 0)], space)
    c = dft_from_tree([Schema((WILDCARD, WILDCARD, 0), 1),
                       Schema((WILDCARD, WILDCARD, 1), 0)], space)
    engine._insert(a, 0.5)
    engine._insert(b, 0.5)
    engine.pool[0].usage = 3  # entry a earns selections, b stays unused
    engine._insert(c, 0.5)
    assert len(engine.pool) == 2
    kept = {tuple(sorted(e.spectrum.attr_set)) for e in engine.pool}
    assert kept == {(0,), (2,)}  # b (unused) was evicted

    # age breaks usage ties: a and c both at usage 0 -> a (older) goes
    engine2, _ = toy_engine(variant="fct", pool_size=2)
    engine2._insert(a, 0.5)
    engine2._insert(b, 0.5)
    engine2._insert(c, 0.5)
    kept2 = {tuple(sorted(e.spectrum.attr_set)) for e in engine2.pool}
    assert kept2 == {(1,), (2,)}


def test_merge_accumulates_weight_and_stays_normalized():
    engine, space = toy_engine(variant="ep")
    fstar = dft_from_tree(TOY_PATHS, space)
    engine._insert(fstar, 0.8)
    entry = engine.pool[0]
    engine._merge(entry, fstar, 0.6)
    assert entry.weight_sum == pytest.approx(1.4)
    # doubled-up identical spectra normalize back to the original scores
    for code in range(space.size):
        x = space.decode(code)
        assert entry.predict(x) == fstar.predict(x)


def test_ep_merges_close_entries_and_inserts_far_ones():
    engine, space = toy_engine(variant="ep", alpha=0.25)
    fstar = dft_from_tree(TOY_PATHS, space)
    other = dft_from_tree([Schema((WILDCARD, 0, WILDCARD), 1),
                           Schema((WILDCARD, 1, WILDCARD), 0)], space)
    engine._insert(other, 0.5)
    engine.n_since_drift = 100
    engine.pool[0].disagree = 10  # rate 0.1 <= alpha: merge target
    engine._merge_or_insert(fstar, 0.5)
    assert len(engine.pool) == 1
    assert engine.pool[0].weight_sum == pytest.approx(1.0)

    engine.pool[0].disagree = 60  # rate 0.6 > alpha: becomes a new entry
    engine.n_since_drift = 100
    engine._merge_or_insert(fstar, 0.5)
    assert len(engine.pool) == 2


def test_structural_distance_defaults_to_one():
    engine, space = toy_engine(variant="ep")
    engine._insert(dft_from_tree(TOY_PATHS, space), 0.5)
    engine.n_since_drift = 0
    assert engine.structural_distance(0) == 1.0


def test_step_validates_inputs():
    engine, _ = toy_engine()
    with pytest.raises(ValueError):
        engine.step((0, 1), 1)
    with pytest.raises(ValueError):
        engine.step((0, 1, 5), 1)
    with pytest.raises(ValueError):
        engine.step((0, 1, 1), 7)


def recurring_stream(seed=11, seg=1500, concepts=(0, 1, 0, 1, 0)):
    sched = ConceptSchedule(
        [(c, seg) for c in concepts], noise_rate=0.05, seed=seed, n_attrs=6
    )
    return hyperplane_stream(sched)


def lively_config(**kw):
    """Tree/detector settings that learn fast enough for short test streams."""
    kw.setdefault("drift_significance", 0.05)
    kw.setdefault("grace_period", 50)
    kw.setdefault("split_confidence", 0.05)
    kw.setdefault("tie_delta", 0.1)
    return PoolConfig(**kw)


def test_engine_learns_and_reuses_on_recurrence():
    stream = recurring_stream(seg=2500)
    engine = ConceptPoolEngine(stream.space, lively_config(variant="ep", seed=1))
    acc = run_stream(engine, stream)
    assert acc > 0.8, acc
    assert engine.drift_count >= 2
    assert len(engine.pool) >= 1
    assert engine.reuse_count > 0
    snap = engine.snapshot()
    assert snap["n_seen"] == len(stream)
    assert snap["drift_count"] == engine.drift_count


def test_cbdt_never_builds_a_pool():
    stream = recurring_stream()
    engine = ConceptPoolEngine(stream.space, PoolConfig(variant="cbdt"))
    run_stream(engine, stream)
    assert engine.pool == []
    assert engine.reuse_count == 0
    assert engine.current_classifier().startswith("tree:")


def test_variants_run_deterministically():
    stream = recurring_stream(seed=23)
    for variant in ("fct", "ep", "epa"):
        def build():
            engine = ConceptPoolEngine(
                stream.space, PoolConfig(variant=variant, seed=5)
            )
            run_stream(engine, stream)
            return engine.dump_pool(), engine.snapshot()
        d1, s1 = build()
        d2, s2 = build()
        assert d1 == d2, variant
        assert s1 == s2, variant


def test_general_step_path_on_large_space():
    # 2^20 codes: too big for code caches, exercises the tuple path
    space = AttributeSpace([2] * 20)
    engine = ConceptPoolEngine(space, PoolConfig(node_budget=200))
    rng = np.random.default_rng(4)
    x = rng.integers(0, 2, size=(400, 20))
    for row in x:
        vals = tuple(int(v) for v in row)
        engine.step(vals, int(vals[3]))
    assert engine.n_seen == 400


def test_usage_counts_selections_at_drift():
    stream = recurring_stream(seed=31, seg=2500)
    engine = ConceptPoolEngine(stream.space, lively_config(variant="ep", seed=2))
    run_stream(engine, stream)
    # usage books at most one selection per drift point; the reuse count
    # tallies every instance an entry answered, so it dwarfs usage
    total_usage = sum(e.usage for e in engine.pool)
    assert total_usage <= engine.drift_count
    if total_usage:
        assert engine.reuse_count > total_usage


class _FixedDetector:
    """Detector stub with a pinned estimate; never alarms on its own."""

    def __init__(self, acc, n=1000, fire=False):
        self._acc = acc
        self.n = n
        self.fire = fire
        self.pre_drift_accuracy = acc

    def add(self, error):
        return self.fire

    def accuracy(self):
        return self._acc


def primed_engine(entry_acc, entry_n=1000, tree_accs=(0.7, 0.8, 0.75)):
    engine, space = toy_engine(variant="ep")
    engine._insert(dft_from_tree(TOY_PATHS, space), 0.9)
    engine.tree_dets = [_FixedDetector(a) for a in tree_accs]
    engine.pool[0].detector = _FixedDetector(entry_acc, n=entry_n)
    engine.n_seen = 1  # past the cold-start branch
    return engine


def test_floor_needs_margin_over_best_tree():
    # 0.804 is within the tie margin of the best tree (0.8): tree keeps it
    engine = primed_engine(entry_acc=0.804)
    engine.step_code(0, 1)
    assert engine.cur_is_tree and engine.cur_idx == 1

    engine = primed_engine(entry_acc=0.806)
    engine.step_code(0, 1)
    assert not engine.cur_is_tree and engine.cur_idx == 0


def test_fresh_entry_cannot_take_floor_until_warm():
    engine = primed_engine(entry_acc=0.99, entry_n=150)
    engine.step_code(0, 1)
    assert engine.cur_is_tree

    engine = primed_engine(entry_acc=0.99, entry_n=200)
    engine.step_code(0, 1)
    assert not engine.cur_is_tree


def test_only_the_floor_holders_detector_signals_drift():
    # tree 0 alarms constantly but tree 1 holds the floor: no engine drift
    engine = primed_engine(entry_acc=0.5)
    engine.tree_dets[0].fire = True
    engine.step_code(0, 1)
    assert engine.drift_count == 0

    engine = primed_engine(entry_acc=0.5)
    engine.tree_dets[1].fire = True
    engine.step_code(0, 1)
    assert engine.drift_count == 1
