"""Forest behavior: growth, budget, determinism, and path extraction."""

import random

import pytest

from spectrapool.space import WILDCARD, AttributeSpace
from spectrapool.trees import HoeffdingForest


def make_stream(rng, space, concept, n, noise=0.0):
    out = []
    for _ in range(n):
        x = tuple(rng.randrange(c) for c in space.cardinalities)
        y = concept(x)
        if noise and rng.random() < noise:
            y = 1 - y
        out.append((x, y))
    return out


def test_forest_shape_and_budget_floor():
    space = AttributeSpace([2, 3, 2])
    f = HoeffdingForest(space, node_budget=100)
    assert len(f.trees) == 3
    assert [t.root_attr for t in f.trees] == [0, 1, 2]
    # three roots plus one child per attribute value
    assert f.node_count() == 3 + (2 + 3 + 2)
    with pytest.raises(ValueError):
        HoeffdingForest(space, node_budget=0)
    with pytest.raises(ValueError):
        HoeffdingForest(space, node_budget=9)


def test_learns_single_attribute_concept():
    space = AttributeSpace([2] * 5)
    rng = random.Random(42)
    f = HoeffdingForest(space, node_budget=500)
    for x, y in make_stream(rng, space, lambda x: x[3], 4000):
        assert f.learn(x, y)
    # every tree should have picked up the informative attribute
    for t in f.trees:
        hits = 0
        for x, y in make_stream(rng, space, lambda x: x[3], 500):
            hits += t.classify(x) == y
        assert hits >= 490, t.root_attr


def test_paths_partition_the_space_and_match_classify():
    space = AttributeSpace([2, 3, 2, 2])
    rng = random.Random(9)
    f = HoeffdingForest(space, node_budget=300)
    concept = lambda x: 1 if (x[1] >= 1) != (x[0] == 1) else 0
    for x, y in make_stream(rng, space, concept, 6000, noise=0.05):
        f.learn(x, y)
    from itertools import product

    for t in f.trees:
        paths = t.paths()
        for x in product(*[range(c) for c in space.cardinalities]):
            matches = [p for p in paths if p.matches(x)]
            assert len(matches) == 1, (t.root_attr, x)
            assert matches[0].label == t.classify(x)
        # no attribute appears twice along a path
        for p in paths:
            fixed = p.fixed_attrs()
            assert len(fixed) == len(set(fixed))


def test_node_budget_is_never_exceeded():
    space = AttributeSpace([2] * 6)
    rng = random.Random(3)
    budget = 40
    f = HoeffdingForest(space, node_budget=budget)
    concept = lambda x: x[0] ^ x[1] ^ x[2]
    for x, y in make_stream(rng, space, concept, 20000):
        f.learn(x, y)
        assert f.node_count() <= budget
    assert f.frozen


def test_code_dispatch_matches_tuple_dispatch():
    space = AttributeSpace([2, 3, 2])
    rng = random.Random(17)
    f = HoeffdingForest(space, node_budget=200)
    for x, y in make_stream(rng, space, lambda x: int(x[1] == 2), 3000):
        f.learn(x, y, code=space.encode(x))
    for _ in range(200):
        x = tuple(rng.randrange(c) for c in space.cardinalities)
        code = space.encode(x)
        assert f.classify_each(x) == f.classify_each_code(code)


def test_out_of_range_records_rejected():
    space = AttributeSpace([2, 2])
    f = HoeffdingForest(space, node_budget=50)
    before = [t.dump() for t in f.trees]
    assert not f.learn((0, 5), 1)
    assert not f.learn((0, 1), 3)
    assert not f.learn((0,), 1)
    assert f.rejects == 3
    assert [t.dump() for t in f.trees] == before


def test_same_stream_same_forest():
    space = AttributeSpace([2] * 4)

    def build():
        rng = random.Random(7)
        f = HoeffdingForest(space, node_budget=400)
        concept = lambda x: x[2] | (x[0] & x[1])
        for x, y in make_stream(rng, space, concept, 5000, noise=0.1):
            f.learn(x, y)
        return "\n\n".join(t.dump() for t in f.trees)

    assert build() == build()


def test_empty_leaf_predicts_parent_majority():
    space = AttributeSpace([2, 2])
    f = HoeffdingForest(space, node_budget=50)
    # fresh forest: all leaves empty, default prediction 0
    assert f.classify_each((0, 0)) == [0, 0]
    assert f.classify_each((1, 1)) == [0, 0]
