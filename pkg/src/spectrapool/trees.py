"""Incrementally grown decision forests over nominal attributes.

The forest holds one tree per attribute, each pre-split at the root on its
attribute, all drawing on a shared node budget.  Leaves accumulate class
counts plus a per-instance histogram; every `grace_period` instances a leaf
re-ranks its candidate attributes by information gain and splits when the
Hoeffding bound separates the two best candidates (or declares them tied).

On spaces small enough to enumerate, each tree keeps a code-indexed leaf map
so classification and learning dispatch in O(1) instead of walking the tree.
"""

from __future__ import annotations

import math

import numpy as np

from .space import CODE_CACHE_LIMIT, WILDCARD, AttributeSpace, Schema, entropy2

LEAF = -1

# Gains below this are noise; a split must clear it to be considered at all.
MIN_GAIN = 1e-12


def _row_entropies(cc: np.ndarray) -> np.ndarray:
    """Binary entropy of each (n0, n1) row, zeros for empty or pure rows."""
    n = cc.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, cc[:, 0] / np.maximum(n, 1), 0.0)
        q = 1.0 - p
        h = -(np.where(p > 0, p * np.log2(np.maximum(p, 1e-300)), 0.0)
              + np.where(q > 0, q * np.log2(np.maximum(q, 1e-300)), 0.0))
    return np.where(n > 0, h, 0.0)


class HoeffdingTree:
    """One incrementally grown n-ary tree, rooted on a fixed attribute."""

    def __init__(self, space: AttributeSpace, root_attr: int, forest: "HoeffdingForest"):
        self.space = space
        self.forest = forest
        self.root_attr = root_attr
        self.split_attr = [root_attr]
        self.children = [None]
        self.counts = [None]
        self.pred = [0]
        self.cands = [None]
        self.hist = [None]
        self.since_eval = [0]
        rest = tuple(m for m in range(space.d) if m != root_attr)
        kids = []
        for _ in range(space.cardinalities[root_attr]):
            kids.append(self._new_leaf(0, rest))
        self.children[0] = kids
        self.leaf_map = None
        self.leaf_codes = None
        if space.size <= CODE_CACHE_LIMIT:
            codes = np.arange(space.size, dtype=np.int64)
            col = (codes // space.strides[root_attr]) % space.cardinalities[root_attr]
            self.leaf_map = [0] * space.size
            self.leaf_codes = {}
            for v, kid in enumerate(kids):
                sub = codes[col == v]
                self.leaf_codes[kid] = sub
                for c in sub.tolist():
                    self.leaf_map[c] = kid

    def _new_leaf(self, pred: int, cands: tuple) -> int:
        self.split_attr.append(LEAF)
        self.children.append(None)
        self.counts.append([0, 0])
        self.pred.append(pred)
        self.cands.append(cands)
        self.hist.append({} if cands else None)
        self.since_eval.append(0)
        return len(self.split_attr) - 1

    def node_count(self) -> int:
        return len(self.split_attr)

    def _leaf_for(self, values) -> int:
        node = 0
        split = self.split_attr
        kids = self.children
        while split[node] != LEAF:
            node = kids[node][values[split[node]]]
        return node

    def classify(self, values) -> int:
        return self.pred[self._leaf_for(values)]

    def classify_code(self, code: int) -> int:
        return self.pred[self.leaf_map[code]]

    def learn(self, values, label: int, code=None):
        if code is not None and self.leaf_map is not None:
            leaf = self.leaf_map[code]
        else:
            leaf = self._leaf_for(values)
        c = self.counts[leaf]
        c[label] += 1
        self.pred[leaf] = 1 if c[1] > c[0] else 0
        if self.forest.frozen or not self.cands[leaf]:
            return
        h = self.hist[leaf]
        key = code if code is not None else tuple(values)
        e = h.get(key)
        if e is None:
            h[key] = [1, 0] if label == 0 else [0, 1]
        else:
            e[label] += 1
        n = self.since_eval[leaf] + 1
        if n >= self.forest.grace_period:
            self.since_eval[leaf] = 0
            self._attempt_split(leaf)
        else:
            self.since_eval[leaf] = n

    def _attempt_split(self, leaf: int):
        n0, n1 = self.counts[leaf]
        if n0 == 0 or n1 == 0:
            return
        forest = self.forest
        remaining = forest.node_budget - forest.node_count()
        afford = [m for m in self.cands[leaf]
                  if self.space.cardinalities[m] <= remaining]
        if not afford:
            return
        h = self.hist[leaf]
        keys = list(h.keys())
        cnt = np.array([h[k] for k in keys], dtype=np.float64)
        if isinstance(keys[0], tuple):
            digits = np.asarray(keys, dtype=np.int64)
        else:
            digits = self.space.decode_array(np.asarray(keys, dtype=np.int64))
        hn = cnt.sum()
        h_parent = entropy2(int(cnt[:, 0].sum()), int(cnt[:, 1].sum()))
        best_g, second_g, best_m = -1.0, 0.0, -1
        for m in afford:
            card = self.space.cardinalities[m]
            cc = np.zeros((card, 2))
            np.add.at(cc, digits[:, m], cnt)
            child_n = cc.sum(axis=1)
            h_children = float((child_n / hn) @ _row_entropies(cc))
            g = h_parent - h_children
            if g > best_g:
                best_g, second_g, best_m = g, best_g, m
            elif g > second_g:
                second_g = g
        if best_g <= MIN_GAIN:
            return
        eps = math.sqrt(math.log(1.0 / forest.split_confidence) / (2.0 * hn))
        if best_g - second_g > eps or eps < forest.tie_delta:
            self._split(leaf, best_m)

    def _split(self, leaf: int, attr: int):
        space = self.space
        card = space.cardinalities[attr]
        rest = tuple(m for m in self.cands[leaf] if m != attr)
        parent_pred = self.pred[leaf]
        kids = [self._new_leaf(parent_pred, rest) for _ in range(card)]
        self.split_attr[leaf] = attr
        self.children[leaf] = kids
        self.counts[leaf] = None
        self.hist[leaf] = None
        self.cands[leaf] = None
        self.forest._node_count += card
        if self.leaf_map is not None:
            codes = self.leaf_codes.pop(leaf)
            col = (codes // space.strides[attr]) % card
            lm = self.leaf_map
            for v, kid in enumerate(kids):
                sub = codes[col == v]
                self.leaf_codes[kid] = sub
                for c in sub.tolist():
                    lm[c] = kid

    def paths(self):
        """Root-to-leaf schemata with majority labels, in child order."""
        out = []
        fixed = [WILDCARD] * self.space.d

        def walk(node):
            attr = self.split_attr[node]
            if attr == LEAF:
                out.append(Schema(tuple(fixed), self.pred[node]))
                return
            for v, kid in enumerate(self.children[node]):
                fixed[attr] = v
                walk(kid)
            fixed[attr] = WILDCARD

        walk(0)
        return out

    def depth(self) -> int:
        def walk(node):
            if self.split_attr[node] == LEAF:
                return 0
            return 1 + max(walk(k) for k in self.children[node])

        return walk(0)

    def dump(self) -> str:
        """Human-readable rendering; layout is not a stability contract."""
        lines = [f"tree root={self.space.names[self.root_attr]} nodes={self.node_count()}"]

        def walk(node, indent):
            attr = self.split_attr[node]
            pad = "  " * indent
            if attr == LEAF:
                n0, n1 = self.counts[node]
                lines.append(f"{pad}leaf pred={self.pred[node]} counts=({n0},{n1})")
                return
            for v, kid in enumerate(self.children[node]):
                lines.append(f"{pad}{self.space.names[attr]} = {v}:")
                walk(kid, indent + 1)

        walk(0, 0)
        return "\n".join(lines)


class HoeffdingForest:
    """One tree per attribute under a shared node budget."""

    def __init__(self, space: AttributeSpace, node_budget: int = 5000,
                 split_confidence: float = 1e-7, grace_period: int = 200,
                 tie_delta: float = 0.05):
        floor = space.d + sum(space.cardinalities)
        if node_budget < floor:
            raise ValueError(
                f"node budget {node_budget} cannot seed one rooted tree per "
                f"attribute (needs at least {floor})"
            )
        if not 0.0 < split_confidence < 1.0:
            raise ValueError("split_confidence must be in (0, 1)")
        if grace_period < 1:
            raise ValueError("grace_period must be positive")
        self.space = space
        self.node_budget = node_budget
        self.split_confidence = split_confidence
        self.grace_period = grace_period
        self.tie_delta = tie_delta
        self._node_count = 0
        self.rejects = 0
        self.trees = []
        self._min_card = min(space.cardinalities)
        for m in range(space.d):
            self.trees.append(HoeffdingTree(space, m, self))
            self._node_count += 1 + space.cardinalities[m]

    def node_count(self) -> int:
        return self._node_count

    @property
    def frozen(self) -> bool:
        return self.node_budget - self._node_count < self._min_card

    def learn(self, values, label: int, code=None, trusted: bool = False) -> bool:
        """Route one labeled instance to every tree.

        Returns False (and counts a reject) for out-of-range records unless
        the caller vouches for them with trusted=True.
        """
        if not trusted:
            if label not in (0, 1) or not self.space.validate_values(values):
                self.rejects += 1
                return False
        for t in self.trees:
            t.learn(values, label, code)
        return True

    def classify_each(self, values) -> list:
        return [t.classify(values) for t in self.trees]

    def classify_each_code(self, code: int) -> list:
        return [t.classify_code(code) for t in self.trees]
