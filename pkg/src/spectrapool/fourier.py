"""Sparse discrete Fourier transforms of decision-tree classifiers.

A tree over nominal attributes is a total function f: X -> {0, 1}.  Its
transform is the coefficient map

    w_j = (1/|X|) * sum_x f(x) * psi_j(x),
    psi_j(x) = prod_m exp(2*pi*i * j_m * x_m / card_m),

indexed by partitions j (digit tuples of the same shape as instances).  The
inverse  f(x) = sum_j w_j * conj(psi_j(x))  recovers the tree exactly.  Trees
with few leaves have few nonzero coefficients, all confined to the partitions
whose nonzero digits sit on attributes the tree actually splits on, so the
transform is stored sparsely: a dict from digit tuple to complex, plus the
attribute set that bounds the support.
"""

from __future__ import annotations

import cmath
from itertools import combinations, product

import numpy as np

from .space import EXHAUSTIVE_LIMIT, WILDCARD, AttributeSpace, Schema

# Coefficients at or below this magnitude are treated as zero and never stored.
ZERO_TOL = 1e-12


def partition_order(j) -> int:
    """Number of nonzero digits in a partition index."""
    return sum(1 for v in j if v)


def basis(space: AttributeSpace, j, x) -> complex:
    """psi_j(x), the product character of the partition j at instance x."""
    if len(j) != space.d or len(x) != space.d:
        raise ValueError("partition and instance must have one digit per attribute")
    theta = 0.0
    for m in range(space.d):
        if j[m]:
            theta += j[m] * x[m] / space.cardinalities[m]
    return cmath.exp(2j * cmath.pi * theta)


def basis_sum(space: AttributeSpace, j, schema: Schema) -> complex:
    """Sum of psi_j(x) over every instance x covered by a leaf schema.

    Closed form: any wildcard attribute with a nonzero digit makes the inner
    character sum vanish; otherwise the wildcards contribute their cardinality
    product and the fixed attributes contribute a single character value.
    """
    if len(j) != space.d or len(schema.values) != space.d:
        raise ValueError("partition and schema must have one digit per attribute")
    mult = 1
    theta = 0.0
    for m in range(space.d):
        s = schema.values[m]
        if s == WILDCARD:
            if j[m]:
                return 0j
            mult *= space.cardinalities[m]
        elif j[m]:
            theta += j[m] * s / space.cardinalities[m]
    return mult * cmath.exp(2j * cmath.pi * theta)


class Spectrum:
    """A sparse Fourier coefficient map tied to an attribute space.

    Immutable by convention: nothing in the package mutates a spectrum after
    construction, operations return new instances.  `attr_set` is the sorted
    tuple of attribute indices allowed to carry nonzero digits; it may be
    wider than the support actually used (expansion widens it so spectra from
    different trees can be aggregated term by term).
    """

    __slots__ = ("space", "attr_set", "coeffs", "energy_threshold")

    def __init__(self, space, coeffs, attr_set, energy_threshold=1.0):
        attr_set = tuple(sorted(int(m) for m in attr_set))
        for m in attr_set:
            if not 0 <= m < space.d:
                raise ValueError(f"attr_set index {m} outside space")
        if len(set(attr_set)) != len(attr_set):
            raise ValueError("attr_set has duplicates")
        if not 0.0 < energy_threshold <= 1.0:
            raise ValueError("energy_threshold must be in (0, 1]")
        allowed = set(attr_set)
        for j, w in coeffs.items():
            if len(j) != space.d:
                raise ValueError("coefficient key length differs from space")
            for m, digit in enumerate(j):
                if not 0 <= digit < space.cardinalities[m]:
                    raise ValueError(f"digit out of range in partition {j}")
                if digit and m not in allowed:
                    raise ValueError(
                        f"partition {j} has a nonzero digit outside attr_set"
                    )
            if abs(w) <= ZERO_TOL:
                raise ValueError("zero-magnitude coefficient must not be stored")
        self.space = space
        self.attr_set = attr_set
        self.coeffs = dict(coeffs)
        self.energy_threshold = float(energy_threshold)

    @classmethod
    def empty(cls, space, attr_set=(), energy_threshold=1.0):
        return cls(space, {}, attr_set, energy_threshold)

    def __eq__(self, other):
        if not isinstance(other, Spectrum):
            return NotImplemented
        return (
            self.space == other.space
            and self.attr_set == other.attr_set
            and self.energy_threshold == other.energy_threshold
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        return (
            f"Spectrum(d={self.space.d}, attrs={self.attr_set}, "
            f"{len(self.coeffs)} coefficients)"
        )

    def canonical_items(self):
        """Coefficients sorted by (order, digit tuple); the on-disk order."""
        return sorted(self.coeffs.items(), key=lambda kv: (partition_order(kv[0]), kv[0]))

    def total_energy(self) -> float:
        """Sum of squared coefficient magnitudes, read off as Re(w_0)."""
        zero = (0,) * self.space.d
        w0 = self.coeffs.get(zero)
        return w0.real if w0 is not None else 0.0

    def score(self, x) -> float:
        """Inverse transform at one instance: Re(sum_j w_j * conj(psi_j(x)))."""
        acc = 0j
        for j, w in self.coeffs.items():
            theta = 0.0
            for m in self.attr_set:
                if j[m]:
                    theta += j[m] * x[m] / self.space.cardinalities[m]
            acc += w * cmath.exp(-2j * cmath.pi * theta)
        return acc.real

    def predict(self, x) -> int:
        return 1 if self.score(x) >= 0.5 else 0

    def scores_all(self) -> np.ndarray:
        """Inverse transform at every code of the space (small spaces only)."""
        digits = self.space.digit_matrix()
        acc = np.zeros(self.space.size, dtype=np.complex128)
        for j, w in self.coeffs.items():
            theta = np.zeros(self.space.size)
            for m in self.attr_set:
                if j[m]:
                    theta = theta + digits[:, m] * (j[m] / self.space.cardinalities[m])
            acc += w * np.exp(-2j * np.pi * theta)
        return acc.real

    def memory_bytes(self) -> int:
        # 16 bytes per complex value, d digit bytes per key, 64 fixed overhead
        return len(self.coeffs) * (16 + self.space.d) + 64

    def to_text(self) -> str:
        return spectrum_to_text(self)


def _digit_strings(space: AttributeSpace):
    compact = max(space.cardinalities) <= 10

    def fmt(j):
        if compact:
            return "".join(str(v) for v in j)
        return ".".join(str(v) for v in j)

    def parse(s):
        if compact:
            return tuple(int(c) for c in s)
        return tuple(int(p) for p in s.split("."))

    return fmt, parse


def spectrum_to_text(s: Spectrum) -> str:
    """Serialize to line-oriented text; identical spectra give identical text."""
    fmt, _ = _digit_strings(s.space)
    lines = ["spectrum v1", f"d {s.space.d}"]
    for name, card in zip(s.space.names, s.space.cardinalities):
        lines.append(f"attr {card} {name}")
    lines.append("attr_set " + ",".join(str(m) for m in s.attr_set))
    lines.append("energy_threshold %.17g" % s.energy_threshold)
    items = s.canonical_items()
    lines.append(f"coeffs {len(items)}")
    for j, w in items:
        lines.append("%s %.17g %.17g" % (fmt(j), w.real, w.imag))
    return "\n".join(lines) + "\n"


def spectrum_from_text(text: str) -> Spectrum:
    """Parse `spectrum_to_text` output; raises ValueError on malformed input."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0

    def take(prefix):
        nonlocal pos
        if pos >= len(lines):
            raise ValueError(f"truncated spectrum text, expected '{prefix}'")
        ln = lines[pos]
        if not ln.startswith(prefix):
            raise ValueError(f"line {pos + 1}: expected '{prefix}', got '{ln}'")
        pos += 1
        return ln[len(prefix):].strip()

    if take("spectrum") != "v1":
        raise ValueError("unsupported spectrum format version")
    d = int(take("d"))
    if d < 1:
        raise ValueError("d must be positive")
    cards, names = [], []
    for _ in range(d):
        body = take("attr ")
        card, _, name = body.partition(" ")
        cards.append(int(card))
        names.append(name)
    space = AttributeSpace(cards, names)
    aset_body = take("attr_set")
    attr_set = tuple(int(t) for t in aset_body.split(",")) if aset_body else ()
    et = float(take("energy_threshold"))
    count = int(take("coeffs"))
    _, parse = _digit_strings(space)
    coeffs = {}
    for _ in range(count):
        if pos >= len(lines):
            raise ValueError("truncated spectrum text in coefficient block")
        parts = lines[pos].split()
        pos += 1
        if len(parts) != 3:
            raise ValueError(f"line {pos}: malformed coefficient line")
        j = parse(parts[0])
        coeffs[j] = complex(float(parts[1]), float(parts[2]))
    if pos != len(lines):
        raise ValueError("trailing content after coefficient block")
    return Spectrum(space, coeffs, attr_set, et)


def _partition_rows(space, attr_set, order):
    """All partitions with exactly `order` nonzero digits inside attr_set.

    Returned as full-length digit tuples, sorted, plus a float matrix of
    j_m / card_m phase factors restricted to attr_set columns.
    """
    a = len(attr_set)
    rows = []
    for cols in combinations(range(a), order):
        ranges = [range(1, space.cardinalities[attr_set[c]]) for c in cols]
        for digits in product(*ranges):
            full = [0] * space.d
            for c, v in zip(cols, digits):
                full[attr_set[c]] = v
            rows.append(tuple(full))
    rows.sort()
    return rows


def dft_from_tree(tree, space: AttributeSpace, energy_threshold: float = 1.0) -> Spectrum:
    """Transform a tree classifier into a thresholded sparse spectrum.

    Coefficients are produced order by order (0 nonzero digits, then 1, ...)
    and the walk stops at the first order whose cumulative energy reaches
    energy_threshold times the total, so high orders of a heavily thresholded
    tree are never materialized.  Accepts a tree exposing `paths()` or a bare
    iterable of Schema.
    """
    if not 0.0 < energy_threshold <= 1.0:
        raise ValueError("energy_threshold must be in (0, 1]")
    paths = list(tree.paths()) if hasattr(tree, "paths") else list(tree)
    if not paths:
        raise ValueError("tree has no leaves")
    active = []
    attrs = set()
    for p in paths:
        if p.label not in (0, 1):
            raise ValueError(f"tree leaf label {p.label!r} is not in {{0, 1}}")
        attrs.update(p.fixed_attrs())
        if p.label:
            active.append(p)
    attr_set = tuple(sorted(attrs))
    total = sum(p.weight(space) for p in active)
    if total <= ZERO_TOL:
        return Spectrum(space, {}, attr_set, energy_threshold)

    # Precompute per-path fixed digits restricted to attr_set columns.
    prepared = []
    for p in active:
        fixed_cols, phases = [], []
        wild_cols = []
        for c, m in enumerate(attr_set):
            v = p.values[m]
            if v == WILDCARD:
                wild_cols.append(c)
            else:
                fixed_cols.append(c)
                phases.append(v / space.cardinalities[m])
        prepared.append((p.weight(space), wild_cols, fixed_cols, np.array(phases)))

    target = energy_threshold * total
    coeffs = {}
    cum = 0.0
    binary = all(c == 2 for c in space.cardinalities)
    for order in range(len(attr_set) + 1):
        rows = _partition_rows(space, attr_set, order)
        if len(rows) > EXHAUSTIVE_LIMIT:
            raise ValueError("attribute set too large to encode at this threshold")
        jmat = np.array([[r[m] for m in attr_set] for r in rows], dtype=np.float64)
        jmat = jmat.reshape(len(rows), len(attr_set))
        acc = np.zeros(len(rows), dtype=np.complex128)
        for weight, wild_cols, fixed_cols, phases in prepared:
            if wild_cols:
                live = ~np.any(jmat[:, wild_cols], axis=1)
            else:
                live = np.ones(len(rows), dtype=bool)
            theta = jmat[:, fixed_cols] @ phases if fixed_cols else 0.0
            term = weight * np.exp(2j * np.pi * theta)
            acc += np.where(live, term, 0j)
        if binary:
            assert np.all(np.abs(acc.imag) < 1e-12), "binary spectra must be real"
        for row, w in zip(rows, acc):
            mag2 = w.real * w.real + w.imag * w.imag
            if mag2 > ZERO_TOL * ZERO_TOL:
                coeffs[row] = complex(w)
                cum += mag2
        if cum >= target:
            break
    return Spectrum(space, coeffs, attr_set, energy_threshold)


def dft_brute_force(f, space: AttributeSpace, partitions=None):
    """Reference transform by direct summation over the whole space.

    `f` is either a callable on value tuples or a sequence indexed by code.
    Returns the dense coefficient map over every partition, or just the ones
    requested via `partitions`.  Quadratic in the space size when dense; meant
    as an oracle for small spaces, and refuses spaces above the enumeration
    limit outright.
    """
    if space.size > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"space too large for brute-force transform ({space.size} codes)"
        )
    digits = space.digit_matrix()
    if callable(f):
        fvals = np.array([f(tuple(row)) for row in digits], dtype=np.float64)
    else:
        fvals = np.asarray(f, dtype=np.float64)
        if fvals.shape != (space.size,):
            raise ValueError("f must have one value per code")
    if not np.all(np.isfinite(fvals)):
        raise ValueError("f produced non-finite values")
    inv_cards = 1.0 / np.asarray(space.cardinalities, dtype=np.float64)
    n = float(space.size)
    if partitions is None:
        partitions = (tuple(row) for row in digits)
    out = {}
    for j in partitions:
        j = tuple(int(v) for v in j)
        if len(j) != space.d:
            raise ValueError("partition length differs from space")
        jv = np.asarray(j, dtype=np.float64) * inv_cards
        theta = digits @ jv
        out[j] = complex(np.sum(fvals * np.exp(2j * np.pi * theta)) / n)
    return out


def total_energy(spectrum_or_coeffs) -> float:
    """For 0/1 labels the total spectral energy equals Re(w_0)."""
    if isinstance(spectrum_or_coeffs, Spectrum):
        return spectrum_or_coeffs.total_energy()
    coeffs = spectrum_or_coeffs
    if not coeffs:
        return 0.0
    d = len(next(iter(coeffs)))
    return complex(coeffs.get((0,) * d, 0j)).real


def energy_threshold(coeffs, fraction: float):
    """Retain whole ascending orders until their energy reaches the target.

    Takes a plain coefficient map, returns the retained sub-map.  Orders are
    kept as a prefix 0..O where O is the smallest order whose cumulative
    energy is at least `fraction` times the total energy Re(w_0); near-zero
    entries are dropped first and never count.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    live = {j: complex(w) for j, w in coeffs.items() if abs(w) > ZERO_TOL}
    if not live:
        return {}
    total = total_energy(live)
    if total <= ZERO_TOL:
        return {}
    target = fraction * total
    by_order = {}
    for j, w in live.items():
        by_order.setdefault(partition_order(j), []).append((j, w))
    out = {}
    cum = 0.0
    for order in sorted(by_order):
        for j, w in by_order[order]:
            out[j] = w
            cum += w.real * w.real + w.imag * w.imag
        if cum >= target:
            break
    return out


def inverse_classify(spectrum: Spectrum, x) -> float:
    """Real-valued score of one instance under the inverse transform."""
    if len(x) != spectrum.space.d:
        raise ValueError("instance length differs from space")
    return spectrum.score(x)


def expand_spectrum(spectrum: Spectrum, attr_set) -> Spectrum:
    """Re-home a spectrum on a superset attribute set; coefficients unchanged."""
    wider = tuple(sorted(int(m) for m in attr_set))
    if not set(wider) >= set(spectrum.attr_set):
        raise ValueError("expanded attr_set must contain the current one")
    return Spectrum(spectrum.space, spectrum.coeffs, wider, spectrum.energy_threshold)


def aggregate(target: Spectrum, addition: Spectrum, weight: float) -> Spectrum:
    """Pointwise weighted sum: target + weight * addition.

    Both spectra must sit on the same space and the same attr_set (expand
    first).  Terms that cancel to zero magnitude are dropped from the result.
    """
    if target.space != addition.space:
        raise ValueError("spectra live on different spaces")
    if target.attr_set != addition.attr_set:
        raise ValueError("spectra must share an attr_set; expand first")
    if weight < 0:
        raise ValueError("aggregation weight must be nonnegative")
    merged = dict(target.coeffs)
    for j, w in addition.coeffs.items():
        nv = merged.get(j, 0j) + weight * w
        if abs(nv) <= ZERO_TOL:
            merged.pop(j, None)
        else:
            merged[j] = nv
    return Spectrum(target.space, merged, target.attr_set, target.energy_threshold)
