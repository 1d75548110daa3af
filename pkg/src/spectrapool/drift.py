"""Change detectors over 0/1 error streams.

Two interchangeable policies behind one interface:

* ``adwin``: adaptive windowing with an exponential bucket histogram.  The
  window grows while the error rate looks stationary and sheds its oldest
  buckets when two sub-windows differ beyond the delta-controlled bound.
* ``block-seq``: fixed-size blocks tested against a sliding reservoir with a
  Bernstein-style two-sample bound.  Cheap adds, detection decisions only at
  block boundaries.

Both report ``accuracy()`` as one minus the mean of the errors currently in
the window, 0.5 when the window is empty, so a freshly reset detector ranks
as undecided rather than perfect.  When a detector signals drift it also
snapshots ``pre_drift_accuracy``, the estimate its window held just before
shedding: callers that need "how good was this classifier on the regime that
just ended" read that, since ``accuracy()`` right after a drift reflects only
the post-change outcomes.
"""

from __future__ import annotations

import math
from collections import deque

# adwin internals
_MAX_BUCKETS = 5
_CHECK_CLOCK = 32
_MIN_WIDTH = 10
_MIN_SUB = 5

# block-seq internals
BLOCK_SIZE = 200
RESERVOIR_CAP = 5000


class AdwinDetector:
    """Adaptive windowing over a Bernoulli error stream."""

    __slots__ = ("delta", "rows", "total", "width", "_ticks", "pre_drift_accuracy")

    def __init__(self, delta: float = 0.01):
        if not 0.0 < delta < 1.0:
            raise ValueError("significance must be in (0, 1)")
        self.delta = delta
        # rows[i] holds bucket sums of size 2^i, newest first
        self.rows = [[]]
        self.total = 0.0
        self.width = 0
        self._ticks = 0
        self.pre_drift_accuracy = 0.5

    def add(self, x: int) -> bool:
        self.rows[0].insert(0, float(x))
        self.total += x
        self.width += 1
        self._compress()
        self._ticks += 1
        if self._ticks >= _CHECK_CLOCK and self.width >= _MIN_WIDTH:
            self._ticks = 0
            return self._shed()
        return False

    def _compress(self):
        i = 0
        while i < len(self.rows) and len(self.rows[i]) > _MAX_BUCKETS:
            if i + 1 == len(self.rows):
                self.rows.append([])
            older = self.rows[i].pop()
            oldest = self.rows[i].pop()
            self.rows[i + 1].insert(0, older + oldest)
            i += 1

    def _shed(self) -> bool:
        before = 1.0 - self.total / self.width
        shrunk = False
        while self.width >= _MIN_WIDTH and self._cut_once():
            shrunk = True
        if shrunk:
            self.pre_drift_accuracy = before
        return shrunk

    def _cut_once(self) -> bool:
        """Test every bucket boundary oldest-first; drop the oldest on a hit."""
        if self.width <= 2 * _MIN_SUB:
            return False
        mean = self.total / self.width
        var = mean * (1.0 - mean)
        dd = math.log(2.0 * math.log(max(self.width, 2)) / self.delta)
        n_old = 0.0
        s_old = 0.0
        for i in range(len(self.rows) - 1, -1, -1):
            size = 1 << i
            for b in range(len(self.rows[i]) - 1, -1, -1):
                n_old += size
                s_old += self.rows[i][b]
                n_new = self.width - n_old
                if n_old < _MIN_SUB or n_new < _MIN_SUB:
                    continue
                m = 1.0 / (n_old - _MIN_SUB + 1) + 1.0 / (n_new - _MIN_SUB + 1)
                eps = math.sqrt(2.0 * m * var * dd) + (2.0 / 3.0) * m * dd
                mu_old = s_old / n_old
                mu_new = (self.total - s_old) / n_new
                if abs(mu_old - mu_new) > eps:
                    self._drop_oldest()
                    return True
        return False

    def _drop_oldest(self):
        for i in range(len(self.rows) - 1, -1, -1):
            if self.rows[i]:
                s = self.rows[i].pop()
                self.total -= s
                self.width -= 1 << i
                return

    @property
    def n(self) -> int:
        return self.width

    def accuracy(self) -> float:
        if self.width == 0:
            return 0.5
        return 1.0 - self.total / self.width

    def reset(self):
        self.rows = [[]]
        self.total = 0.0
        self.width = 0
        self._ticks = 0


class BlockSeqDetector:
    """Block-vs-reservoir two-sample test over a Bernoulli error stream.

    Outcomes accumulate into a working block; at each block boundary the
    block mean is compared to the reservoir mean with a Bernstein bound at
    the configured significance.  The test is two-sided, so the window also
    refreshes when the error rate drops, keeping the accuracy estimate
    current after improvements as well as degradations.
    """

    __slots__ = ("delta", "cur_sum", "cur_n", "blocks", "res_sum", "res_n",
                 "pre_drift_accuracy")

    def __init__(self, delta: float = 0.01):
        if not 0.0 < delta < 1.0:
            raise ValueError("significance must be in (0, 1)")
        self.delta = delta
        self.cur_sum = 0
        self.cur_n = 0
        self.blocks = deque()
        self.res_sum = 0
        self.res_n = 0
        self.pre_drift_accuracy = 0.5

    def add(self, x: int) -> bool:
        self.cur_sum += x
        self.cur_n += 1
        if self.cur_n < BLOCK_SIZE:
            return False
        drift = False
        if self.res_n >= BLOCK_SIZE:
            mu_res = self.res_sum / self.res_n
            mu_cur = self.cur_sum / BLOCK_SIZE
            p = (self.res_sum + self.cur_sum) / (self.res_n + BLOCK_SIZE)
            var = p * (1.0 - p)
            inv = 1.0 / self.res_n + 1.0 / BLOCK_SIZE
            ln_term = math.log(2.0 / self.delta)
            eps = math.sqrt(2.0 * var * ln_term * inv) + (2.0 / 3.0) * ln_term * inv
            drift = abs(mu_cur - mu_res) > eps
        if drift:
            # the reservoir is the regime that just ended; remember how the
            # classifier did on it, then restart from the triggering block
            self.pre_drift_accuracy = 1.0 - self.res_sum / self.res_n
            self.blocks.clear()
            self.res_sum = 0
            self.res_n = 0
        self.blocks.append(self.cur_sum)
        self.res_sum += self.cur_sum
        self.res_n += BLOCK_SIZE
        while self.res_n > RESERVOIR_CAP:
            dropped = self.blocks.popleft()
            self.res_sum -= dropped
            self.res_n -= BLOCK_SIZE
        self.cur_sum = 0
        self.cur_n = 0
        return drift

    @property
    def n(self) -> int:
        return self.res_n + self.cur_n

    def accuracy(self) -> float:
        n = self.res_n + self.cur_n
        if n == 0:
            return 0.5
        return 1.0 - (self.res_sum + self.cur_sum) / n

    def reset(self):
        self.cur_sum = 0
        self.cur_n = 0
        self.blocks.clear()
        self.res_sum = 0
        self.res_n = 0


DETECTOR_KINDS = ("adwin", "block-seq")


def make_detector(kind: str, significance: float = 0.01):
    """Build a detector by config name; unknown names raise ValueError."""
    if kind == "adwin":
        return AdwinDetector(significance)
    if kind == "block-seq":
        return BlockSeqDetector(significance)
    raise ValueError(f"unknown detector kind {kind!r} (choose from {DETECTOR_KINDS})")
