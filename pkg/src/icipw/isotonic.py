"""Weighted isotonic regression from scratch via pool-adjacent-violators.

Fits are the unique right-continuous (cadlag) piecewise-constant least-squares
solutions with jumps only at observed predictor values.  An optional
minimum-segment-weight constraint greedily merges light segments into the
neighbor costing the least squared-error increase.  Antitonic (nonincreasing)
fits are obtained by reflection, which is exact for squared loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .validation import as_float_vector, check_same_length, freeze

__all__ = [
    "WeightedPoints",
    "StepFunction",
    "BlockFit",
    "pava_blocks",
    "pava_fit",
    "antitonic_fit",
    "step_eval",
    "brute_force_isotonic",
]

_BRUTE_FORCE_LIMIT = 12


@dataclass(frozen=True)
class WeightedPoints:
    """Regression observations (x, y) with positive weights.

    Points need not be sorted; fitting sorts by x and pools exact duplicate
    x values into a single weighted observation.
    """

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray | None = None

    def __post_init__(self):
        x = as_float_vector("x", self.x)
        y = as_float_vector("y", self.y)
        if x.size == 0:
            raise ValidationError("empty input: at least one (x, y) point is required")
        w = np.ones_like(x) if self.w is None else as_float_vector("w", self.w)
        check_same_length(x=x, y=y, w=w)
        if np.any(w <= 0.0):
            raise ValidationError("weights must be strictly positive")
        object.__setattr__(self, "x", freeze(x))
        object.__setattr__(self, "y", freeze(y))
        object.__setattr__(self, "w", freeze(w))

    def __len__(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function with monotone values.

    ``values[k]`` is the value on ``[knots[k], knots[k+1])``; inputs below the
    first knot clamp to ``values[0]`` and inputs at or above the last knot take
    the final value.
    """

    knots: np.ndarray
    values: np.ndarray
    direction: str = "increasing"

    def __post_init__(self):
        knots = as_float_vector("knots", self.knots)
        values = as_float_vector("values", self.values)
        check_same_length(knots=knots, values=values)
        if knots.size == 0:
            raise ValidationError("a step function needs at least one knot")
        if knots.size > 1 and np.any(np.diff(knots) <= 0.0):
            raise ValidationError("knots must be strictly increasing")
        if self.direction not in ("increasing", "decreasing"):
            raise ValidationError(f"unknown direction {self.direction!r}")
        diffs = np.diff(values)
        if self.direction == "increasing" and np.any(diffs < 0.0):
            raise ValidationError("values must be nondecreasing for an increasing fit")
        if self.direction == "decreasing" and np.any(diffs > 0.0):
            raise ValidationError("values must be nonincreasing for a decreasing fit")
        object.__setattr__(self, "knots", freeze(knots))
        object.__setattr__(self, "values", freeze(values))

    @property
    def left_value(self) -> float:
        """Value taken below the first knot (boundary clamp)."""
        return float(self.values[0])

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValidationError("step function evaluated at a non-finite point")
        idx = np.searchsorted(self.knots, arr, side="right") - 1
        idx = np.clip(idx, 0, self.values.size - 1)
        out = self.values[idx]
        if arr.ndim == 0:
            return float(out)
        return out


@dataclass(frozen=True)
class BlockFit:
    """Constant segments of a monotone fit, in increasing-x order.

    ``x_first``/``x_last`` are the smallest and largest observed x in each
    segment, ``value`` the fitted level, ``weight``/``count`` the pooled totals,
    and ``y_weighted_sum`` the pooled sum of w*y (on the original y scale).
    """

    x_first: np.ndarray
    x_last: np.ndarray
    value: np.ndarray
    weight: np.ndarray
    count: np.ndarray
    y_weighted_sum: np.ndarray

    @property
    def n_blocks(self) -> int:
        return self.value.size


def _merge_duplicate_x(x: np.ndarray, y: np.ndarray, w: np.ndarray):
    """Sort by x and pool exact duplicates into weighted means."""
    order = np.argsort(x, kind="stable")
    xs, ys, ws = x[order], y[order], w[order]
    ux, starts = np.unique(xs, return_index=True)
    if ux.size == xs.size:
        return xs, ys, ws, np.ones_like(xs)
    sw = np.add.reduceat(ws, starts)
    swy = np.add.reduceat(ws * ys, starts)
    counts = np.diff(np.append(starts, xs.size)).astype(float)
    return ux, swy / sw, sw, counts


def _pava(y: np.ndarray, w: np.ndarray, counts: np.ndarray):
    """Stack-based weighted PAVA for a nondecreasing fit; linear after the sort.

    Merges on >= so adjacent segments with equal pooled means collapse into a
    single level set.  Returns parallel lists describing the segments.
    """
    m = y.size
    val = [0.0] * m
    sw = [0.0] * m
    swy = [0.0] * m
    cnt = [0.0] * m
    first = [0] * m
    last = [0] * m
    top = -1
    for i in range(m):
        top += 1
        wi = w[i]
        swy_i = wi * y[i]
        val[top] = y[i]
        sw[top] = wi
        swy[top] = swy_i
        cnt[top] = counts[i]
        first[top] = i
        last[top] = i
        while top > 0 and val[top - 1] >= val[top]:
            equal = val[top - 1] == val[top]
            sw[top - 1] += sw[top]
            swy[top - 1] += swy[top]
            cnt[top - 1] += cnt[top]
            last[top - 1] = last[top]
            if not equal:
                # Pooling blocks with equal means keeps the mean exactly;
                # recomputing it would round and break idempotence.
                val[top - 1] = swy[top - 1] / sw[top - 1]
            top -= 1
    k = top + 1
    return val[:k], sw[:k], swy[:k], cnt[:k], first[:k], last[:k]


def _sse_increase(w_a: float, v_a: float, w_b: float, v_b: float) -> float:
    """Squared-error increase from pooling two segments with given means."""
    return w_a * w_b / (w_a + w_b) * (v_a - v_b) ** 2


def _enforce_min_segment(val, sw, swy, cnt, first, last, min_weight: float):
    """Merge segments lighter than ``min_weight`` into the cheaper neighbor.

    Repeatedly takes the leftmost underweight segment and pools it with the
    adjacent segment minimizing the squared-error increase (ties merge left).
    Stops once all segments meet the threshold or one segment remains.
    """
    while len(val) > 1:
        idx = next((i for i, s in enumerate(sw) if s < min_weight), None)
        if idx is None:
            break
        left_cost = _sse_increase(sw[idx - 1], val[idx - 1], sw[idx], val[idx]) if idx > 0 else np.inf
        right_cost = (
            _sse_increase(sw[idx], val[idx], sw[idx + 1], val[idx + 1])
            if idx < len(val) - 1
            else np.inf
        )
        j = idx - 1 if left_cost <= right_cost else idx + 1
        a, b = min(idx, j), max(idx, j)
        sw[a] += sw[b]
        swy[a] += swy[b]
        cnt[a] += cnt[b]
        last[a] = last[b]
        val[a] = swy[a] / sw[a]
        for seq in (val, sw, swy, cnt, first, last):
            del seq[b]
    return val, sw, swy, cnt, first, last


def _canonicalize(val, sw, swy, cnt, first, last):
    """Pool adjacent segments whose fitted values became exactly equal."""
    i = 0
    while i < len(val) - 1:
        if val[i] == val[i + 1]:
            sw[i] += sw[i + 1]
            swy[i] += swy[i + 1]
            cnt[i] += cnt[i + 1]
            last[i] = last[i + 1]
            for seq in (val, sw, swy, cnt, first, last):
                del seq[i + 1]
        else:
            i += 1
    return val, sw, swy, cnt, first, last


def pava_blocks(
    points: WeightedPoints, min_segment_weight: float = 0.0, increasing: bool = True
) -> BlockFit:
    """Fit a monotone step function and return its constant segments.

    Ties in x are pooled into weighted means before fitting.  With
    ``min_segment_weight > 0``, underweight segments are merged greedily by
    squared-error increase.  ``increasing=False`` fits a nonincreasing function
    by reflecting y, which is exact for squared loss.
    """
    if min_segment_weight < 0.0:
        raise ValidationError("min_segment_weight must be nonnegative")
    x, y, w, counts = _merge_duplicate_x(points.x, points.y, points.w)
    y_fit = y if increasing else -y
    val, sw, swy, cnt, first, last = _pava(y_fit, w, counts)
    if min_segment_weight > 0.0:
        val, sw, swy, cnt, first, last = _enforce_min_segment(
            val, sw, swy, cnt, first, last, min_segment_weight
        )
    val, sw, swy, cnt, first, last = _canonicalize(val, sw, swy, cnt, first, last)
    value = np.asarray(val)
    swy_arr = np.asarray(swy)
    if not increasing:
        value = -value
        swy_arr = -swy_arr
    return BlockFit(
        x_first=freeze(x[np.asarray(first, dtype=np.intp)]),
        x_last=freeze(x[np.asarray(last, dtype=np.intp)]),
        value=freeze(value),
        weight=freeze(np.asarray(sw)),
        count=freeze(np.asarray(cnt)),
        y_weighted_sum=freeze(swy_arr),
    )


def step_from_blocks(blocks: BlockFit, direction: str = "increasing") -> StepFunction:
    """Build the cadlag step function with one knot per segment start."""
    return StepFunction(knots=blocks.x_first.copy(), values=blocks.value.copy(), direction=direction)


def pava_fit(points: WeightedPoints, min_segment_weight: float = 0.0) -> StepFunction:
    """Weighted least-squares isotonic (nondecreasing) fit as a step function."""
    return step_from_blocks(pava_blocks(points, min_segment_weight, increasing=True), "increasing")


def antitonic_fit(points: WeightedPoints, min_segment_weight: float = 0.0) -> StepFunction:
    """Weighted least-squares antitonic (nonincreasing) fit as a step function."""
    return step_from_blocks(pava_blocks(points, min_segment_weight, increasing=False), "decreasing")


def step_eval(f: StepFunction, x):
    """Right-continuous evaluation with boundary clamping."""
    return f(x)


def brute_force_isotonic(points: WeightedPoints, increasing: bool = True) -> StepFunction:
    """Exhaustive-search oracle for small monotone regression instances.

    Enumerates every contiguous-segment partition of the (tie-pooled, sorted)
    points, keeps those whose weighted segment means are monotone, and returns
    the partition minimizing the weighted sum of squared errors.  Exponential
    in the point count, hence the hard size guard.
    """
    if len(points) > _BRUTE_FORCE_LIMIT:
        raise ValidationError(
            f"brute-force oracle limited to {_BRUTE_FORCE_LIMIT} points, got {len(points)}"
        )
    x, y, w, _ = _merge_duplicate_x(points.x, points.y, points.w)
    y_fit = y if increasing else -y
    m = x.size
    best_sse = np.inf
    best = None
    for mask in range(1 << (m - 1)):
        starts = [0] + [g + 1 for g in range(m - 1) if mask >> g & 1]
        ends = starts[1:] + [m]
        means = []
        ok = True
        for s, e in zip(starts, ends):
            block_w = w[s:e]
            means.append(float(np.dot(block_w, y_fit[s:e]) / block_w.sum()))
        for a, b in zip(means, means[1:]):
            if a > b:
                ok = False
                break
        if not ok:
            continue
        sse = 0.0
        for (s, e), v in zip(zip(starts, ends), means):
            sse += float(np.dot(w[s:e], (y_fit[s:e] - v) ** 2))
        if sse < best_sse:
            best_sse = sse
            best = (starts, means)
    starts, means = best
    values = np.asarray(means) if increasing else -np.asarray(means)
    knots = x[np.asarray(starts, dtype=np.intp)]
    keep = np.ones(values.size, dtype=bool)
    keep[1:] = values[1:] != values[:-1]
    return StepFunction(
        knots=knots[keep],
        values=values[keep],
        direction="increasing" if increasing else "decreasing",
    )
