"""Differentially private quantile estimation on a geometric candidate grid.

The estimator runs AboveThreshold over counting queries
f_i(x) = |{x_j : x_j - ell + 1 < beta^i}| with threshold T = q*n and returns
the candidate beta^k + ell - 1 at the halting index k. The counting queries
are monotonic with sensitivity 1 under swap neighbors, which is what the
privacy accounting of this pipeline rests on.

Preprocessing is a single O(n) pass into a log-spaced bucket histogram, after
which each query costs O(1): the prefix count grows by one bucket per candidate.
Variants here: a fully unbounded estimator (no declared bounds, two runs), an
inverted transform for small quantiles of upper-bounded data, and recursive
splitting for several quantiles at once.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from .accounting import (
    MultiQuantileBudget,
    NeighborModel,
    PrivacyGuarantee,
    QueryClass,
    guarantee_for,
    multi_quantile_guarantee,
)
from .noise import NoiseKind, RandomSource
from .sparse_vector import (
    DEFAULT_MAX_QUERIES,
    QueryStream,
    SvtConfig,
    SvtOutcome,
    run_above_threshold,
    run_above_threshold_noiseless,
)

__all__ = [
    "Dataset",
    "GeometricGrid",
    "LogBucketHistogram",
    "build_histogram",
    "counting_query_stream",
    "QuantileRequest",
    "QuantileEstimate",
    "UnboundedEstimate",
    "MultiQuantileResult",
    "estimate_quantile",
    "estimate_quantile_unbounded",
    "estimate_small_quantile_inverted",
    "estimate_multiple_quantiles",
    "request_guarantee",
]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Finite real-valued data with an optional public lower bound."""

    values: np.ndarray
    lower_bound: float | None = None

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("values must be a non-empty 1-d sequence")
        if not np.isfinite(vals).all():
            raise ValueError("values must be finite")
        if self.lower_bound is not None and vals.min() < self.lower_bound:
            raise ValueError("all values must be >= the declared lower bound")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return int(self.values.size)


class GeometricGrid:
    """Candidate values beta^i + ell - 1 with powers cached by multiplication.

    The cache is the grid definition: every bucket boundary and every output
    value comes from the same iteratively multiplied floats, so membership
    tests are exact against the values the query stream actually uses.
    """

    def __init__(self, beta: float, lower_bound: float) -> None:
        if not beta > 1.0:
            raise ValueError("beta must be > 1")
        self.beta = float(beta)
        self.lower_bound = float(lower_bound)
        self._log_beta = math.log(self.beta)
        self._powers = [1.0]

    def power(self, i: int) -> float:
        """beta^i from the multiplication cache (extends it as needed)."""
        if i < 0:
            raise ValueError("power index must be >= 0")
        pows = self._powers
        while len(pows) <= i:
            pows.append(pows[-1] * self.beta)
        return pows[i]

    def value(self, i: int) -> float:
        """Grid candidate number i: beta^i + ell - 1."""
        return self.power(i) + self.lower_bound - 1.0

    def shift(self, values: np.ndarray) -> np.ndarray:
        """Map data to y = x - ell + 1 >= 1, the domain the buckets live on."""
        y = np.asarray(values, dtype=float) - self.lower_bound + 1.0
        if y.size and y.min() < 1.0:
            raise ValueError("value below the grid lower bound")
        return y

    def bucket_indices(self, y: np.ndarray) -> np.ndarray:
        """Bucket b with beta^b <= y < beta^(b+1), vectorized over y >= 1.

        A log-floor guess is corrected by direct comparison against the
        cached powers, so boundary points land exactly where the strict
        inequality of the counting queries expects them.
        """
        y = np.asarray(y, dtype=float)
        if y.size == 0:
            return np.zeros(0, dtype=np.int64)
        if y.min() < 1.0:
            raise ValueError("bucket domain starts at 1")
        idx = np.floor(np.log(y) / self._log_beta).astype(np.int64)
        np.clip(idx, 0, None, out=idx)
        self.power(int(idx.max()) + 2)
        pows = np.asarray(self._powers)
        for _ in range(64):
            moved = False
            low = y < pows[idx]
            if low.any():
                idx[low] -= 1
                moved = True
            high = y >= pows[idx + 1]
            if high.any():
                idx[high] += 1
                moved = True
                if int(idx.max()) + 2 > len(self._powers):
                    self.power(int(idx.max()) + 2)
                    pows = np.asarray(self._powers)
            if not moved:
                return idx
        raise AssertionError("bucket correction did not converge")

    def bucket_of(self, y: float) -> int:
        return int(self.bucket_indices(np.array([float(y)]))[0])

    def max_index_at_most(self, y: float) -> int:
        """Largest i >= 0 with beta^i <= y, or -1 when y < 1."""
        if y < 1.0:
            return -1
        return self.bucket_of(y)


class LogBucketHistogram:
    """Counts of shifted data per geometric bucket; powers the O(1) queries."""

    def __init__(self, grid: GeometricGrid, counts: dict[int, int]) -> None:
        self.grid = grid
        self.counts = dict(counts)
        if any(b < 0 or c <= 0 for b, c in self.counts.items()):
            raise ValueError("bucket indices must be >= 0 with positive counts")
        self.n = int(sum(self.counts.values()))

    @property
    def beta(self) -> float:
        return self.grid.beta

    @property
    def lower_bound(self) -> float:
        return self.grid.lower_bound

    def prefix_count(self, i: int) -> int:
        """|{x_j : x_j - ell + 1 < beta^i}|, i.e. everything in buckets < i."""
        return sum(c for b, c in self.counts.items() if b < i)

    def to_json(self) -> str:
        payload = {
            "beta": self.grid.beta,
            "ell": self.grid.lower_bound,
            "counts": {str(b): c for b, c in sorted(self.counts.items())},
        }
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LogBucketHistogram":
        payload = json.loads(text)
        grid = GeometricGrid(payload["beta"], payload["ell"])
        counts = {int(b): int(c) for b, c in payload["counts"].items()}
        return cls(grid, counts)


# sized so a block's shift/log/index temporaries stay cache-resident,
# keeping the per-element build cost flat from small n to millions
_BUILD_BLOCK = 1 << 16


def build_histogram(values, beta: float, lower_bound: float) -> LogBucketHistogram:
    """Shift, bucket and bincount the data in blocks. O(n) arithmetic."""
    grid = GeometricGrid(beta, lower_bound)
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("cannot build a histogram from empty data")
    totals = np.zeros(0, dtype=np.int64)
    for start in range(0, x.size, _BUILD_BLOCK):
        y = grid.shift(x[start : start + _BUILD_BLOCK])
        bc = np.bincount(grid.bucket_indices(y))
        if bc.size > totals.size:
            bc[: totals.size] += totals
            totals = bc
        else:
            totals[: bc.size] += bc
    nz = np.flatnonzero(totals)
    counts = dict(zip(nz.tolist(), totals[nz].tolist()))
    return LogBucketHistogram(grid, counts)


def counting_query_stream(
    hist: LogBucketHistogram, max_queries: int = DEFAULT_MAX_QUERIES
) -> QueryStream:
    """f_i = prefix count through bucket i-1, grown one bucket per query.

    Monotonic with sensitivity 1 under swap neighbors: swapping one point
    moves every prefix count by at most 1, in the same direction.
    """
    counts = hist.counts

    def values() -> Iterator[float]:
        running = 0
        i = 1
        while True:
            running += counts.get(i - 1, 0)
            yield float(running)
            i += 1

    return QueryStream(values=values, sensitivity=1.0, monotonic=True, max_queries=max_queries)


@dataclass(frozen=True)
class QuantileRequest:
    """Everything an estimation run needs besides the data and randomness."""

    q: float
    eps1: float
    eps2: float
    beta: float = 1.001
    noise: NoiseKind = NoiseKind.EXPONENTIAL
    neighbor: NeighborModel = NeighborModel.SWAP
    max_queries: int = DEFAULT_MAX_QUERIES

    def __post_init__(self) -> None:
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if not (self.eps1 > 0 and self.eps2 > 0):
            raise ValueError("eps1 and eps2 must be positive")
        if not self.beta > 1.0:
            raise ValueError("beta must be > 1")
        if self.max_queries < 1:
            raise ValueError("max_queries must be at least 1")
        if self.noise is NoiseKind.GUMBEL and self.eps1 != self.eps2:
            raise ValueError("Gumbel noise requires eps1 == eps2")

    @classmethod
    def even_split(cls, q: float, eps: float, **kwargs) -> "QuantileRequest":
        """The default budget split eps1 = eps2 = eps/2."""
        return cls(q=q, eps1=eps / 2.0, eps2=eps / 2.0, **kwargs)


def request_guarantee(req: QuantileRequest) -> PrivacyGuarantee:
    """Privacy of one estimation run under the request's neighbor model."""
    if req.neighbor is NeighborModel.SWAP:
        return guarantee_for(
            QueryClass.MONOTONIC, req.neighbor, req.noise, req.eps1, req.eps2
        )
    return guarantee_for(
        QueryClass.COUNT_MINUS_QN, req.neighbor, req.noise, req.eps1, req.eps2, q=req.q
    )


@dataclass(frozen=True)
class QuantileEstimate:
    """A grid candidate; halt_index is None when the run hit its query cap."""

    value: float
    halt_index: int | None
    exhausted: bool


def _finish(grid: GeometricGrid, outcome: SvtOutcome) -> QuantileEstimate:
    if outcome.exhausted:
        return QuantileEstimate(grid.value(outcome.cap), None, True)
    return QuantileEstimate(grid.value(outcome.index), outcome.index, False)


def estimate_quantile(
    data: Dataset,
    req: QuantileRequest,
    rng: RandomSource | None = None,
    *,
    noiseless: bool = False,
    threshold: float | None = None,
) -> QuantileEstimate:
    """AboveThreshold with T = q*n over the counting stream; output the halt candidate.

    threshold overrides q*n (used by the sum procedure's bias-variance knob
    and by the multi-quantile recursion). noiseless runs the deterministic
    comparison instead of the private mechanism, for oracle tests only.
    """
    if data.lower_bound is None:
        raise ValueError("estimate_quantile needs a declared lower bound")
    hist = build_histogram(data.values, req.beta, data.lower_bound)
    t = req.q * data.n if threshold is None else float(threshold)
    stream = counting_query_stream(hist, max_queries=req.max_queries)
    if noiseless:
        outcome = run_above_threshold_noiseless(stream, t)
    else:
        if rng is None:
            raise ValueError("a RandomSource is required unless noiseless=True")
        cfg = SvtConfig(req.eps1, req.eps2, req.noise, t)
        outcome = run_above_threshold(stream, cfg, rng)
    return _finish(hist.grid, outcome)


@dataclass(frozen=True)
class UnboundedEstimate:
    """Result of the two-run estimator for data with no declared bounds.

    first_halt / second_halt are candidate indices k >= 0 (k = 0 means the
    run halted on its sign-counting query), None when that run exhausted its
    cap or, for second_halt, never ran.
    """

    value: float
    exhausted: bool
    first_halt: int | None
    second_halt: int | None
    second_ran: bool


def _signed_counting_stream(
    values: np.ndarray, beta: float, max_queries: int
) -> tuple[QueryStream, GeometricGrid]:
    """Queries g_i = |{x_j : x_j + 1 < beta^i}| for i = 0, 1, 2, ...

    g_0 counts the strictly negative points; from i = 1 on, the nonnegative
    points enter through the bucket histogram at lower bound 0. The stream's
    position p corresponds to candidate index i = p - 1.
    """
    negatives = int((values < 0).sum())
    nonneg = values[values >= 0]
    grid = GeometricGrid(beta, 0.0)
    counts: dict[int, int] = {}
    if nonneg.size:
        hist = build_histogram(nonneg, beta, 0.0)
        counts = hist.counts
        grid = hist.grid

    def stream_values() -> Iterator[float]:
        yield float(negatives)
        running = negatives
        i = 1
        while True:
            running += counts.get(i - 1, 0)
            yield float(running)
            i += 1

    stream = QueryStream(
        values=stream_values, sensitivity=1.0, monotonic=True, max_queries=max_queries
    )
    return stream, grid


def _run_signed(
    values: np.ndarray,
    t: float,
    req: QuantileRequest,
    rng: RandomSource | None,
    noiseless: bool,
) -> tuple[int | None, GeometricGrid]:
    """One unbounded-side run; returns the candidate index k (position - 1)."""
    stream, grid = _signed_counting_stream(values, req.beta, req.max_queries)
    if noiseless:
        outcome = run_above_threshold_noiseless(stream, t)
    else:
        cfg = SvtConfig(req.eps1, req.eps2, req.noise, t)
        outcome = run_above_threshold(stream, cfg, rng)
    if outcome.exhausted:
        return None, grid
    return outcome.index - 1, grid


def estimate_quantile_unbounded(
    data: Dataset,
    req: QuantileRequest,
    rng: RandomSource | None = None,
    *,
    noiseless: bool = False,
) -> UnboundedEstimate:
    """Quantile estimation with no declared bounds at all.

    First run: T = q*n over g_i = |{x_j + 1 < beta^i}|, i from 0. A halt at
    k > 0 yields beta^k - 1. A halt at k = 0 says at least ~q*n points are
    negative, so a second run on the negated data with T = (1-q)*n searches
    below zero and a halt at k > 0 yields -(beta^k - 1). If that run also
    halts at 0, the estimate is 0. Each run pays the request's (eps1, eps2);
    the two compose.
    """
    if not noiseless and rng is None:
        raise ValueError("a RandomSource is required unless noiseless=True")
    vals = data.values
    k1, grid1 = _run_signed(vals, req.q * data.n, req, rng, noiseless)
    if k1 is None:
        return UnboundedEstimate(grid1.value(req.max_queries - 1), True, None, None, False)
    if k1 > 0:
        return UnboundedEstimate(grid1.power(k1) - 1.0, False, k1, None, False)
    k2, grid2 = _run_signed(-vals, (1.0 - req.q) * data.n, req, rng, noiseless)
    if k2 is None:
        return UnboundedEstimate(-(grid2.value(req.max_queries - 1)), True, 0, None, True)
    if k2 > 0:
        return UnboundedEstimate(-(grid2.power(k2) - 1.0), False, 0, k2, True)
    return UnboundedEstimate(0.0, False, 0, 0, True)


def estimate_small_quantile_inverted(
    data: Dataset,
    upper_bound: float,
    req: QuantileRequest,
    rng: RandomSource | None = None,
    *,
    noiseless: bool = False,
) -> QuantileEstimate:
    """Small quantiles of upper-bounded data: negate, estimate 1-q, negate back."""
    negated = Dataset(-data.values, lower_bound=-float(upper_bound))
    est = estimate_quantile(negated, replace(req, q=1.0 - req.q), rng, noiseless=noiseless)
    return QuantileEstimate(-est.value, est.halt_index, est.exhausted)


@dataclass(frozen=True)
class MultiQuantileResult:
    """Jointly estimated quantiles, nondecreasing by construction."""

    quantiles: tuple[float, ...]
    estimates: tuple[float, ...]
    exhausted: tuple[bool, ...]
    empty_slice: tuple[bool, ...]
    budget: MultiQuantileBudget


def estimate_multiple_quantiles(
    data: Dataset,
    qs: Sequence[float],
    req: QuantileRequest,
    rng: RandomSource | None = None,
    *,
    noiseless: bool = False,
) -> MultiQuantileResult:
    """Recursive splitting: estimate the middle quantile, partition, recurse.

    Each node's threshold is (q_mid - mass_lo) * n_total, fixed in advance by
    the quantile list and the public data size, never by realized slice sizes.
    Ties go left (the left slice takes values <= the estimate). A left child
    keeps its parent's grid but is capped at the parent's halt index; a right
    child restarts the grid at the parent's estimate. Together these force the
    returned estimates to be nondecreasing. An empty slice (or a slice whose
    boundaries leave no room for a candidate) reports its split boundary and
    is flagged.
    """
    if data.lower_bound is None:
        raise ValueError("multi-quantile estimation needs a declared lower bound")
    if not noiseless and rng is None:
        raise ValueError("a RandomSource is required unless noiseless=True")
    q_arr = np.asarray(qs, dtype=float)
    if q_arr.ndim != 1 or q_arr.size == 0:
        raise ValueError("qs must be a non-empty 1-d sequence")
    if (np.diff(q_arr) <= 0).any():
        raise ValueError("qs must be sorted and distinct")
    if q_arr[0] <= 0.0 or q_arr[-1] >= 1.0:
        raise ValueError("quantiles must lie strictly inside (0, 1)")

    n_total = data.n
    m = q_arr.size
    estimates = np.empty(m)
    exhausted = [False] * m
    empty = [False] * m

    def recurse(
        values: np.ndarray,
        lo: int,
        hi: int,
        grid_lower: float,
        upper: float,
        mass_lo: float,
        fallback: float,
    ) -> None:
        if lo >= hi:
            return
        mid = lo + (hi - lo) // 2
        grid = GeometricGrid(req.beta, grid_lower)
        cap = req.max_queries
        if math.isfinite(upper):
            cap = min(cap, grid.max_index_at_most(upper - grid_lower + 1.0))
        if values.size == 0 or cap < 1:
            for j in range(lo, hi):
                estimates[j] = fallback
                empty[j] = True
            return
        node_req = replace(req, max_queries=cap)
        t = (q_arr[mid] - mass_lo) * n_total
        est = estimate_quantile(
            Dataset(values, lower_bound=grid_lower),
            node_req,
            rng,
            noiseless=noiseless,
            threshold=t,
        )
        estimates[mid] = est.value
        exhausted[mid] = est.exhausted
        recurse(values[values <= est.value], lo, mid, grid_lower, est.value, mass_lo, est.value)
        recurse(values[values > est.value], mid + 1, hi, est.value, upper, q_arr[mid], est.value)

    recurse(
        data.values, 0, m, data.lower_bound, math.inf, 0.0, data.lower_bound
    )
    return MultiQuantileResult(
        quantiles=tuple(float(q) for q in q_arr),
        estimates=tuple(float(v) for v in estimates),
        exhausted=tuple(exhausted),
        empty_slice=tuple(empty),
        budget=multi_quantile_guarantee(m, req.eps1, req.eps2, req.noise),
    )
