"""Exponential-mechanism quantile estimation over a declared bounded range.

The mechanism sorts the data, forms the n+1 intervals [x_j, x_{j+1}] with
bookends a and b, gives interval j the weight exp(-eps*|j - q*n|/2) times its
length, picks an interval by Gumbel-max over the log weights, and returns a
uniform draw inside it. Its output density is a step function, which is what
the range-contrast figure plots against the grid-based estimator's curve.

Everything is computed in log space: for large n the weights underflow long
before the distribution degenerates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import RandomSource
from .quantile import build_histogram
from .sparse_vector import gumbel_halt_log_pmf, gumbel_no_halt_prob

__all__ = [
    "BoundedRange",
    "emq_interval_pmf",
    "emq_estimate",
    "emq_pdf_curve",
    "simulate_emq_choices",
    "UqePdfCurve",
    "uqe_pdf_curve",
]

# trials per block in the vectorized simulator
_BLOCK = 1 << 17


@dataclass(frozen=True)
class BoundedRange:
    """A publicly declared interval [a, b] that contains all the data."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError("range must satisfy a < b")

    @property
    def width(self) -> float:
        return self.b - self.a


def _interval_edges(data, rng_range: BoundedRange) -> np.ndarray:
    vals = np.sort(np.asarray(data, dtype=float))
    if vals.size == 0:
        raise ValueError("data must be non-empty")
    if vals[0] < rng_range.a or vals[-1] > rng_range.b:
        raise ValueError("data outside the declared range")
    return np.concatenate(([rng_range.a], vals, [rng_range.b]))


def _log_weights(edges: np.ndarray, q: float, eps: float) -> np.ndarray:
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    n = edges.size - 2
    j = np.arange(n + 1, dtype=float)
    gaps = np.diff(edges)
    with np.errstate(divide="ignore"):
        return -eps * np.abs(j - q * n) / 2.0 + np.log(gaps)


def emq_interval_pmf(data, rng_range: BoundedRange, q: float, eps: float) -> np.ndarray:
    """Normalized selection probabilities over intervals j = 0..n."""
    edges = _interval_edges(data, rng_range)
    logw = _log_weights(edges, q, eps)
    shifted = logw - logw.max()
    w = np.exp(shifted)
    return w / w.sum()


def emq_estimate(
    data, rng_range: BoundedRange, q: float, eps: float, rng: RandomSource
) -> float:
    """One eps-DP draw: Gumbel-max interval choice, then uniform inside it."""
    edges = _interval_edges(data, rng_range)
    logw = _log_weights(edges, q, eps)
    gumbels = -np.log(-np.log(rng.uniform_open(logw.size)))
    j = int(np.argmax(logw + gumbels))
    u = float(rng.uniform_open())
    return float(edges[j] + u * (edges[j + 1] - edges[j]))


def simulate_emq_choices(
    data, rng_range: BoundedRange, q: float, eps: float, rng: RandomSource, trials: int
) -> np.ndarray:
    """Vectorized interval choices (for Monte Carlo comparison to the PMF)."""
    edges = _interval_edges(data, rng_range)
    logw = _log_weights(edges, q, eps)
    out = np.empty(trials, dtype=np.int64)
    done = 0
    while done < trials:
        block = min(_BLOCK, trials - done)
        gumbels = -np.log(-np.log(rng.uniform_open((block, logw.size))))
        out[done : done + block] = np.argmax(logw[None, :] + gumbels, axis=1)
        done += block
    return out


def emq_pdf_curve(
    data, rng_range: BoundedRange, q: float, eps: float, grid: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Step density (interval probability / interval length) on a plot grid."""
    edges = _interval_edges(data, rng_range)
    probs = emq_interval_pmf(data, rng_range, q, eps)
    gaps = np.diff(edges)
    density = np.zeros_like(probs)
    positive = gaps > 0
    density[positive] = probs[positive] / gaps[positive]
    if grid is None:
        grid = np.linspace(rng_range.a, rng_range.b, 1001)
    grid = np.asarray(grid, dtype=float)
    idx = np.clip(np.searchsorted(edges, grid, side="right") - 1, 0, probs.size - 1)
    return grid, density[idx]


@dataclass(frozen=True)
class UqePdfCurve:
    """Step PDF of the grid estimator modified to draw uniformly in its cell.

    Interval k spans [beta^(k-1)+ell-1, beta^k+ell-1); its mass is the
    closed-form Gumbel halt probability. residual is the no-halt mass beyond
    the last emitted interval, so total mass + residual = 1.
    """

    lefts: np.ndarray
    rights: np.ndarray
    mass: np.ndarray
    density: np.ndarray
    residual: float

    def total_mass(self) -> float:
        return float(self.mass.sum())


def uqe_pdf_curve(
    data,
    lower_bound: float,
    q: float,
    eps: float,
    beta: float = 1.001,
    pad_steps: int = 25,
) -> UqePdfCurve:
    """Exact output PDF of the Gumbel-noise grid estimator (eps1 = eps2 = eps/2).

    The number of emitted intervals depends only on the data and beta (enough
    candidates to pass every point, plus pad_steps), never on any declared
    range, so the curve is identical no matter what range a baseline assumes.
    """
    hist = build_histogram(data, beta, lower_bound)
    grid = hist.grid
    n = hist.n
    k_full = max(hist.counts) + 1  # first query index where the prefix hits n
    k_max = k_full + int(pad_steps)
    values = np.cumsum(
        [hist.counts.get(i - 1, 0) for i in range(1, k_max + 1)]
    ).astype(float)
    t = q * n
    log_pmf = gumbel_halt_log_pmf(values, t, eps / 2.0)
    mass = np.exp(log_pmf)
    edges = np.array([grid.value(i) for i in range(k_max + 1)])
    lefts, rights = edges[:-1], edges[1:]
    widths = rights - lefts
    return UqePdfCurve(
        lefts=lefts,
        rights=rights,
        mass=mass,
        density=mass / widths,
        residual=float(gumbel_no_halt_prob(values, t, eps / 2.0)),
    )
