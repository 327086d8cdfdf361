"""Privacy accounting for AboveThreshold runs.

The central object is the one-sided loss: for query sequences evaluated on
two neighboring datasets, with prefix gap

    D_k = max_{i < k} max{0, f_i(x') - f_i(x)}    (empty max = 0)

the per-run loss is

    eps(x, x') = max_k [ (eps1/D) * D_k + (eps2/D) * max{0, D_k - (f_k(x') - f_k(x))} ]

with D the sensitivity. This clamped form upper-bounds ln(P_x(k)/P_x'(k))
for every halting outcome k under all three noise families. The
gumbel_relaxation flag drops the inner max{0, .} so D_k may go negative;
that variant is NOT a pointwise upper bound on exact outcome ratios (see the
regression test pinning a counterexample) and is kept only because callers
may want the relaxed number for comparison. Everything returned by
guarantee_for is derived from the clamped form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .noise import NoiseKind, RandomSource
from .sparse_vector import gumbel_halt_log_pmf

__all__ = [
    "NeighborModel",
    "QueryClass",
    "PrivacyGuarantee",
    "MultiQuantileBudget",
    "one_sided_loss",
    "range_bounded_of_pair",
    "guarantee_for",
    "zcdp_of_dp",
    "zcdp_of_range_bounded",
    "compose_zcdp",
    "multi_quantile_levels",
    "multi_quantile_guarantee",
    "gumbel_exact_max_log_ratio",
    "EmpiricalDpReport",
    "empirical_dp_check",
]


class NeighborModel(enum.Enum):
    SWAP = "swap"
    ADD_SUBTRACT = "add-subtract"

    @classmethod
    def parse(cls, name: str) -> "NeighborModel":
        key = name.strip().lower().replace("_", "-")
        for model in cls:
            if key == model.value:
                return model
        raise ValueError(f"unknown neighbor model: {name!r}")


class QueryClass(enum.Enum):
    """Structural assumptions on how neighbor datasets move the queries."""

    GENERAL = "general"
    MONOTONIC = "monotonic"
    COUNT_MINUS_QN = "count-minus-qn"
    FIXED_THRESHOLD_COUNT = "fixed-threshold-count"

    @classmethod
    def parse(cls, name: str) -> "QueryClass":
        key = name.strip().lower().replace("_", "-")
        for qc in cls:
            if key == qc.value:
                return qc
        raise ValueError(f"unknown query class: {name!r}")


@dataclass(frozen=True)
class PrivacyGuarantee:
    """Bundle of pure-DP, zCDP and range-bounded parameters (None = no claim)."""

    eps_dp: float | None = None
    rho_zcdp: float | None = None
    gamma_range_bounded: float | None = None

    def as_dict(self) -> dict:
        return {
            "eps_dp": self.eps_dp,
            "rho_zcdp": self.rho_zcdp,
            "gamma_range_bounded": self.gamma_range_bounded,
        }


def zcdp_of_dp(eps: float) -> float:
    """eps-DP implies (eps^2/2)-zCDP."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    return eps * eps / 2.0


def zcdp_of_range_bounded(gamma: float) -> float:
    """gamma-range-bounded implies (gamma^2/8)-zCDP."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return gamma * gamma / 8.0


def compose_zcdp(rhos) -> float:
    """zCDP composes additively."""
    rhos = list(rhos)
    if any(r < 0 for r in rhos):
        raise ValueError("rho values must be nonnegative")
    return float(sum(rhos))


def _prefix_gaps(diffs: np.ndarray, relaxed: bool) -> np.ndarray:
    base = diffs if relaxed else np.maximum(diffs, 0.0)
    return np.concatenate(([0.0], np.maximum.accumulate(base)))[:-1]


def one_sided_loss(
    f_x,
    f_xprime,
    eps1: float,
    eps2: float,
    sensitivity: float = 1.0,
    gumbel_relaxation: bool = False,
) -> float:
    """Worst-case ln(P_x(k)/P_x'(k)) bound over halting outcomes k.

    Asymmetric in its dataset arguments; evaluate both orders for a
    range-bounded statement. See the module docstring for the relaxation
    caveat.
    """
    fx = np.asarray(f_x, dtype=float)
    fxp = np.asarray(f_xprime, dtype=float)
    if fx.shape != fxp.shape or fx.ndim != 1 or fx.size == 0:
        raise ValueError("query sequences must be equal-length non-empty 1-d arrays")
    if not (eps1 > 0 and eps2 > 0 and sensitivity > 0):
        raise ValueError("eps1, eps2 and sensitivity must be positive")
    diffs = fxp - fx
    gaps = _prefix_gaps(diffs, gumbel_relaxation)
    terms = (eps1 / sensitivity) * gaps + (eps2 / sensitivity) * np.maximum(
        0.0, gaps - diffs
    )
    return float(terms.max())


def range_bounded_of_pair(
    f_x,
    f_xprime,
    eps1: float,
    eps2: float,
    sensitivity: float = 1.0,
    gumbel_relaxation: bool = False,
) -> float:
    """Sum of the two one-sided losses for a neighbor pair."""
    return one_sided_loss(
        f_x, f_xprime, eps1, eps2, sensitivity, gumbel_relaxation
    ) + one_sided_loss(f_xprime, f_x, eps1, eps2, sensitivity, gumbel_relaxation)


def guarantee_for(
    query_class: QueryClass,
    neighbor: NeighborModel,
    noise: NoiseKind,
    eps1: float,
    eps2: float,
    q: float | None = None,
) -> PrivacyGuarantee:
    """Closed-form guarantees for one AboveThreshold run.

    All parameters are derived from the clamped one-sided loss:

    - GENERAL: (eps1 + 2*eps2)-DP.
    - MONOTONIC: (eps1 + eps2)-DP and (eps1 + 2*eps2)-range-bounded, hence
      rho = (eps1/2 + eps2)^2 / 2.
    - COUNT_MINUS_QN (add-subtract, counting queries shifted by q*n):
      max{(1-q)*eps1, q*eps1 + eps2}-DP and
      (q*eps1 + eps2) + max{(1-q)*eps1, q*eps2} range-bounded.
    - FIXED_THRESHOLD_COUNT (add-subtract, counting queries, threshold not
      derived from the data size): max{eps1, eps2}-DP and
      (eps1 + eps2)-range-bounded.

    rho_zcdp is the better of gamma^2/8 and eps^2/2.
    """
    if not (eps1 > 0 and eps2 > 0):
        raise ValueError("eps1 and eps2 must be positive")
    if noise is NoiseKind.GUMBEL and eps1 != eps2:
        raise ValueError("Gumbel noise requires eps1 == eps2")

    if query_class is QueryClass.GENERAL:
        eps = eps1 + 2 * eps2
        gamma = 2 * eps
    elif query_class is QueryClass.MONOTONIC:
        eps = eps1 + eps2
        gamma = eps1 + 2 * eps2
    elif query_class is QueryClass.COUNT_MINUS_QN:
        if neighbor is not NeighborModel.ADD_SUBTRACT:
            raise ValueError("count-minus-qn accounting assumes add-subtract neighbors")
        if q is None or not 0 < q < 1:
            raise ValueError("count-minus-qn accounting needs a quantile q in (0, 1)")
        eps = max((1 - q) * eps1, q * eps1 + eps2)
        gamma = (q * eps1 + eps2) + max((1 - q) * eps1, q * eps2)
    elif query_class is QueryClass.FIXED_THRESHOLD_COUNT:
        if neighbor is not NeighborModel.ADD_SUBTRACT:
            raise ValueError(
                "fixed-threshold-count accounting assumes add-subtract neighbors"
            )
        eps = max(eps1, eps2)
        gamma = eps1 + eps2
    else:
        raise ValueError(f"unknown query class: {query_class}")

    rho = min(zcdp_of_range_bounded(gamma), zcdp_of_dp(eps))
    return PrivacyGuarantee(eps_dp=eps, rho_zcdp=rho, gamma_range_bounded=gamma)


def multi_quantile_levels(m: int) -> int:
    """Recursion depth for m quantiles: ceil(log2(m + 1)), in exact arithmetic."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return int(m).bit_length()


@dataclass(frozen=True)
class MultiQuantileBudget:
    """Composed budget for the recursive m-quantile scheme."""

    m: int
    levels: int
    log_base: int
    per_level: PrivacyGuarantee
    total: PrivacyGuarantee

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "levels": self.levels,
            "log_base": self.log_base,
            "per_level": self.per_level.as_dict(),
            "total": self.total.as_dict(),
        }


def multi_quantile_guarantee(
    m: int, eps1: float, eps2: float, noise: NoiseKind
) -> MultiQuantileBudget:
    """Budget for m quantiles via recursive splitting under swap neighbors.

    Thresholds are fixed before splitting, so at each level a swapped point
    either stays inside one slice (one monotonic run differs) or crosses the
    split boundary (two slices differ by add/subtract of a point against
    fixed thresholds). The per-level cost is the worse of the two cases;
    levels compose.
    """
    levels = multi_quantile_levels(m)
    mono = guarantee_for(QueryClass.MONOTONIC, NeighborModel.SWAP, noise, eps1, eps2)
    fixed = guarantee_for(
        QueryClass.FIXED_THRESHOLD_COUNT, NeighborModel.ADD_SUBTRACT, noise, eps1, eps2
    )
    per_eps = max(mono.eps_dp, 2 * fixed.eps_dp)
    per_rho = max(mono.rho_zcdp, 2 * fixed.rho_zcdp)
    per_level = PrivacyGuarantee(eps_dp=per_eps, rho_zcdp=per_rho)
    total = PrivacyGuarantee(
        eps_dp=levels * per_eps, rho_zcdp=compose_zcdp([per_rho] * levels)
    )
    return MultiQuantileBudget(
        m=m, levels=levels, log_base=2, per_level=per_level, total=total
    )


def gumbel_exact_max_log_ratio(
    f_x,
    f_xprime,
    threshold: float,
    eps: float,
    sensitivity: float = 1.0,
) -> float:
    """Exact max_k ln(pmf_x(k)/pmf_x'(k)) over halting outcomes, Gumbel noise."""
    lx = gumbel_halt_log_pmf(f_x, threshold, eps, sensitivity)
    lxp = gumbel_halt_log_pmf(f_xprime, threshold, eps, sensitivity)
    return float((lx - lxp).max())


def _wilson_bounds(counts: np.ndarray, n: int, z: float) -> tuple[np.ndarray, np.ndarray]:
    phat = counts / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * np.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return np.maximum(center - half, 0.0), np.minimum(center + half, 1.0)


@dataclass(frozen=True)
class EmpiricalDpReport:
    """Outcome of a two-sample frequency comparison against a claimed eps."""

    claimed_eps: float
    trials: int
    max_log_ratio: float
    violation_lcb: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "claimed_eps": self.claimed_eps,
            "trials": self.trials,
            "max_log_ratio": self.max_log_ratio,
            "violation_lcb": self.violation_lcb,
            "passed": self.passed,
        }


def empirical_dp_check(
    run_mechanism: Callable[[object, RandomSource, int], np.ndarray],
    x,
    xprime,
    claimed_eps: float,
    trials: int,
    rng: RandomSource,
    z: float = 4.0,
) -> EmpiricalDpReport:
    """Sample outcome frequencies under both datasets and hunt for violations.

    run_mechanism(dataset, rng, trials) must return an integer outcome label
    per trial. The check fails only on confident evidence: some outcome whose
    z-score Wilson lower bound under one dataset exceeds e^claimed_eps times
    the Wilson upper bound under the other. max_log_ratio reports the largest
    point-estimate log ratio over outcomes seen on both sides (both
    directions), which should sit near 0 for identical inputs.
    """
    if trials < 100_000:
        raise ValueError("insufficient trials for the requested confidence (need >= 1e5)")
    out_x = np.asarray(run_mechanism(x, rng.spawn(2 * rng.stream + 1), trials))
    out_xp = np.asarray(run_mechanism(xprime, rng.spawn(2 * rng.stream + 2), trials))
    labels = np.union1d(np.unique(out_x), np.unique(out_xp))
    cx = np.array([(out_x == lab).sum() for lab in labels], dtype=float)
    cxp = np.array([(out_xp == lab).sum() for lab in labels], dtype=float)

    lo_x, hi_x = _wilson_bounds(cx, trials, z)
    lo_xp, hi_xp = _wilson_bounds(cxp, trials, z)

    both = (cx > 0) & (cxp > 0)
    if both.any():
        point = np.log(cx[both] / cxp[both])
        max_log_ratio = float(np.max(np.abs(point)))
    else:
        max_log_ratio = float("nan")

    # Wilson upper bounds are strictly positive even at zero counts, and a
    # zero lower bound gives log(0) = -inf, i.e. no evidence for that outcome.
    with np.errstate(divide="ignore"):
        lcb = np.maximum(
            np.log(lo_x) - np.log(hi_xp), np.log(lo_xp) - np.log(hi_x)
        )
    violation_lcb = float(np.max(lcb)) if lcb.size else float("-inf")
    return EmpiricalDpReport(
        claimed_eps=claimed_eps,
        trials=trials,
        max_log_ratio=max_log_ratio,
        violation_lcb=violation_lcb,
        passed=bool(violation_lcb <= claimed_eps),
    )
