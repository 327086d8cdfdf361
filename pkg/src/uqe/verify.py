"""Self-checking suites behind the `verify` CLI subcommand.

Each suite replays one of the core correctness arguments at command-line
scale with fixed seeds: Monte Carlo halt frequencies against the closed-form
Gumbel distribution, the step-wise exponential mechanism identity, empirical
privacy-loss ratios, and the deterministic oracles for histograms and
noiseless quantile scans. The heavyweight versions of the same checks live
in the test suite; these are the quick, scriptable twins.
"""

from __future__ import annotations

import numpy as np

from .accounting import empirical_dp_check
from .noise import NoiseKind, RandomSource
from .quantile import (
    Dataset,
    GeometricGrid,
    QuantileRequest,
    build_histogram,
    counting_query_stream,
    estimate_quantile,
)
from .sparse_vector import (
    SvtConfig,
    gumbel_halt_log_pmf,
    gumbel_no_halt_prob,
    simulate_halt_indices,
    simulate_iterative_em,
    stream_prefix,
)

__all__ = ["SUITE_NAMES", "run_verification_suite", "run_all_verification_suites"]

SUITE_NAMES = (
    "gumbel-closed-form",
    "em-equivalence",
    "dp-ratio",
    "histogram-oracle",
    "noiseless-oracle",
)


def _check(check_id: str, passed: bool, detail: str) -> dict:
    return {"id": check_id, "passed": bool(passed), "detail": detail}


def _random_instance(gen, max_k: int = 6):
    k = int(gen.integers(2, max_k + 1))
    values = gen.uniform(-3.0, 3.0, size=k)
    threshold = float(gen.uniform(-2.0, 2.0))
    eps = float(gen.uniform(0.4, 2.0))
    return values, threshold, eps


def _outcome_pmf(values, threshold, eps) -> np.ndarray:
    """[P(no halt), P(halt at 1), ..., P(halt at K)] for eps1 = eps2 = eps."""
    pmf = np.exp(gumbel_halt_log_pmf(values, threshold, eps))
    return np.concatenate(([gumbel_no_halt_prob(values, threshold, eps)], pmf))


def _mc_max_z(pmf: np.ndarray, outcomes: np.ndarray, trials: int) -> float:
    freq = np.bincount(outcomes, minlength=pmf.size) / trials
    se = np.sqrt(np.maximum(pmf * (1.0 - pmf), 1e-12) / trials)
    return float(np.max(np.abs(freq - pmf) / se))


def _suite_gumbel_closed_form(seed: int, trials: int) -> list[dict]:
    base = RandomSource(seed)
    worst = 0.0
    for i in range(10):
        values, threshold, eps = _random_instance(base.spawn(2 * i).gen)
        pmf = _outcome_pmf(values, threshold, eps)
        cfg = SvtConfig(eps, eps, NoiseKind.GUMBEL, threshold)
        sim = simulate_halt_indices(values, cfg, base.spawn(2 * i + 1), trials)
        worst = max(worst, _mc_max_z(pmf, sim, trials))
    return [
        _check(
            "halt-distribution-mc",
            worst < 4.0,
            f"max |freq - pmf| z-score {worst:.2f} over 10 instances x {trials} trials",
        )
    ]


def _em_pmf_direct(values, threshold, eps) -> np.ndarray:
    """Halt pmf of the step-wise mechanism by telescoping, in plain floats."""
    s = eps / 2.0
    w_t = np.exp(s * threshold)
    w = np.exp(s * np.asarray(values, dtype=float))
    denom = w_t + np.cumsum(w)
    p_new = w / denom
    survive = np.concatenate(([1.0], np.cumprod(1.0 - p_new[:-1])))
    return p_new * survive


def _suite_em_equivalence(seed: int, trials: int) -> list[dict]:
    base = RandomSource(seed)
    gen = base.spawn(0).gen
    worst_abs = 0.0
    for _ in range(1000):
        values, threshold, eps = _random_instance(gen)
        direct = _em_pmf_direct(values, threshold, eps)
        closed = np.exp(gumbel_halt_log_pmf(values, threshold, eps / 2.0))
        worst_abs = max(worst_abs, float(np.max(np.abs(direct - closed))))
    checks = [
        _check(
            "telescoping-identity",
            worst_abs < 1e-12,
            f"max |direct - closed-form| = {worst_abs:.2e} over 1000 instances",
        )
    ]
    worst_z = 0.0
    for i in range(3):
        values, threshold, eps = _random_instance(base.spawn(10 + 2 * i).gen)
        pmf = np.concatenate(
            (
                [gumbel_no_halt_prob(values, threshold, eps / 2.0)],
                np.exp(gumbel_halt_log_pmf(values, threshold, eps / 2.0)),
            )
        )
        sim = simulate_iterative_em(values, threshold, eps, base.spawn(11 + 2 * i), trials)
        worst_z = max(worst_z, _mc_max_z(pmf, sim, trials))
    checks.append(
        _check(
            "step-mechanism-mc",
            worst_z < 4.0,
            f"max z-score {worst_z:.2f} over 3 instances x {trials} trials",
        )
    )
    return checks


def _suite_dp_ratio(seed: int, trials: int) -> list[dict]:
    data = np.array([2.0, 5.0, 9.0, 14.0, 20.0])
    swapped = np.array([2.0, 5.0, 9.0, 14.0, 3.0])
    thresholds = 2.0 ** np.arange(1, 8)
    eps1 = eps2 = 0.5
    claimed = eps1 + eps2
    checks = []
    for j, noise in enumerate((NoiseKind.EXPONENTIAL, NoiseKind.LAPLACE)):
        def runner(dataset, rng, n):
            values = np.searchsorted(np.sort(dataset), thresholds, side="left")
            cfg = SvtConfig(eps1, eps2, noise, 2.5)
            return simulate_halt_indices(values.astype(float), cfg, rng, n)

        report = empirical_dp_check(
            runner, data, swapped, claimed, trials, RandomSource(seed + j)
        )
        checks.append(
            _check(
                f"counting-pair-{noise.value}",
                report.passed,
                "max log ratio "
                f"{report.max_log_ratio:.3f}, violation lcb {report.violation_lcb:.3f} "
                f"vs claimed {claimed:.3f}",
            )
        )
    return checks


def _suite_histogram_oracle(seed: int) -> list[dict]:
    base = RandomSource(seed)
    gen = base.spawn(0).gen
    mismatches = 0
    cases = 0
    for _ in range(50):
        beta = float(gen.choice([1.01, 1.1, 2.0]))
        lower = float(gen.choice([0.0, -3.0, 5.0]))
        n = int(gen.integers(1, 2000))
        values = lower + gen.uniform(0.0, 50.0, size=n)
        hist = build_histogram(values, beta, lower)
        grid = GeometricGrid(beta, lower)
        shifted = grid.shift(values)
        for i in gen.integers(1, 40, size=20):
            cases += 1
            direct = int(np.count_nonzero(shifted < grid.power(int(i))))
            if hist.prefix_count(int(i)) != direct:
                mismatches += 1
        stream_vals = stream_prefix(counting_query_stream(hist), 40)
        for i in range(1, 41):
            cases += 1
            if stream_vals[i - 1] != hist.prefix_count(i):
                mismatches += 1
    return [
        _check(
            "prefix-vs-scan",
            mismatches == 0,
            f"{mismatches} mismatches over {cases} prefix comparisons",
        )
    ]


def _suite_noiseless_oracle(seed: int) -> list[dict]:
    base = RandomSource(seed)
    gen = base.spawn(0).gen
    mismatches = 0
    for _ in range(300):
        beta = float(gen.choice([1.001, 1.01, 1.1]))
        lower = float(gen.choice([0.0, 1.0, -2.0]))
        n = int(gen.integers(1, 3000))
        values = lower + gen.uniform(0.0, 100.0, size=n)
        q = float(gen.uniform(0.05, 0.95))
        data = Dataset(values, lower_bound=lower)
        req = QuantileRequest(q=q, eps1=0.5, eps2=0.5, beta=beta)
        est = estimate_quantile(data, req, noiseless=True)
        grid = GeometricGrid(beta, lower)
        shifted = np.sort(grid.shift(values))
        rank = int(np.ceil(q * n))
        target = shifted[rank - 1]
        k = 1
        while grid.power(k) <= target:
            k += 1
        if est.value != grid.value(k):
            mismatches += 1
    return [
        _check(
            "order-statistic-scan",
            mismatches == 0,
            f"{mismatches} mismatches over 300 noiseless instances",
        )
    ]


def run_verification_suite(name: str, seed: int = 0, trials: int = 200_000) -> dict:
    """Run one named suite; returns {"suite", "passed", "checks": [...]}."""
    if name == "gumbel-closed-form":
        checks = _suite_gumbel_closed_form(seed, trials)
    elif name == "em-equivalence":
        checks = _suite_em_equivalence(seed, trials)
    elif name == "dp-ratio":
        checks = _suite_dp_ratio(seed, max(trials, 100_000))
    elif name == "histogram-oracle":
        checks = _suite_histogram_oracle(seed)
    elif name == "noiseless-oracle":
        checks = _suite_noiseless_oracle(seed)
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return {"suite": name, "passed": all(c["passed"] for c in checks), "checks": checks}


def run_all_verification_suites(seed: int = 0, trials: int = 200_000) -> list[dict]:
    return [run_verification_suite(name, seed=seed, trials=trials) for name in SUITE_NAMES]
