"""Experiment harness: resampling protocol, error tables and figure data.

The quantile benchmark repeatedly draws a sample without replacement,
perturbs it (tie-breaking for the interval baseline; every method sees the
same perturbed copy), estimates a grid of quantiles, and scores each method
against the reference quantile of the unperturbed sample. The sum benchmark
estimates a private clip once per resample and reuses it across the inner
Laplace draws. All randomness is derived from (seed, stream) pairs laid out
deterministically, so a rerun with the same spec is byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aggregates import clipped_sum
from .datasets import perturb, true_quantile
from .emq import BoundedRange, emq_estimate, emq_pdf_curve, uqe_pdf_curve
from .noise import NoiseKind, NoiseSpec, RandomSource, sample
from .quantile import Dataset, QuantileRequest, estimate_quantile

__all__ = [
    "DEFAULT_QUANTILE_GRID",
    "SUM_EPS_GRID",
    "EMQ_SUM_QS",
    "ExperimentSpec",
    "ResultRecord",
    "run_quantile_experiment",
    "run_sum_experiment",
    "normalized_error_rows",
    "records_to_json",
    "emit_pdf_figures",
]

DEFAULT_QUANTILE_GRID = tuple(round(0.05 + 0.01 * i, 2) for i in range(91))
SUM_EPS_GRID = (0.1, 0.5, 1.0)
EMQ_SUM_QS = (0.95, 0.96, 0.97, 0.98, 0.99)

# stream-id offsets so samples, perturbations and mechanism draws never collide
_SAMPLE_BASE = 1_000_000
_PERTURB_BASE = 2_000_000
_MECH_BASE = 10_000_000


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Dataset plus the resampling protocol parameters."""

    data: np.ndarray
    name: str
    declared_range: BoundedRange
    sample_size: int = 1000
    outer_trials: int = 100
    inner_trials: int = 100
    eps_grid: tuple[float, ...] = (1.0,)
    quantile_grid: tuple[float, ...] = DEFAULT_QUANTILE_GRID
    methods: tuple[str, ...] = ("uqe", "emq")
    perturb_scale: float = 0.1
    beta: float = 1.001
    sum_beta: float = 1.001
    round_outputs: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 1 or data.size == 0:
            raise ValueError("data must be a non-empty 1-d array")
        if not 1 <= self.sample_size <= data.size:
            raise ValueError("sample size must be between 1 and the dataset size")
        if self.outer_trials < 1 or self.inner_trials < 1:
            raise ValueError("trial counts must be at least 1")
        for m in self.methods:
            if m not in ("uqe", "emq"):
                raise ValueError(f"unknown method: {m!r}")
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class ResultRecord:
    dataset: str
    experiment: str
    method: str
    eps: float
    q: float
    mae: float
    std: float
    n_outer: int
    n_inner: int
    runtime: float | None = None

    def as_dict(self, include_runtime: bool = False) -> dict:
        out = {
            "dataset": self.dataset,
            "experiment": self.experiment,
            "method": self.method,
            "eps": self.eps,
            "q": self.q,
            "mae": self.mae,
            "std": self.std,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
        }
        if include_runtime:
            out["runtime"] = self.runtime
        return out


def _draw_sample(spec: ExperimentSpec, trial: int) -> tuple[np.ndarray, np.ndarray]:
    """(unperturbed sample, perturbed copy) for one outer trial."""
    base = RandomSource(spec.seed)
    picker = base.spawn(_SAMPLE_BASE + trial)
    idx = picker.gen.choice(spec.data.size, size=spec.sample_size, replace=False)
    clean = spec.data[idx]
    noisy = perturb(clean, spec.perturb_scale, base.spawn(_PERTURB_BASE + trial))
    return clean, noisy


def _mech_rng(spec: ExperimentSpec, index: int) -> RandomSource:
    return RandomSource(spec.seed).spawn(_MECH_BASE + index)


def _estimate_one(
    method: str,
    noisy: np.ndarray,
    q: float,
    eps: float,
    spec: ExperimentSpec,
    rng: RandomSource,
) -> float:
    if method == "uqe":
        req = QuantileRequest(
            q=q, eps1=eps / 2.0, eps2=eps / 2.0, beta=spec.beta
        )
        data = Dataset(noisy, lower_bound=spec.declared_range.a)
        return estimate_quantile(data, req, rng).value
    return emq_estimate(noisy, spec.declared_range, q, eps, rng)


def run_quantile_experiment(spec: ExperimentSpec) -> list[ResultRecord]:
    """Mean absolute error per (method, eps, q) over the resampling protocol."""
    samples = [_draw_sample(spec, t) for t in range(spec.outer_trials)]
    rr = spec.declared_range
    clipped = [(clean, np.clip(noisy, rr.a, rr.b)) for clean, noisy in samples]
    records = []
    mech_index = 0
    for eps in spec.eps_grid:
        for method in spec.methods:
            for q in spec.quantile_grid:
                start = time.perf_counter()
                errs = np.empty(spec.outer_trials)
                for t, (clean, noisy) in enumerate(clipped):
                    est = _estimate_one(
                        method, noisy, q, eps, spec, _mech_rng(spec, mech_index)
                    )
                    mech_index += 1
                    if spec.round_outputs:
                        est = float(np.rint(est))
                    errs[t] = abs(est - true_quantile(clean, q))
                records.append(
                    ResultRecord(
                        dataset=spec.name,
                        experiment="quantile",
                        method=method,
                        eps=float(eps),
                        q=float(q),
                        mae=float(errs.mean()),
                        std=float(errs.std()),
                        n_outer=spec.outer_trials,
                        n_inner=1,
                        runtime=time.perf_counter() - start,
                    )
                )
    return records


def _sum_clip(
    method: str, noisy: np.ndarray, q: float, eps: float, spec: ExperimentSpec, rng: RandomSource
) -> float:
    if method == "uqe":
        req = QuantileRequest(q=q, eps1=eps / 2.0, eps2=eps / 2.0, beta=spec.sum_beta)
        clip = estimate_quantile(Dataset(noisy, lower_bound=0.0), req, rng).value
    else:
        clip = emq_estimate(noisy, spec.declared_range, q, eps, rng)
    if clip <= 0.0:
        clip = spec.declared_range.width * 1e-9
    return clip


def _sum_mae_for_q(
    spec: ExperimentSpec,
    samples: list[tuple[np.ndarray, np.ndarray]],
    method: str,
    eps: float,
    q: float,
    mech_offset: int,
) -> tuple[float, float]:
    per_outer = np.empty(spec.outer_trials)
    for t, (clean, noisy) in enumerate(samples):
        rng = _mech_rng(spec, mech_offset + 2 * t)
        clip = _sum_clip(method, noisy, q, eps, spec, rng)
        base = clipped_sum(noisy, clip)
        lap = sample(
            NoiseSpec(NoiseKind.LAPLACE, clip / eps),
            _mech_rng(spec, mech_offset + 2 * t + 1),
            size=spec.inner_trials,
        )
        per_outer[t] = np.abs(base + lap - clean.sum()).mean()
    return float(per_outer.mean()), float(per_outer.std())


def run_sum_experiment(spec: ExperimentSpec) -> list[ResultRecord]:
    """Private-sum errors: the clip method pays eps, the Laplace release pays eps.

    The grid method always clips at q = 0.99; the interval baseline reports
    its best q from EMQ_SUM_QS, as the head-to-head protocol prescribes.
    """
    raw = [_draw_sample(spec, t) for t in range(spec.outer_trials)]
    samples = [
        (clean, np.clip(noisy, 0.0, spec.declared_range.b)) for clean, noisy in raw
    ]
    records = []
    stride = 2 * spec.outer_trials
    block = 0
    for eps in spec.eps_grid:
        for method in spec.methods:
            start = time.perf_counter()
            if method == "uqe":
                mae, std = _sum_mae_for_q(spec, samples, method, eps, 0.99, block * stride)
                block += 1
                best_q = 0.99
            else:
                trio = []
                for q in EMQ_SUM_QS:
                    trio.append((*_sum_mae_for_q(spec, samples, method, eps, q, block * stride), q))
                    block += 1
                mae, std, best_q = min(trio)
            records.append(
                ResultRecord(
                    dataset=spec.name,
                    experiment="sum",
                    method=method,
                    eps=float(eps),
                    q=float(best_q),
                    mae=mae,
                    std=std,
                    n_outer=spec.outer_trials,
                    n_inner=spec.inner_trials,
                    runtime=time.perf_counter() - start,
                )
            )
    return records


def normalized_error_rows(records: list[ResultRecord]) -> list[dict]:
    """Per (eps, q): each method's MAE divided by the grid method's MAE."""
    base = {
        (r.eps, r.q): r.mae
        for r in records
        if r.method == "uqe" and r.experiment == "quantile"
    }
    rows = []
    for r in records:
        if r.experiment != "quantile":
            continue
        denom = base.get((r.eps, r.q))
        normalized = r.mae / denom if denom else float("nan")
        rows.append(
            {
                "eps": r.eps,
                "q": r.q,
                "method": r.method,
                "mae": r.mae,
                "normalized": normalized,
            }
        )
    return rows


def records_to_json(records: list[ResultRecord], include_runtime: bool = False) -> str:
    """Canonical JSON: fixed key order and separators, so reruns are comparable
    byte for byte. Runtimes vary between runs and are opt-in."""
    payload = [r.as_dict(include_runtime=include_runtime) for r in records]
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _write_csv(path: Path, rows: list[tuple[float, float]]) -> None:
    lines = ["value,density"]
    lines += [f"{v!r},{d!r}" for v, d in rows]
    path.write_text("\n".join(lines) + "\n")


def emit_pdf_figures(
    data,
    rng_range: BoundedRange,
    q: float,
    eps: float,
    beta: float,
    out_dir,
    label: str,
    lower: float = 0.0,
) -> dict[str, Path]:
    """Write the two step-density curves for one assumed range.

    The interval baseline's curve depends on the range; the grid estimator's
    curve is computed without ever seeing it, so running this twice with
    different ranges writes identical grid-curve files. Uses Gumbel noise with
    eps1 = eps2 = eps/2, the configuration whose halt distribution has a
    closed form.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid_x, emq_density = emq_pdf_curve(data, rng_range, q, eps)
    emq_path = out / f"emq_pdf_{label}.csv"
    _write_csv(emq_path, list(zip(grid_x.tolist(), emq_density.tolist())))

    curve = uqe_pdf_curve(data, lower, q, eps, beta=beta)
    rows = []
    for left, right, density in zip(
        curve.lefts.tolist(), curve.rights.tolist(), curve.density.tolist()
    ):
        rows.append((left, density))
        rows.append((right, density))
    uqe_path = out / f"uqe_pdf_{label}.csv"
    _write_csv(uqe_path, rows)
    return {"emq": emq_path, "uqe": uqe_path}
