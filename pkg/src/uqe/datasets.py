"""Synthetic data generators, CSV ingestion and the reference quantile."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .noise import RandomSource

__all__ = [
    "generate_synthetic",
    "load_csv",
    "perturb",
    "true_quantile",
]

SYNTHETIC_KINDS = ("uniform", "gaussian")


def generate_synthetic(kind: str, n: int, rng: RandomSource) -> np.ndarray:
    """uniform[-5, 5] or gaussian(0, 5) draws, the two synthetic benchmarks."""
    if n < 1:
        raise ValueError("n must be at least 1")
    key = kind.strip().lower()
    if key == "uniform":
        return rng.gen.uniform(-5.0, 5.0, n)
    if key == "gaussian":
        return rng.gen.normal(0.0, 5.0, n)
    raise ValueError(f"unknown synthetic kind: {kind!r} (choose from {SYNTHETIC_KINDS})")


def load_csv(
    path,
    column: str,
    perturb_scale: float = 0.0,
    rng: RandomSource | None = None,
) -> np.ndarray:
    """Read one numeric column; parse failures report the offending row.

    perturb_scale > 0 adds gaussian noise to every value on load (the
    benchmark harness instead perturbs per resample and keeps the original
    values for ground truth, so it calls this with the default 0).
    """
    path = Path(path)
    values: list[float] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise ValueError(
                f"column {column!r} not found in {path} "
                f"(available: {reader.fieldnames})"
            )
        for row_number, row in enumerate(reader, start=2):
            raw = row[column]
            try:
                values.append(float(raw))
            except (TypeError, ValueError):
                raise ValueError(
                    f"{path}, row {row_number}: cannot parse {raw!r} as a number"
                ) from None
    if not values:
        raise ValueError(f"{path} has no data rows")
    out = np.asarray(values, dtype=float)
    if perturb_scale > 0.0:
        if rng is None:
            raise ValueError("perturbation needs a RandomSource")
        out = perturb(out, perturb_scale, rng)
    return out


def perturb(values, scale: float, rng: RandomSource) -> np.ndarray:
    """Gaussian jitter used to break ties for the interval-based baseline."""
    vals = np.asarray(values, dtype=float)
    if scale < 0:
        raise ValueError("scale must be nonnegative")
    if scale == 0.0:
        return vals.copy()
    return vals + rng.gen.normal(0.0, scale, vals.shape)


def true_quantile(values, q: float) -> float:
    """Reference quantile: linear interpolation between order statistics."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    return float(np.quantile(np.asarray(values, dtype=float), q))
