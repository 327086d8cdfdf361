"""Private sums and means of nonnegative data via a privately chosen clip.

Two stages, eps each: estimate a high quantile of the data to use as the
clipping bound, then release the clipped sum plus Laplace noise scaled to the
clip. Composition gives 2*eps total. The clip stage can use either the grid
estimator (no range needed) or the bounded-range baseline.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .emq import BoundedRange, emq_estimate
from .noise import NoiseKind, NoiseSpec, RandomSource, sample
from .quantile import Dataset, QuantileRequest, estimate_quantile

__all__ = [
    "ClipMethod",
    "SumConfig",
    "SumResult",
    "clipped_sum",
    "dp_sum",
    "dp_mean",
]


class ClipMethod(enum.Enum):
    UQE = "uqe"
    EMQ = "emq"

    @classmethod
    def parse(cls, name: str) -> "ClipMethod":
        key = name.strip().lower()
        for method in cls:
            if key == method.value:
                return method
        raise ValueError(f"unknown clip method: {name!r}")


@dataclass(frozen=True)
class SumConfig:
    """Budget and clip-stage parameters for one private sum.

    threshold_mode moves the quantile stage's halting threshold off q*n to
    trade bias for variance: "n" demands a clip above (a noisy version of)
    the whole sample, "n-plus-inv-eps" adds 1/eps more headroom.
    """

    eps: float
    q: float = 0.99
    method: ClipMethod = ClipMethod.UQE
    beta: float = 1.01
    emq_range: BoundedRange | None = None
    threshold_mode: str | None = None

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        if self.method is ClipMethod.EMQ and self.emq_range is None:
            raise ValueError("the EMQ clip method needs a declared range")
        if self.threshold_mode not in (None, "n", "n-plus-inv-eps"):
            raise ValueError('threshold_mode must be None, "n" or "n-plus-inv-eps"')


@dataclass(frozen=True)
class SumResult:
    estimate: float
    clip: float
    epsilon_total: float
    clip_clamped: bool
    clip_exhausted: bool

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "clip": self.clip,
            "epsilon_total": self.epsilon_total,
            "clip_clamped": self.clip_clamped,
            "clip_exhausted": self.clip_exhausted,
        }


def clipped_sum(values, clip: float) -> float:
    """Sum of min(x_j, clip); nondecreasing in clip."""
    return float(np.minimum(np.asarray(values, dtype=float), clip).sum())


def _clip_floor(values: np.ndarray, cfg: SumConfig) -> float:
    width = cfg.emq_range.width if cfg.emq_range is not None else None
    if width is None:
        spread = float(values.max() - values.min())
        width = spread if spread > 0 else 1.0
    return width * 1e-9


def _choose_clip(
    values: np.ndarray,
    cfg: SumConfig,
    rng: RandomSource | None,
    noiseless: bool,
    clip_override: float | None,
) -> tuple[float, bool]:
    """Returns (clip, exhausted flag) before the positivity clamp."""
    if clip_override is not None:
        return float(clip_override), False
    if cfg.method is ClipMethod.UQE:
        n = values.size
        threshold = None
        if cfg.threshold_mode == "n":
            threshold = float(n)
        elif cfg.threshold_mode == "n-plus-inv-eps":
            threshold = float(n) + 1.0 / cfg.eps
        req = QuantileRequest(
            q=cfg.q, eps1=cfg.eps / 2.0, eps2=cfg.eps / 2.0, beta=cfg.beta
        )
        est = estimate_quantile(
            Dataset(values, lower_bound=0.0), req, rng, noiseless=noiseless, threshold=threshold
        )
        return est.value, est.exhausted
    if noiseless:
        raise ValueError("noiseless mode is only supported for the UQE clip method")
    return emq_estimate(values, cfg.emq_range, cfg.q, cfg.eps, rng), False


def dp_sum(
    data,
    cfg: SumConfig,
    rng: RandomSource | None = None,
    *,
    noiseless: bool = False,
    clip_override: float | None = None,
) -> SumResult:
    """Private clip at quantile q (budget eps), then Laplace(clip/eps) + clipped sum.

    noiseless skips both noise stages (deterministic clip, no Laplace) for
    oracle tests; clip_override skips the quantile stage entirely.
    """
    values = np.asarray(data, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("data must be a non-empty 1-d sequence")
    if values.min() < 0:
        raise ValueError("the sum procedure assumes nonnegative data")
    if not noiseless and rng is None:
        raise ValueError("a RandomSource is required unless noiseless=True")

    clip, exhausted = _choose_clip(values, cfg, rng, noiseless, clip_override)
    clamped = False
    if clip <= 0.0:
        clip = _clip_floor(values, cfg)
        clamped = True

    total = clipped_sum(values, clip)
    if not noiseless:
        total += sample(NoiseSpec(NoiseKind.LAPLACE, clip / cfg.eps), rng)
    return SumResult(
        estimate=float(total),
        clip=float(clip),
        epsilon_total=2.0 * cfg.eps,
        clip_clamped=clamped,
        clip_exhausted=exhausted,
    )


def dp_mean(
    data,
    cfg: SumConfig,
    rng: RandomSource | None = None,
    *,
    noiseless: bool = False,
    clip_override: float | None = None,
) -> SumResult:
    """dp_sum / n; n is public under swap neighbors."""
    values = np.asarray(data, dtype=float)
    result = dp_sum(values, cfg, rng, noiseless=noiseless, clip_override=clip_override)
    return SumResult(
        estimate=result.estimate / values.size,
        clip=result.clip,
        epsilon_total=result.epsilon_total,
        clip_clamped=result.clip_clamped,
        clip_exhausted=result.clip_exhausted,
    )
