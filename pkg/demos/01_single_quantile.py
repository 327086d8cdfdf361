"""
A first private quantile
========================

Estimate the median and the 90th percentile of a skewed sample with a
public lower bound of 0, and watch the error shrink as the budget grows.
"""

import numpy as np

from uqe import Dataset, QuantileRequest, RandomSource, estimate_quantile

rng = RandomSource(seed=42)
incomes = np.round(rng.gen.lognormal(mean=10.0, sigma=0.8, size=5000), 2)
data = Dataset(incomes, lower_bound=0.0)

print(f"n = {incomes.size}, true median = {np.quantile(incomes, 0.5):,.0f}, "
      f"true p90 = {np.quantile(incomes, 0.9):,.0f}")
print()
print(f"{'eps':>6} {'q':>5} {'estimate':>12} {'true':>12} {'rel err':>8}")

for eps in (0.1, 0.5, 1.0, 4.0):
    for q in (0.5, 0.9):
        req = QuantileRequest.even_split(q=q, eps=eps)
        est = estimate_quantile(data, req, rng.spawn(int(eps * 100) + int(q * 10)))
        truth = np.quantile(incomes, q)
        rel = abs(est.value - truth) / truth
        print(f"{eps:>6} {q:>5} {est.value:>12,.0f} {truth:>12,.0f} {rel:>8.1%}")

# the estimate is always a grid candidate beta^k + lower - 1, so even a
# noiseless run is quantized; beta controls that resolution
req = QuantileRequest.even_split(q=0.5, eps=1.0, beta=1.1)
coarse = estimate_quantile(data, req, rng.spawn(999))
print()
print(f"same median with a coarse grid (beta = 1.1): {coarse.value:,.0f} "
      f"(halt index {coarse.halt_index})")
