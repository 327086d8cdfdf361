"""
No bounds, and several quantiles at once
========================================

Two things the grid search handles that a bounded-range mechanism cannot:
data with no declared bounds at all (two runs, one per sign), and a joint
release of several quantiles whose estimates never cross.
"""

import numpy as np

from uqe import (
    Dataset,
    QuantileRequest,
    RandomSource,
    estimate_multiple_quantiles,
    estimate_quantile_unbounded,
)

rng = RandomSource(2024)

# temperatures: signed, no natural bounds to declare
temps = rng.gen.normal(loc=-3.0, scale=12.0, size=4000)
data = Dataset(temps)

for q in (0.25, 0.5, 0.9):
    req = QuantileRequest.even_split(q=q, eps=1.0)
    est = estimate_quantile_unbounded(data, req, rng.spawn(int(q * 100)))
    side = "second (negative) run" if est.second_ran else "first run"
    print(f"q = {q}: estimate {est.value:>8.2f}  true {np.quantile(temps, q):>8.2f}  "
          f"settled by the {side}")

# joint quartiles: the recursion estimates the middle level first, splits
# the data around it, and recurses; children inherit caps from the parent,
# which forces the joint output to be sorted
durations = rng.gen.gamma(shape=2.0, scale=30.0, size=6000)
bounded = Dataset(durations, lower_bound=0.0)
qs = [0.1, 0.25, 0.5, 0.75, 0.9]

req = QuantileRequest.even_split(q=qs[0], eps=1.0)
result = estimate_multiple_quantiles(bounded, qs, req, rng.spawn(555))

print()
print(f"joint release of {len(qs)} quantiles "
      f"(recursion depth {result.budget.levels}, "
      f"total eps {result.budget.total.eps_dp:.1f})")
print(f"{'q':>6} {'estimate':>10} {'true':>10}")
for q, est in zip(result.quantiles, result.estimates):
    print(f"{q:>6} {est:>10.2f} {np.quantile(durations, q):>10.2f}")
assert list(result.estimates) == sorted(result.estimates)
print("estimates are nondecreasing, as constructed")
