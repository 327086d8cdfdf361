"""
What does a run cost?
=====================

The accountant answers three questions about one AboveThreshold run: the
plain DP bound, the zCDP rate, and the range-bounded constant that gives a
tighter zCDP conversion. Structure buys a lot: monotonic counting queries
cost eps1 + eps2 instead of eps1 + 2*eps2.
"""

from uqe import (
    NeighborModel,
    NoiseKind,
    QueryClass,
    compose_zcdp,
    guarantee_for,
    multi_quantile_guarantee,
    zcdp_of_dp,
)

e1 = e2 = 0.5

print("one run, eps1 = eps2 = 0.5, swap neighbors")
for qc in (QueryClass.GENERAL, QueryClass.MONOTONIC):
    g = guarantee_for(qc, NeighborModel.SWAP, NoiseKind.EXPONENTIAL, e1, e2)
    print(f"  {qc.value:<22} eps = {g.eps_dp:.3f}  gamma = {g.gamma_range_bounded}  "
          f"rho = {g.rho_zcdp}")

# add-subtract neighbors change the query sensitivity structure: the
# rank-target queries are counts minus q*n, and the bound depends on q
for q in (0.5, 0.9, 0.99):
    g = guarantee_for(
        QueryClass.COUNT_MINUS_QN,
        NeighborModel.ADD_SUBTRACT,
        NoiseKind.EXPONENTIAL,
        e1,
        e2,
        q=q,
    )
    print(f"  count-minus-qn (q = {q:<4}) eps = {g.eps_dp:.3f}")

# range-bounded beats the generic DP-to-zCDP conversion
mono = guarantee_for(QueryClass.MONOTONIC, NeighborModel.SWAP, NoiseKind.EXPONENTIAL, e1, e2)
print()
print(f"zCDP from the DP bound alone: {zcdp_of_dp(mono.eps_dp):.5f}")
print(f"zCDP via range-boundedness:   {mono.rho_zcdp:.5f}")

# m quantiles jointly: ceil(log2(m+1)) recursion levels, each level paying
# for one capped run and the restarted runs on the complementary slices
print()
print(f"{'m':>4} {'levels':>7} {'total eps':>10} {'total rho':>10}")
for m in (1, 3, 7, 15, 31):
    budget = multi_quantile_guarantee(m, e1, e2, NoiseKind.EXPONENTIAL)
    print(f"{m:>4} {budget.levels:>7} {budget.total.eps_dp:>10.2f} "
          f"{budget.total.rho_zcdp:>10.4f}")

# composing k median releases under a global rho budget
rho_each = mono.rho_zcdp
k = 1
while compose_zcdp([rho_each] * (k + 1)) <= 1.0:
    k += 1
print()
print(f"runs of the eps = 1 median that fit inside rho = 1.0: {k} "
      f"(naive eps-composition would allow only 1)")
