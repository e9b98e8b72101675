"""
Empirical lower-tail rates against the Poisson-family bound
===========================================================

-log P(H_n < a) / n^2 for the edge count of the unit-distance graph, at half
the mean level, for growing windows.  The horizontal line is the smallest
relative entropy among thinned Poisson processes whose mean density is a.
"""
import math

import matplotlib.pyplot as plt

from lowertail import RngStream, parse_spec, rate_curve, rate_upper_bound

spec = parse_spec("rgg:alpha=0,t=1")
a = math.pi / 4
ns = [3, 4, 5, 6]

ests = rate_curve(spec, a, ns, 1.0, trials=20000, rng=RngStream(9), target_hits=300)
bound = rate_upper_bound(spec, a, trials=2000, rng=RngStream(4), margin=1.0, scoring_side=10.0)

for e in ests:
    print(f"n={e.n:g}  trials={e.trials}  hits={e.hits}  rate={e.empirical_rate:.4f}")
print(f"lambda* = {bound.lambda_star:.4f}, bound = {bound.bound:.4f}")

# %%
rates = [e.empirical_rate for e in ests]
lo = [-math.log(e.ci95[1]) / e.n ** 2 for e in ests]
hi = [-math.log(e.ci95[0]) / e.n ** 2 for e in ests]
plt.errorbar(ns, rates, yerr=[[r - l for r, l in zip(rates, lo)], [h - r for r, h in zip(rates, hi)]],
             fmt="o-", label="empirical")
plt.axhline(bound.bound, color="k", ls="--", label="thinning bound")
plt.xlabel("n")
plt.ylabel("rate")
plt.legend()
plt.savefig("rate_curve.png", dpi=120)
