# %% [markdown]
# # Which cubic matrices keep the simplex invariant?
#
# A quadratic operator acts by `x'_k = sum_ij P[i,j,k] x_i x_j`. Stochastic
# matrices (nonnegative rows summing to one) keep the simplex invariant by
# convexity. Here we look at matrices with negative off-diagonal entries.

# %%
import numpy as np

from qnso import check_conditions, check_edge_necessity, preservation_oracle
from qnso import models
from qnso.operator import apply

# %% [markdown]
# ## A three-species operator with negative coefficients
#
# `v2(a)` has `P[0,1,0] = P[0,2,0] = -a/2`. For `a <= 1` it meets the
# sufficient lower bound; for `a = 2` only the necessary edge bound holds,
# yet the operator still preserves the simplex.

# %%
for a in (1.0, 2.0):
    P = models.build(models.v2(a))
    rep = check_conditions(P)
    verdict = preservation_oracle(P, samples=10_000)
    print(f"a={a}: sufficient={rep.sufficient} necessary={rep.necessary} "
          f"preserved={verdict.preserved} ({verdict.samples_used} samples, "
          f"worst margin {verdict.worst_margin:.3g})")

# %% [markdown]
# ## The necessary conditions are not enough
#
# This matrix passes the row-sum, diagonal and edge checks but sends an
# interior point outside the simplex.

# %%
P = models.non_preserving_example()
print(check_conditions(P).necessary, check_edge_necessity(P).passed)
print(apply(P, [0.5, 0.25, 0.25]))

verdict = preservation_oracle(P, samples=10_000)
print(verdict.preserved, verdict.strategy, verdict.counterexample.coords, verdict.value)

# %% [markdown]
# The oracle's refinement step finds the worst point, the barycenter, where
# the first coordinate of the image is -1/3.
