# %% [markdown]
# # Four fixed points and five invariant regions
#
# `v3(a)` splits the simplex along the line `z = ((3 - a)/a) y` into two open
# regions; together with the two edges and the line itself these five sets are
# invariant.

# %%
import numpy as np

from qnso import classify_fixed_point, models

a = 1.0
spec = models.v3(a)
P = models.build(spec)

# %%
for name, x in models.v3_fixed_points(a).items():
    rec = classify_fixed_point(P, x)
    eig = sorted(round(z.real, 6) for z in rec.eigenvalues)
    print(name, np.round(x, 6), eig, rec.classification, rec.annotation or "")

# %% [markdown]
# ## Invariance checks

# %%
for name in ("M1", "M2", "M3", "M4", "M5"):
    res = models.verify_invariance(spec, name, trials=1000)
    print(name, res.passed, res.identity_residual)

# %% [markdown]
# ## The ratio z/y
#
# Below the line the ratio increases to `(3 - a)/a`, above it the ratio
# decreases to the same value.

# %%
for x0 in ([0.5, 0.4, 0.1], [0.3, 0.1, 0.6]):
    rs = models.ratio_sequence(spec, x0, 60)
    print(rs.direction, rs.values[[0, 5, 10, 20, 60]], rs.gap)

# %% [markdown]
# ## Where do orbits go?
#
# Starting on the edges or on the line, the limit is a fixed point. Since each
# of those limits has multiplier -1, the approach is slow (about `1/sqrt(n)`).
# From the open regions the orbits accumulate near `s4` numerically.

# %%
for x0 in ([0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.4, 0.2, 0.4], [0.6, 0.3, 0.1]):
    print(x0, models.predict_limit(spec, x0).limit)

stats = models.conjecture_experiment(a, trials=100, steps=10_000, tol=1e-3)
print(stats.fraction_converged, stats.max_final_distance)
for n in (10_000, 40_000):
    s = models.conjecture_experiment(a, trials=20, steps=n, tol=1e-3)
    print(n, s.max_final_distance)
