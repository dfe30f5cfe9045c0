# %% [markdown]
# # Period doubling on the 1-simplex
#
# On two species, `va(b)` moves the second coordinate by the logistic map with
# `mu = 2(1 - b)`. Scanning `b` reproduces the familiar cascade.

# %%
import math

import numpy as np

from qnso import bifurcation_scan, lyapunov_exponent
from qnso import models
from qnso.dynamics import logistic_map

# %%
bs = np.linspace(-0.1, -1.0, 10)
scan = bifurcation_scan(lambda b: models.build(models.va(b)), values=bs, parameter="b")
for b, p in zip(scan.values, scan.periods):
    print(f"b={b:+.2f}  mu={2 * (1 - b):.2f}  period={p if p else 'aperiodic'}")

# %% [markdown]
# ## Lyapunov exponents
#
# Negative in periodic windows, `ln 2` at `mu = 4`.

# %%
for mu in (2.5, 3.2, 3.5, 3.83, 4.0):
    est = lyapunov_exponent(logistic_map(mu), 0.3, 50_000, 1000)
    print(f"mu={mu}: {est.value:+.5f} +/- {est.stderr:.1e}")
print("ln 2 =", math.log(2))

# %% [markdown]
# The same exponent computed on the two-dimensional operator (tangent vectors
# kept on the simplex) agrees.

# %%
est = lyapunov_exponent(models.build(models.va(-1.0)), [0.7, 0.3], 50_000, 1000)
print(est.value)
