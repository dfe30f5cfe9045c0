# %% [markdown]
# # Chaos on every ray
#
# `v2(a)` keeps each ray `y = omega z` invariant. On a ray the map is
# `z' = (2 + a)(1 - (1 + omega) z) z`, which becomes the logistic map with
# `mu = 2 + a` after rescaling `zeta = (1 + omega) z`.

# %%
import numpy as np

from qnso import find_fixed_points, iterate, lyapunov_exponent
from qnso import models

a = 2.0
P = models.build(models.v2(a))

# %%
omega, z = 1.5, 0.05
for _ in range(5):
    zeta = models.zeta_coordinate(omega, z)
    z = models.restrict_v2_to_Momega(omega, a, z)
    print(f"zeta={zeta:.6f} -> {models.zeta_coordinate(omega, z):.6f}  "
          f"logistic gives {(2 + a) * zeta * (1 - zeta):.6f}")

# %% [markdown]
# The orbit never leaves its ray: the ratio `y/z` is constant along it.

# %%
traj = iterate(P, [0.3, 0.42, 0.28], 1000)
print(np.ptp(traj.points[:, 1] / traj.points[:, 2]))

# %% [markdown]
# ## A line of fixed points
#
# Every point with `x = 1/(2 + a)` is fixed. The finder flags these points as
# non-isolated and reports the direction of the line.

# %%
for r in find_fixed_points(P)[:5]:
    print(r.point.coords, r.classification, r.isolated, r.direction)

# %%
print(models.v2_chaos_verdict(a, iters=50_000))
print(models.v2_chaos_verdict(1.0, iters=50_000))
