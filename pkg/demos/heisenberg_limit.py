"""Surface curvature of the Heisenberg plane x3 = 0 at (1, 1) as L grows.

Prints K^{Σ,L}, its gap to the closed-form limit A1 and the local log-log
slope, then the two-parameter a + b/√L fit over the whole grid.
"""

import numpy as np

from subrv.bcv import BcvParams
from subrv.functionals import fit_sqrt_limit, observed_rate
from subrv.jets import coordinates
from subrv.surface import SurfaceDef, a1_limit, gauss_sectional

x3 = coordinates(3)[2]
surf = SurfaceDef(x3, BcvParams(0.0, 1.0))
point = np.array([1.0, 1.0, 0.0])
A1 = float(a1_limit(surf, point))

grid = [10.0**k for k in range(2, 9)]
samples = [(L, float(gauss_sectional(surf.with_L(L), point)[2])) for L in grid]

print(f"A1 = {A1:.12f}")
print(f"{'L':>8} {'K':>18} {'|K - A1|':>10}")
for L, K in samples:
    print(f"{L:8.0e} {K:18.12f} {abs(K - A1):10.2e}")
print(f"observed rate of |K - A1|: {observed_rate(samples, A1):.3f}")
fit = fit_sqrt_limit(samples)
print(f"a + b/sqrt(L) fit: a = {fit.a:.8f}, b = {fit.b:.4f}, rate = {fit.rate:.3f}")
