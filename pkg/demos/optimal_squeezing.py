"""Find the squeezing that maximizes the d = 3 Bell value.

Scan r on a coarse grid, then refine the peak with a bounded scalar search.
Expect r_m near 1.41 and a value near 2.9064, above both the d = 3
maximally entangled state with QFT settings (2.8729) and the infinite
squeezing limit.  Takes about a minute.

    python3 demos/optimal_squeezing.py
"""
import numpy as np
from scipy.optimize import minimize_scalar

from sudbell.bell import bell_value_qft
from sudbell.correlation import BipartiteState
from sudbell.cv_map import INFINITE_SQUEEZING, tmsv_mapped_pure
from sudbell.optimizer import multistart_maximize

d = 3


def value(r, restarts=3):
    return multistart_maximize(tmsv_mapped_pure(r, d), n_restarts=restarts, seed=0).value


grid = np.arange(0.6, 2.21, 0.2)
coarse = [value(r) for r in grid]
for r, v in zip(grid, coarse):
    print(f"r={r:4.2f}  B={v:.5f}")
k = int(np.argmax(coarse))
res = minimize_scalar(lambda r: -value(r), bounds=(grid[k - 1], grid[k + 1]),
                      method="bounded", options={"xatol": 1e-3})
print(f"\noptimal r_m = {res.x:.3f}, B = {-res.fun:.5f}")
print(f"infinite squeezing: {value(INFINITE_SQUEEZING):.5f}")
print(f"maximally entangled, QFT settings: {bell_value_qft(BipartiteState.maximally_entangled(d)):.5f}")
