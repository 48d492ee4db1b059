"""
Order determination
===================

MA orders from coincidence of the ESDs of G_u G_u^T across lags, and AR
orders from the same check on fitted residuals. Thresholds come from white
noise simulated at the same dimensions. Small replicate counts keep this
quick; the defaults use 50.
"""

from hdautocov import builtin_model
from hdautocov.inference import ThresholdConfig, ar_order_estimate, ma_order_estimate
from hdautocov.simkit import simulate_ivar, simulate_ma

cfg = ThresholdConfig(R=20)
for number in (1, 2, 4):
    X = simulate_ma(builtin_model(number), 200, 200, seed=3)
    rep = ma_order_estimate(X, threshold_config=cfg)
    print(f"model {number}: q_hat = {rep.estimate}, threshold {rep.thresholds[0]:.3f}")
    print("  distances to the last lag:", [round(row[-1], 3) for row in rep.distances])

X = simulate_ivar(builtin_model(5), 300, 300, seed=3)
rep = ar_order_estimate(X, s_max=2, threshold_config=cfg)
print(f"model 5: k_hat = {rep.estimate}")
print("  residual distances", [round(d, 4) for d in rep.distances])
print("  thresholds        ", [round(t, 4) for t in rep.thresholds])
