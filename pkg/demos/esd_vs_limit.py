"""
Sample spectra against their limits
===================================

Simulate an MA(1) sample, form G_u G_u^T for several lags and compare the
ESD moments with the exact limits. Beyond the MA order the first two limit
moments no longer depend on the lag and the ESDs of different lags are close;
the third moment still moves slightly with the lag.
"""

from fractions import Fraction

import numpy as np

from hdautocov import ModelSpec, limit_moments
from hdautocov.simkit import autocov_set, esd, eval_sym_poly, ks_distance, simulate_ma

model = ModelSpec.scalar((Fraction(1, 2),), 1, name="ma1")
n = p = 400
X = simulate_ma(model, n, p, seed=11)
g = autocov_set(X, range(0, 5))

esds = {}
for u in range(1, 5):
    F = esd(eval_sym_poly(f"G{u}*G{u}t", g))
    esds[u] = F
    theory = [float(v) for v in limit_moments(f"G{u}*G{u}t", model, 3)]
    sample = [F.moment(k) for k in (1, 2, 3)]
    print(f"u={u}: limit {np.round(theory, 3)}, sample {np.round(sample, 3)}")

print("KS distances between lags")
for u in range(1, 4):
    print(f"  lag {u} vs {u + 1}: {ks_distance(esds[u], esds[u + 1]):.4f}")
