"""
Exact limit moments
===================

Limit spectral moments of symmetric polynomials in sample autocovariances,
computed in rational arithmetic for scalar MA models and in floating point
for matrix-coefficient models.
"""

from fractions import Fraction

from hdautocov import ModelSpec, builtin_model, limit_moments, lsd_mean_variance
from hdautocov.laws import free_bessel_moment, mp_moment


def show(label, values):
    print(f"{label:12s}", ", ".join(str(v) for v in values))


# White noise at y = 1/2: G0 follows Marchenko-Pastur, G1 G1^T a scaled free Bessel law
y = Fraction(1, 2)
wn = ModelSpec.scalar((), y)
show("G0", limit_moments("G0", wn, 5))
show("MP", [mp_moment(h, y) for h in range(1, 6)])
show("G1*G1t", limit_moments("G1*G1t", wn, 4))
show("Bessel", [y ** (2 * h) * free_bessel_moment(h, y) for h in range(1, 5)])

# MA(1) with lambda_1 = 1/2: the symmetrized lag-1 matrix
ma1 = ModelSpec.scalar((Fraction(1, 2),), 1)
show("(G1+G1t)/2", limit_moments("(G1 + G1t)/2", ma1, 4))

# Model 4 (psi_1 = C, psi_2 = D): mean and variance of the LSD per lag
m4 = builtin_model(4)
for u in range(1, 5):
    mean, var = lsd_mean_variance(f"G{u}*G{u}t", m4)
    print(f"model 4, G{u}*G{u}t: mean {mean:.3f}, variance {var:.3f}")
