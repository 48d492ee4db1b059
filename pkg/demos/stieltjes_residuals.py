"""
Stieltjes equation residuals
============================

Truncated moment series for the Stieltjes transform plugged into the
biquadratic equation of the symmetrized lag-1 law, the sample covariance
fixed-point equation and the cumulant generating function identity. The
residuals shrink as the truncation order grows.
"""

from fractions import Fraction

from hdautocov.laws import (StieltjesPoint, biquadratic_residual, cfp_moments, cgf_stieltjes_check, mp_moment,
                            silverstein_residual, stieltjes_from_moments)

z = 4j
for N in (4, 8, 12, 20, 40):
    m_sym = stieltjes_from_moments((1,) + cfp_moments(1, (1,), 1, N), z)
    m_mp = stieltjes_from_moments([1] + [mp_moment(h, 1) for h in range(1, N + 1)], z)
    bq = abs(biquadratic_residual(StieltjesPoint(z, m_sym), 1))
    sv = abs(silverstein_residual(StieltjesPoint(z, m_mp), 1, [(1.0, 1.0)]))
    cg = abs(cgf_stieltjes_check(1, (1, Fraction(1, 2)), 1, 6j, N))
    print(f"N={N:2d}: biquadratic {bq:.2e}  fixed point {sv:.2e}  cgf {cg:.2e}")
