"""
Spectral limits of high-dimensional sample autocovariance matrices.

Exact free-probability limit moments for symmetric polynomials in the
sample autocovariances of MA(q) processes, closed-form laws, a Monte Carlo
toolkit and order-determination / white-noise procedures.
"""

__version__ = "0.1.0"

from .errors import (CapacityError, ConfigurationError, DomainError, HDAutocovError, NumericalError,
                     OracleError, SingularityError, ValidationError)
from .gammapoly import GammaPolynomial, parse_polynomial
from .models import IVARSpec, MatrixCoeffs, ModelSpec, ScalarCoeffs, builtin_model
from .ncpart import (SetPartition, PairPartition, enumerate_noncrossing, enumerate_noncrossing_pairings,
                     free_cumulants_to_moments, kreweras_complement, moments_to_free_cumulants)
from .freelimit import (Capacity, TraceFunctional, limit_moment, limit_moments, lsd_equal_beyond_q_check,
                        lsd_mean_variance, matrix_trace_functional, scalar_trace_functional)
from .laws import cfp_cumulant, cfp_moments, free_bessel_moment, mp_moment
from .simkit import (ECDF, SampleMatrix, esd, ks_distance, sample_autocov, simulate_ivar, simulate_ma,
                     trace_statistic)
from .inference import ar_order_estimate, ma_order_estimate, white_noise_trace_test
