import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdautocov.errors import CapacityError, ConfigurationError, DomainError, ValidationError
from hdautocov.freelimit import (Capacity, FreeWord, a_state, c_state, evaluate_free_word, expand_gamma_polynomial,
                                 limit_moment, limit_moments, lsd_equal_beyond_q_check, lsd_mean_variance,
                                 matrix_trace_functional, scalar_trace_functional, semicircle_moment)
from hdautocov.gammapoly import GammaPolynomial, parse_polynomial
from hdautocov.models import C_matrix, D_matrix, MatrixCoeffs, ModelSpec, builtin_model
from hdautocov.ncpart import enumerate_noncrossing_pairings, kreweras_complement


def test_semicircle_moments():
    assert [semicircle_moment(k) for k in range(9)] == [1, 0, 1, 0, 2, 0, 5, 0, 14]
    with pytest.raises(DomainError):
        semicircle_moment(-1)


def test_c_state():
    y = Fraction(1, 2)
    assert c_state((), y) == 1
    assert c_state((1, -1), y) == Fraction(2, 3)
    assert c_state((1, 1), y) == 0
    assert c_state((0,), 1) == Fraction(1, 2)


def test_trace_functionals_model4():
    tau = matrix_trace_functional(builtin_model(4), p=100)
    assert tau(()) == 1
    assert tau([(1, False), (2, False)]) == 0.0
    assert tau([(2, False), (2, False)]) == 1.0
    assert tau([(1, False), (1, True)]) == 1.0
    for p in (10, 12, 100):
        assert matrix_trace_functional(builtin_model(4), p)([(1, False), (2, False)]) == 0
    # odd p: D fixes the middle coordinate, where C is -1
    assert matrix_trace_functional(builtin_model(4), 11)([(1, False), (2, False)]) == pytest.approx(-1 / 11)
    with pytest.raises(DomainError):
        tau([(3, False)])
    y = Fraction(1)
    assert a_state([(2, False), (2, True)], tau, y) == 0.5
    assert a_state((), tau, y) == 1


def test_matrix_functional_generator_errors():
    bad = MatrixCoeffs(2, lambda p: [np.eye(p)], "short")
    with pytest.raises(ConfigurationError):
        matrix_trace_functional(ModelSpec(bad), 4)
    wrong = MatrixCoeffs(1, lambda p: [np.eye(p + 1)], "shape")
    with pytest.raises(ConfigurationError):
        matrix_trace_functional(ModelSpec(wrong), 4)


def test_dense_matrix_functional_matches_sparse():
    dense = MatrixCoeffs(2, lambda p: [C_matrix(p).toarray(), D_matrix(p).toarray()], "dense4")
    t1 = matrix_trace_functional(ModelSpec(dense), 64)
    t2 = matrix_trace_functional(builtin_model(4), 64)
    for word in itertools.product([(1, False), (1, True), (2, False), (2, True), (0, False)], repeat=4):
        assert t1(word) == pytest.approx(t2(word))


def test_expansion_counts_and_prefactor():
    m = ModelSpec.scalar((Fraction(1, 2),), y=Fraction(1, 2))
    words = expand_gamma_polynomial(parse_polynomial("G1*G1t"), m, 1)
    assert len(words) == 2 ** 4
    assert all(w.prefactor == Fraction(9, 4) for w in words)
    words = expand_gamma_polynomial(parse_polynomial("G1*G1t + G2*G2t"), m, 2)
    assert len(words) == 4 * 2 ** 8
    with pytest.raises(CapacityError):
        expand_gamma_polynomial(parse_polynomial("G1*G1t"), m, 2, Capacity(max_words=100))
    with pytest.raises(ValidationError):
        expand_gamma_polynomial(parse_polynomial("G1"), m, 1)


def test_expansion_subscripts():
    # gamma_1 with j = 1, j' = 0 carries shift j - j' + u = 2; its adjoint carries -2
    m = ModelSpec.scalar((1,))
    words = expand_gamma_polynomial(parse_polynomial("G1*G1t"), m, 1)
    w = next(w for w in words if w.d_words[0] == ((1, False),) and w.d_words[1][0] == (0, True))
    assert w.c_subs[0] == 2
    assert w.star().c_subs == tuple(-b for b in reversed(w.c_subs))


def pairing_oracle(w: FreeWord, tau, y):
    """phi(s x_1 s x_2 ... s x_2n) as a sum over non-crossing pairings of the 2n semicircles."""
    n = w.n
    if n == 0:
        return w.prefactor * a_state(w.d_words[0], tau, y)
    # cyclically move d_0 to the end: x = (b_1, d_1, ..., b_n, d_n d_0)
    xs = []
    for i in range(n):
        xs.append(("c", (w.c_subs[i],)))
        d = w.d_words[i + 1] + (w.d_words[0] if i == n - 1 else ())
        xs.append(("a", d))
    total = 0
    for sigma in enumerate_noncrossing_pairings(2 * n):
        val = 1
        for block in kreweras_complement(sigma).blocks:
            kinds = {xs[i - 1][0] for i in block}
            assert len(kinds) == 1
            letters = tuple(itertools.chain.from_iterable(xs[i - 1][1] for i in block))
            val *= c_state(letters, y) if kinds == {"c"} else a_state(letters, tau, y)
            if val == 0:
                break
        total += val
    return w.prefactor * total


@pytest.mark.parametrize("poly,power", [("G1*G1t", 1), ("G1*G1t", 2), ("G0*G1 + G1t*G0", 1), ("G1 + G1t", 3),
                                        ("G2*G1t + G1*G2t", 1)])
def test_word_evaluation_matches_pairing_oracle(poly, power):
    m = ModelSpec.scalar((Fraction(1, 2), Fraction(-1, 3)), y=Fraction(2, 3))
    tau = scalar_trace_functional(m.coeffs.lambdas)
    for w in expand_gamma_polynomial(parse_polynomial(poly), m, power):
        assert evaluate_free_word(w, tau, m.y) == pairing_oracle(w, tau, m.y)


def test_pairing_oracle_matrix_model():
    m = builtin_model(4, Fraction(1))
    tau = matrix_trace_functional(m, 16)
    words = expand_gamma_polynomial(parse_polynomial("G1*G1t"), m, 1)
    a = sum(evaluate_free_word(w, tau, m.y) for w in words)
    b = sum(pairing_oracle(w, tau, m.y) for w in words)
    assert a == pytest.approx(b)


lam_strategy = st.lists(st.fractions(min_value=-1, max_value=1, max_denominator=5), min_size=0, max_size=2)
y_strategy = st.fractions(min_value=Fraction(1, 4), max_value=3, max_denominator=4)
poly_strategy = st.sampled_from(["G0", "G1*G1t", "G1 + G1t", "G2*G2t + G1*G1t", "G0*G1 + G1t*G0",
                                 "G1*G2t + G2*G1t", "G1t*G1 - G0"])


@settings(max_examples=25)
@given(lam_strategy, y_strategy, poly_strategy, st.integers(1, 2))
def test_routes_agree_exactly(lams, y, poly, h):
    m = ModelSpec.scalar(tuple(lams), y)
    a = limit_moment(poly, m, h=h, method="factorized")
    b = limit_moment(poly, m, h=h, method="blocks")
    c = limit_moment(poly, m, h=h, method="words")
    assert a == b == c
    assert isinstance(a, (int, Fraction))


def test_routes_agree_matrix_model():
    m = builtin_model(4)
    tau = matrix_trace_functional(m, 64)
    for poly in ["G1*G1t", "G1*G1t + G2*G2t"]:
        for h in (1, 2):
            a = limit_moment(poly, m, tau, h, method="blocks")
            b = limit_moment(poly, m, tau, h, method="words")
            assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(ConfigurationError):
        limit_moment("G1*G1t", m, tau, 1, method="factorized")


def test_known_values():
    m1 = ModelSpec.scalar((), y=1)
    assert limit_moments("G0", m1, 4) == (1, 2, 5, 14)
    assert limit_moments("G1*G1t", m1, 3) == (1, 3, 12)
    # q=0, symmetrized lag: semicircle-type law with variance y/2
    assert limit_moments("(G1 + G1t)/2", m1, 4) == (0, Fraction(1, 2), 0, Fraction(7, 8))


def test_model4_table_values():
    m = builtin_model(4)
    mean, var = lsd_mean_variance("G1*G1t", m)
    assert mean == pytest.approx(11, abs=1e-9)
    assert var == pytest.approx(282, abs=1e-6)
    assert lsd_mean_variance("G1*G1t + G2*G2t", m)[0] == pytest.approx(21, abs=1e-9)


def test_capacity_and_validation():
    m = ModelSpec.scalar((), y=1)
    with pytest.raises(CapacityError):
        limit_moment("G1*G1t", m, h=5)
    assert limit_moment("G1*G1t", m, h=5, capacity=Capacity(max_degree=10)) == 273
    with pytest.raises(CapacityError):
        limit_moment("G0", ModelSpec.scalar((1, 1, 1, 1)), h=1)
    with pytest.raises(ValidationError):
        limit_moment("G1", m)
    with pytest.raises(ValidationError):
        limit_moment("G0", m, method="bogus")
    with pytest.raises(CapacityError):
        limit_moment("G1*G1t", builtin_model(4), matrix_trace_functional(builtin_model(4), 8), 4,
                     method="blocks", capacity=Capacity(max_block_enumeration=1000))


def test_constant_term():
    m = ModelSpec.scalar((), y=Fraction(1, 2))
    assert limit_moment("G0 + 1", m, h=1) == 2
    assert limit_moment(parse_polynomial("G0 + 1"), m, h=2) == limit_moment("G0*G0", m) + 2 * limit_moment("G0", m) + 1


def test_lag_coincidence():
    m = ModelSpec.scalar((Fraction(1, 2),), y=1)
    assert lsd_equal_beyond_q_check(None, m, 2, 3, 2)
    assert lsd_equal_beyond_q_check(None, ModelSpec.scalar((), y=1), 1, 4, 4)
    assert not lsd_equal_beyond_q_check(None, m, 1, 2, 1)
    assert lsd_equal_beyond_q_check("G{u}*G{u}t + G{u1}*G{u1}t", m, 2, 4, 2)
    assert not lsd_equal_beyond_q_check(lambda u: parse_polynomial(f"G{u} + G{u}t"), m, 1, 3, 2)


def test_lag_dependence_at_third_moment():
    # blocks with unequal numbers of G and G* atoms can still balance the shift charge when u is small
    m = ModelSpec.scalar((Fraction(1, 2),), y=1)
    third = [limit_moment(f"G{u}*G{u}t", m, h=3) for u in (2, 3, 4)]
    assert third == [Fraction(174687, 1024), Fraction(172035, 1024), Fraction(171987, 1024)]
    assert not lsd_equal_beyond_q_check(None, m, 2, 3, 3)


def test_trace_functional_memo_is_thread_safe():
    from concurrent.futures import ThreadPoolExecutor
    tau = matrix_trace_functional(builtin_model(4), 32)
    words = list(itertools.product([(1, False), (2, True), (0, False)], repeat=3))
    with ThreadPoolExecutor(4) as pool:
        got = list(pool.map(tau, words * 4))
    assert got == [tau(w) for w in words * 4]
