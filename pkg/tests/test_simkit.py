import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hdautocov.errors import DomainError, NumericalError, ValidationError
from hdautocov.laws import mp_moment
from hdautocov.models import ModelSpec, builtin_model
from hdautocov.simkit import (ECDF, SampleMatrix, TraceStats, analytic_trace_mean, autocov_set, esd,
                              eval_sym_poly, fmt17, jacobi_eigenvalues, ks_distance, poly_trace, rng_for,
                              sample_autocov, simulate_ivar, simulate_ma, symmetric_eigenvalues,
                              trace_statistic, worker_count)


def test_rng_streams_reproducible_and_distinct():
    a = rng_for(7, 3).standard_normal(5)
    assert np.array_equal(a, rng_for(7, 3).standard_normal(5))
    assert not np.array_equal(a, rng_for(7, 4).standard_normal(5))
    assert not np.array_equal(a, rng_for(8, 3).standard_normal(5))
    with pytest.raises(ValidationError):
        rng_for(-1)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("AUTOCOV_THREADS", "3")
    assert worker_count() == 3
    assert worker_count(1) == 1
    monkeypatch.setenv("AUTOCOV_THREADS", "x")
    with pytest.raises(ValidationError):
        worker_count()


def test_sample_matrix_is_read_only():
    X = simulate_ma(builtin_model(2), 20, 5, seed=1)
    assert X.p == 5 and X.n == 20
    with pytest.raises(ValueError):
        X.data[0, 0] = 1.0
    with pytest.raises(ValidationError):
        SampleMatrix(np.array([1.0, np.nan]).reshape(1, 2))
    with pytest.raises(ValidationError):
        SampleMatrix(np.zeros(3))


def test_ma_recursion():
    m = ModelSpec.scalar((0.5, -0.25))
    X = simulate_ma(m, 30, 4, seed=11)
    E = rng_for(11, 0).standard_normal((4, 32))
    expect = E[:, 2:] + 0.5 * E[:, 1:-1] - 0.25 * E[:, :-2]
    assert np.allclose(X.data, expect)


def test_matrix_model_recursion():
    m = builtin_model(4)
    X = simulate_ma(m, 12, 6, seed=2)
    E = rng_for(2, 0).standard_normal((6, 14))
    C, D = (M.toarray() for M in m.matrices(6))
    assert np.allclose(X.data, E[:, 2:] + C @ E[:, 1:-1] + D @ E[:, :-2])


def test_sampler_hook_and_errors():
    ones = simulate_ma(builtin_model(1), 4, 3, 0, sampler=lambda rng, shape: np.ones(shape))
    assert np.all(ones.data == 1)
    with pytest.raises(ValidationError):
        simulate_ma(builtin_model(1), 4, 3, 0, sampler=lambda rng, shape: np.ones((1, 1)))
    with pytest.raises(DomainError):
        simulate_ma(ModelSpec.scalar((1, 1, 1)), 3, 2, 0)
    with pytest.raises(ValidationError):
        simulate_ma(builtin_model(1), 0, 3, 0)


def test_ivar_simulation():
    X = simulate_ivar(builtin_model(6), 40, 5, seed=3, burn_in=10)
    assert X.data.shape == (5, 40)
    assert np.array_equal(X.data, simulate_ivar(builtin_model(6), 40, 5, seed=3, burn_in=10).data)
    with pytest.raises(DomainError):
        simulate_ivar((1.1,), 10, 3, 0)
    with pytest.raises(DomainError):
        simulate_ivar((0.5,), 10, 3, 0, burn_in=-1)
    with pytest.raises(ValidationError):
        simulate_ivar((np.eye(2),), 10, 3, 0)
    # no burn-in: X_1 = eps_1 exactly
    Z = simulate_ivar((0.5,), 5, 2, seed=9, burn_in=0)
    assert np.allclose(Z.data[:, 0], rng_for(9, 0).standard_normal((2, 5))[:, 0])


def test_sample_autocov_definition():
    X = simulate_ma(builtin_model(2), 15, 4, seed=5)
    G = sample_autocov(X, 2).matrix
    expect = sum(np.outer(X.data[:, t], X.data[:, t + 2]) for t in range(13)) / 15
    assert np.allclose(G, expect)
    G0 = sample_autocov(X, 0).matrix
    assert np.array_equal(G0, G0.T)
    with pytest.raises(DomainError):
        sample_autocov(X, 15)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_products_are_psd(seed, u):
    X = simulate_ma(builtin_model(2), 25, 8, seed)
    g = autocov_set(X, [u])
    ev = symmetric_eigenvalues(eval_sym_poly(f"G{u}*G{u}t", g))
    assert ev.min() >= -1e-10 * max(1.0, ev.max())


def test_eval_sym_poly_and_trace():
    X = simulate_ma(builtin_model(2), 30, 6, seed=4)
    g = autocov_set(X, [0, 1, 2])
    G1 = g[1].matrix
    M = eval_sym_poly("G1*G1t + 2*G0 + 1", g)
    assert np.allclose(M, G1 @ G1.T + 2 * g[0].matrix + np.eye(6))
    for text in ["G1*G1t", "G1 + G1t", "G0*G1*G1t*G0", "G1*G2t + G2*G1t + 3"]:
        assert poly_trace(text, g) == pytest.approx(np.trace(eval_sym_poly(text, g)), rel=1e-12)
    with pytest.raises(ValidationError):
        eval_sym_poly("G1", g)
    with pytest.raises(ValidationError):
        eval_sym_poly("G3*G3t", g)


@settings(max_examples=30)
@given(st.integers(1, 12), st.integers(0, 2 ** 32 - 1))
def test_jacobi_matches_lapack(p, seed):
    A = np.random.default_rng(seed).standard_normal((p, p))
    S = A + A.T
    assert np.allclose(jacobi_eigenvalues(S), np.linalg.eigvalsh(S), atol=1e-9)
    assert np.allclose(symmetric_eigenvalues(S, "jacobi"), symmetric_eigenvalues(S), atol=1e-9)


def test_eigen_errors():
    with pytest.raises(DomainError):
        symmetric_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(DomainError):
        symmetric_eigenvalues(np.zeros((2, 3)))
    with pytest.raises(ValidationError):
        symmetric_eigenvalues(np.eye(2), "qr")
    with pytest.raises(NumericalError):
        jacobi_eigenvalues(np.array([[1.0, 2.0], [2.0, -1.0]]), max_sweeps=0)


def test_ecdf_basics():
    F = ECDF([3.0, 1.0, 2.0, 2.0])
    assert F(0.5) == 0 and F(1.0) == 0.25 and F(2.0) == 0.75 and F(10) == 1
    x, v = F.jumps()
    assert list(x) == [1.0, 2.0, 3.0] and list(v) == [0.25, 0.75, 1.0]
    assert F.moment(1) == 2.0
    with pytest.raises(ValidationError):
        ECDF([])


samples = st.lists(st.floats(-50, 50, allow_nan=False), min_size=1, max_size=30)


@given(samples, samples, samples)
def test_ks_is_a_metric(a, b, c):
    assert ks_distance(a, a) == 0
    assert ks_distance(a, b) == ks_distance(b, a)
    assert 0 <= ks_distance(a, b) <= 1
    assert ks_distance(a, c) <= ks_distance(a, b) + ks_distance(b, c) + 1e-15


def test_ks_sees_jumps():
    # sup is attained exactly at a jump point
    assert ks_distance([0.0], [1.0]) == 1.0
    assert ks_distance([0.0, 1.0], [0.0, 2.0]) == 0.5


def test_ecdf_csv(tmp_path):
    F = ECDF([0.1, 0.2, 0.2])
    text = F.to_csv(tmp_path / "e.csv", {"model": "model1", "u": 1})
    lines = text.splitlines()
    assert lines[:3] == ["# model: model1", "# u: 1", "x,F"]
    assert lines[3] == f"{fmt17(0.1)},{fmt17(1 / 3)}"
    assert (tmp_path / "e.csv").read_text() == text
    assert float(lines[3].split(",")[0]) == 0.1


def test_mp_moments_within_three_se():
    # white noise G0: ESD moments approach Marchenko-Pastur at y = p/n
    n, p, reps = 400, 200, 6
    y = p / n
    vals = {h: [] for h in (1, 2, 3)}
    for r in range(reps):
        X = simulate_ma(builtin_model(1), n, p, seed=100, replicate=r)
        F = esd(sample_autocov(X, 0).matrix)
        for h in vals:
            vals[h].append(F.moment(h))
    for h, v in vals.items():
        v = np.array(v)
        se = v.std(ddof=1) / np.sqrt(reps)
        # finite-p bias of order 1/p added to the sampling error
        assert abs(v.mean() - float(mp_moment(h, y))) <= 3 * se + 5.0 / p


def test_esd_converges_with_dimension():
    def sample_esd(n):
        X = simulate_ma(builtin_model(2), n, n, seed=31)
        g = autocov_set(X, [2])
        return esd(eval_sym_poly("G2*G2t", g))
    assert ks_distance(sample_esd(300), sample_esd(1000)) < 0.05


def test_trace_stats_and_csv(tmp_path):
    ts = TraceStats(np.array([1.0, 2.0, 3.0, 4.0]), centering=2.0, label="G0")
    assert ts.mean == 2.5
    assert ts.variance == pytest.approx(5 / 3)
    assert ts.skewness == pytest.approx(0.0)
    assert list(ts.centered) == [-1.0, 0.0, 1.0, 2.0]
    text = ts.to_csv(tmp_path / "t.csv", {"seed": 1})
    assert text.splitlines()[:3] == ["# seed: 1", "replicate,trace", "0,1"]
    with pytest.raises(ValidationError):
        TraceStats(np.array([]), 0.0)


def test_analytic_trace_mean():
    m2 = builtin_model(2)
    # E Tr G0 = p (1 + lambda^2) with pre-sample innovations
    assert analytic_trace_mean("G0", m2, 50, 10) == pytest.approx(12.5)
    assert analytic_trace_mean("G1 + G1t", m2, 50, 10) == pytest.approx(2 * 49 / 50 * 10 * 0.5)
    assert analytic_trace_mean("G1*G1t", builtin_model(1), 50, 10) == pytest.approx(49 * 100 / 2500)
    assert analytic_trace_mean("G1*G1t", m2, 50, 10) is None


def test_trace_statistic_reproducible_across_workers():
    a = trace_statistic("G1*G1t", builtin_model(1), 40, 40, 8, seed=5, workers=1)
    b = trace_statistic("G1*G1t", builtin_model(1), 40, 40, 8, seed=5, workers=4)
    assert np.array_equal(a.values, b.values)
    assert a.analytic
    c = trace_statistic("G1*G1t", builtin_model(2), 40, 40, 4, seed=5)
    assert not c.analytic and c.centering == pytest.approx(c.mean)
    with pytest.raises(ValidationError):
        trace_statistic("G1", builtin_model(1), 40, 40, 4, seed=5)
    with pytest.raises(ValidationError):
        trace_statistic("G0", builtin_model(1), 40, 40, 1, seed=5)


def test_trace_mean_matches_simulation():
    ts = trace_statistic("G0", builtin_model(2), 60, 60, 200, seed=8)
    se = np.sqrt(ts.variance / 200)
    assert abs(ts.mean - ts.centering) < 4 * se
