import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqdoe.exceptions import FitError
from seqdoe.metamodels import TrainingSet, fit, gp_fit, gp_predict, svr_fit, svr_predict


def sphere01(x):
    # sphere 2D on [-5, 5]^2 expressed in unit coordinates
    return np.sum((10 * np.asarray(x) - 5) ** 2, axis=-1)


def kkt_residual(model, x, y):
    """Largest KKT violation of an SVR solution, recomputed from scratch."""
    ys = (y - model.y_mean) / model.y_std
    k = np.exp(-model.gamma * ((x[:, None, :] - x[None, :, :]) ** 2).sum(-1))
    r = ys - (k @ model.dual_coef + model.bias)
    eps, C, beta = model.epsilon, model.C, model.dual_coef
    worst = 0.0
    for ri, bi in zip(r, beta):
        if bi == 0:
            worst = max(worst, abs(ri) - eps)
        elif 0 < bi < C:
            worst = max(worst, abs(ri - eps))
        elif bi == C:
            worst = max(worst, eps - ri)
        elif -C < bi < 0:
            worst = max(worst, abs(ri + eps))
        else:
            worst = max(worst, ri + eps)
    return worst


class TestGp:
    def test_constant_responses(self):
        m = gp_fit(np.random.default_rng(0).random((6, 2)), np.full(6, 3.25))
        probes = np.random.default_rng(1).random((50, 2))
        assert np.all(np.abs(gp_predict(m, probes) - 3.25) <= 1e-6)

    def test_sphere_interpolation(self):
        x = np.random.default_rng(2).random((5, 2))
        y = sphere01(x)
        m = gp_fit(x, y)
        assert m.jitter <= 1e-8
        assert np.max(np.abs(gp_predict(m, x) - y)) <= 1e-4

    def test_doubling_responses_doubles_predictions(self, rng):
        x = rng.random((12, 3))
        y = np.sin(4 * x).sum(axis=1)
        probes = rng.random((30, 3))
        a = gp_predict(gp_fit(x, y), probes)
        b = gp_predict(gp_fit(x, 2 * y), probes)
        np.testing.assert_allclose(b, 2 * a, rtol=1e-9, atol=1e-9)

    def test_continuity(self, rng):
        x = rng.random((10, 2))
        m = gp_fit(x, sphere01(x))
        p = np.array([0.37, 0.61])
        diffs = [abs(gp_predict(m, p) - gp_predict(m, p + h)) for h in (1e-2, 1e-4, 1e-6, 1e-8)]
        assert diffs == sorted(diffs, reverse=True)
        assert diffs[-1] < 1e-4

    def test_selected_hyperparameters_maximize_likelihood(self, rng):
        x = rng.random((15, 2))
        m = gp_fit(x, np.cos(5 * x[:, 0]) + x[:, 1])
        assert len(m.grid) == 24
        assert m.log_marginal_likelihood == max(m.grid.values())
        assert m.grid[(m.length_scale, m.mixture)] == m.log_marginal_likelihood

    def test_too_few_points(self):
        with pytest.raises(FitError):
            gp_fit([[0.5, 0.5]], [1.0])

    def test_singular_covariance_reports_failure(self):
        x = np.vstack([np.full((4, 2), 0.5), [[0.1, 0.1]]])
        with pytest.raises(FitError):
            gp_fit(x, [1.0, 2.0, 3.0, 4.0, 5.0], jitter_start=1e-30, jitter_max=1e-29)


class TestSvr:
    def test_constant_responses(self):
        m = svr_fit(np.random.default_rng(0).random((8, 2)), np.full(8, -1.5))
        probes = np.random.default_rng(3).random((50, 2))
        assert np.all(np.abs(svr_predict(m, probes) + 1.5) <= m.epsilon)

    def test_linear_data(self):
        x = np.linspace(0, 1, 10)[:, None]
        y = x[:, 0]
        m = svr_fit(x, y)
        assert np.all(np.abs(svr_predict(m, x) - y) <= m.epsilon + 0.05)

    def test_box_constraint_and_balance(self, rng):
        x = rng.random((25, 3))
        m = svr_fit(x, np.sin(6 * x).sum(axis=1), C=2.0)
        assert np.all(np.abs(m.dual_coef) <= 2.0)
        assert abs(m.dual_coef.sum()) < 1e-9

    def test_objective_monotone(self, rng):
        x = rng.random((30, 2))
        m = svr_fit(x, sphere01(x), track_objective=True)
        trace = np.array(m.objective_trace)
        assert trace.size == m.iterations > 0
        assert np.all(np.diff(trace) >= -1e-12)

    def test_kkt_residual_recomputed(self, rng):
        x = rng.random((20, 2))
        m = svr_fit(x, sphere01(x))
        xs = m.inputs
        assert m.kkt_residual <= 1e-3
        assert kkt_residual(m, xs, sphere01(xs)) <= 1e-3

    def test_iteration_cap(self, rng):
        x = rng.random((30, 2))
        with pytest.raises(FitError) as info:
            svr_fit(x, sphere01(x), max_iter=2)
        assert info.value.residual > 1e-3


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from(["gp", "svr"]))
def test_row_permutation_invariance(seed, kind):
    rng = np.random.default_rng(seed)
    x = rng.random((12, 2))
    y = np.sin(5 * x[:, 0]) * x[:, 1]
    perm = rng.permutation(12)
    probes = rng.random((20, 2))
    a = fit(kind, TrainingSet(x, y)).predict(probes)
    b = fit(kind, TrainingSet(x[perm], y[perm])).predict(probes)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-10)


def test_training_set_validation():
    with pytest.raises(ValueError):
        TrainingSet(np.zeros((3, 2)), [1.0, 2.0])
    with pytest.raises(ValueError):
        TrainingSet(np.zeros((2, 2)), [1.0, np.nan])
    with pytest.raises(ValueError):
        fit("krr", TrainingSet(np.zeros((2, 2)), [1.0, 2.0]))
