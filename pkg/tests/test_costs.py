import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import small_instance
from idlegrad import costs
from idlegrad.schedule import stream

finite = st.floats(-20, 20, allow_nan=False)


def _logistic(seed=0, n=4, j=3, d=3):
    rng = stream(seed, 0, "data")
    return costs.LogisticCost(rng.standard_normal((n, j, d)), 0.1)


def _naive_value(model, node, x):
    # independent reference: log(1 + exp(-t)) through logaddexp
    t = model.samples[node] @ x
    return np.logaddexp(0.0, -t).sum() + 0.5 * model.R * x @ x


@given(x=arrays(float, 3, elements=finite))
def test_logistic_gradient_matches_finite_differences(x):
    model = _logistic()
    h = 1e-6
    for node in range(model.n_nodes):
        _, g = model.evaluate(node, x)
        fd = np.array([(_naive_value(model, node, x + h * e) - _naive_value(model, node, x - h * e))
                       / (2 * h) for e in np.eye(3)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5)


@given(X=arrays(float, (4, 3), elements=finite))
def test_batched_paths_agree_with_per_node(X):
    model = _logistic()
    G = model.gradients(X)
    vals = model.local_values(X)
    for i in range(4):
        v, g = model.evaluate(i, X[i])
        assert vals[i] == pytest.approx(_naive_value(model, i, X[i]), rel=1e-12, abs=1e-12)
        assert v == pytest.approx(vals[i], rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(G[i], g, rtol=1e-12, atol=1e-12)
    cross = model.cross_values(X)
    for m in range(4):
        ref = sum(_naive_value(model, i, X[m]) for i in range(4))
        assert cross[m] == pytest.approx(ref, rel=1e-12)


def test_softplus_is_stable_for_large_margins():
    x = np.array([1e4, 0.0, 0.0])
    model = costs.LogisticCost(np.array([[[1.0, 0, 0], [-1.0, 0, 0]]]), 0.1)
    v, g = model.evaluate(0, x)
    assert np.isfinite(v) and np.all(np.isfinite(g))
    assert v == pytest.approx(1e4 + 0.5 * 0.1 * 1e8, rel=1e-12)
    assert costs.logistic_margin_value(-800.0) == pytest.approx(800.0)


@given(seed=st.integers(0, 1000), x=arrays(float, 3, elements=finite),
       y=arrays(float, 3, elements=finite))
def test_curvature_bounds_hold(seed, x, y):
    model = _logistic(seed)
    L, mu = model.lipschitz("per_node"), model.mu
    dx = x - y
    for i in range(model.n_nodes):
        dg = model.evaluate(i, x)[1] - model.evaluate(i, y)[1]
        assert dg @ dx >= mu * dx @ dx * (1 - 1e-9) - 1e-12
        assert np.linalg.norm(dg) <= L * np.linalg.norm(dx) * (1 + 1e-9) + 1e-12


@given(seed=st.integers(0, 1000))
def test_pooled_lipschitz_never_exceeds_per_node(seed):
    model = _logistic(seed, n=6)
    assert model.lipschitz("pooled") <= model.lipschitz("per_node") * (1 + 1e-12)


def test_unknown_lipschitz_mode():
    with pytest.raises(costs.ModelError):
        _logistic().lipschitz("bogus")


@pytest.mark.parametrize("samples, R", [(np.zeros((2, 3)), 0.1), (np.zeros((2, 2, 3)), 0.0)])
def test_logistic_rejects_bad_inputs(samples, R):
    with pytest.raises(costs.ModelError):
        costs.LogisticCost(samples, R)


def test_from_shards_puts_intercept_last():
    model = costs.LogisticCost.from_shards(np.array([[[2.0, 3.0]]]), np.array([[-1.0]]), 0.1)
    np.testing.assert_array_equal(model.samples[0, 0], [-2.0, -3.0, -1.0])


def test_quadratic_cost():
    B = np.array([[1.0, 2.0], [3.0, -1.0]])
    model = costs.QuadraticCost(B)
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(model.local_values(X), [2.5, 4.0])
    np.testing.assert_allclose(model.gradients(X), X - B)
    x = np.array([0.5, 0.5])
    assert model.total_value(x) == pytest.approx(sum(0.5 * np.sum((x - b) ** 2) for b in B))
    np.testing.assert_allclose(model.total_gradient(x), 2 * x - B.sum(axis=0))


@given(y=arrays(float, (5, 3), elements=st.floats(-1e3, 1e3)),
       w=arrays(float, (5, 3), elements=st.floats(-1e3, 1e3)))
def test_ball_projection_properties(y, w):
    ball = costs.Ball(2.0)
    py, pw = ball.project(y), ball.project(w)
    assert ball.contains(py)
    np.testing.assert_allclose(ball.project(py), py, atol=1e-12)
    # nonexpansive row by row
    assert np.all(np.linalg.norm(py - pw, axis=1)
                  <= np.linalg.norm(y - w, axis=1) * (1 + 1e-12) + 1e-12)


def test_box_projection_and_diameter():
    box = costs.Box([-1.0, 0.0], [1.0, 3.0])
    np.testing.assert_array_equal(box.project(np.array([[5.0, -2.0], [0.5, 1.0]])),
                                  [[1.0, 0.0], [0.5, 1.0]])
    assert box.diameter == pytest.approx(np.hypot(1.0, 3.0))
    assert costs.Ball(3.0).diameter == 3.0  # D is the largest norm in the set
    with pytest.raises(costs.ModelError):
        costs.Box([1.0], [0.0])
    with pytest.raises(costs.ModelError):
        costs.Ball(0.0)


@pytest.mark.parametrize("kind", ["logistic", "quadratic"])
def test_derived_constants_bound_the_set(kind):
    _, _, inst = small_instance(3, kind=kind, constraint=costs.Ball(2.0))
    rng = stream(3, 0, "init")
    pts = costs.Ball(2.0).project(rng.uniform(-3, 3, size=(400, inst.dim)))
    for x in pts:
        for i in range(inst.n_nodes):
            f, g = inst.model.evaluate(i, x)
            assert np.linalg.norm(g) <= inst.grad_bound_G
            assert inst.f_lower_mf <= f <= inst.f_upper_Mf
    assert inst.lipschitz_L >= inst.mu
    assert inst.diameter_D == 2.0


@pytest.mark.parametrize("centers, x", [
    (np.zeros((3, 2)), np.zeros(2)),
    (np.array([[1.0, -2.0], [4.0, 0.5]]), None),
])
def test_quadratic_zero_at_its_center(centers, x):
    model = costs.QuadraticCost(centers)
    for i in range(model.n_nodes):
        v, g = model.evaluate(i, centers[i] if x is None else x)
        assert v == 0.0
        assert np.all(g == 0.0)


def test_logistic_single_sample_at_zero():
    c = np.array([0.5, -1.0, 2.0])
    model = costs.LogisticCost(c[None, None, :], 0.3)
    v, g = model.evaluate(0, np.zeros(3))
    assert v == pytest.approx(np.log(2.0), rel=1e-15)
    np.testing.assert_allclose(g, -c / 2, rtol=1e-15)


@pytest.mark.parametrize("y, out", [([3.0, 4.0], [0.6, 0.8]), ([0.3, 0.4], [0.3, 0.4])])
def test_ball_projection_vectors(y, out):
    np.testing.assert_allclose(costs.Ball(1.0).project(np.array(y)), out, rtol=1e-15)


def test_scalar_box_projection():
    assert costs.Box([-2.0], [2.0]).project(np.array([[3.0]]))[0, 0] == 2.0


def test_quadratic_constants_by_hand():
    B = np.array([[3.0, 4.0], [1.0, 0.0]])
    inst = costs.derive_constants(costs.QuadraticCost(B), costs.Ball(2.0))
    assert inst.mu == inst.lipschitz_L == 1.0
    assert inst.grad_bound_G == pytest.approx(2.0 + 5.0)


def test_regulariser_only_logistic():
    model = costs.LogisticCost(np.zeros((2, 1, 3)), 0.4)
    assert model.lipschitz("per_node") == pytest.approx(0.4)
    assert model.lipschitz("pooled") == pytest.approx(0.4)
    assert model.mu == 0.4


@pytest.mark.parametrize("seed", range(8))
def test_synthetic_lipschitz_near_published_value(seed):
    from idlegrad import data
    shards, _ = data.gen_synthetic(50, 2, 3, 0.1, stream(seed, 0, "data"))
    model = costs.LogisticCost.from_shards(shards.features, shards.labels, 0.1)
    assert model.mu == 0.1
    assert abs(model.lipschitz("pooled") - 0.69) <= 0.15
