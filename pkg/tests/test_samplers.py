import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from sampled_hnn.errors import DegenerateDataError, DegeneratePairError, SamplingExhaustedError
from sampled_hnn.samplers import (
    TANH_CONSTANTS,
    ActivationConstants,
    PairCandidate,
    default_pool_size,
    draw_unique_pairs,
    elm_layer,
    elm_layers,
    pair_to_params,
    pairs_to_layer,
    swim_density,
    swim_layers,
    uswim_layers,
)

LN3 = np.log(3.0)


def neuron_pairs(layer, X, tol=1e-12):
    """Recover the (x1, x2) indices of each neuron from its activations on X."""
    act = np.tanh(X @ layer.W.T + layer.b)
    out = []
    for col in act.T:
        lo = np.flatnonzero(np.abs(col + 0.5) < tol)
        hi = np.flatnonzero(np.abs(col - 0.5) < tol)
        assert lo.size and hi.size, "neuron is not placed on a training pair"
        out.append((lo[0], hi[0]))
    return np.array(out)


def test_tanh_constants():
    assert TANH_CONSTANTS.s1 == pytest.approx(2 * TANH_CONSTANTS.s2)
    assert TANH_CONSTANTS.s2 == pytest.approx(LN3 / 2)
    assert np.tanh(TANH_CONSTANTS.s2) == pytest.approx(0.5, abs=1e-15)


def test_elm_layer_shapes_and_support():
    layer = elm_layer(2, 1000, -3.0, 5.0, 0)
    assert layer.W.shape == (1000, 2) and layer.b.shape == (1000,)
    assert np.all((layer.b >= -3.0) & (layer.b <= 5.0))
    np.testing.assert_array_equal(layer.W, elm_layer(2, 1000, -3.0, 5.0, 0).W)


def test_elm_weight_mean():
    layer = elm_layer(2, 50_000, -1.0, 1.0, 1)
    assert abs(layer.W.mean()) < 5 / np.sqrt(layer.W.size)
    assert layer.W.std() == pytest.approx(1.0, abs=0.02)


def test_elm_invalid_range():
    with pytest.raises(ValueError):
        elm_layer(2, 3, 1.0, 1.0, 0)


def test_elm_layers_chain():
    layers = elm_layers(4, [5, 3], (-1, 1), 2)
    assert [l.W.shape for l in layers] == [(5, 4), (3, 5)]


@pytest.mark.parametrize(
    "x1, x2, w, b",
    [((0, 0), (1, 0), (LN3, 0), -LN3 / 2), ((1, 1), (1, 3), (0, LN3 / 2), -LN3)],
)
def test_pair_to_params_examples(x1, x2, w, b):
    w_, b_ = pair_to_params(np.array(x1, float), np.array(x2, float))
    np.testing.assert_allclose(w_, w, atol=1e-15)
    assert b_ == pytest.approx(b, abs=1e-15)


def test_pair_to_params_coincident():
    with pytest.raises(DegeneratePairError):
        pair_to_params(np.ones(2), np.ones(2))
    with pytest.raises(DegeneratePairError):
        pairs_to_layer(np.ones((2, 2)), np.ones((2, 2)))


vec = arrays(np.float64, 4, elements=st.floats(-10, 10, allow_nan=False))


@given(vec, vec)
def test_placement_identities(x1, x2):
    if np.linalg.norm(x2 - x1) < 1e-3:
        return
    w, b = pair_to_params(x1, x2)
    assert np.tanh(w @ x1 + b) == pytest.approx(-0.5, abs=1e-12)
    assert np.tanh(w @ x2 + b) == pytest.approx(0.5, abs=1e-12)
    assert np.tanh(w @ (0.5 * (x1 + x2)) + b) == pytest.approx(0.0, abs=1e-12)


def test_pairs_to_layer_matches_scalar():
    rng = np.random.default_rng(3)
    X1, X2 = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
    layer = pairs_to_layer(X1, X2)
    for k in range(6):
        w, b = pair_to_params(X1[k], X2[k])
        np.testing.assert_allclose(layer.W[k], w, rtol=1e-15)
        assert layer.b[k] == pytest.approx(b, rel=1e-14)


def test_custom_constants():
    consts = ActivationConstants(s1=2.0, s2=1.0)
    w, b = pair_to_params(np.zeros(2), np.array([2.0, 0.0]), consts)
    np.testing.assert_allclose(w, [1.0, 0.0])
    assert b == -1.0


def test_pair_candidate():
    with pytest.raises(DegeneratePairError):
        PairCandidate(1, 1, 0.0)
    with pytest.raises(ValueError):
        PairCandidate(0, 1, -1.0)


def test_draw_unique_pairs():
    pairs = draw_unique_pairs(50, 300, 0)
    assert np.all(pairs[:, 0] < pairs[:, 1])
    assert len({tuple(p) for p in pairs}) == 300
    full = draw_unique_pairs(5, 10, 0)
    assert len({tuple(p) for p in full}) == 10
    with pytest.raises(SamplingExhaustedError):
        draw_unique_pairs(3, 4, 0)


def test_draw_unique_pairs_bounded_retries():
    # reject everything: the bounded redraw budget must end in an error, not a hang
    with pytest.raises(SamplingExhaustedError):
        draw_unique_pairs(100, 5, 0, accept=lambda p: np.zeros(len(p), bool))


def test_uswim_two_points():
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    (layer,) = uswim_layers(X, [1], rng=0)
    w, b = pair_to_params(X[0], X[1])
    np.testing.assert_array_equal(layer.W[0], w)
    assert layer.b[0] == b


def test_uswim_every_neuron_placed_and_unique():
    X = np.random.default_rng(4).uniform(-1, 1, size=(40, 2))
    (layer,) = uswim_layers(X, [200], rng=1)
    pairs = neuron_pairs(layer, X)
    for (i, j), w, b in zip(pairs, layer.W, layer.b):
        assert np.tanh(w @ (0.5 * (X[i] + X[j])) + b) == pytest.approx(0.0, abs=1e-12)
    assert len({frozenset(p) for p in pairs}) == 200
    assert len(np.unique(np.column_stack([layer.W, layer.b]), axis=0)) == 200


def test_uswim_deterministic_and_exhausted():
    X = np.random.default_rng(5).normal(size=(30, 2))
    a = uswim_layers(X, [20, 10], rng=7)
    b = uswim_layers(X, [20, 10], rng=7)
    for la, lb in zip(a, b):
        np.testing.assert_array_equal(la.W, lb.W)
        np.testing.assert_array_equal(la.b, lb.b)
    with pytest.raises(SamplingExhaustedError):
        uswim_layers(X[:3], [4], rng=0)
    with pytest.raises(SamplingExhaustedError):
        uswim_layers(np.ones((10, 2)), [1], rng=0)


def test_swim_density_examples():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 0.0]])
    f = X[:, 0]
    np.testing.assert_allclose(swim_density([[0, 1], [0, 2]], f, X), [1.0, 1.0])
    assert swim_density([[0, 3]], f, X)[0] == 0.0
    np.testing.assert_array_equal(swim_density([[0, 1], [1, 2]], np.full(4, 3.0), X), 0.0)


def test_swim_density_eps_floor():
    X = np.array([[0.0], [1e-12]])
    assert swim_density([[0, 1]], np.array([0.0, 1.0]), X, eps=1e-10)[0] == pytest.approx(1e10)


@settings(max_examples=30)
@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_swim_density_scale(c, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 2))
    f = rng.normal(size=20)
    pairs = draw_unique_pairs(20, 30, rng)
    d1 = swim_density(pairs, f, X)
    d2 = swim_density(pairs, c * f, X)
    np.testing.assert_allclose(d2, c * d1, rtol=1e-12)
    np.testing.assert_allclose(d2 / d2.sum(), d1 / d1.sum(), rtol=1e-10)


def test_swim_constant_function():
    X = np.random.default_rng(6).normal(size=(20, 2))
    with pytest.raises(DegenerateDataError):
        swim_layers(X, np.ones(20), [5], rng=0)


def test_swim_every_neuron_placed():
    rng = np.random.default_rng(7)
    X = rng.uniform(-1, 1, size=(60, 2))
    (layer,) = swim_layers(X, np.sin(3 * X[:, 0]) + X[:, 1] ** 2, [80], rng=2)
    pairs = neuron_pairs(layer, X)
    assert len({frozenset(p) for p in pairs}) == 80


def test_swim_deep_layers_deterministic():
    rng = np.random.default_rng(8)
    X = rng.uniform(-1, 1, size=(60, 2))
    f = np.cos(X).sum(axis=1)
    a = swim_layers(X, f, [20, 15], rng=3)
    b = swim_layers(X, f, [20, 15], rng=3)
    assert [l.W.shape for l in a] == [(20, 2), (15, 20)]
    for la, lb in zip(a, b):
        np.testing.assert_array_equal(la.W, lb.W)


def test_steep_region_concentration():
    rng = np.random.default_rng(9)
    X = rng.uniform(-1, 1, size=(500, 2))
    f = np.tanh(10 * X[:, 0])

    def central_fraction(layer):
        pairs = neuron_pairs(layer, X)
        mid = 0.5 * (X[pairs[:, 0], 0] + X[pairs[:, 1], 0])
        return np.mean(np.abs(mid) < 0.2)

    (swim,) = swim_layers(X, f, [200], rng=1)
    (uniform,) = uswim_layers(X, [200], rng=1)
    assert central_fraction(swim) > central_fraction(uniform) + 0.2


def test_uniform_density_reduces_to_uswim():
    X = np.random.default_rng(10).normal(size=(5, 2))
    flat = lambda pairs, f, x, eps: np.ones(len(pairs))  # noqa: E731
    keys = {frozenset(p): k for k, p in enumerate(draw_unique_pairs(5, 10, 0))}
    n = 2000
    counts = {"swim": np.zeros(10), "u-swim": np.zeros(10)}
    for seed in range(n):
        (a,) = swim_layers(X, np.zeros(5), [1], pool_size=4, rng=seed, density=flat)
        (b,) = uswim_layers(X, [1], rng=seed)
        counts["swim"][keys[frozenset(neuron_pairs(a, X)[0])]] += 1
        counts["u-swim"][keys[frozenset(neuron_pairs(b, X)[0])]] += 1
    for c in counts.values():
        assert stats.chisquare(c).pvalue > 1e-3
    table = np.stack([counts["swim"], counts["u-swim"]])
    assert stats.chi2_contingency(table).pvalue > 1e-3


def test_default_pool_size():
    assert default_pool_size(10_000, [1000]) == 10_000
    assert default_pool_size(10, [1000]) == 45
