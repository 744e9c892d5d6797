import numpy as np
import pytest

from qtagger.neural import (Adam, DenseNet, Sgd, cross_entropy, gradient_check,
                            make_optimizer, softmax, softmax_xent_grad, step)


def test_zero_net_outputs_zero():
    net = DenseNet([3, 4, 2])
    for w in net.weights:
        w[:] = 0.0
    out = net.forward(np.array([1.0, -2.0, 3.0]))
    assert np.array_equal(out, np.zeros(2))


def test_identity_single_layer():
    net = DenseNet([3, 3])
    net.weights[0][:] = np.eye(3)
    net.biases[0][:] = 0.0
    x = np.array([0.3, -1.2, 2.5])
    assert np.allclose(net.forward(x), x, atol=0)


def test_forward_matches_independent_recomputation():
    net = DenseNet([3, 5, 2], activation="tanh", rng_seed=42)
    x = np.array([[0.1, -0.7, 1.3], [2.0, 0.0, -0.5]])
    # independent path: explicit matrix arithmetic on the net's parameters
    h = np.tanh(x @ net.weights[0] + net.biases[0])
    expected = h @ net.weights[1] + net.biases[1]
    assert np.allclose(net.forward(x), expected, atol=1e-15)


def test_forward_rejects_bad_width():
    net = DenseNet([3, 2])
    with pytest.raises(ValueError, match="input width"):
        net.forward(np.zeros(4))


def test_backward_zero_for_unused_parameter():
    # loss reads only output 0; weights feeding output 1 get zero gradient
    net = DenseNet([2, 2])
    out, cache = net.forward_cached(np.array([1.0, 1.0]))
    grads = net.backward(cache, np.array([1.0, 0.0]))
    w_grad = grads[0]
    assert np.all(w_grad[:, 1] == 0.0)
    assert np.all(w_grad[:, 0] != 0.0)


def test_backward_single_linear_neuron_closed_form():
    # squared error of one linear neuron: dL/dw = 2(wx+b-y)x, dL/db = 2(wx+b-y)
    net = DenseNet([1, 1])
    net.weights[0][:] = 0.7
    net.biases[0][:] = 0.2
    x, y = 1.5, 2.0
    out, cache = net.forward_cached(np.array([x]))
    resid = float(out[0]) - y
    grads = net.backward(cache, np.array([2.0 * resid]))
    assert np.isclose(grads[0][0, 0], 2.0 * resid * x, atol=1e-12)
    assert np.isclose(grads[1][0], 2.0 * resid, atol=1e-12)


@pytest.mark.parametrize("sizes,activation", [
    ([4, 3], "tanh"),
    ([4, 6, 3], "tanh"),
    ([4, 6, 3], "relu"),
    ([5, 8, 8, 2], "tanh"),
])
def test_gradient_check_small_nets(sizes, activation):
    net = DenseNet(sizes, activation=activation, rng_seed=11)
    rng = np.random.default_rng(0)
    x = rng.normal(size=(6, sizes[0]))
    y = rng.integers(0, sizes[-1], size=6)

    def loss_fn():
        logits = net.forward(x)
        return softmax_xent_grad(logits, y)[0]

    logits, cache = net.forward_cached(x)
    _, dlogits = softmax_xent_grad(logits, y)
    analytic = net.backward(cache, dlogits)
    assert gradient_check(loss_fn, net.parameters(), analytic) < 1e-4


def test_backprop_returns_input_gradient():
    net = DenseNet([3, 4, 2], rng_seed=5)
    x = np.array([[0.5, -0.2, 0.9]])
    out, cache = net.forward_cached(x)
    _, dx = net.backprop(cache, np.ones_like(out))
    # finite differences through the input
    h = 1e-6
    for j in range(3):
        xp, xm = x.copy(), x.copy()
        xp[0, j] += h
        xm[0, j] -= h
        numeric = (net.forward(xp).sum() - net.forward(xm).sum()) / (2 * h)
        assert abs(numeric - dx[0, j]) < 1e-6


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(3)
    z = rng.normal(scale=30.0, size=(50, 7))  # large logits stay stable
    p = softmax(z)
    assert np.all(p >= 0)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-9)


def test_cross_entropy_perfect_prediction_is_zero():
    p = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert cross_entropy(p, np.array([0, 1])) < 1e-10


def test_sgd_update_rule():
    net = DenseNet([1, 1])
    net.weights[0][:] = 0.5
    grads = [np.array([[1.0]]), np.array([0.0])]
    step(net, grads, Sgd(0.1))
    assert np.isclose(net.weights[0][0, 0], 0.4, atol=1e-15)


def test_zero_gradients_leave_parameters_unchanged():
    for opt in (Sgd(0.1), Adam(0.1)):
        net = DenseNet([2, 3, 2], rng_seed=1)
        before = [p.copy() for p in net.parameters()]
        grads = [np.zeros_like(p) for p in net.parameters()]
        step(net, grads, opt)
        for b, p in zip(before, net.parameters()):
            assert np.array_equal(b, p)


def test_nan_gradient_aborts():
    net = DenseNet([2, 2])
    grads = [np.full_like(net.weights[0], np.nan), np.zeros(2)]
    with pytest.raises(FloatingPointError, match="non-finite"):
        step(net, grads, Sgd(0.1))


def test_gradient_shape_mismatch_rejected():
    net = DenseNet([2, 2])
    with pytest.raises(ValueError, match="shape"):
        step(net, [np.zeros((3, 3)), np.zeros(2)], Sgd(0.1))


def test_sgd_on_convex_quadratic_is_monotone():
    # f(p) = |p - t|^2 with small lr: loss never increases
    net = DenseNet([1, 3])
    target = np.array([1.0, -2.0, 0.5])
    x = np.array([1.0])
    opt = Sgd(0.05)
    losses = []
    for _ in range(60):
        out, cache = net.forward_cached(x)
        diff = out - target
        losses.append(float(diff @ diff))
        step(net, net.backward(cache, 2.0 * diff), opt)
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


def test_adam_reduces_loss():
    net = DenseNet([2, 4, 1], rng_seed=9)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(16, 2))
    y = (x[:, :1] * 0.5 - x[:, 1:] * 0.3)
    opt = Adam(1e-2)

    def loss_and_grads():
        out, cache = net.forward_cached(x)
        diff = out - y
        return float((diff ** 2).mean()), net.backward(cache, 2.0 * diff / len(x))

    first, _ = loss_and_grads()
    for _ in range(200):
        _, grads = loss_and_grads()
        step(net, grads, opt)
    last, _ = loss_and_grads()
    assert last < first * 0.1


def test_training_determinism_same_seed():
    def train_once():
        net = DenseNet([2, 4, 2], rng_seed=7)
        opt = Adam(1e-3)
        rng = np.random.default_rng(0)
        x = rng.normal(size=(8, 2))
        y = rng.integers(0, 2, size=8)
        for _ in range(50):
            logits, cache = net.forward_cached(x)
            _, dl = softmax_xent_grad(logits, y)
            step(net, net.backward(cache, dl), opt)
        return net

    a, b = train_once(), train_once()
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(pa, pb)


def test_make_optimizer_rejects_unknown():
    with pytest.raises(ValueError):
        make_optimizer("momentum", 0.1)
    with pytest.raises(ValueError):
        make_optimizer("sgd", -1.0)


def test_dense_net_validation():
    with pytest.raises(ValueError):
        DenseNet([3])
    with pytest.raises(ValueError):
        DenseNet([3, 0, 2])
    with pytest.raises(ValueError):
        DenseNet([3, 2], activation="sigmoid")
