import math

import numpy as np
import pytest

from decavg import (Batch, ConfigurationError, Dataset, NodeState, NumericError,
                    OptimizerState, Shard, cross_entropy, evaluate, forward,
                    gen_synthetic, init_mlp, load_params, loss_and_grad, save_params,
                    sgd_step, train_epochs)


def finite_difference_check(params, batch, eps=1e-4, tol=1e-4):
    """Central-difference oracle: every coordinate of every tensor."""
    _, grads = loss_and_grad(params, batch)
    worst = 0.0
    for group in ("weights", "biases"):
        for arr, garr in zip(getattr(params, group), getattr(grads, group)):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                ix = it.multi_index
                orig = arr[ix]
                arr[ix] = orig + eps
                up = loss_and_grad(params, batch)[0]
                arr[ix] = orig - eps
                down = loss_and_grad(params, batch)[0]
                arr[ix] = orig
                fd = (up - down) / (2 * eps)
                rel = abs(fd - garr[ix]) / max(abs(fd), abs(garr[ix]), 1e-6)
                worst = max(worst, rel)
    assert worst < tol, f"worst relative error {worst}"
    return worst


def random_smooth_trial(seed, sizes=(6, 5, 4, 3), batch=5):
    """Random net and batch, resampled until no pre-activation sits near a ReLU kink
    (finite differences across a kink would not measure the analytic gradient)."""
    rng = np.random.default_rng(seed)
    for attempt in range(50):
        params = init_mlp(sizes, rng.integers(2**32))
        x = rng.random((batch, sizes[0]))
        y = rng.integers(0, sizes[-1], batch)
        h = x
        margin = np.inf
        for l, (w, b) in enumerate(zip(params.weights, params.biases)):
            z = h @ w.T + b
            if l < len(params.weights) - 1:
                margin = min(margin, np.abs(z).min())
                h = np.maximum(z, 0)
        if margin > 1e-2:
            return params, Batch(x, y)
    raise AssertionError("could not find a kink-free trial")


class TestInit:
    def test_reference_architecture_parameter_count(self):
        p = init_mlp([784, 512, 256, 128, 10], 0)
        assert p.n_params == 567_434

    def test_same_seed_identical(self):
        a, b = init_mlp([8, 4, 3], 5), init_mlp([8, 4, 3], 5)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_biases_start_at_zero(self):
        p = init_mlp([2, 3], 1)
        assert np.all(p.biases[0] == 0.0)

    def test_glorot_bounds(self):
        p = init_mlp([100, 50], 3)
        limit = math.sqrt(6 / 150)
        assert np.all(np.abs(p.weights[0]) <= limit)

    def test_rejects_single_layer(self):
        with pytest.raises(ConfigurationError):
            init_mlp([4], 0)


class TestForward:
    def test_zero_net_gives_zero_logits(self):
        p = init_mlp([4, 3, 2], 0)
        for w in p.weights:
            w[...] = 0.0
        logits = forward(p, np.ones((5, 4)))
        assert np.all(logits == 0.0)

    def test_identity_single_layer(self):
        p = init_mlp([3, 3], 0)
        p.weights[0][...] = np.eye(3)
        v = np.array([[0.3, -1.2, 4.0]])
        assert np.allclose(forward(p, v), v, atol=0)

    def test_hand_computed_fixture(self):
        # Frozen by hand: z1 = relu(W1 x + b1), logits = W2 z1 + b2
        p = init_mlp([2, 2, 2], 0)
        p.weights[0][...] = [[1.0, 2.0], [3.0, 4.0]]
        p.biases[0][...] = [0.5, -0.5]
        p.weights[1][...] = [[1.0, -1.0], [2.0, 0.5]]
        p.biases[1][...] = [0.0, 1.0]
        out = forward(p, np.array([[1.0, 2.0]]))
        # z1 = [5.5, 10.5]; logits = [5.5-10.5, 11+5.25+1] = [-5, 17.25]
        assert np.allclose(out, [[-5.0, 17.25]], atol=1e-12)

    def test_dimension_mismatch_raises(self):
        p = init_mlp([4, 2], 0)
        with pytest.raises(Exception, match="(batch, 4)"):
            forward(p, np.ones((3, 5)))


class TestLossAndGrad:
    def test_uniform_logits_loss_is_log_c(self):
        for c in (2, 7, 10):
            p = init_mlp([3, c], 0)
            for w in p.weights:
                w[...] = 0.0
            rng = np.random.default_rng(0)
            batch = Batch(rng.random((6, 3)), rng.integers(0, c, 6))
            loss, _ = loss_and_grad(p, batch)
            assert loss == pytest.approx(math.log(c), rel=1e-12)

    def test_initial_ten_class_loss_near_ln10(self):
        # a freshly initialized full-scale net predicts near-uniformly
        p = init_mlp([784, 512, 256, 128, 10], 4)
        rng = np.random.default_rng(1)
        batch = Batch(rng.random((64, 784)), rng.integers(0, 10, 64))
        loss, _ = loss_and_grad(p, batch)
        assert loss == pytest.approx(2.3026, abs=0.25)

    def test_gradients_match_finite_differences(self):
        params, batch = random_smooth_trial(123)
        finite_difference_check(params, batch)

    def test_non_finite_activation_names_layer(self):
        p = init_mlp([3, 4, 2], 0)
        p.weights[1][0, 0] = np.inf
        with pytest.raises(NumericError, match="layer 1"):
            loss_and_grad(p, Batch(np.ones((2, 3)), np.array([0, 1])))


class TestSgdStep:
    def make(self, mu=0.5, lr=0.1):
        p = init_mlp([2, 2], 3)
        s = OptimizerState.for_params(p, lr=lr, momentum=mu)
        g = p.zeros_like()
        for w in g.weights:
            w[...] = 1.0
        for b in g.biases:
            b[...] = 1.0
        return p, g, s

    def test_zero_momentum_is_plain_sgd(self):
        p, g, s = self.make(mu=0.0, lr=0.1)
        before = p.flat()
        sgd_step(p, g, s)
        assert np.allclose(p.flat(), before - 0.1, atol=1e-15)

    def test_zero_grad_zero_velocity_is_noop(self):
        p, _, s = self.make()
        before = p.flat()
        sgd_step(p, p.zeros_like(), s)
        assert np.array_equal(p.flat(), before)

    def test_two_step_momentum_unrolls(self):
        # v1 = g, v2 = 0.5 g + g = 1.5 g, total displacement = lr*(g + 1.5g)
        p, g, s = self.make(mu=0.5, lr=0.1)
        before = p.flat()
        sgd_step(p, g, s)
        sgd_step(p, g, s)
        assert np.allclose(p.flat(), before - 0.1 * 2.5, atol=1e-15)


def make_node(ds, indices, seed=0, lr=0.05, momentum=0.5, layer_sizes=(8, 6, 4)):
    params = init_mlp(list(layer_sizes), seed)
    opt = OptimizerState.for_params(params, lr=lr, momentum=momentum)
    shard = Shard.build(0, indices, ds)
    return NodeState.create(0, params, opt, shard, ds, np.random.default_rng(seed))


class TestTrainEpochs:
    @pytest.fixture()
    def ds(self):
        return gen_synthetic(4, 8, 30, 0.15, 2)

    def test_zero_epochs_keeps_params(self, ds):
        node = make_node(ds, np.arange(20))
        before = node.params.flat()
        train_epochs(node, 0, 8)
        assert np.array_equal(node.params.flat(), before)

    def test_empty_shard_is_noop(self, ds):
        node = make_node(ds, [])
        before = node.params.flat()
        train_epochs(node, 3, 8)
        assert np.array_equal(node.params.flat(), before)

    def test_zero_batch_size_rejected(self, ds):
        node = make_node(ds, np.arange(10))
        with pytest.raises(ConfigurationError):
            train_epochs(node, 1, 0)

    def test_single_full_batch_equals_manual_step(self, ds):
        # Composition oracle: one epoch with batch >= shard is exactly one
        # full-batch loss_and_grad + sgd_step with the same shuffled order.
        idx = np.arange(14)
        node = make_node(ds, idx, seed=9)
        manual = make_node(ds, idx, seed=9)
        train_epochs(node, 1, batch_size=50)
        order = manual.rng.permutation(14)
        _, grads = loss_and_grad(manual.params, Batch(manual.features[order], manual.labels[order]))
        sgd_step(manual.params, grads, manual.opt)
        assert np.array_equal(node.params.flat(), manual.params.flat())

    def test_loss_decreases_on_separable_blobs(self):
        # 50 full-batch steps on a separable 2-class problem: >= 45 must decrease
        ds = gen_synthetic(2, 4, 50, 0.02, 5)
        node = make_node(ds, np.arange(100), seed=3, lr=0.1, layer_sizes=(4, 6, 2))
        batch = Batch(node.features, node.labels)
        losses = [loss_and_grad(node.params, batch)[0]]
        for _ in range(50):
            _, grads = loss_and_grad(node.params, batch)
            sgd_step(node.params, grads, node.opt)
            losses.append(loss_and_grad(node.params, batch)[0])
        decreases = sum(b < a for a, b in zip(losses, losses[1:]))
        assert decreases >= 45

    def test_training_is_bit_deterministic(self, ds):
        a = make_node(ds, np.arange(25), seed=4)
        b = make_node(ds, np.arange(25), seed=4)
        train_epochs(a, 3, 8)
        train_epochs(b, 3, 8)
        assert np.array_equal(a.params.flat(), b.params.flat())


class TestEvaluate:
    def balanced_test_set(self, classes=10, per_class=20, dim=4):
        rng = np.random.default_rng(0)
        feats = rng.random((classes * per_class, dim))
        labels = np.repeat(np.arange(classes), per_class)
        return Dataset(feats, labels, classes)

    def test_constant_classifier_on_balanced_ten_classes(self):
        p = init_mlp([4, 10], 0)
        for w in p.weights:
            w[...] = 0.0  # zero logits -> argmax tie broken toward class 0
        acc, confusion = evaluate(p, self.balanced_test_set())
        assert acc == pytest.approx(0.1)
        assert confusion[:, 0].sum() == 200

    def test_confusion_row_sums_and_trace(self):
        test = self.balanced_test_set(classes=5, per_class=12)
        p = init_mlp([4, 8, 5], 3)
        acc, confusion = evaluate(p, test)
        assert confusion.sum() == len(test)
        assert np.all(confusion.sum(axis=1) == 12)
        assert confusion.trace() / confusion.sum() == pytest.approx(acc)

    def test_isolated_two_class_node_capped_on_eight_class_test(self):
        # A node that saw 2 of 8 equally represented classes cannot exceed 0.25 + eps
        full = gen_synthetic(8, 10, 80, 0.08, 11)
        train_idx = np.flatnonzero(full.labels < 2)[:80]
        node = make_node(full, train_idx, seed=1, lr=0.1, layer_sizes=(10, 16, 8))
        train_epochs(node, 40, 16)
        acc, _ = evaluate(node.params, full)
        assert acc <= 0.25 + 0.02


class TestSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        p = init_mlp([7, 5, 3], 21)
        path = tmp_path / "params.bin"
        save_params(p, path)
        q = load_params(path)
        assert q.layer_sizes == p.layer_sizes
        assert np.array_equal(q.flat(), p.flat())

    def test_header_is_json_line(self, tmp_path):
        import json

        p = init_mlp([4, 2], 0)
        path = tmp_path / "params.bin"
        save_params(p, path)
        header = path.read_bytes().split(b"\n", 1)[0]
        assert json.loads(header) == {"layer_sizes": [4, 2]}
