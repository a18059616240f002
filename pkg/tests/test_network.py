"""Forward/backward correctness, DAM rank behavior, checkpoints."""

import numpy as np
import pytest

from simplexnet import (
    DenseLayer,
    FeatureBatch,
    NetworkModel,
    ReluLayer,
    attach_dam,
    build_centers,
    build_mlp,
    dsc_loss,
    init_parameters,
    load_checkpoint,
    save_checkpoint,
)

from conftest import assert_backward_matches_fd, make_clean_inputs, numerical_rank


class TestForward:
    def test_identity_dense_layer(self):
        layer = DenseLayer(3, 3)
        layer.weight = np.eye(3)
        model = NetworkModel([layer])
        x = np.random.default_rng(0).standard_normal((4, 3))
        np.testing.assert_array_equal(model.forward(x), x)

    def test_relu_clamps_negatives(self):
        model = NetworkModel([ReluLayer()])
        np.testing.assert_array_equal(
            model.forward([[-1.0, 0.0, 2.0]]), [[0.0, 0.0, 2.0]]
        )

    def test_forward_is_bitwise_deterministic(self):
        model = init_parameters(build_mlp([4, 6, 3]), seed=42)
        x = np.random.default_rng(1).standard_normal((5, 4))
        first = model.forward(x)
        second = model.forward(x)
        assert np.array_equal(first, second)

    def test_width_mismatch_names_layer(self):
        model = init_parameters(build_mlp([4, 6, 3]), seed=0)
        with pytest.raises(ValueError, match="layer 0"):
            model.forward(np.zeros((2, 5)))

    def test_mismatched_chain_rejected(self):
        with pytest.raises(ValueError, match="layer 1"):
            NetworkModel([DenseLayer(3, 4), DenseLayer(5, 2)])


class TestBackward:
    def test_backward_before_forward_raises(self):
        model = init_parameters(build_mlp([3, 2]), seed=0)
        with pytest.raises(RuntimeError, match="before forward"):
            model.backward(np.zeros((1, 2)))

    def test_zero_output_grad_gives_zero_param_grads(self):
        model = init_parameters(build_mlp([3, 4, 2]), seed=1)
        x = np.random.default_rng(2).standard_normal((6, 3))
        model.forward(x)
        model.backward(np.zeros((6, 2)))
        for g in model.grads():
            np.testing.assert_array_equal(g, 0.0)

    def test_linear_model_dsc_closed_form(self):
        # single dense layer, one sample: dW = x^T (2 (xW + b - s))
        model = init_parameters(build_mlp([3, 2]), seed=3)
        centers = build_centers(2, 2, 1.0)
        x = np.random.default_rng(4).standard_normal((1, 3))
        feats = model.forward(x)
        out = dsc_loss(FeatureBatch(feats, [0]), centers)
        model.backward(out.feature_grad)
        layer = model.layers[0]
        expected_dw = x.T @ (2.0 * (feats - centers.centers[[0]]))
        np.testing.assert_allclose(layer.grad_weight, expected_dw, rtol=1e-12)
        np.testing.assert_allclose(layer.grad_bias, (2.0 * (feats - centers.centers[[0]]))[0], rtol=1e-12)

    def test_two_layer_relu_matches_finite_differences(self):
        model = init_parameters(build_mlp([5, 8, 3]), seed=7)
        x = make_clean_inputs(model, n=6, in_dim=5, seed=70)
        assert_backward_matches_fd(model, x, seed=71)

    def test_three_layer_relu_matches_finite_differences(self):
        model = init_parameters(build_mlp([4, 7, 6, 2]), seed=8)
        x = make_clean_inputs(model, n=5, in_dim=4, seed=80)
        assert_backward_matches_fd(model, x, seed=81)

    def test_dam_block_matches_finite_differences(self):
        model = init_parameters(build_mlp([4, 6, 3]), seed=9)
        with pytest.warns(UserWarning):
            attach_dam(model, num_classes=4)  # target 3 <= width 3: warned, still legal
        init_parameters(model, seed=9)
        x = make_clean_inputs(model, n=5, in_dim=4, seed=90)
        assert_backward_matches_fd(model, x, seed=91)

    def test_input_gradient_linear_layer(self):
        model = init_parameters(build_mlp([3, 2]), seed=10)
        x = np.random.default_rng(11).standard_normal((4, 3))
        model.forward(x)
        probe = np.random.default_rng(12).standard_normal((4, 2))
        input_grad = model.backward(probe)
        np.testing.assert_allclose(input_grad, probe @ model.layers[0].weight.T, rtol=1e-12)


class TestInit:
    def test_same_seed_bitwise_identical(self):
        a = init_parameters(build_mlp([8, 16, 4]), seed=123)
        b = init_parameters(build_mlp([8, 16, 4]), seed=123)
        for pa, pb in zip(a.params(), b.params()):
            assert np.array_equal(pa, pb)

    def test_different_seeds_differ(self):
        a = init_parameters(build_mlp([8, 16, 4]), seed=123)
        b = init_parameters(build_mlp([8, 16, 4]), seed=124)
        assert any(not np.array_equal(pa, pb) for pa, pb in zip(a.params(), b.params()))

    def test_fan_in_scaling(self):
        model = init_parameters(build_mlp([256, 64]), seed=5)
        weight = model.layers[0].weight
        assert abs(weight.var() * 256 - 1.0) < 0.2
        np.testing.assert_array_equal(model.layers[0].bias, 0.0)


class TestDam:
    def test_output_width_is_c_minus_1(self):
        model = init_parameters(build_mlp([7, 4]), seed=0)
        attach_dam(model, num_classes=10)
        init_parameters(model, seed=0)
        assert model.out_dim == 9
        x = np.random.default_rng(3).standard_normal((5, 7))
        assert model.forward(x).shape == (5, 9)

    def test_relu_raises_attainable_rank(self):
        hits = 0
        for seed in range(20):
            model = NetworkModel([])
            model.layers.append(DenseLayer(4, 4))
            model.layers[0].weight = np.eye(4)  # pass-through backbone
            attach_dam(model, num_classes=10, activations=True)
            init_parameters(model, seed=seed)
            model.layers[0].weight = np.eye(4)
            x = np.random.default_rng(1000 + seed).standard_normal((200, 4))
            if numerical_rank(model.forward(x)) > 5:
                hits += 1
        assert hits >= 18

    def test_without_activations_rank_capped_by_input_dim(self):
        for seed in range(20):
            model = NetworkModel([DenseLayer(4, 4)])
            attach_dam(model, num_classes=10, activations=False)
            init_parameters(model, seed=seed)
            x = np.random.default_rng(2000 + seed).standard_normal((200, 4))
            assert numerical_rank(model.forward(x)) <= 5


class TestCheckpoint:
    def test_round_trip_is_value_exact(self, tmp_path):
        model = init_parameters(build_mlp([5, 8, 3]), seed=77)
        attach_dam(model, num_classes=10)
        init_parameters(model, seed=77)
        path = tmp_path / "ck.json"
        save_checkpoint(model, str(path))
        loaded = load_checkpoint(str(path))
        assert loaded.seed == 77
        for pa, pb in zip(model.params(), loaded.params()):
            assert np.array_equal(pa, pb)
        # saving the loaded model reproduces the file byte for byte
        path2 = tmp_path / "ck2.json"
        save_checkpoint(loaded, str(path2))
        assert path.read_bytes() == path2.read_bytes()

    def test_corrupt_checkpoint_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format_version": 1, "layers": [{"kind": "dense", "in": 2, "out": 2}], "seed": 0, "params": [[1.0]]}')
        with pytest.raises(ValueError, match="mismatch"):
            load_checkpoint(str(path))

    def test_wrong_version_rejected(self, tmp_path):
        path = tmp_path / "v9.json"
        path.write_text('{"format_version": 9}')
        with pytest.raises(ValueError, match="format"):
            load_checkpoint(str(path))
