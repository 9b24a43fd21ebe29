import numpy as np
import pytest

from msalaa.autodiff import Tape, grad_check
from msalaa.data import SynthSpec, generate_synthetic, standardize
from msalaa.linalg import rng_from_seed
from msalaa.model import (
    ModelConfig,
    attach_selfrep,
    forward,
    init_params,
)
from msalaa.training import (
    AdamState,
    LossWeights,
    OptimizerConfig,
    build_loss,
    reconstruction_loss,
    select_best_view,
    selfrep_loss,
    total_loss,
    train,
)


def toy_setup(m=2, dims=(3, 4), r=2, n=5, seed=0, c_scale=0.0, layers=1):
    config = ModelConfig(m, list(dims), r, encoder_layers=layers,
                         decoder_layers=layers)
    rng = rng_from_seed(seed)
    params = attach_selfrep(init_params(config, rng), n)
    if c_scale:
        for v in range(m):
            c = c_scale * rng.normal(size=(n, n))
            np.fill_diagonal(c, 0.0)
            params.arrays[f"C_{v}"] = c
    views = [rng.normal(size=(f, n)) for f in dims]
    return config, params, views


class TestReconstructionLoss:
    def test_perfect_reconstruction_zero_weights(self):
        config, params, views = toy_setup()
        for k in list(params.arrays):
            if k.startswith(("W1", "W3")):
                params.arrays[k] = np.zeros_like(params.arrays[k])
        val = reconstruction_loss(views, [v.copy() for v in views], params,
                                  LossWeights())
        assert val == 0.0

    def test_single_view_unit_example(self):
        # single view, N=1, X - Xhat = [1, 1]^T, beta2 = 0 -> 1.0
        config, params, _ = toy_setup(m=1, dims=(2,), n=1)
        x = np.array([[2.0], [3.0]])
        xh = np.array([[1.0], [2.0]])
        val = reconstruction_loss([x], [xh], params, LossWeights(beta2=0.0))
        assert val == 1.0

    def test_l2_regularizer_contribution(self):
        config, params, _ = toy_setup(m=1, dims=(1,), r=1, n=1)
        params.arrays["W1_0_0"] = np.array([[2.0]])
        params.arrays["W3_0_0"] = np.array([[0.0]])
        x = np.zeros((1, 1))
        val = reconstruction_loss([x], [x.copy()], params,
                                  LossWeights(beta2=0.1, omega_kind="L2"))
        assert abs(val - 0.4) < 1e-15

    def test_l1_regularizer(self):
        config, params, _ = toy_setup(m=1, dims=(1,), r=1, n=1)
        params.arrays["W1_0_0"] = np.array([[-2.0]])
        params.arrays["W3_0_0"] = np.array([[0.5]])
        x = np.zeros((1, 1))
        val = reconstruction_loss([x], [x.copy()], params,
                                  LossWeights(beta2=0.1, omega_kind="L1"))
        assert abs(val - 0.25) < 1e-15


class TestSelfrepLoss:
    def test_all_zero(self):
        z = np.zeros((2, 4))
        c = np.zeros((4, 4))
        assert selfrep_loss([z], [z], [c], LossWeights()) == 0.0

    def test_single_view_has_no_alignment(self):
        rng = rng_from_seed(1)
        h = rng.normal(size=(2, 4))
        hsr = rng.normal(size=(2, 4))
        c = rng.normal(size=(4, 4))
        np.fill_diagonal(c, 0.0)
        w = LossWeights(beta1=123.0)
        expected = np.sum((hsr - h) ** 2) / 8 + np.sum(c * c)
        assert abs(selfrep_loss([h], [hsr], [c], w) - expected) < 1e-12

    def test_alignment_single_entry(self):
        # M=2, C1-C2 has a single entry 1, N=2, beta1=0.1:
        # ordered pairs double the term -> 0.1 * 2 * (1/4) * 1 = 0.05
        z = np.zeros((2, 2))
        c1 = np.array([[0.0, 1.0], [0.0, 0.0]])
        c2 = np.zeros((2, 2))
        w = LossWeights(beta1=0.1, c_fro_weight=0.0)
        val = selfrep_loss([z, z], [z, z], [c1, c2], w)
        expected = 1.0 + 0.05  # ||C1||_F^2 weight 0 ... c_fro 0 -> only align
        assert abs(val - 0.05) < 1e-15

    def test_nonzero_diagonal_rejected(self):
        z = np.zeros((2, 2))
        with pytest.raises(RuntimeError):
            selfrep_loss([z], [z], [np.eye(2)], LossWeights())


class TestTotalLoss:
    def test_zero_network_zero_data(self):
        config, params, _ = toy_setup()
        for k in list(params.arrays):
            params.arrays[k] = np.zeros_like(params.arrays[k])
        views = [np.zeros((3, 5)), np.zeros((4, 5))]
        state = forward(views, params)
        assert total_loss(state, views, params, LossWeights()) == 0.0

    def test_matches_tape_loss(self):
        config, params, views = toy_setup(seed=3, c_scale=0.3, layers=2)
        state = forward(views, params)
        plain = total_loss(state, views, params, LossWeights())
        tape = Tape()
        vn = [tape.constant(x) for x in views]
        leaves = {k: tape.leaf(v, name=k) for k, v in params.arrays.items()}
        node, parts = build_loss(tape, vn, leaves, config, LossWeights())
        assert abs(plain - float(node.value)) < 1e-10
        total_parts = (float(parts["recon"].value)
                       + float(parts["selfrep"].value)
                       + float(parts["align"].value))
        assert abs(float(node.value) - total_parts) < 1e-12

    def test_nonnegative(self):
        config, params, views = toy_setup(seed=4, c_scale=0.5)
        state = forward(views, params)
        assert total_loss(state, views, params, LossWeights()) >= 0.0


class TestGradient:
    def test_full_loss_matches_finite_differences(self):
        # M=3, N=8, R=4, l=2 instance per the verification contract
        config = ModelConfig(3, [5, 6, 7], 4, encoder_layers=2,
                             decoder_layers=2, residual=True)
        rng = rng_from_seed(123)
        params = attach_selfrep(init_params(config, rng), 8)
        for v in range(3):
            c = 0.1 * rng.normal(size=(8, 8))
            np.fill_diagonal(c, 0.0)
            params.arrays[f"C_{v}"] = c
        for k, v in params.arrays.items():
            # generic biases keep pre-activations off the relu kink,
            # where finite differences are undefined
            if k.startswith("b"):
                params.arrays[k] = 0.1 * rng.normal(size=v.shape)
        views = [rng.normal(size=(f, 8)) for f in (5, 6, 7)]
        weights = LossWeights()

        def build(tape, leaves):
            vn = [tape.constant(x) for x in views]
            total, _ = build_loss(tape, vn, leaves, config, weights)
            return total

        err, name, ix = grad_check(build, params.arrays, step=1e-6)
        assert err < 1e-5, f"worst {name}{ix}: {err}"

    def test_c_diagonal_gradient_zero(self):
        config, params, views = toy_setup(seed=5, c_scale=0.2)
        tape = Tape()
        vn = [tape.constant(x) for x in views]
        leaves = {k: tape.leaf(v, name=k) for k, v in params.arrays.items()}
        total, _ = build_loss(tape, vn, leaves, config, LossWeights())
        grads = tape.backward(total)
        for v in range(config.num_views):
            assert np.array_equal(np.diag(grads[f"C_{v}"]), np.zeros(5))


class TestAdam:
    def test_zero_gradient_leaves_params_unchanged(self):
        config, params, _ = toy_setup(seed=6)
        before = {k: v.copy() for k, v in params.arrays.items()}
        adam = AdamState(params, OptimizerConfig())
        adam.step(params, {k: np.zeros_like(v) for k, v in before.items()}, 0.01)
        for k in before:
            assert np.array_equal(params.arrays[k], before[k]), k

    def test_lr_schedule(self):
        opt = OptimizerConfig(base_lr=0.001, decay=0.99)
        for t in (0, 1, 5, 100):
            assert opt.lr_at(t) == 0.001 * 0.99**t

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            OptimizerConfig(base_lr=0.0)
        with pytest.raises(ValueError):
            OptimizerConfig(decay=0.0)


class TestTrain:
    def test_zero_epochs_rejected(self):
        config, _, views = toy_setup()
        with pytest.raises(ValueError):
            train(views, config, epochs=0)

    def test_loss_decreases_on_synthetic_toy(self):
        ds = generate_synthetic(SynthSpec(2, 2, 12, [6, 5], 2, 0.05), seed=1)
        views = [standardize(v)[0] for v in ds.views]
        config = ModelConfig(2, [6, 5], 4)
        params, report = train(views, config, epochs=60, seed=0)
        assert report.history[-1]["loss_total"] < report.history[0]["loss_total"]

    def test_determinism(self):
        ds = generate_synthetic(SynthSpec(2, 2, 8, [5, 4], 2, 0.05), seed=2)
        views = [standardize(v)[0] for v in ds.views]
        config = ModelConfig(2, [5, 4], 3)
        p1, r1 = train(views, config, epochs=15, seed=7)
        p2, r2 = train(views, config, epochs=15, seed=7)
        assert r1.history == r2.history
        for k in p1.arrays:
            assert np.array_equal(p1.arrays[k], p2.arrays[k]), k

    def test_diag_zero_after_every_epoch(self):
        ds = generate_synthetic(SynthSpec(2, 2, 8, [5, 4], 2, 0.05), seed=3)
        views = [standardize(v)[0] for v in ds.views]
        config = ModelConfig(2, [5, 4], 3)
        seen = []

        def on_epoch(epoch, params, record):
            for v in range(2):
                seen.append(np.array_equal(
                    np.diag(params.arrays[f"C_{v}"]), np.zeros(16)))

        train(views, config, epochs=10, seed=0, on_epoch=on_epoch)
        assert seen and all(seen)

    def test_history_parts_sum_to_total(self):
        ds = generate_synthetic(SynthSpec(2, 2, 6, [4, 4], 2, 0.05), seed=4)
        views = [standardize(v)[0] for v in ds.views]
        config = ModelConfig(2, [4, 4], 3)
        _, report = train(views, config, epochs=5, seed=0)
        for rec in report.history:
            total = rec["loss_recon"] + rec["loss_selfrep"] + rec["loss_align"]
            assert abs(rec["loss_total"] - total) < 1e-10


class TestSelectBestView:
    class FakeState:
        def __init__(self, hs, hsrs):
            self.H = hs
            self.H_sr = hsrs

    def test_single_view(self):
        h = np.ones((2, 3))
        assert select_best_view(self.FakeState([h], [h])) == 0

    def test_argmin_of_normalized_residual(self):
        h = np.ones((2, 2))
        state = self.FakeState(
            [h, h], [h - 0.1, h - 0.2]  # residuals 0.04 vs 0.16
        )
        assert select_best_view(state) == 0

    def test_tie_breaks_to_lowest_index(self):
        h = np.ones((2, 2))
        state = self.FakeState([h, h], [h - 0.1, h - 0.1])
        assert select_best_view(state) == 0

    def test_override_and_range_check(self):
        h = np.ones((2, 2))
        state = self.FakeState([h, h], [h, h - 0.5])
        assert select_best_view(state, override=1) == 1
        with pytest.raises(ValueError):
            select_best_view(state, override=5)
