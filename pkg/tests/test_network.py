import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from irstrack.predictor.network import (
    adam_step,
    forward,
    init_params,
    loss,
    loss_and_grads,
    lstm_cell_forward,
    predict_raw,
    subnet_backward,
    subnet_forward,
)

from conftest import max_relative_error, tiny


def zero_params(params):
    for comp in params.weights.values():
        for w in comp.values():
            w[...] = 0.0
    return params


class TestLSTMCell:
    def test_zero_parameters(self):
        h = 4
        y, c, (f, i, o, g, _) = lstm_cell_forward(np.ones(3), np.zeros(h), np.zeros(h),
                                                  np.zeros((4 * h, 3)), np.zeros((4 * h, h)), np.zeros(4 * h))
        np.testing.assert_array_equal(f, 0.5)
        np.testing.assert_array_equal(i, 0.5)
        np.testing.assert_array_equal(o, 0.5)
        np.testing.assert_array_equal(c, 0.0)
        np.testing.assert_array_equal(y, 0.0)

    def test_previous_cell_halved(self):
        c0 = np.array([0.3, -2.0])
        y, c, _ = lstm_cell_forward(np.zeros(1), np.zeros(2), c0, np.zeros((8, 1)), np.zeros((8, 2)), np.zeros(8))
        np.testing.assert_allclose(c, 0.5 * c0)
        np.testing.assert_allclose(y, 0.5 * np.tanh(0.5 * c0))

    def test_saturated_forget_gate_remembers(self):
        c0 = np.array([0.7, -1.3])
        b = np.zeros(8)
        b[:2] = 1e3
        _, c, _ = lstm_cell_forward(np.zeros(1), np.zeros(2), c0, np.zeros((8, 1)), np.zeros((8, 2)), b)
        np.testing.assert_allclose(c, c0, atol=1e-12)

    def test_matches_unrolled_layer(self):
        params, x, _ = tiny(3)
        w = params.weights["R"]
        xr = x.real
        pre = np.maximum(xr @ w["We"].T + w["be"], 0)
        y = c = np.zeros((3, params.hidden))
        for t in range(2):
            y, c, _ = lstm_cell_forward(pre[:, t], y, c, w["Wx0"], w["Wy0"], w["b0"])
        _, cache = subnet_forward(w, xr, 1)
        np.testing.assert_allclose(cache[2][0][1][:, -1], y, atol=1e-14)


class TestForward:
    def test_zero_parameters_give_zero(self):
        params, x, _ = tiny(0)
        zero_params(params)
        np.testing.assert_array_equal(forward(params, x, "R"), 0.0)

    def test_zero_lstm_outputs_bias(self):
        params, x, _ = tiny(0, input_len=1)
        zero_params(params)
        params.weights["R"]["Wp"][:] = np.eye(*params.weights["R"]["Wp"].shape)
        params.weights["R"]["bp"][:] = [0.25, -1.0]
        np.testing.assert_allclose(forward(params, x, "R"), np.tile([0.25, -1.0], (3, 1)))

    def test_input_perturbation_changes_output(self):
        params, x, _ = tiny(5)
        base = forward(params, x, "R")
        x2 = x.copy()
        x2[0, 0, 0] += 1e-3
        assert np.abs(forward(params, x2, "R")[0] - base[0]).max() > 0

    def test_shape_mismatch(self):
        params, x, _ = tiny(0)
        with pytest.raises(ValueError):
            forward(params, x[:, :1], "R")
        with pytest.raises(ValueError):
            forward(params, x, "Q")

    def test_single_sequence_accepted(self):
        params, x, _ = tiny(0)
        np.testing.assert_array_equal(forward(params, x[0], "R"), forward(params, x[:1], "R"))

    def test_zeroed_imaginary_network_gives_real_predictions(self):
        params, x, _ = tiny(1)
        for w in params.weights["I"].values():
            w[...] = 0.0
        assert np.all(predict_raw(params, x).imag == 0)

    def test_prediction_block_shape(self):
        params, x, _ = tiny(1, tau1=6, pred_len=6, n_elements=2)
        assert predict_raw(params, x).shape == (3, 6, 6)

    @given(st.integers(1, 3), st.integers(1, 3), st.floats(0.5, 2), st.integers(1, 2), st.integers(1, 3), st.integers(1, 3))
    def test_output_length_contract(self, tau1, n, eps, k, li, lp):
        params, x, _ = tiny(0, tau1=tau1, n_elements=n, expansion=eps, n_layers=k, input_len=li, pred_len=lp)
        assert forward(params, x, "I").shape == (3, tau1 * lp)

    def test_seeded_reproducibility(self):
        a, xa, _ = tiny(8)
        b, xb, _ = tiny(8)
        assert np.array_equal(predict_raw(a, xa), predict_raw(b, xb))

    def test_forget_bias_initialized_to_one(self):
        params, _, _ = tiny(0)
        h = params.hidden
        np.testing.assert_array_equal(params.weights["R"]["b0"][:h], 1.0)
        np.testing.assert_array_equal(params.weights["R"]["b0"][h:], 0.0)


class TestLoss:
    def test_perfect_prediction(self):
        y = np.ones((2, 3, 2)) * (1 + 1j)
        assert loss(y, y) == 0.0

    def test_unit_errors(self):
        assert loss(np.ones((1, 36)) + 0j, np.zeros((1, 36))) == pytest.approx(36.0)

    def test_homogeneity(self, rng):
        e = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        assert loss(2 * e, np.zeros_like(e)) == pytest.approx(4 * loss(e, np.zeros_like(e)))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            loss(np.zeros((2, 3)), np.zeros((2, 4)))


class TestBackward:
    def test_zero_error_gives_zero_gradients(self):
        params, x, _ = tiny(2)
        labels = predict_raw(params, x)
        _, grads = loss_and_grads(params, x, labels)
        for comp in grads.values():
            for g in comp.values():
                assert np.allclose(g, 0, atol=1e-14)

    def test_head_bias_gradient_is_summed_error(self):
        params, x, labels = tiny(4)
        pred = predict_raw(params, x).reshape(3, -1)
        _, grads = loss_and_grads(params, x, labels)
        err = pred - labels.reshape(3, -1)
        np.testing.assert_allclose(grads["R"]["bp"], 2 * err.real.sum(axis=0) / 3, atol=1e-13)
        np.testing.assert_allclose(grads["I"]["bp"], 2 * err.imag.sum(axis=0) / 3, atol=1e-13)

    def test_finite_differences_tiny_net(self):
        worst = max(max_relative_error(*tiny(seed)) for seed in range(20))
        assert worst <= 1e-4

    def test_finite_differences_deeper_net(self):
        params, x, labels = tiny(7, n_layers=2, input_len=3, pred_len=2)
        assert max_relative_error(params, x, labels) <= 1e-4

    def test_real_imaginary_symmetry(self):
        params, x, labels = tiny(9)
        swapped = params.copy()
        swapped.weights = {"R": params.copy().weights["I"], "I": params.copy().weights["R"]}
        swap = lambda z: z.imag + 1j * z.real
        assert loss_and_grads(swapped, swap(x), swap(labels))[0] == pytest.approx(
            loss_and_grads(params, x, labels)[0], rel=1e-14
        )

    def test_subnet_backward_accepts_cache(self):
        params, x, _ = tiny(0)
        out, cache = subnet_forward(params.weights["R"], x.real, 1)
        grads = subnet_backward(params.weights["R"], cache, np.zeros_like(out), 1)
        assert set(grads) == set(params.names())


class TestAdam:
    def test_zero_gradient_keeps_parameters(self):
        params, _, _ = tiny(0)
        before = params.copy()
        grads = {c: {n: np.zeros_like(w) for n, w in params.weights[c].items()} for c in ("R", "I")}
        adam_step(params, grads, 1e-3)
        for c in ("R", "I"):
            for n in params.names():
                np.testing.assert_array_equal(params.weights[c][n], before.weights[c][n])

    def test_first_step_moves_by_learning_rate(self, rng):
        params, _, _ = tiny(0)
        before = params.copy()
        grads = {c: {n: rng.standard_normal(w.shape) for n, w in params.weights[c].items()} for c in ("R", "I")}
        adam_step(params, grads, 1e-3)
        for c in ("R", "I"):
            for n in params.names():
                delta = params.weights[c][n] - before.weights[c][n]
                np.testing.assert_allclose(delta, -1e-3 * np.sign(grads[c][n]), rtol=1e-4)

    def test_repeated_gradient_shrinks_step(self):
        params, _, _ = tiny(0)
        grads = {c: {n: np.full_like(w, 0.5) for n, w in params.weights[c].items()} for c in ("R", "I")}
        w0 = params.weights["R"]["bp"].copy()
        adam_step(params, grads, 1e-2)
        w1 = params.weights["R"]["bp"].copy()
        # a smaller second gradient: the accumulated second moment damps the step
        half = {c: {n: g * 0.5 for n, g in grads[c].items()} for c in grads}
        adam_step(params, half, 1e-2)
        w2 = params.weights["R"]["bp"]
        assert np.all(np.abs(w2 - w1) < np.abs(w1 - w0))
        assert params.step == 2

    def test_reset_optimizer(self):
        params, _, _ = tiny(0)
        params.adam_m["R"]["bp"][:] = 3.0
        params.step = 5
        params.reset_optimizer()
        assert params.step == 0 and not np.any(params.adam_m["R"]["bp"])


def test_init_rejects_empty_network():
    with pytest.raises(ValueError):
        init_params(2, 2, 0.0, 1, 1, 1, np.random.default_rng(0))
