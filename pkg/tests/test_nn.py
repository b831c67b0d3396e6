import numpy as np
import pytest

from common.exceptions import CheckpointMismatchError, LayoutMismatchError
from common.nn import (
    AdamState,
    ParamLayout,
    ParamVector,
    adam_update,
    clip_grad_norm,
    elu_backward,
    elu_forward,
    flatten_grads,
    grad_check,
    gru_backward,
    gru_forward,
    gru_shapes,
    linear_backward,
    linear_forward,
)


class TestLinear:
    def test_identity(self, rng):
        x = rng.normal(size=(4, 3))
        assert np.array_equal(linear_forward(np.eye(3), np.zeros(3), x), x)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            linear_forward(np.zeros((2, 3)), np.zeros(2), np.zeros((4, 5)))

    def test_gradients(self, rng):
        layout = ParamLayout.from_shapes({"weight": (4, 3), "bias": (4,)})
        x = rng.normal(size=(5, 3))
        upstream = rng.normal(size=(5, 4))

        def loss_fn(values):
            p = ParamVector(layout, values).views()
            y = linear_forward(p["weight"], p["bias"], x)
            _, dw, db = linear_backward(p["weight"], x, upstream)
            return float(np.sum(y * upstream)), flatten_grads(layout, {"weight": dw, "bias": db})

        report = grad_check(loss_fn, rng.normal(size=layout.size))
        assert report.passed, report


class TestElu:
    def test_gradient(self, rng):
        x = rng.normal(size=50)
        upstream = rng.normal(size=50)
        h = 1e-6
        numeric = (elu_forward(x + h) - elu_forward(x - h)) / (2 * h) * upstream
        assert np.allclose(elu_backward(x, upstream), numeric, atol=1e-7)


class TestGru:
    def test_zero_params_halves_hidden(self, rng):
        params = {k: np.zeros(s) for k, s in gru_shapes(3, 4).items()}
        h0 = rng.normal(size=(2, 4))
        hs, _ = gru_forward(params, np.zeros((1, 2, 3)), h0)
        assert np.allclose(hs[0], 0.5 * h0)

    def test_zero_length_sequence(self, rng):
        params = {k: rng.normal(size=s) for k, s in gru_shapes(3, 4).items()}
        h0 = rng.normal(size=(2, 4))
        hs, caches = gru_forward(params, np.zeros((0, 2, 3)), h0)
        assert hs.shape == (0, 2, 4)
        assert caches == []
        with pytest.raises(ValueError, match="empty sequence"):
            gru_backward(params, hs, caches)

    def test_bptt_gradients(self, rng):
        layout = ParamLayout.from_shapes(gru_shapes(3, 4))
        xs = rng.normal(size=(5, 2, 3))
        h0 = rng.normal(size=(2, 4))
        upstream = rng.normal(size=(5, 2, 4))

        def loss_fn(values):
            params = ParamVector(layout, values).views()
            hs, caches = gru_forward(params, xs, h0)
            _, _, grads = gru_backward(params, upstream, caches)
            return float(np.sum(hs * upstream)), flatten_grads(layout, grads)

        report = grad_check(loss_fn, 0.5 * rng.normal(size=layout.size))
        assert report.passed, report

    def test_input_and_hidden_gradients(self, rng):
        params = {k: 0.5 * rng.normal(size=s) for k, s in gru_shapes(3, 4).items()}
        xs = rng.normal(size=(4, 1, 3))
        h0 = rng.normal(size=(1, 4))
        upstream = rng.normal(size=(4, 1, 4))
        hs, caches = gru_forward(params, xs, h0)
        dxs, dh0, _ = gru_backward(params, upstream, caches)

        def loss_x(flat):
            hs, caches = gru_forward(params, flat.reshape(xs.shape), h0)
            dxs, _, _ = gru_backward(params, upstream, caches)
            return float(np.sum(hs * upstream)), dxs.reshape(-1)

        def loss_h(flat):
            hs, caches = gru_forward(params, xs, flat.reshape(h0.shape))
            _, dh0, _ = gru_backward(params, upstream, caches)
            return float(np.sum(hs * upstream)), dh0.reshape(-1)

        assert grad_check(loss_x, xs.reshape(-1)).passed
        assert grad_check(loss_h, h0.reshape(-1)).passed


class TestGradCheck:
    def test_quadratic(self, rng):
        a = rng.normal(size=6)

        def loss_fn(x):
            return float(np.sum((x - a) ** 2)), 2.0 * (x - a)

        assert grad_check(loss_fn, rng.normal(size=6), tolerance=1e-8).passed

    def test_corrupted_gradient_fails(self, rng):
        def loss_fn(x):
            grad = 2.0 * x
            grad[2] += 0.5
            return float(np.sum(x ** 2)), grad

        report = grad_check(loss_fn, rng.normal(size=5))
        assert not report.passed
        assert report.worst_index == 2

    def test_small_component_judged_by_own_scale(self):
        # градиент 1e-5 против 1 у остальных, аналитика ошибается на 0.5% только в нём
        weights = np.array([1.0, 1.0, 1e-5, 1.0])

        def loss_fn(x):
            grad = weights * x
            grad[2] *= 1.005
            return float(0.5 * np.sum(weights * x ** 2)), grad

        report = grad_check(loss_fn, np.ones(4))
        assert not report.passed
        assert report.worst_index == 2
        assert report.max_rel_error == pytest.approx(0.005, rel=1e-2)
        assert report.max_abs_error == pytest.approx(5e-8, rel=1e-2)


class TestAdam:
    @staticmethod
    def _vector(values):
        return ParamVector(ParamLayout.from_shapes({"w": (len(values),)}), np.array(values, dtype=np.float64))

    def test_zero_gradient(self):
        params = self._vector([1.0, -2.0, 3.0])
        state = AdamState.zeros(3, learning_rate=0.1)
        adam_update(params, np.zeros(3), state)
        assert list(params.values) == [1.0, -2.0, 3.0]

    def test_first_step_magnitude(self):
        params = self._vector([0.0, 0.0])
        state = AdamState.zeros(2, learning_rate=0.01)
        adam_update(params, np.array([3.0, -0.2]), state)
        assert params.values == pytest.approx([-0.01, 0.01], rel=1e-6)

    def test_deterministic(self, rng):
        grads = [rng.normal(size=4) for _ in range(10)]

        def run():
            params = self._vector([0.1, 0.2, 0.3, 0.4])
            state = AdamState.zeros(4, learning_rate=0.05)
            for g in grads:
                adam_update(params, g, state)
            return params.values

        assert np.array_equal(run(), run())

    def test_shape_mismatch(self):
        with pytest.raises(LayoutMismatchError):
            adam_update(self._vector([0.0, 0.0]), np.zeros(3), AdamState.zeros(2, 0.1))

    def test_clip(self):
        grads, norm = clip_grad_norm(np.array([3.0, 4.0]), 1.0)
        assert norm == 5.0
        assert grads == pytest.approx([0.6, 0.8])
        same, _ = clip_grad_norm(np.array([3.0, 4.0]), None)
        assert list(same) == [3.0, 4.0]


class TestParamVector:
    def test_views_share_memory(self):
        layout = ParamLayout.from_shapes({"a.w": (2, 3), "a.b": (2,), "c.w": (1,)})
        vector = ParamVector(layout)
        vector.subset("a")["w"][1, 2] = 7.0
        assert vector.values[5] == 7.0
        assert set(vector.subset("a")) == {"w", "b"}

    def test_assign_keeps_views(self, rng):
        layout = ParamLayout.from_shapes({"w": (3,)})
        vector = ParamVector(layout)
        view = vector.views()["w"]
        vector.assign(ParamVector(layout, np.array([1.0, 2.0, 3.0])))
        assert list(view) == [1.0, 2.0, 3.0]

    def test_layout_mismatch(self):
        a = ParamVector(ParamLayout.from_shapes({"w": (3,)}))
        b = ParamVector(ParamLayout.from_shapes({"v": (3,)}))
        with pytest.raises(LayoutMismatchError):
            a.assign(b)

    def test_blob(self, rng):
        layout = ParamLayout.from_shapes({"w": (2, 2), "b": (2,)})
        vector = ParamVector(layout, rng.normal(size=6))
        restored, meta = ParamVector.from_bytes(vector.to_bytes({"fingerprint": {"mode": "qmix"}}))
        assert restored.layout == layout
        assert np.array_equal(restored.values, vector.values)
        assert meta == {"fingerprint": {"mode": "qmix"}}

    def test_bad_blob(self):
        with pytest.raises(CheckpointMismatchError):
            ParamVector.from_bytes(b"XXXX" + bytes(20))
        blob = ParamVector(ParamLayout.from_shapes({"w": (3,)})).to_bytes()
        with pytest.raises(CheckpointMismatchError, match="bytes"):
            ParamVector.from_bytes(blob[:-8])
