import numpy as np
import pytest

from scdetect.autodiff import (
    Array2D,
    NotScalar,
    Param,
    ShapeMismatch,
    add,
    add_bias_row,
    backward,
    clip,
    col_max,
    col_mean,
    concat_cols,
    concat_rows,
    constant,
    div,
    exp,
    grad_check,
    layer_norm,
    leaky_relu,
    log,
    matmul,
    maximum,
    mul,
    relu,
    row_max,
    row_mean,
    row_softmax,
    scale,
    scale_rows,
    segment_softmax,
    segment_sum,
    sigmoid,
    slice_cols,
    slice_rows,
    sub,
    sum_all,
    take_rows,
    tanh,
    transpose,
    zeros,
)

RNG = np.random.default_rng(42)


def param(rows, cols, name="p", shift=0.0):
    return Param(Array2D(RNG.normal(size=(rows, cols)) + shift), name)


def check(builder, params, tol=1e-4):
    report = grad_check(builder, params, rng=np.random.default_rng(1))
    worst = report.worst
    assert report.passed, f"worst {worst.param}{worst.coord}: {worst.rel_error:.2e}"


class TestBasics:
    def test_requires_2d(self):
        with pytest.raises(ShapeMismatch):
            Array2D(np.zeros(3))

    def test_item_requires_1x1(self):
        with pytest.raises(NotScalar):
            zeros(2, 2).item()

    def test_backward_requires_scalar(self):
        with pytest.raises(NotScalar):
            backward(zeros(2, 2))

    def test_shape_mismatch_raises(self):
        with pytest.raises(ShapeMismatch):
            add(zeros(2, 2), zeros(2, 3))
        with pytest.raises(ShapeMismatch):
            matmul(zeros(2, 3), zeros(2, 3))

    def test_backward_zeroes_stale_grads(self):
        p = param(2, 2)
        loss1 = sum_all(mul(p.value, p.value))
        backward(loss1)
        g1 = p.grad.copy()
        backward(loss1)
        assert np.allclose(p.grad, g1)  # not doubled

    def test_reused_node_accumulates(self):
        p = param(2, 2, shift=3.0)
        y = add(p.value, p.value)  # dL/dp = 2
        backward(sum_all(y))
        assert np.allclose(p.grad, 2.0)


class TestGradients:
    """Central finite-difference checks for every differentiable op.
    Inputs are shifted away from kinks (relu/max ties/clip edges)."""

    def test_matmul(self):
        a, b = param(3, 4, "a"), param(4, 2, "b")
        check(lambda: sum_all(matmul(a.value, b.value)), [a, b])

    def test_add_sub_mul(self):
        a, b = param(3, 3, "a"), param(3, 3, "b")
        check(lambda: sum_all(mul(add(a.value, b.value), sub(a.value, b.value))), [a, b])

    def test_div(self):
        a, b = param(2, 3, "a"), param(2, 3, "b", shift=4.0)
        check(lambda: sum_all(div(a.value, b.value)), [a, b])

    def test_add_bias_row(self):
        a, b = param(4, 3, "a"), param(1, 3, "b")
        check(lambda: sum_all(tanh(add_bias_row(a.value, b.value))), [a, b])

    def test_scale_and_scale_rows(self):
        a, s = param(3, 4, "a"), param(3, 1, "s")
        check(lambda: sum_all(scale(scale_rows(a.value, s.value), 1.7)), [a, s])

    def test_transpose(self):
        a = param(2, 5, "a")
        check(lambda: sum_all(matmul(transpose(a.value), a.value)), [a])

    def test_maximum_away_from_ties(self):
        a, b = param(3, 3, "a", shift=2.0), param(3, 3, "b", shift=-2.0)
        check(lambda: sum_all(maximum(a.value, b.value)), [a, b])

    def test_clip_interior(self):
        a = param(3, 3, "a")
        check(lambda: sum_all(clip(a.value, -50.0, 50.0)), [a])

    def test_concat_and_slices(self):
        a, b = param(2, 3, "a"), param(2, 2, "b")
        check(lambda: sum_all(slice_cols(concat_cols([a.value, b.value]), 1, 4)), [a, b])
        c, d = param(2, 3, "c"), param(3, 3, "d")
        check(lambda: sum_all(slice_rows(concat_rows([c.value, d.value]), 1, 4)), [c, d])

    def test_take_rows_with_repeats(self):
        t = param(5, 3, "t")
        check(lambda: sum_all(tanh(take_rows(t.value, [0, 2, 2, 4]))), [t])

    def test_relu_away_from_zero(self):
        a = param(3, 3, "a", shift=1.5)
        check(lambda: sum_all(relu(a.value)), [a])

    def test_leaky_relu(self):
        a = param(3, 3, "a", shift=-1.5)
        check(lambda: sum_all(leaky_relu(a.value)), [a])

    def test_sigmoid_exp_log_tanh(self):
        a = param(2, 3, "a", shift=2.0)
        check(lambda: sum_all(log(exp(sigmoid(tanh(a.value))))), [a])

    def test_row_softmax(self):
        a = param(3, 4, "a")
        w = param(3, 4, "w")
        check(lambda: sum_all(mul(row_softmax(a.value), w.value)), [a, w])

    def test_reductions(self):
        a = param(3, 4, "a")
        check(
            lambda: sum_all(add(row_mean(a.value), transpose(col_mean(transpose(a.value))))),
            [a],
        )

    def test_row_col_max(self):
        a = param(3, 4, "a")  # random values, ties have measure zero
        check(lambda: sum_all(row_max(a.value)), [a])
        check(lambda: sum_all(col_max(a.value)), [a])

    def test_layer_norm(self):
        a = param(3, 6, "a")
        w = param(3, 6, "w")
        check(lambda: sum_all(mul(layer_norm(a.value), w.value)), [a, w])

    def test_segment_softmax(self):
        s = param(6, 1, "s")
        w = param(6, 1, "w")
        seg = [0, 0, 1, 1, 1, 2]
        check(lambda: sum_all(mul(segment_softmax(s.value, seg, 3), w.value)), [s, w])

    def test_segment_sum(self):
        v = param(6, 3, "v")
        seg = [0, 2, 1, 1, 0, 2]
        check(lambda: sum_all(tanh(segment_sum(v.value, seg, 3))), [v])


class TestForwardValues:
    def test_row_softmax_rows_sum_to_one(self):
        s = row_softmax(constant(RNG.normal(size=(4, 7))))
        assert np.allclose(s.data.sum(axis=1), 1.0)

    def test_row_softmax_shift_invariant(self):
        x = RNG.normal(size=(2, 5))
        a = row_softmax(constant(x)).data
        b = row_softmax(constant(x + 100.0)).data
        assert np.allclose(a, b)

    def test_layer_norm_moments(self):
        out = layer_norm(constant(RNG.normal(size=(3, 8)) * 5 + 2)).data
        assert np.allclose(out.mean(axis=1), 0.0, atol=1e-7)
        assert np.allclose(out.std(axis=1), 1.0, atol=1e-3)

    def test_segment_softmax_sums_per_segment(self):
        seg = [0, 0, 1, 2, 2, 2]
        s = segment_softmax(constant(RNG.normal(size=(6, 1))), seg, 3).data[:, 0]
        assert np.isclose(s[0] + s[1], 1.0)
        assert np.isclose(s[2], 1.0)
        assert np.isclose(s[3] + s[4] + s[5], 1.0)

    def test_segment_sum_matches_bincount(self):
        v = RNG.normal(size=(6, 2))
        seg = [1, 0, 1, 2, 0, 1]
        out = segment_sum(constant(v), seg, 3).data
        for k in range(3):
            assert np.allclose(out[k], v[[i for i, s in enumerate(seg) if s == k]].sum(axis=0))

    def test_take_rows_bounds(self):
        with pytest.raises(ShapeMismatch):
            take_rows(zeros(3, 2), [0, 3])


class TestGradCheckHarness:
    def test_detects_wrong_gradient(self):
        # a deliberately broken op: forward x^2 but backward says grad = 1
        p = param(2, 2, "bad")

        def builder():
            out = Array2D(p.value.data ** 2, (p.value,))
            out._backward = lambda g: None or p.value.__setattr__(
                "grad", (p.value.grad if p.value.grad is not None else 0) + g
            )
            return sum_all(out)

        report = grad_check(builder, [p])
        assert not report.passed

    def test_eps_validation(self):
        p = param(1, 1)
        with pytest.raises(ValueError):
            grad_check(lambda: sum_all(p.value), [p], eps=1e-9)
