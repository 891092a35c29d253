"""Numeric core: forward values against hand computation, gradients
against central differences, and the graph-walk contract."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwlinear import autodiff as ad
from pwlinear.autodiff import Tensor
from pwlinear.errors import ConfigError, ShapeError

from gradcheck import assert_close, fd_gradient


RNG = np.random.default_rng(20260817)


def leaf(shape, scale=1.0):
    return Tensor(RNG.normal(0.0, scale, shape), requires_grad=True)


# ---------------------------------------------------------------- forward


def test_matmul_identity():
    a = Tensor(RNG.normal(size=(4, 4)))
    out = ad.matmul(a, Tensor(np.eye(4)))
    np.testing.assert_array_equal(out.data, a.data)


def test_matmul_hand_product():
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    b = Tensor([[5.0, 6.0], [7.0, 8.0]])
    out = ad.matmul(a, b)
    np.testing.assert_array_equal(out.data, [[19.0, 22.0], [43.0, 50.0]])


def test_matmul_column_vector_cases():
    col = Tensor([[3.0], [4.0]])
    np.testing.assert_array_equal(ad.matmul(Tensor(np.eye(2)), col).data, col.data)
    a = Tensor([[1.0, 2.0], [3.0, 4.0]])
    ones = Tensor([[1.0], [1.0]])
    np.testing.assert_array_equal(ad.matmul(a, ones).data, [[3.0], [7.0]])


def test_matmul_shape_error_names_both_operands():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        ad.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


def test_hadamard_identity_and_zero():
    a = Tensor(RNG.normal(size=(3, 5)))
    np.testing.assert_array_equal(ad.hadamard(a, Tensor(np.ones((3, 5)))).data, a.data)
    np.testing.assert_array_equal(
        ad.hadamard(a, Tensor(np.zeros((3, 5)))).data, np.zeros((3, 5))
    )


def test_hadamard_hand_product():
    out = ad.hadamard(Tensor([1.0, 2.0]), Tensor([3.0, 4.0]))
    np.testing.assert_array_equal(out.data, [3.0, 8.0])


def test_hadamard_rejects_shape_mismatch():
    with pytest.raises(ShapeError):
        ad.hadamard(Tensor(np.ones((2, 3))), Tensor(np.ones((3, 2))))


def test_sigmoid_values():
    x = Tensor([0.0, 1e6, -1e6])
    y = ad.activation(x, "sigmoid").data
    assert y[0] == 0.5
    assert y[1] == 1.0 and y[2] == 0.0
    assert np.isfinite(y).all()


def test_relu_values():
    y = ad.activation(Tensor([-2.0, 0.0, 3.0]), "relu").data
    np.testing.assert_array_equal(y, [0.0, 0.0, 3.0])


def test_tanh_matches_numpy():
    x = RNG.normal(size=7)
    np.testing.assert_array_equal(ad.activation(Tensor(x), "tanh").data, np.tanh(x))


def test_selu_fixed_points_and_constants():
    y = ad.activation(Tensor([0.0, 1.0, -1e6]), "selu").data
    assert y[0] == 0.0
    assert y[1] == ad.SELU_LAMBDA
    assert np.isclose(y[2], -ad.SELU_LAMBDA * ad.SELU_ALPHA)
    assert np.isfinite(y).all()


def test_unknown_activation_rejected():
    with pytest.raises(ConfigError):
        ad.activation(Tensor([0.0]), "softplus")


def test_clamp_values():
    y = ad.clamp(Tensor([-0.5, 0.3, 7.0]), 0.0, 1.0).data
    np.testing.assert_array_equal(y, [0.0, 0.3, 1.0])


def test_clamp_rejects_inverted_bounds():
    with pytest.raises(ConfigError):
        ad.clamp(Tensor([0.0]), 1.0, -1.0)


@settings(max_examples=60)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8),
       st.floats(-2, 0), st.floats(0, 2))
def test_clamp_bounds_and_idempotence(values, lo, hi):
    x = Tensor(np.array(values))
    once = ad.clamp(x, lo, hi)
    assert (once.data >= lo).all() and (once.data <= hi).all()
    twice = ad.clamp(once, lo, hi)
    np.testing.assert_array_equal(twice.data, once.data)


def test_scalar_broadcast_only():
    a = Tensor(np.ones((2, 3)))
    assert (3.0 * a).data.shape == (2, 3)
    with pytest.raises(ShapeError):
        a + np.ones(3)  # implicit row broadcast is not a thing here
    with pytest.raises(ShapeError):
        ad.add(Tensor(np.ones((2, 3))), Tensor(np.ones(3)))


def test_broadcast_rows_and_slice_cols_values():
    v = Tensor([1.0, 2.0, 3.0])
    tiled = ad.broadcast_rows(v, 4)
    assert tiled.data.shape == (4, 3)
    np.testing.assert_array_equal(tiled.data[2], v.data)
    m = Tensor(np.arange(12.0).reshape(3, 4))
    np.testing.assert_array_equal(
        ad.slice_cols(m, 1, 3).data, m.data[:, 1:3]
    )
    with pytest.raises(ShapeError):
        ad.slice_cols(m, 2, 9)


def test_non_finite_output_asserts():
    with np.errstate(divide="ignore"), pytest.raises(AssertionError):
        ad.log(Tensor([0.0]))  # -inf


# --------------------------------------------------------------- backward


def scalar_net(*tensors, build):
    """Run build, backprop, and return each tensor's analytic gradient."""
    loss = build()
    ad.backward(loss)
    return [t.grad.copy() for t in tensors]


def check_op_gradients(build, *tensors, rtol=1e-5, atol=1e-8, h=1e-6):
    grads = scalar_net(*tensors, build=build)
    for t, g in zip(tensors, grads):
        fd = fd_gradient(lambda: float(build().data), t.data, h=h)
        assert_close(g, fd, rtol=rtol, atol=atol)


def test_grad_of_sum_is_ones():
    x = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    ad.backward(x.sum())
    np.testing.assert_array_equal(x.grad, [1.0, 1.0, 1.0])


def test_grad_of_dot_product_is_other_operand():
    w = Tensor([2.0, -1.0], requires_grad=True)
    x = Tensor([5.0, 4.0])
    ad.backward(ad.hadamard(w, x).sum())
    np.testing.assert_array_equal(w.grad, [5.0, 4.0])


def test_grad_add_sub_mul_neg():
    a, b = leaf((3, 4)), leaf((3, 4))
    check_op_gradients(lambda: (ad.hadamard(a, b) + a - 0.5 * b + (-a)).sum(), a, b)


def test_grad_matmul_transpose():
    a, b = leaf((3, 4)), leaf((5, 4))
    check_op_gradients(lambda: ad.matmul(a, b.transpose()).sum(), a, b)


@pytest.mark.parametrize("kind", ad.ACTIVATION_KINDS)
def test_grad_activation(kind):
    # keep every point at least 1e-2 from the relu/selu kink at zero,
    # where central differences straddle the corner
    raw = RNG.normal(size=(4, 3))
    x = Tensor(raw + np.where(raw >= 0, 1e-2, -1e-2), requires_grad=True)
    check_op_gradients(lambda: ad.activation(x, kind).sum(), x)


def test_grad_tanh_at_fixed_point():
    x = Tensor(np.array([0.7]), requires_grad=True)
    check_op_gradients(lambda: ad.activation(x, "tanh").sum(), x, rtol=1e-6)


def test_grad_matmul_and_hadamard_tight_tolerance():
    a, b = leaf((3, 3)), leaf((3, 3))
    check_op_gradients(lambda: ad.matmul(a, b).sum(), a, b, rtol=1e-6)
    u, v = leaf(5), leaf(5)
    check_op_gradients(lambda: ad.hadamard(u, v).sum(), u, v, rtol=1e-6)


def test_grad_selu_at_origin_uses_left_slope_times_alpha():
    x = Tensor([0.0], requires_grad=True)
    ad.backward(ad.activation(x, "selu").sum())
    assert x.grad[0] == ad.SELU_LAMBDA * ad.SELU_ALPHA


def test_grad_clamp_interior_and_exterior():
    x = Tensor([-2.0, 0.5, 3.0], requires_grad=True)
    ad.backward(ad.clamp(x, 0.0, 1.0).sum())
    np.testing.assert_array_equal(x.grad, [0.0, 1.0, 0.0])


def test_grad_clamp_breakpoints_pass_gradient():
    x = Tensor([0.0, 1.0], requires_grad=True)
    ad.backward(ad.clamp(x, 0.0, 1.0).sum())
    np.testing.assert_array_equal(x.grad, [1.0, 1.0])


def test_grad_log_sqrt_abs():
    x = Tensor(RNG.uniform(0.5, 2.0, size=(3, 3)), requires_grad=True)
    check_op_gradients(lambda: (x.log() + x.sqrt() + x.abs()).sum(), x)


def test_grad_abs_at_zero_is_zero():
    x = Tensor([0.0], requires_grad=True)
    ad.backward(x.abs().sum())
    assert x.grad[0] == 0.0


def test_grad_sqrt_at_zero_is_zero():
    x = Tensor([0.0, 4.0], requires_grad=True)
    ad.backward(x.sqrt().sum())
    np.testing.assert_array_equal(x.grad, [0.0, 0.25])


def test_grad_reductions():
    x = leaf((4, 5))
    check_op_gradients(lambda: x.mean() + 0.1 * x.sum(), x)
    y = leaf((4, 5))
    check_op_gradients(lambda: ad.hadamard(y, y).sum_rows().sum(), y)


def test_grad_broadcast_rows_and_slice_cols():
    v = leaf((4,))
    x = leaf((6, 4))
    check_op_gradients(
        lambda: ad.hadamard(ad.broadcast_rows(v, 6), x).sum(), v, x
    )
    m = leaf((3, 5))
    check_op_gradients(lambda: ad.slice_cols(m, 1, 4).sum(), m)


def test_grad_composite_chain():
    # matmul -> bias row -> tanh -> hadamard -> clamp -> row sums -> sigmoid -> log
    w = leaf((4, 3), scale=0.5)
    b = leaf((3,), scale=0.1)
    x = Tensor(RNG.normal(size=(5, 4)))

    def build():
        h = ad.activation(ad.matmul(x, w) + ad.broadcast_rows(b, 5), "tanh")
        z = ad.clamp(ad.hadamard(h, h), 0.05, 0.8).sum_rows()
        p = ad.activation(z, "sigmoid")
        return -(p.log().mean())

    check_op_gradients(build, w, b, rtol=1e-5, atol=1e-9)


def test_diamond_graph_accumulates_once_per_path():
    # y = a*a + a*a: both paths through the same node must contribute
    a = Tensor([3.0], requires_grad=True)
    sq = ad.hadamard(a, a)
    ad.backward((sq + sq).sum())
    assert a.grad[0] == 12.0


def test_gradients_accumulate_across_backward_calls():
    a = Tensor([2.0], requires_grad=True)
    ad.backward((a * 3.0).sum())
    ad.backward((a * 3.0).sum())
    assert a.grad[0] == 6.0


def test_backward_rejects_non_scalar():
    a = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ShapeError):
        ad.backward(a * 2.0)


def test_backward_without_parameters_is_noop():
    a = Tensor(np.ones(3))
    out = (a * 2.0).sum()
    ad.backward(out)
    assert out.grad is None and a.grad is None


def test_constant_subgraph_stays_gradient_free():
    a = Tensor(np.ones((2, 2)))
    b = Tensor(np.ones((2, 2)), requires_grad=True)
    out = ad.hadamard(a, b)
    assert out.requires_grad and out._parents == (b,)
    ad.backward(out.sum())
    assert a.grad is None
    np.testing.assert_array_equal(b.grad, np.ones((2, 2)))


def test_forward_is_deterministic():
    x = RNG.normal(size=(8, 3))
    runs = [
        ad.activation(ad.matmul(Tensor(x), Tensor(x.T)), "tanh").data
        for _ in range(2)
    ]
    np.testing.assert_array_equal(runs[0], runs[1])
