import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icn_saea.errors import ContractError
from icn_saea.tensor import (
    Grid3,
    Kernel3,
    conv2d_same,
    conv_same_batch,
    conv_weight_grad,
    hadamard,
    weighted_channel_sum,
)


def brute_conv(x, k):
    """Direct nine-fold loop with explicit bounds checks."""
    ch, h, w = x.shape
    _, kh, kw = k.shape
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            acc = 0.0
            for z in range(ch):
                for i in range(kh):
                    for j in range(kw):
                        rr, cc = r + i - kh // 2, c + j - kw // 2
                        if 0 <= rr < h and 0 <= cc < w:
                            acc += k[z, i, j] * x[z, rr, cc]
            out[r, c] = acc
    return out


class TestConv2dSame:
    def test_identity_kernel(self):
        x = np.random.default_rng(0).random((1, 4, 5))
        out = conv2d_same(Grid3(x), Kernel3(np.ones((1, 1, 1))))
        np.testing.assert_array_equal(out.data, x)

    def test_corner_sees_padding(self):
        out = conv2d_same(Grid3(np.ones((1, 2, 2))), Kernel3(np.ones((1, 3, 3))))
        assert out.data[0, 0, 0] == 4.0
        np.testing.assert_array_equal(out.data, np.full((1, 2, 2), 4.0))

    def test_difference_kernel(self):
        rng = np.random.default_rng(1)
        x = rng.random((2, 3, 3))
        k = np.zeros((2, 3, 3))
        k[0, 1, 1], k[1, 1, 1] = -1.0, 1.0
        out = conv2d_same(Grid3(x), Kernel3(k))
        np.testing.assert_allclose(out.data[0], x[1] - x[0], atol=1e-15)

    @pytest.mark.parametrize("shape,ks", [((3, 4, 6), 3), ((2, 5, 5), 5), ((1, 1, 1), 3), ((4, 3, 2), 1)])
    def test_matches_brute_force(self, shape, ks):
        rng = np.random.default_rng(sum(shape) + ks)
        x = rng.normal(size=shape)
        k = rng.normal(size=(shape[0], ks, ks))
        np.testing.assert_allclose(conv2d_same(Grid3(x), Kernel3(k)).data[0], brute_conv(x, k), atol=1e-12)

    def test_center_kernel_is_channel_mix(self):
        rng = np.random.default_rng(2)
        x = rng.random((5, 4, 4))
        w = rng.normal(size=5)
        k = np.zeros((5, 3, 3))
        k[:, 1, 1] = w
        out = conv2d_same(Grid3(x), Kernel3(k)).data[0]
        np.testing.assert_allclose(out, np.einsum("z,zrc->rc", w, x), atol=1e-14)

    def test_depth_mismatch(self):
        with pytest.raises(ContractError):
            conv2d_same(Grid3(np.ones((2, 3, 3))), Kernel3(np.ones((1, 3, 3))))

    def test_even_kernel_rejected(self):
        with pytest.raises(ContractError):
            Kernel3(np.ones((1, 2, 2)))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31), alpha=st.floats(-5, 5), beta=st.floats(-5, 5))
    def test_linearity(self, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=(2, 3, 4, 4))
        k = Kernel3(rng.normal(size=(3, 3, 3)))
        lhs = conv2d_same(Grid3(alpha * a + beta * b), k).data
        rhs = alpha * conv2d_same(Grid3(a), k).data + beta * conv2d_same(Grid3(b), k).data
        scale = max(1.0, np.abs(lhs).max())
        assert np.abs(lhs - rhs).max() / scale < 1e-12


class TestHadamard:
    def test_identity_and_zero(self):
        a = Grid3(np.random.default_rng(3).random((2, 3, 3)))
        np.testing.assert_array_equal(hadamard(a, Grid3(np.ones((2, 3, 3)))).data, a.data)
        np.testing.assert_array_equal(hadamard(a, Grid3(np.zeros((2, 3, 3)))).data, 0.0)

    def test_arithmetic(self):
        out = hadamard(Grid3(np.array([[[2.0, 3.0]]])), Grid3(np.array([[[4.0, 5.0]]])))
        np.testing.assert_array_equal(out.data, [[[8.0, 15.0]]])

    def test_commutative_associative(self):
        a, b, c = (Grid3(g) for g in np.random.default_rng(4).normal(size=(3, 1, 4, 4)))
        np.testing.assert_array_equal(hadamard(a, b).data, hadamard(b, a).data)
        np.testing.assert_allclose(hadamard(hadamard(a, b), c).data, hadamard(a, hadamard(b, c)).data,
                                   rtol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            hadamard(Grid3(np.ones((1, 2, 2))), Grid3(np.ones((1, 2, 3))))


class TestWeightedChannelSum:
    def test_single_map(self):
        m = Grid3(np.random.default_rng(5).random((1, 3, 3)))
        np.testing.assert_array_equal(weighted_channel_sum([m], [1.0]).data, m.data)

    def test_cancellation(self):
        m = Grid3(np.random.default_rng(6).random((1, 3, 3)))
        np.testing.assert_array_equal(weighted_channel_sum([m, m], [1.0, -1.0]).data, 0.0)

    def test_arithmetic(self):
        out = weighted_channel_sum([Grid3(np.array([[[1.0]]])), Grid3(np.array([[[2.0]]]))], [3, 4])
        assert out.data.item() == 11.0

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            weighted_channel_sum([Grid3(np.ones((1, 2, 2)))], [1.0, 2.0])


class TestBatched:
    def test_conv_same_batch_matches_reference(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(3, 4, 5, 5))
        k = rng.normal(size=(6, 4, 3, 3))
        out = conv_same_batch(x, k)
        for b in range(3):
            for j in range(6):
                ref = conv2d_same(Grid3(x[b]), Kernel3(k[j])).data[0]
                np.testing.assert_allclose(out[b, j], ref, atol=1e-12)

    @pytest.mark.parametrize("side", [1, 3])
    def test_weight_grad_is_adjoint(self, side):
        rng = np.random.default_rng(8 + side)
        x = rng.normal(size=(2, 3, 4, 4))
        k = rng.normal(size=(5, 3, side, side))
        g = rng.normal(size=(2, 5, 4, 4))
        grad = conv_weight_grad(x, g, side)
        # <g, conv(x, k)> is linear in k with gradient `grad`
        assert np.isclose(np.sum(g * conv_same_batch(x, k)), np.sum(grad * k), rtol=1e-12)
        eps = 1e-6
        idx = (2, 1, side // 2, 0)
        kp, km = k.copy(), k.copy()
        kp[idx] += eps
        km[idx] -= eps
        fd = (np.sum(g * conv_same_batch(x, kp)) - np.sum(g * conv_same_batch(x, km))) / (2 * eps)
        assert np.isclose(fd, grad[idx], rtol=1e-6)

    def test_batch_depth_mismatch(self):
        with pytest.raises(ContractError):
            conv_same_batch(np.ones((1, 2, 3, 3)), np.ones((1, 3, 1, 1)))
