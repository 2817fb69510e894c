import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbbcov.fcore import (
    Curve,
    FunctionalSeries,
    GridMismatchError,
    KernelOperator,
    hs_inner,
    hs_norm,
    inner_product,
    kernel_linear_combine,
    l2_norm,
    make_grid,
    tensor_product,
)

finite = st.floats(-10, 10, allow_nan=False)


def curve(grid, values):
    return Curve(grid, np.asarray(values, dtype=float))


class TestGrid:
    def test_two_points(self):
        g = make_grid(2)
        np.testing.assert_array_equal(g.points, [0.0, 1.0])
        np.testing.assert_array_equal(g.weights, [0.5, 0.5])

    def test_three_points(self):
        g = make_grid(3)
        np.testing.assert_array_equal(g.weights, [0.25, 0.5, 0.25])
        assert g.weights.sum() == 1.0

    @pytest.mark.parametrize("L", [2, 5, 21, 96, 257])
    def test_invariants(self, L):
        g = make_grid(L)
        assert g.points[0] == 0.0 and g.points[-1] == 1.0
        assert np.all(np.diff(g.points) > 0)
        np.testing.assert_allclose(g.points, np.arange(L) / (L - 1), atol=1e-12)
        assert abs(g.weights.sum() - 1) < 1e-12

    def test_21_points(self):
        g = make_grid(21)
        assert len(g) == 21
        np.testing.assert_allclose(np.diff(g.points), 0.05, atol=1e-15)

    @pytest.mark.parametrize("L", [0, 1, -3, 2.5])
    def test_rejects_small(self, L):
        with pytest.raises(ValueError):
            make_grid(L)

    def test_immutable(self):
        g = make_grid(5)
        with pytest.raises(ValueError):
            g.points[0] = 3.0

    def test_equality(self):
        assert make_grid(7) == make_grid(7)
        assert make_grid(7) != make_grid(8)


class TestInnerProduct:
    def test_constants_exact(self):
        for L in (2, 3, 21, 100):
            g = make_grid(L)
            one = curve(g, np.ones(L))
            assert inner_product(one, one) == pytest.approx(1.0, abs=1e-14)

    def test_identity_squared(self):
        g = make_grid(21)
        f = Curve.from_function(g, lambda t: t)
        assert inner_product(f, f) == pytest.approx(1 / 3, abs=1e-3)

    def test_periodic_integrand(self):
        g = make_grid(21)
        f = Curve.from_function(g, lambda t: np.sin(2 * np.pi * t))
        one = curve(g, np.ones(21))
        assert abs(inner_product(f, one)) < 1e-6

    def test_quadratic_error_order(self):
        # error of int t^2 should drop ~4x when the spacing halves
        errs = []
        for L in (11, 21, 41):
            f = Curve.from_function(make_grid(L), lambda t: t)
            errs.append(abs(inner_product(f, f) - 1 / 3))
        assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
        assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)

    def test_grid_mismatch(self):
        with pytest.raises(GridMismatchError):
            inner_product(curve(make_grid(3), [1, 2, 3]), curve(make_grid(4), [1, 2, 3, 4]))

    @given(st.lists(finite, min_size=6, max_size=6), st.lists(finite, min_size=6, max_size=6))
    def test_symmetric(self, a, b):
        g = make_grid(6)
        assert inner_product(curve(g, a), curve(g, b)) == inner_product(curve(g, b), curve(g, a))


class TestNorm:
    def test_zero(self):
        assert l2_norm(curve(make_grid(5), np.zeros(5))) == 0.0

    def test_constant(self):
        assert l2_norm(curve(make_grid(9), np.full(9, 2.0))) == pytest.approx(2.0, abs=1e-14)

    def test_identity(self):
        f = Curve.from_function(make_grid(21), lambda t: t)
        assert l2_norm(f) == pytest.approx(np.sqrt(1 / 3), abs=1e-3)


class TestTensorProduct:
    def test_zero(self):
        g = make_grid(4)
        T = tensor_product(curve(g, np.zeros(4)), curve(g, [1, 2, 3, 4]))
        assert not T.kernel.any()

    def test_ones_action(self):
        g = make_grid(11)
        one = curve(g, np.ones(11))
        T = tensor_product(one, one)
        np.testing.assert_array_equal(T.kernel, np.ones((11, 11)))
        x = Curve.from_function(g, lambda t: t**2)
        np.testing.assert_allclose(T.apply(x).values, inner_product(one, x), rtol=1e-14)

    def test_orientation(self):
        g = make_grid(5)
        rng = np.random.default_rng(1)
        f, h, x = (curve(g, rng.normal(size=5)) for _ in range(3))
        T = tensor_product(f, h)
        assert T.kernel[3, 1] == h.values[3] * f.values[1]
        np.testing.assert_allclose(T.apply(x).values, inner_product(f, x) * h.values, rtol=1e-12)

    def test_norm_factorises(self):
        rng = np.random.default_rng(2)
        g = make_grid(21)
        for _ in range(50):
            f, h = curve(g, rng.normal(size=21)), curve(g, rng.normal(size=21))
            assert hs_norm(tensor_product(f, h)) == pytest.approx(l2_norm(f) * l2_norm(h), rel=1e-10)


class TestHS:
    def test_ones(self):
        g = make_grid(13)
        ones = KernelOperator(g, np.ones((13, 13)))
        assert hs_inner(ones, ones) == pytest.approx(1.0, abs=1e-14)
        assert hs_norm(ones) == pytest.approx(1.0, abs=1e-14)

    def test_zero(self):
        g = make_grid(6)
        A = KernelOperator(g, np.random.default_rng(0).normal(size=(6, 6)))
        assert hs_inner(A, KernelOperator.zeros(g)) == 0.0
        assert hs_norm(KernelOperator.zeros(g)) == 0.0

    def test_rank_one_identity(self):
        rng = np.random.default_rng(3)
        g = make_grid(17)
        for _ in range(50):
            f, h, u, v = (curve(g, rng.normal(size=17)) for _ in range(4))
            lhs = hs_inner(tensor_product(f, h), tensor_product(u, v))
            assert lhs == pytest.approx(inner_product(f, u) * inner_product(h, v), rel=1e-10, abs=1e-12)

    def test_matches_double_sum(self):
        rng = np.random.default_rng(4)
        g = make_grid(7)
        A, B = rng.normal(size=(7, 7)), rng.normal(size=(7, 7))
        brute = sum(g.weights[i] * g.weights[j] * A[i, j] * B[i, j] for i in range(7) for j in range(7))
        assert hs_inner(KernelOperator(g, A), KernelOperator(g, B)) == pytest.approx(brute, rel=1e-12)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1))
    def test_triangle(self, seed):
        rng = np.random.default_rng(seed)
        g = make_grid(8)
        A = KernelOperator(g, rng.normal(size=(8, 8)))
        B = KernelOperator(g, rng.normal(size=(8, 8)))
        assert hs_norm(A + B) <= hs_norm(A) + hs_norm(B) + 1e-12


class TestLinearCombine:
    def test_cancel(self):
        g = make_grid(4)
        A = KernelOperator(g, np.arange(16.0).reshape(4, 4))
        assert not kernel_linear_combine([1, -1], [A, A]).kernel.any()

    def test_scale(self):
        g = make_grid(4)
        A = KernelOperator(g, np.arange(16.0).reshape(4, 4))
        np.testing.assert_array_equal(kernel_linear_combine([2], [A]).kernel, 2 * A.kernel)

    def test_mean_of_tensors_matches_loop(self):
        rng = np.random.default_rng(5)
        g = make_grid(9)
        curves = [curve(g, rng.normal(size=9)) for _ in range(12)]
        ops = [tensor_product(c, c) for c in curves]
        got = kernel_linear_combine([1 / 12] * 12, ops).kernel
        want = np.zeros((9, 9))
        for c in curves:
            for i in range(9):
                for j in range(9):
                    want[i, j] += c.values[i] * c.values[j] / 12
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)

    def test_errors(self):
        g = make_grid(3)
        A = KernelOperator.zeros(g)
        with pytest.raises(ValueError):
            kernel_linear_combine([1, 2], [A])
        with pytest.raises(ValueError):
            kernel_linear_combine([], [])
        with pytest.raises(GridMismatchError):
            kernel_linear_combine([1, 1], [A, KernelOperator.zeros(make_grid(4))])


def test_purity():
    rng = np.random.default_rng(6)
    g = make_grid(5)
    f, h = curve(g, rng.normal(size=5)), curve(g, rng.normal(size=5))
    before = f.values.copy()
    k1 = tensor_product(f, h).kernel
    k2 = tensor_product(f, h).kernel
    np.testing.assert_array_equal(f.values, before)
    assert k1.tobytes() == k2.tobytes()


def test_series_from_curves():
    g = make_grid(3)
    s = FunctionalSeries.from_curves([curve(g, [1, 2, 3]), curve(g, [4, 5, 6])])
    assert len(s) == 2
    np.testing.assert_array_equal(s[1].values, [4, 5, 6])
    with pytest.raises(ValueError):
        FunctionalSeries(g, np.array([[1.0, np.nan, 2.0]]))
