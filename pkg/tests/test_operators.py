from math import factorial

import numpy as np
import pytest

from oracles import b_entry_by_partitions, quartic_inverse_derivatives
from weaknoise.cycles import locate_cycle
from weaknoise.errors import DimensionError, InvariantError, TruncationError
from weaknoise.maps import linear_map
from weaknoise.operators import (
    build_B,
    build_L,
    kernel_moments,
    series_matmul,
    series_matpow,
    series_trace,
)
from weaknoise.series import Jet


def test_gaussian_moments():
    k = kernel_moments("gaussian", 10)
    assert k.moments[2] == 1.0 and k.moments[2] / factorial(2) == 0.5
    assert k.moments[4] == 3.0 and k.moments[4] / factorial(4) == 0.125
    assert k.moments[3] == 0.0
    assert k.moments[:11] == (1, 0, 1, 0, 3, 0, 15, 0, 105, 0, 945)
    assert k.is_even


def test_custom_moments():
    k = kernel_moments("custom", 4, [1.0, 0.0, 2.0, 0.5])
    assert k.moments == (1.0, 0.0, 2.0, 0.5, 0.0)
    assert not k.is_even
    with pytest.raises(InvariantError):
        kernel_moments("custom", 4, [0.9, 0.0, 1.0])
    with pytest.raises(InvariantError):
        kernel_moments("custom", 4, [1.0, 0.1, 1.0])
    with pytest.raises(InvariantError):
        kernel_moments("custom", 4)
    with pytest.raises(InvariantError):
        kernel_moments("cauchy", 4)


@pytest.mark.parametrize("slope", [2.0, -3.0, 10.0])
def test_linear_B_is_diagonal(slope):
    m = linear_map(slope)
    c = locate_cycle(m, (0,))
    B = build_B(m, c, 0, 20, 16).entries
    diag = np.array([np.sign(slope) / slope ** (k + 1) for k in range(16)])
    assert np.allclose(np.diag(B[:16]), diag, rtol=1e-15, atol=0)
    off = B.copy()
    off[np.arange(16), np.arange(16)] = 0.0
    assert np.all(off == 0.0)


@pytest.fixture(scope="module")
def orbit_points(quartic):
    """(cycle, index) pairs at three distinct orbit points, both branch signs."""
    c0 = locate_cycle(quartic, (0,))
    c1 = locate_cycle(quartic, (1,))
    c01 = locate_cycle(quartic, (0, 1, 1))
    return [(c0, 0), (c1, 0), (c01, 1)]


def _local_derivatives(quartic, cycle, i, order):
    n = cycle.length
    branch = cycle.itinerary[i % n]
    return quartic_inverse_derivatives(branch, cycle.points[(i + 1) % n], order)


def test_triangular(quartic, orbit_points):
    for c, i in orbit_points:
        B = build_B(quartic, c, i, 26, 16).entries
        assert np.all(np.triu(B[:16, :16], 1) == 0.0)


def test_diagonal_is_signed_power(quartic, orbit_points):
    for c, i in orbit_points:
        B = build_B(quartic, c, i, 20, 16).entries
        lam = float(quartic.deriv(c.points[i]))
        want = np.sign(lam) / lam ** (np.arange(16) + 1)
        assert np.allclose(np.diag(B[:16]), want, rtol=1e-12, atol=0)


def test_multinomial_oracle(quartic, orbit_points):
    for c, i in orbit_points:
        F = _local_derivatives(quartic, c, i, 9)
        sign = float(np.sign(quartic.deriv(c.points[i])))
        B = build_B(quartic, c, i, 9, 9).entries
        for k in range(9):
            for kp in range(k + 1):
                want = b_entry_by_partitions(F, k, kp, sign)
                assert B[k, kp] == pytest.approx(want, rel=1e-12, abs=1e-300), (k, kp)


def test_first_subdiagonal_at_origin(quartic):
    # B[m+1, m] = (m+2)(m+1)/2 F_2 / Lambda**m, so B[1, 0] = F_2
    c = locate_cycle(quartic, (0,))
    h = 1e-4
    g = lambda y: quartic.inverse_point(0, y)
    F2 = (g(h) - 2 * g(0.0) + g(-h)) / h**2
    B = build_B(quartic, c, 0, 12, 10).entries
    assert B[1, 0] == pytest.approx(F2, rel=1e-6)
    for m in range(6):
        assert B[m + 1, m] == pytest.approx((m + 2) * (m + 1) / 2 * F2 / 10.0**m, rel=1e-6)


@pytest.mark.parametrize("fixed", [(0,), (1,)])
def test_third_subdiagonal_formula(quartic, fixed):
    c = locate_cycle(quartic, fixed)
    F = _local_derivatives(quartic, c, 0, 5)
    s = float(np.sign(quartic.deriv(c.points[0])))
    L1 = F[1]  # 1/Lambda
    B = build_B(quartic, c, 0, 14, 10).entries
    for m in range(2, 7):
        want = s * (
            factorial(m + 4) / (48 * factorial(m - 2)) * F[2] ** 3 * L1 ** (m - 2)
            + factorial(m + 4) / (12 * factorial(m - 1)) * F[2] * F[3] * L1 ** (m - 1)
            + factorial(m + 4) / (24 * factorial(m)) * F[4] * L1**m
        )
        assert B[m + 3, m] == pytest.approx(want, rel=1e-11)


def _second_subdiagonal(F, m, s, f3_denominator):
    L1 = F[1]
    return s * (
        factorial(m + 3) / (8 * factorial(m - 1)) * F[2] ** 2 * L1 ** (m - 1)
        + factorial(m + 3) / (6 * f3_denominator) * F[3] * L1**m
    )


@pytest.mark.parametrize("fixed", [(0,), (1,)])
def test_second_subdiagonal_partition_form(quartic, fixed):
    """F_2**2 term from a_{m-1}=.., a_2=2; F_3 term from a_1=m, a_3=1, giving m!."""
    c = locate_cycle(quartic, fixed)
    F = _local_derivatives(quartic, c, 0, 4)
    s = float(np.sign(quartic.deriv(c.points[0])))
    B = build_B(quartic, c, 0, 12, 10).entries
    for m in range(1, 6):
        assert B[m + 2, m] == pytest.approx(_second_subdiagonal(F, m, s, factorial(m)), rel=1e-11)


@pytest.mark.parametrize("fixed", [(0,), (1,)])
def test_second_subdiagonal_printed_form(quartic, fixed):
    """The closed form with (m+1)! under the F_3 term, checked as stated."""
    c = locate_cycle(quartic, fixed)
    F = _local_derivatives(quartic, c, 0, 4)
    s = float(np.sign(quartic.deriv(c.points[0])))
    B = build_B(quartic, c, 0, 12, 10).entries
    for m in range(1, 6):
        assert B[m + 2, m] == pytest.approx(_second_subdiagonal(F, m, s, factorial(m + 1)), rel=1e-11)


def test_B_errors(quartic):
    c = locate_cycle(quartic, (0,))
    with pytest.raises(DimensionError):
        build_B(quartic, c, 0, 4, 6)
    with pytest.raises(TruncationError):
        build_B(quartic, c, 0, 10, 8, jet=Jet(np.zeros(5)))


def test_L_sigma_order_zero_is_B_block(quartic):
    c = locate_cycle(quartic, (0, 1))
    B = build_B(quartic, c, 0, 20, 16)
    L = build_L(B, kernel_moments("gaussian", 0), 16, 0)
    assert np.array_equal(L.noiseless(), B.entries[:16, :16])


def test_L_linear_single_term():
    m = linear_map(2.0)
    B = build_B(m, locate_cycle(m, (0,)), 0, 26, 16)
    L = build_L(B, kernel_moments("gaussian", 10), 16, 10)
    assert L.entry(0, 2).coeffs[2] == pytest.approx(0.5 * 2.0**-3, rel=1e-15)
    # first row: 1/|Lambda| on the diagonal, sigma**m' alone in column m'
    assert np.array_equal(L.entry(0, 0).coeffs, np.eye(1, 11)[0] * 0.5)
    for mp in range(1, 11):
        row = L.entry(0, mp).coeffs
        assert np.count_nonzero(row) == (1 if mp % 2 == 0 else 0)
        if mp % 2 == 0:
            assert row[mp] != 0.0


def test_L_index_rule_and_parity(quartic):
    c = locate_cycle(quartic, (0, 1))
    B = build_B(quartic, c, 1, 26, 16)
    L = build_L(B, kernel_moments("gaussian", 10), 16, 10)
    E = L.entries
    assert E[3, 0, 0] != 0.0
    for m in range(16):
        for mp in range(16):
            assert np.all(E[m, mp, : max(mp - m, 0)] == 0.0)
    assert np.all(E[:, :, 1::2] == 0.0)


def test_L_convolution_formula(quartic):
    c = locate_cycle(quartic, (1,))
    B = build_B(quartic, c, 0, 26, 16)
    k = kernel_moments("gaussian", 10)
    L = build_L(B, k, 16, 10).entries
    Bm = B.entries
    for m, mp in [(0, 0), (2, 5), (7, 3), (15, 15), (4, 12)]:
        for n in range(11):
            want = k.moments[n] / factorial(n) * Bm[m + n, mp] if n >= mp - m else 0.0
            assert L[m, mp, n] == pytest.approx(want, rel=1e-15, abs=0)


def test_L_dimension_errors(quartic):
    c = locate_cycle(quartic, (0,))
    B = build_B(quartic, c, 0, 20, 16)
    with pytest.raises(DimensionError):
        build_L(B, kernel_moments("gaussian", 10), 16, 10)
    with pytest.raises(DimensionError):
        build_L(build_B(quartic, c, 0, 26, 16), kernel_moments("gaussian", 4), 16, 10)


def test_series_matmul_against_naive():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(4, 4, 5))
    B = rng.normal(size=(4, 4, 5))
    C = series_matmul(A, B)
    for i in range(4):
        for j in range(4):
            want = sum(np.convolve(A[i, k], B[k, j])[:5] for k in range(4))
            assert np.allclose(C[i, j], want, rtol=1e-14, atol=1e-14)
    assert np.allclose(series_matpow(A, 3), series_matmul(series_matmul(A, A), A))
    assert series_trace(A).coeffs == pytest.approx(np.einsum("iij->j", A))
    with pytest.raises(DimensionError):
        series_matmul(A, rng.normal(size=(3, 4, 5)))
    with pytest.raises(DimensionError):
        series_matpow(A, 0)
