from itertools import product
from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import partitions
from weaknoise.errors import ContractError, SingularityError
from weaknoise.series import (
    Jet,
    SigmaSeries,
    jet_compose,
    jet_fractional_power,
    jet_invert,
    jet_mul,
    jet_pow,
    sigma_mul,
)

finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def partition_power(c, m, n):
    """[y**n] (sum_l c_l y**l)**m by explicit enumeration of a_l with
    sum l a_l = n and sum a_l = m (multinomial oracle)."""
    total = 0.0
    for a in partitions(n, m):
        coef = factorial(m)
        term = 1.0
        for l, al in a.items():
            coef //= factorial(al)
            term *= c[l] ** al
        total += coef * term
    return total


def test_mul_examples():
    a = Jet([1.0, 1.0, 0.0])
    assert np.allclose((a * a).coeffs, [1, 2, 1])
    b = Jet([0.0, 0.5, 1.0, 0.0])
    assert np.allclose(jet_mul(b, b).coeffs, [0, 0, 0.25, 1.0])
    one = Jet([1.0, 0.0, 0.0, 0.0])
    assert np.array_equal(jet_mul(b, one).coeffs, b.coeffs)


def test_mul_order_mismatch():
    with pytest.raises(ContractError):
        jet_mul(Jet([1.0, 2.0]), Jet([1.0, 2.0, 3.0]))


def test_pow_examples():
    a = Jet([0.0, 0.5, 0.0, 0.0, 0.0])
    assert np.array_equal(jet_pow(a, 0).coeffs, [1, 0, 0, 0, 0])
    assert np.allclose(jet_pow(a, 3).coeffs, [0, 0, 0, 0.125, 0])
    b = Jet([0.0, 0.5, 0.5, 0.0, 0.0])
    assert np.allclose(jet_pow(b, 3).coeffs, [0, 0, 0, 1 / 8, 3 / 8])


@settings(max_examples=40, deadline=None)
@given(st.lists(finite, min_size=12, max_size=12), st.integers(1, 6), st.integers(1, 12))
def test_pow_matches_partition_sum(tail, m, N):
    c = np.array([0.0] + tail[:N])
    got = jet_pow(Jet(c), m).coeffs
    for n in range(N + 1):
        want = partition_power(c, m, n)
        assert got[n] == pytest.approx(want, rel=1e-12, abs=1e-12 * max(1.0, np.abs(c).max() ** m))


def test_compose_requires_zero_constant():
    with pytest.raises(ContractError):
        jet_compose(Jet([1.0, 1.0]), Jet([0.1, 1.0]))


def test_compose_exp_log():
    N = 8
    exp_ = Jet([1 / factorial(k) for k in range(N + 1)])
    log1p = Jet([0.0] + [(-1) ** (k + 1) / k for k in range(1, N + 1)])
    # exp(log(1 + y)) = 1 + y
    out = jet_compose(exp_, log1p)
    assert np.allclose(out.coeffs, [1, 1] + [0] * (N - 1), atol=1e-14)


def test_invert_examples():
    assert np.allclose(jet_invert(Jet([0.0, 2.0, 0.0])).coeffs, [0, 0.5, 0])
    assert np.allclose(jet_invert(Jet([0.0, 1.0, 1.0, 0.0])).coeffs, [0, 1, -1, 2])


def test_invert_errors():
    with pytest.raises(SingularityError):
        jet_invert(Jet([0.0, 0.0, 1.0]))
    with pytest.raises(ContractError):
        jet_invert(Jet([1.0, 1.0, 1.0]))


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0.1, 10.0),
    st.sampled_from([-1.0, 1.0]),
    st.lists(st.floats(-1, 1), min_size=7, max_size=7),
)
def test_compose_invert_identity(c1, sign, rest):
    # order-8 jets; a = c1 * g with g(y) = y + O(y**2) analytic in |y| < 4
    g = [0.0, 1.0] + [r * 0.25**k for k, r in enumerate(rest, start=2)]
    a = Jet(sign * c1 * np.array(g))
    inv = jet_invert(a)
    ident = jet_compose(a, inv).coeffs
    # rounding scale: the same composition carried out on absolute values
    scale = jet_compose(Jet(np.abs(a.coeffs)), Jet(np.abs(inv.coeffs))).coeffs
    err = np.abs(ident - np.array([0, 1] + [0] * 7))
    assert np.all(err <= 1e-13 * np.maximum(scale, 1.0))


def test_fractional_power_binomial():
    N = 10
    got = jet_fractional_power(Jet([1.0, 1.0] + [0.0] * (N - 1)), 0.25).coeffs
    want = [1.0]
    for k in range(1, N + 1):
        want.append(want[-1] * (0.25 - k + 1) / k)
    assert np.allclose(got, want, rtol=1e-14, atol=0)


def test_fractional_power_square_root_squares_back():
    a = Jet([2.0, 0.3, -0.1, 0.05, 0.0, 0.0])
    r = jet_fractional_power(a, 0.5)
    assert np.allclose((r * r).coeffs, a.coeffs, atol=1e-15)


def test_fractional_power_branch_point():
    with pytest.raises(SingularityError):
        jet_fractional_power(Jet([0.0, 1.0]), 0.5)
    with pytest.raises(SingularityError):
        jet_fractional_power(Jet([-1.0, 1.0]), 0.5)


def test_causality():
    # output c_l depends only on inputs of index <= l
    a = Jet([0.0, 0.7, 0.2, 0.1, 0.3])
    b = Jet([0.0, 0.7, 0.2, 9.0, -4.0])
    for f in (lambda x: jet_pow(x, 3), jet_invert, lambda x: jet_compose(x, x)):
        assert np.array_equal(f(a).coeffs[:3], f(b).coeffs[:3])


def test_jet_is_immutable():
    a = Jet([0.0, 1.0])
    with pytest.raises(ValueError):
        a.coeffs[0] = 1.0


series = st.lists(st.floats(-10, 10, allow_subnormal=False), min_size=6, max_size=6).map(SigmaSeries)


@settings(max_examples=80, deadline=None)
@given(series, series, series)
def test_sigma_ring_laws(a, b, c):
    A, B, Cc = (SigmaSeries(np.abs(x.coeffs)) for x in (a, b, c))

    def close(x, y, magnitude):
        # relative to the sum of absolute values of the contributing products,
        # plus a few subnormal spacings for products that underflow
        floor = 64 * np.finfo(float).smallest_subnormal
        return np.all(np.abs(x.coeffs - y.coeffs) <= 1e-15 * magnitude.coeffs + floor)

    assert close(sigma_mul(a, b), sigma_mul(b, a), sigma_mul(A, B))
    assert close(sigma_mul(sigma_mul(a, b), c), sigma_mul(a, sigma_mul(b, c)),
                 sigma_mul(sigma_mul(A, B), Cc))
    assert close(sigma_mul(a, b + c), sigma_mul(a, b) + sigma_mul(a, c),
                 sigma_mul(A, B + Cc))


def test_sigma_reproducible():
    rng = np.random.default_rng(7)
    a, b = SigmaSeries(rng.normal(size=11)), SigmaSeries(rng.normal(size=11))
    assert sigma_mul(a, b).coeffs.tobytes() == sigma_mul(a, b).coeffs.tobytes()


def test_sigma_even_stays_even():
    a = SigmaSeries([1.0, 0, 0.5, 0, 0.25, 0])
    b = SigmaSeries([2.0, 0, -1.0, 0, 3.0, 0])
    assert np.all((a * b).coeffs[1::2] == 0.0)
    assert np.all(a.reciprocal().coeffs[1::2] == 0.0)


def test_type_mixing_rejected():
    with pytest.raises(TypeError):
        Jet([0.0, 1.0]) * SigmaSeries([1.0, 0.0])


def test_reciprocal_singular():
    with pytest.raises(SingularityError):
        SigmaSeries([0.0, 1.0]).reciprocal()
