"""
Truncated power series in one formal variable.

Two value types share the same arithmetic:

* :class:`Jet` -- Taylor coefficients ``c_l = g^(l)(0) / l!`` of an analytic
  function about a point, truncated at order ``N``.  Storing ``c_l`` rather
  than raw derivatives keeps the numbers finite at orders of a few dozen.
* :class:`SigmaSeries` -- a polynomial in the noise amplitude ``sigma``,
  truncated at ``sigma**n_max``.  This is the entry type of noisy operator
  matrices, traces and cumulants.

Arithmetic is exact through the truncation order: coefficient ``l`` of any
result depends only on input coefficients of index ``<= l``.  Mixing the two
types is an error.

    >>> y = Jet.variable(3)
    >>> ((1 + y) * (1 + y)).coeffs
    array([1., 2., 1., 0.])
"""
from __future__ import annotations

from numbers import Integral, Real

import numpy as np

from .errors import ContractError, SingularityError, TruncationError

__all__ = [
    "Jet",
    "SigmaSeries",
    "jet_mul",
    "jet_pow",
    "jet_compose",
    "jet_invert",
    "jet_fractional_power",
    "jet_reciprocal",
    "sigma_mul",
    "truncated_mul",
]


def truncated_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cauchy product of two coefficient arrays of equal length, truncated."""
    n = len(a)
    return np.convolve(a, b)[:n]


class _Truncated:
    """Shared arithmetic of the truncated series types."""

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ContractError("coefficients must be a non-empty 1-d sequence")
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    def __len__(self):
        return len(self._c)

    def __getitem__(self, i):
        return self._c[i]

    def __iter__(self):
        return iter(self._c)

    @classmethod
    def zeros(cls, order: int):
        return cls(np.zeros(order + 1))

    @classmethod
    def constant(cls, value: float, order: int):
        c = np.zeros(order + 1)
        c[0] = value
        return cls(c)

    def _coerce(self, other):
        if isinstance(other, _Truncated):
            if type(other) is not type(self):
                raise TypeError(
                    f"cannot combine {type(self).__name__} with {type(other).__name__}"
                )
            if len(other) != len(self):
                raise ContractError(
                    f"truncation order mismatch: {len(self) - 1} vs {len(other) - 1}"
                )
            return other._c
        if isinstance(other, Real):
            c = np.zeros(len(self))
            c[0] = float(other)
            return c
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(self._c + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(self._c - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(o - self._c)

    def __neg__(self):
        return type(self)(-self._c)

    def __mul__(self, other):
        if isinstance(other, Real):
            return type(self)(self._c * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return type(self)(truncated_mul(self._c, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            return type(self)(self._c / float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * type(self)(_reciprocal(o))

    def __pow__(self, m):
        if not isinstance(m, Integral) or m < 0:
            return NotImplemented
        return type(self)(_int_power(self._c, int(m)))

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return len(self) == len(other) and bool(np.array_equal(self._c, other._c))

    def __hash__(self):
        return hash((type(self).__name__, self._c.tobytes()))

    def allclose(self, other, rtol=1e-13, atol=0.0) -> bool:
        return bool(np.allclose(self._c, self._coerce(other), rtol=rtol, atol=atol))

    def truncate(self, order: int):
        """Return the series re-truncated (or zero-padded) at ``order``."""
        c = np.zeros(order + 1)
        k = min(order + 1, len(self))
        c[:k] = self._c[:k]
        return type(self)(c)

    def reciprocal(self):
        return type(self)(_reciprocal(self._c))

    def __call__(self, x: float) -> float:
        """Evaluate the truncated polynomial at ``x``."""
        return float(np.polynomial.polynomial.polyval(x, self._c))

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self._c, precision=6)})"


def _int_power(c: np.ndarray, m: int) -> np.ndarray:
    result = np.zeros_like(c)
    result[0] = 1.0
    base = c
    while m:
        if m & 1:
            result = truncated_mul(result, base)
        m >>= 1
        if m:
            base = truncated_mul(base, base)
    return result


def _reciprocal(c: np.ndarray) -> np.ndarray:
    if c[0] == 0.0:
        raise SingularityError("cannot reciprocate a series with zero constant term")
    out = np.zeros_like(c)
    out[0] = 1.0 / c[0]
    for n in range(1, len(c)):
        out[n] = -np.dot(c[1 : n + 1], out[n - 1 :: -1][:n]) / c[0]
    return out


class Jet(_Truncated):
    """Truncated Taylor expansion ``sum_l c_l * y**l`` for ``l = 0..order``.

    ``coeffs[l]`` is the ``l``-th derivative divided by ``l!``.  Calling a jet
    on another jet composes them (see :func:`jet_compose`); calling it on a
    float evaluates the truncated polynomial.
    """

    __slots__ = ()

    @property
    def order(self) -> int:
        return len(self._c) - 1

    @classmethod
    def variable(cls, order: int, center: float = 0.0) -> "Jet":
        """The jet of ``y -> center + y``."""
        c = np.zeros(order + 1)
        c[0] = center
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def identity(cls, order: int) -> "Jet":
        return cls.variable(order)

    def derivative(self, l: int) -> float:
        """The ``l``-th derivative at the expansion point, ``l! * c_l``."""
        return float(np.prod(np.arange(1, l + 1, dtype=float)) * self._c[l])

    def __call__(self, other):
        if isinstance(other, Jet):
            return jet_compose(self, other)
        return super().__call__(other)


class SigmaSeries(_Truncated):
    """Polynomial in ``sigma`` truncated at ``sigma**n_max``."""

    __slots__ = ()

    @property
    def n_max(self) -> int:
        return len(self._c) - 1

    def even_part(self) -> np.ndarray:
        """Coefficients of ``sigma**0, sigma**2, ...``."""
        return self._c[0::2]


def jet_mul(a: Jet, b: Jet) -> Jet:
    if a.order != b.order:
        raise ContractError(f"jet order mismatch: {a.order} vs {b.order}")
    return a * b


def jet_pow(a: Jet, m: int) -> Jet:
    """``a**m`` by binary exponentiation of truncated products."""
    if m < 0:
        raise ContractError("jet_pow needs a non-negative exponent")
    return a**m


def jet_compose(outer: Jet, inner: Jet) -> Jet:
    """Taylor coefficients of ``outer(inner(y))``; ``inner`` must vanish at 0."""
    if outer.order != inner.order:
        raise ContractError(f"jet order mismatch: {outer.order} vs {inner.order}")
    if inner[0] != 0.0:
        raise ContractError("inner jet of a composition must have zero constant term")
    c = inner.coeffs
    acc = np.zeros_like(c)
    for coef in outer.coeffs[::-1]:
        acc = truncated_mul(acc, c)
        acc[0] += coef
    return Jet(acc)


def jet_invert(a: Jet) -> Jet:
    """Series reversion: ``b`` with ``a(b(y)) = y`` through the truncation order."""
    if a[0] != 0.0:
        raise ContractError("series reversion needs a zero constant term")
    if a[1] == 0.0:
        raise SingularityError("series reversion is singular: vanishing linear term")
    n = a.order
    b = np.zeros(n + 1)
    if n >= 1:
        b[1] = 1.0 / a[1]
    # fix b_k so that the y**k coefficient of a(b) vanishes; it enters only as a1*b_k
    for k in range(2, n + 1):
        resid = jet_compose(a, Jet(b)).coeffs[k]
        b[k] = -resid / a[1]
    return Jet(b)


def jet_fractional_power(a: Jet, p: float) -> Jet:
    """Binomial-series expansion of ``a**p`` for real ``p``.

    Uses the recurrence from ``a * (a**p)' = p * a' * a**p``.
    """
    a0 = a[0]
    if not a0 > 0.0:
        raise SingularityError(
            f"fractional power needs a positive constant term (got {a0!r}): branch point"
        )
    c = a.coeffs
    n = a.order
    out = np.zeros(n + 1)
    out[0] = a0**p
    for k in range(1, n + 1):
        j = np.arange(1, k + 1)
        out[k] = np.dot((p * j - (k - j)) * c[1 : k + 1], out[k - 1 :: -1][:k]) / (k * a0)
    return Jet(out)


def jet_reciprocal(a: Jet) -> Jet:
    return a.reciprocal()


def sigma_mul(a: SigmaSeries, b: SigmaSeries) -> SigmaSeries:
    if a.n_max != b.n_max:
        raise ContractError(f"sigma order mismatch: {a.n_max} vs {b.n_max}")
    return a * b


def require_order(jet: Jet, order: int) -> None:
    if jet.order < order:
        raise TruncationError(f"jet of order {jet.order} too short; need {order}")
