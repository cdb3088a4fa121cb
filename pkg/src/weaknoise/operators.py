"""
Local matrix representations of the evolution operator along an orbit.

For the orbit segment ``x_i -> x_{i+1}`` the noiseless operator is represented
in the basis ``y**k / k!`` (about ``x_i``) with dual functionals
``d^k/dy'^k`` (about ``x_{i+1}``):

    B[k, k'] = sign(f') / (k'+1)! * d^{k+1}/dy'^{k+1} F(y')**(k'+1) |_{y'=0}
    F(y')    = f^{-1}(x_{i+1} + y') - x_i

With jets storing ``c_l = F^(l)/l!`` this is
``B[k, k'] = sign(f') * (k+1)!/(k'+1)! * [y'**(k+1)] F**(k'+1)``.
``B`` is lower triangular with diagonal ``sign(f') / Lambda**(k+1)``.

Noise dresses ``B`` with the kernel moments ``a_n``:

    L[m, m'] = sum_{n >= max(m'-m, 0)} a_n sigma**n / n! * B[m+n, m']

so every ``L`` entry is a :class:`~weaknoise.series.SigmaSeries`.  ``LMatrix``
stores the whole matrix as an ``(M, M, n_max+1)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Sequence

import numpy as np

from .cycles import PrimeCycle
from .errors import DimensionError, InvariantError, TruncationError
from .maps import MapSpec, branch_inverse_jet
from .series import Jet, SigmaSeries

__all__ = [
    "NoiseKernel",
    "kernel_moments",
    "BMatrix",
    "LMatrix",
    "build_B",
    "build_L",
    "series_matmul",
    "series_matpow",
    "series_trace",
]


@dataclass(frozen=True)
class NoiseKernel:
    """Moments ``a_m`` of a kernel expanded over derivatives of the delta function."""

    kind: str
    moments: tuple[float, ...]

    def __post_init__(self):
        m = self.moments
        if not m or m[0] != 1.0:
            raise InvariantError("kernel moments must start with a_0 = 1")
        if len(m) > 1 and m[1] != 0.0:
            raise InvariantError("kernel must satisfy the saddle-point condition a_1 = 0")

    @property
    def n_max(self) -> int:
        return len(self.moments) - 1

    @property
    def is_even(self) -> bool:
        return all(a == 0.0 for a in self.moments[1::2])


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def kernel_moments(kind: str = "gaussian", n_max: int = 10, moments: Sequence[float] | None = None) -> NoiseKernel:
    """Moment table through ``n_max``.

    For the Gaussian, ``a_{2n} = (2n-1)!!`` and odd moments vanish, so that
    ``a_2/2! = 1/2`` and ``a_4/4! = 1/8``.  ``kind='custom'`` takes an explicit
    table, zero-padded or truncated to ``n_max``.
    """
    if n_max < 0:
        raise DimensionError("n_max must be non-negative")
    if kind == "gaussian":
        a = [float(_double_factorial(n - 1)) if n % 2 == 0 else 0.0 for n in range(n_max + 1)]
    elif kind == "custom":
        if moments is None:
            raise InvariantError("custom kernel needs an explicit moment table")
        a = [float(v) for v in moments][: n_max + 1]
        a += [0.0] * (n_max + 1 - len(a))
    else:
        raise InvariantError(f"unknown kernel kind {kind!r}")
    return NoiseKernel(kind, tuple(a))


@dataclass(frozen=True, eq=False)
class BMatrix:
    entries: np.ndarray
    point_index: int
    branch_sign: float
    slope: float

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True, eq=False)
class LMatrix:
    """Square matrix of sigma-polynomials, ``entries[m, m', j]`` = coeff of sigma**j."""

    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def sigma_order(self) -> int:
        return self.entries.shape[2] - 1

    def entry(self, m: int, mp: int) -> SigmaSeries:
        return SigmaSeries(self.entries[m, mp])

    def noiseless(self) -> np.ndarray:
        return self.entries[:, :, 0]

    def __matmul__(self, other: "LMatrix") -> "LMatrix":
        return LMatrix(series_matmul(self.entries, other.entries))


def build_B(spec: MapSpec, cycle: PrimeCycle, i: int, rows: int, cols: int, jet: Jet | None = None) -> BMatrix:
    """Noiseless B-matrix of segment ``x_i -> x_{i+1}`` (indices mod cycle length)."""
    if cols > rows:
        raise DimensionError("B-matrix needs rows >= cols")
    n = cycle.length
    x_i = cycle.points[i % n]
    x_next = cycle.points[(i + 1) % n]
    branch = cycle.itinerary[i % n]
    if jet is None:
        jet = branch_inverse_jet(spec, branch, x_next, rows)
    if jet.order < rows:
        raise TruncationError(f"inverse jet of order {jet.order} too short for {rows} rows")
    c = jet.coeffs[: rows + 1]
    slope = float(spec.deriv(x_i))
    sign = float(np.sign(slope))
    # (k+1)!/(k'+1)! computed as ratios of exact integer factorials
    fact = np.array([float(factorial(k)) for k in range(rows + 1)])
    B = np.zeros((rows, cols))
    power = np.zeros(rows + 1)
    power[0] = 1.0
    for kp in range(cols):
        power = np.convolve(power, c)[: rows + 1]
        k = np.arange(kp, rows)
        B[kp:, kp] = sign * fact[k + 1] / fact[kp + 1] * power[k + 1]
    return BMatrix(B, i % n, sign, slope)


def build_L(B: BMatrix | np.ndarray, kernel: NoiseKernel, size: int, sigma_order: int) -> LMatrix:
    """Dress a B-matrix with noise moments through ``sigma**sigma_order``."""
    Bm = B.entries if isinstance(B, BMatrix) else np.asarray(B)
    if Bm.shape[1] < size or Bm.shape[0] < size + sigma_order:
        raise DimensionError(
            f"B of shape {Bm.shape} too small for L size {size} at sigma order {sigma_order}"
        )
    if kernel.n_max < sigma_order:
        raise DimensionError("kernel moment table shorter than the sigma order")
    L = np.zeros((size, size, sigma_order + 1))
    m = np.arange(size)[:, None]
    mp = np.arange(size)[None, :]
    for n in range(sigma_order + 1):
        a = kernel.moments[n]
        if a == 0.0:
            continue
        weight = a / factorial(n)
        block = Bm[n : n + size, :size]  # B[m+n, m']
        # only terms with n >= m' - m contribute
        L[:, :, n] = np.where(n >= mp - m, weight * block, 0.0)
    return LMatrix(L)


def series_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Product of matrices with truncated sigma-polynomial entries."""
    if A.shape[1] != B.shape[0] or A.shape[2] != B.shape[2]:
        raise DimensionError(f"incompatible series matrices {A.shape} and {B.shape}")
    J = A.shape[2]
    C = np.zeros((A.shape[0], B.shape[1], J))
    nzA = [a for a in range(J) if A[:, :, a].any()]
    nzB = [b for b in range(J) if B[:, :, b].any()]
    # fixed ascending (a, b) order keeps summation deterministic
    for a in nzA:
        for b in nzB:
            if a + b < J:
                C[:, :, a + b] += A[:, :, a] @ B[:, :, b]
    return C


def series_matpow(A: np.ndarray, r: int) -> np.ndarray:
    if r < 1:
        raise DimensionError("matrix power needs r >= 1")
    out = A
    for _ in range(r - 1):
        out = series_matmul(out, A)
    return out


def series_trace(A: np.ndarray) -> SigmaSeries:
    return SigmaSeries(np.einsum("iij->j", A))
