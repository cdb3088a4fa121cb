"""
From periodic orbits to the weak-noise expansion of the leading eigenvalue.

Pipeline
--------
1. :func:`cycle_trace` -- ``tr (L_{s_n} ... L_{s_1})**r`` as a sigma-series.
2. :func:`assemble_traces` -- ``tr L**n = sum_p n_p sum_r [n = n_p r] tr L_p**r``.
3. :func:`cumulants` -- ``det(1 - zL) = 1 - sum_{n,j} Q[n, j] z**n sigma**j``.
4. :func:`find_z0` -- smallest positive zero of the noiseless determinant.
5. :func:`solve_z_series` -- ``z(sigma)`` by Newton iteration on truncated
   sigma-series, so that ``det(1 - z(sigma) L) = O(sigma**(J+1))``.
6. :func:`nu_expansion` -- ``nu(sigma) = 1 / z(sigma)``.

The hand-derived low-order formulas (:func:`closed_form_z`,
:func:`closed_form_nu`, :func:`closed_form_nu8`) are kept only as
cross-checks of the series Newton path.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .cycles import PrimeCycle, enumerate_prime_itineraries, locate_cycles
from .errors import (
    CompletenessError,
    ContractError,
    ConvergenceError,
    DegenerateRootError,
    DimensionError,
    RootNotFoundError,
)
from .maps import MapSpec
from .operators import (
    NoiseKernel,
    build_B,
    build_L,
    kernel_moments,
    series_matmul,
    series_matpow,
    series_trace,
)
from .series import SigmaSeries, truncated_mul

__all__ = [
    "MatrixSizes",
    "TraceTable",
    "CumulantTable",
    "DetCoeffs",
    "EigenExpansion",
    "cycle_product",
    "cycle_trace",
    "assemble_traces",
    "cumulants",
    "euler_cumulants",
    "euler_z_cumulants",
    "find_z0",
    "det_coeffs",
    "solve_z_series",
    "nu_expansion",
    "closed_form_z",
    "closed_form_nu",
    "closed_form_nu8",
    "product_formula_check",
    "expansion_from_cumulants",
    "perturbative_expansion",
    "convergence_rows",
]


@dataclass(frozen=True)
class MatrixSizes:
    """L-matrix size as a function of the trace order ``n = n_p * r``.

    ``extra_rows`` pads the B-matrix beyond the ``size + sigma_order`` rows
    the noise convolution needs.
    """

    default: int = 16
    by_length: Mapping[int, int] = field(default_factory=lambda: {1: 26, 2: 20})
    extra_rows: int = 0

    @classmethod
    def uniform(cls, size: int) -> "MatrixSizes":
        return cls(default=size, by_length={})

    def for_length(self, n: int) -> int:
        return int(self.by_length.get(n, self.default))

    def b_rows(self, size: int, sigma_order: int) -> int:
        return size + sigma_order + self.extra_rows


@dataclass(frozen=True, eq=False)
class TraceTable:
    """``C[n, j]`` = coefficient of ``sigma**j`` in ``tr L**n``; row 0 unused."""

    C: np.ndarray

    @property
    def n_max(self) -> int:
        return self.C.shape[0] - 1

    @property
    def sigma_order(self) -> int:
        return self.C.shape[1] - 1

    def trace(self, n: int) -> SigmaSeries:
        return SigmaSeries(self.C[n])


@dataclass(frozen=True, eq=False)
class CumulantTable:
    """``Q[n, j]`` with ``det(1 - zL) = 1 - sum Q[n, j] z**n sigma**j``; row 0 unused."""

    Q: np.ndarray

    @property
    def n_max(self) -> int:
        return self.Q.shape[0] - 1

    @property
    def sigma_order(self) -> int:
        return self.Q.shape[1] - 1

    def truncated(self, n: int) -> "CumulantTable":
        return CumulantTable(self.Q[: n + 1].copy())

    def determinant(self, z: float) -> SigmaSeries:
        """``det(1 - zL)`` as a sigma-series at fixed ``z``."""
        powers = z ** np.arange(self.n_max + 1)
        out = -(powers[1:, None] * self.Q[1:]).sum(axis=0)
        out[0] += 1.0
        return SigmaSeries(out)


@dataclass(frozen=True)
class DetCoeffs:
    """Taylor coefficients of ``det(1 - (z + z0) L)`` about ``(z, sigma) = (0, 0)``.

    ``det = value - sum_{(i, j) != (0, 0)} F[i, j] z**i sigma**j``; the sign
    convention matches the cumulant expansion, so ``F[1, 0] > 0`` for a
    simple leading zero.
    """

    value: float
    coeffs: Mapping[tuple[int, int], float]
    z0: float

    def __getitem__(self, key):
        if key == (0, 0):
            return self.value
        return self.coeffs.get(tuple(key), 0.0)


@dataclass(frozen=True, eq=False)
class EigenExpansion:
    """Leading eigenvalue ``nu(sigma) = sum_j nu[j] sigma**j`` and its inverse ``z``.

    Arrays are indexed by the power of ``sigma``.  For Gaussian noise the odd
    entries vanish exactly and ``nu_even[k]`` is the ``sigma**(2k)`` coefficient.
    """

    z0: float
    z: np.ndarray
    nu: np.ndarray
    n_max: int

    @property
    def nu_even(self) -> np.ndarray:
        return self.nu[0::2]

    @property
    def z_even(self) -> np.ndarray:
        return self.z[0::2]

    def nu_coeff(self, power: int) -> float:
        return float(self.nu[power])

    def z_coeff(self, power: int) -> float:
        return float(self.z[power])

    def partial_sum(self, sigma: float, K: int) -> float:
        """``sum_{k <= K} nu_{2k} sigma**(2k)`` (all powers ``<= 2K``)."""
        p = min(2 * K, len(self.nu) - 1)
        return float(np.polynomial.polynomial.polyval(sigma, self.nu[: p + 1]))


# --------------------------------------------------------------------------
# traces


def cycle_product(
    spec: MapSpec,
    cycle: PrimeCycle,
    size: int,
    kernel: NoiseKernel,
    sigma_order: int,
    b_rows: int | None = None,
) -> np.ndarray:
    """``L_{n_p} @ ... @ L_1`` for one traversal of the cycle."""
    rows = size + sigma_order if b_rows is None else b_rows
    product = None
    for i in range(cycle.length):
        B = build_B(spec, cycle, i, rows, size)
        L = build_L(B, kernel, size, sigma_order).entries
        # segment i maps functions about x_i to functions about x_{i+1}
        product = L if product is None else series_matmul(L, product)
    return product


def cycle_trace(
    spec: MapSpec,
    cycle: PrimeCycle,
    r: int = 1,
    size: int = 16,
    kernel: NoiseKernel | None = None,
    sigma_order: int = 10,
    b_rows: int | None = None,
) -> SigmaSeries:
    """``tr (L_p)**r`` as a sigma-series."""
    kernel = kernel_moments("gaussian", sigma_order) if kernel is None else kernel
    P = cycle_product(spec, cycle, size, kernel, sigma_order, b_rows)
    return series_trace(series_matpow(P, r))


def _check_complete(cycles: Sequence[PrimeCycle], n_max: int, alphabet: int) -> None:
    lengths: dict[int, int] = {}
    for c in cycles:
        lengths[c.length] = lengths.get(c.length, 0) + 1
    for n in range(1, n_max + 1):
        covered = sum(d * lengths.get(d, 0) for d in range(1, n + 1) if n % d == 0)
        if covered != alphabet**n:
            raise CompletenessError(
                f"prime cycles cover {covered} of {alphabet**n} symbol strings of length {n}"
            )


def assemble_traces(
    spec: MapSpec,
    cycles: Sequence[PrimeCycle],
    n_max: int,
    sizes: MatrixSizes | int = MatrixSizes(),
    kernel: NoiseKernel | None = None,
    sigma_order: int = 10,
    workers: int | None = None,
) -> TraceTable:
    """Total traces ``tr L**n`` for ``n = 1..n_max`` from prime cycles and repeats."""
    if isinstance(sizes, int):
        sizes = MatrixSizes.uniform(sizes)
    kernel = kernel_moments("gaussian", sigma_order) if kernel is None else kernel
    cycles = sorted(
        (c for c in cycles if c.length <= n_max), key=lambda c: (c.length, c.itinerary)
    )
    _check_complete(cycles, n_max, spec.branch_count)

    jobs = []
    for c in cycles:
        for r in range(1, n_max // c.length + 1):
            jobs.append((c, r, sizes.for_length(c.length * r)))

    products: dict = {}

    def product_for(c, size):
        key = (c.itinerary, size)
        if key not in products:
            products[key] = cycle_product(
                spec, c, size, kernel, sigma_order, sizes.b_rows(size, sigma_order)
            )
        return products[key]

    def run(job):
        c, r, size = job
        return series_trace(series_matpow(product_for(c, size), r)).coeffs

    if workers and workers > 1:
        # build products first so threads never race on the cache
        for key in dict.fromkeys((c, s) for c, _, s in jobs):
            product_for(*key)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            traces = list(pool.map(run, jobs))
    else:
        traces = [run(j) for j in jobs]

    C = np.zeros((n_max + 1, sigma_order + 1))
    for (c, r, _), tr in zip(jobs, traces):
        C[c.length * r] += c.length * tr
    return TraceTable(C)


# --------------------------------------------------------------------------
# cumulants


def cumulants(traces: TraceTable | np.ndarray) -> CumulantTable:
    """Q[n, m] = (C[n, m] - sum_{k<n} sum_{l<=m} Q[k, m-l] C[n-k, l]) / n."""
    C = traces.C if isinstance(traces, TraceTable) else np.asarray(traces, dtype=float)
    n_max = C.shape[0] - 1
    Q = np.zeros_like(C)
    for n in range(1, n_max + 1):
        acc = C[n].copy()
        for k in range(1, n):
            acc -= truncated_mul(Q[k], C[n - k])
        Q[n] = acc / n
    return CumulantTable(Q)


def euler_cumulants(slope: float, k_max: int) -> list[float]:
    """Euler-formula coefficients of ``det(1 - zL) = sum_k Q_k t**k``, ``t = -z/|slope|``,
    for the single linear branch ``f(x) = slope * x``.  Returns ``Q_0..Q_{k_max}``.
    """
    if not abs(slope) > 1:
        raise ContractError("Euler cumulants need |slope| > 1")
    q = 1.0 / slope
    out = [1.0]
    for j in range(1, k_max + 1):
        out.append(out[-1] * q ** (j - 1) / (1.0 - q**j))
    return out


def euler_z_cumulants(slope: float, k_max: int) -> np.ndarray:
    """Euler cumulants converted to the ``1 - sum Q_n z**n`` convention (index 0 unused)."""
    qe = euler_cumulants(slope, k_max)
    out = np.zeros(k_max + 1)
    for k in range(1, k_max + 1):
        out[k] = -qe[k] * (-1.0 / abs(slope)) ** k
    return out


# --------------------------------------------------------------------------
# zeros and the sigma expansion


def _noiseless_poly(Q: CumulantTable) -> np.ndarray:
    c = -Q.Q[:, 0].copy()
    c[0] = 1.0
    return c


def find_z0(
    Q: CumulantTable,
    z_scan_max: float = 10.0,
    scan_points: int = 4001,
    tol: float = 1e-13,
) -> float:
    """Smallest positive zero of ``1 - sum_n Q[n, 0] z**n``.

    Brackets the root by a sign scan on ``(0, z_scan_max]``, then polishes
    with Newton steps.
    """
    p = _noiseless_poly(Q)
    dp = np.polynomial.polynomial.polyder(p)
    pv = lambda z: float(np.polynomial.polynomial.polyval(z, p))
    grid = np.linspace(0.0, z_scan_max, scan_points)
    vals = np.polynomial.polynomial.polyval(grid, p)
    hits = np.flatnonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))
    if not len(hits):
        raise RootNotFoundError(f"no positive zero of the determinant in (0, {z_scan_max}]")
    i = hits[0]
    if vals[i + 1] == 0.0:
        z = float(grid[i + 1])
    else:
        z = brentq(pv, grid[i], grid[i + 1], xtol=1e-16, rtol=4 * np.finfo(float).eps)
    for _ in range(5):
        d = float(np.polynomial.polynomial.polyval(z, dp))
        if d == 0.0:
            break
        step = pv(z) / d
        z -= step
        if abs(step) <= 1e-16 * abs(z):
            break
    scale = float(np.polynomial.polynomial.polyval(abs(z), np.abs(p)))
    if abs(pv(z)) > tol * max(1.0, scale):
        raise ConvergenceError(f"Newton polish of z0 left residual {pv(z):.3g}")
    return float(z)


def det_coeffs(Q: CumulantTable, z0: float, order: int | None = None) -> DetCoeffs:
    """All ``F[i, j]`` with ``i + j/2 <= order`` (``order`` in units of sigma**2).

    ``F[i, j] = sum_m binom(m, i) Q[m, j] z0**(m - i)`` and
    ``F = 1 - sum_m Q[m, 0] z0**m``.
    """
    n = Q.n_max
    J = Q.sigma_order
    order = J // 2 if order is None else order
    coeffs = {}
    for i in range(0, n + 1):
        for j in range(0, J + 1):
            if (i, j) == (0, 0) or 2 * i + j > 2 * order:
                continue
            coeffs[(i, j)] = float(
                sum(comb(m, i) * Q.Q[m, j] * z0 ** (m - i) for m in range(max(i, 1), n + 1))
            )
    value = 1.0 - float(sum(Q.Q[m, 0] * z0**m for m in range(1, n + 1)))
    return DetCoeffs(value, coeffs, z0)


def _det_and_derivative(Q: np.ndarray, zs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Horner in z with sigma-series coefficients q_n(sigma) = Q[n, :]
    n_max = Q.shape[0] - 1
    J = Q.shape[1]
    coef = [(-Q[n] if n else np.eye(1, J)[0]) for n in range(n_max + 1)]
    val = coef[n_max].copy()
    der = np.zeros(J)
    for n in range(n_max - 1, -1, -1):
        der = truncated_mul(der, zs) + val
        val = truncated_mul(val, zs) + coef[n]
    return val, der


def solve_z_series(Q: CumulantTable, z0: float, sigma_order: int | None = None) -> np.ndarray:
    """Coefficients of ``z(sigma)`` with ``det(1 - z(sigma) L) = O(sigma**(J+1))``.

    Newton iteration on truncated series; each step doubles the number of
    correct sigma orders.  Returns an array indexed by the power of sigma.
    """
    J = Q.sigma_order if sigma_order is None else sigma_order
    if J > Q.sigma_order:
        raise DimensionError("cumulants are truncated below the requested sigma order")
    q = Q.Q[:, : J + 1]
    F10 = float(sum(n * q[n, 0] * z0 ** (n - 1) for n in range(1, q.shape[0])))
    scale = float(sum(n * abs(q[n, 0]) * abs(z0) ** (n - 1) for n in range(1, q.shape[0])))
    if abs(F10) <= 1e-12 * max(scale, 1e-300):
        raise DegenerateRootError("determinant has a double zero at z0 (F10 = 0)")
    zs = np.zeros(J + 1)
    zs[0] = z0
    correct = 1
    while correct < J + 1:
        correct = min(2 * correct, J + 1)
        val, der = _det_and_derivative(q, zs)
        step = truncated_mul(val, SigmaSeries(der).reciprocal().coeffs)
        step[correct:] = 0.0
        zs = zs - step
    return zs


def nu_expansion(z: np.ndarray) -> np.ndarray:
    """Series coefficients of ``1 / z(sigma)``."""
    z = np.asarray(z, dtype=float)
    if not z[0] > 0:
        raise ContractError("reciprocation needs z0 > 0")
    return SigmaSeries(z).reciprocal().coeffs


def expansion_from_cumulants(Q: CumulantTable, sigma_order: int | None = None, **kw) -> EigenExpansion:
    z0 = find_z0(Q, **kw)
    zs = solve_z_series(Q, z0, sigma_order)
    return EigenExpansion(z0, zs, nu_expansion(zs), Q.n_max)


# --------------------------------------------------------------------------
# closed forms, used as independent oracles


def closed_form_z(F: DetCoeffs) -> dict[int, float]:
    """``z_2, z_4, z_6, z_8`` from the hand-solved order-by-order equations."""
    F10, F02, F20, F12, F04 = F[1, 0], F[0, 2], F[2, 0], F[1, 2], F[0, 4]
    F30, F22, F14, F06 = F[3, 0], F[2, 2], F[1, 4], F[0, 6]
    F40, F32, F24, F16, F08 = F[4, 0], F[3, 2], F[2, 4], F[1, 6], F[0, 8]
    z2 = -F02 / F10
    z4 = -(F20 * z2**2 + F12 * z2 + F04) / F10
    z6 = -(2 * F20 * z2 * z4 + F12 * z4 + F30 * z2**3 + F22 * z2**2 + F14 * z2 + F06) / F10
    z8 = -(
        F20 * (2 * z2 * z6 + z4**2)
        + F12 * z6
        + 3 * F30 * z2**2 * z4
        + 2 * F22 * z2 * z4
        + F14 * z4
        + F40 * z2**4
        + F32 * z2**3
        + F24 * z2**2
        + F16 * z2
        + F08
    ) / F10
    return {2: z2, 4: z4, 6: z6, 8: z8}


def closed_form_nu(F: DetCoeffs, nu0: float, as_printed: bool = False) -> tuple[float, float, float]:
    """``nu_2, nu_4, nu_6`` written directly in terms of the ``F`` coefficients.

    The ``F_12 F_20`` term of ``nu_6`` carries ``F_02**2``, as required by the
    order-by-order solution for ``z_2, z_4, z_6``.  ``as_printed=True``
    evaluates the published variant with a single power of ``F_02`` there.
    """
    F10, F02, F20, F12, F04 = F[1, 0], F[0, 2], F[2, 0], F[1, 2], F[0, 4]
    F30, F22, F14, F06 = F[3, 0], F[2, 2], F[1, 4], F[0, 6]
    nu2 = F02 / F10 * nu0**2
    nu4 = (F20 * F02**2 - F12 * F02 * F10 + F04 * F10**2 + F02**2 * F10 * nu0) * nu0**2 / F10**3
    nu6 = (
        2 * F02**3 * F20**2
        - 3 * F02 ** (1 if as_printed else 2) * F10 * F12 * F20
        + 2 * F02 * F04 * F10**2 * F20
        + F02 * F10**2 * F12**2
        - F04 * F10**3 * F12
        - F30 * F02**3 * F10
        + F22 * F02**2 * F10**2
        - F02 * F10**3 * F14
        + F06 * F10**4
        + 2 * (F02**3 * F10 * F20 - F02**2 * F10**2 * F12 + F02 * F04 * F10**3) * nu0
        + F02**3 * F10**2 * nu0**2
    ) * nu0**2 / F10**5
    return nu2, nu4, nu6


def closed_form_nu8(F: DetCoeffs, nu0: float, f13_cubed: float | None = None) -> float:
    """The printed ``nu_8`` formula, kept as a diagnostic.

    It does not agree with the order-by-order solution: it omits ``F_40`` and
    differs in several ``F_02**4`` terms.  The series recursion is the
    reference value.

    The printed version carries a term ``F_13**3`` that has no counterpart
    among the even-sigma coefficients.  ``f13_cubed`` is the value substituted
    for it; by default ``F_12**3`` is used.
    """
    F10, F02, F20, F12, F04 = F[1, 0], F[0, 2], F[2, 0], F[1, 2], F[0, 4]
    F30, F22, F14, F06 = F[3, 0], F[2, 2], F[1, 4], F[0, 6]
    F32, F24, F16, F08 = F[3, 2], F[2, 4], F[1, 6], F[0, 8]
    x = F12**3 if f13_cubed is None else f13_cubed
    n = nu0
    total = (
        F10**4 * (F08 * F10**2 - F06 * F10 * F12 + F04 * F12**2 - F04 * F10 * F14 + F04**2 * F20 + F04**2 * F10 * n)
        + F02**4
        * (
            F04 * F10**2
            - 5 * F20**3
            - 5 * F10 * F20 * F30
            + 5 * F10 * F20**2 * n
            - 2 * F10**2 * F30 * n
            + 3 * F10**2 * F20 * n**2
            + F10**3 * n
        )
        + F02**2
        * F10**2
        * (
            -3 * F10 * F14 * F20
            + 6 * F04 * F20**2
            - 3 * F10 * F12 * F22
            + F10**2 * F24
            - 3 * F04 * F10 * F30
            - 2 * F10**2 * F14 * n
            + 6 * F04 * F10 * F20 * n
            + 3 * F04 * F10**2 * n**2
            + 6 * F12**2 * F20
            + 3 * F12**2 * F10 * n
        )
        - F02
        * F10**3
        * (
            x
            + F12 * (-2 * F10 * F14 + 6 * F04 * F20 + 4 * F04 * F10 * n)
            + F10 * (F10 * F16 - 2 * F06 * F20 - 2 * F04 * F22 - 2 * F06 * F10 * n)
        )
        - F02**3
        * F10
        * (
            F10 * (-4 * F20 * F22 + F10 * F32 - 2 * F10 * F22 * n)
            + F12 * (10 * F20**2 - 4 * F10 * F30 + 8 * F10 * F20 * n + 3 * F10**2 * n**2)
        )
    )
    return total * nu0**2 / F10**7


# --------------------------------------------------------------------------
# product formula


def product_formula_check(
    spec: MapSpec,
    cycles: Sequence[PrimeCycle],
    n_max: int,
    sizes: MatrixSizes | int = MatrixSizes(),
    z: float | None = None,
) -> float:
    """Compare ``1 - sum Q[n, 0] z**n`` with ``prod_p det(1 - z**n_p L_p)``.

    The left side comes from traces and the cumulant recursion; the right
    side from characteristic polynomials of the noiseless cycle matrices.
    Returns the largest coefficient discrepancy through ``z**n_max``, or the
    discrepancy of the two truncated polynomials evaluated at ``z``.
    """
    if isinstance(sizes, int):
        sizes = MatrixSizes.uniform(sizes)
    kernel = kernel_moments("gaussian", 0)
    C = assemble_traces(spec, cycles, n_max, sizes, kernel, sigma_order=0)
    lhs = _noiseless_poly(cumulants(C))
    rhs = np.zeros(n_max + 1)
    rhs[0] = 1.0
    for c in cycles:
        if c.length > n_max:
            continue
        P = cycle_product(spec, c, sizes.for_length(c.length), kernel, 0)[:, :, 0]
        charpoly = np.real(np.poly(P))  # det(1 - tP) = sum_k charpoly[k] t**k
        factor = np.zeros(n_max + 1)
        for k, ck in enumerate(charpoly):
            if k * c.length <= n_max:
                factor[k * c.length] = ck
        rhs = truncated_mul(rhs, factor)
    if z is not None:
        pv = np.polynomial.polynomial.polyval
        return float(abs(pv(z, lhs) - pv(z, rhs)))
    return float(np.max(np.abs(lhs - rhs)))


# --------------------------------------------------------------------------
# drivers


def perturbative_expansion(
    spec: MapSpec,
    n_max: int = 6,
    sizes: MatrixSizes | int = MatrixSizes(),
    kernel: NoiseKernel | None = None,
    sigma_order: int = 10,
    cycles: Sequence[PrimeCycle] | None = None,
    workers: int | None = None,
):
    """Run the full cycle-expansion pipeline.

    Returns
    -------
    (cycles, TraceTable, CumulantTable, EigenExpansion)
    """
    kernel = kernel_moments("gaussian", sigma_order) if kernel is None else kernel
    if cycles is None:
        words = enumerate_prime_itineraries(n_max, spec.branch_count)
        cycles = locate_cycles(spec, words, workers=workers)
    C = assemble_traces(spec, cycles, n_max, sizes, kernel, sigma_order, workers)
    Q = cumulants(C)
    return cycles, C, Q, expansion_from_cumulants(Q, sigma_order)


def convergence_rows(Q: CumulantTable, sigma_order: int | None = None) -> list[EigenExpansion]:
    """One expansion per cycle truncation length ``n = 1..n_max``."""
    return [expansion_from_cumulants(Q.truncated(n), sigma_order) for n in range(1, Q.n_max + 1)]
