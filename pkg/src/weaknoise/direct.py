"""
Finite-noise evaluation of the leading eigenvalue.

Three independent discretizations of the Gaussian-noise operator
``(L rho)(y) = int g_sigma(y - f(x)) rho(x) dx``:

:func:`quadrature_matrix`
    Matrix in the monomial basis ``(x - c)**k / k!`` with dual functionals
    ``d^l/dy^l`` at ``y = c``.  The ``l``-th derivative of the Gaussian is a
    Hermite polynomial times the Gaussian, followed by one ``x``-quadrature per
    entry.  The Hermite factors grow like ``sigma**-l`` while the entries do
    not, so at small noise the entries are dominated by cancellation; the
    matrix carries a rounding-error bound and :func:`leading_eigenvalue`
    refuses results it cannot certify.
:func:`nystrom_eigenvalue`
    Nystrom discretization of the kernel on Gauss-Legendre panels graded to
    the local kernel width ``sigma / |f'(x)|``.  Spectrally accurate at every
    noise level; this is the reference used by :func:`compare_curves`.
:func:`lattice_eigenvalue`
    Ulam-type bin-transition matrix with exact Gaussian bin integrals.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from math import factorial, lgamma, log, sqrt, pi
from typing import Sequence

import numpy as np
from numpy.polynomial import hermite_e, legendre
from scipy import sparse
from scipy.linalg import matrix_balance
from scipy.optimize import brentq
from scipy.special import ndtr

from .errors import AccuracyError, ContractError, ConvergenceError
from .maps import MapSpec
from .spectral import EigenExpansion

__all__ = [
    "DirectMatrix",
    "quadrature_matrix",
    "leading_eigenvalue",
    "nystrom_eigenvalue",
    "lattice_eigenvalue",
    "compare_curves",
    "COMPARE_COLUMNS",
    "curves_to_csv",
    "fit_power_law",
    "fit_fixed_power",
    "GrowthFit",
    "asymptotic_ratio_fit",
]

# exp(-T**2/2) < 1e-18 beyond T sigma
TAIL = sqrt(2.0 * log(1e18)) + 0.4
MAX_BASIS = 40
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class DirectMatrix:
    """Monomial-basis matrix of the noisy operator at fixed ``sigma``."""

    entries: np.ndarray
    sigma: float
    rounding_bound: np.ndarray
    quadrature_meta: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def _level_set_intervals(f, lo: float, hi: float, level_lo: float, level_hi: float,
                         samples: int = 20001) -> list[tuple[float, float]]:
    """Intervals in ``[lo, hi]`` where ``level_lo <= f(x) <= level_hi``."""
    xs = np.linspace(lo, hi, samples)
    inside = (f(xs) >= level_lo) & (f(xs) <= level_hi)
    if inside[0] or inside[-1]:
        raise ContractError("level set reaches the search bracket; enlarge the domain")
    out = []
    flips = np.flatnonzero(inside[1:] != inside[:-1])
    for a_idx, b_idx in zip(flips[::2], flips[1::2]):
        edges = []
        for idx in (a_idx, b_idx):
            x0, x1 = xs[idx], xs[idx + 1]
            fx0 = float(f(x0))
            level = level_lo if (fx0 < level_lo) != (float(f(x1)) < level_lo) else level_hi
            edges.append(brentq(lambda x: float(f(x)) - level, x0, x1, xtol=1e-15))
        out.append((edges[0], edges[1]))
    return out


def _panels(intervals, panels_per_interval: int, q: int):
    t, w = legendre.leggauss(q)
    X, W = [], []
    for a, b in intervals:
        e = np.linspace(a, b, panels_per_interval + 1)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        X.append((mid[:, None] + half[:, None] * t).ravel())
        W.append((half[:, None] * w).ravel())
    return np.concatenate(X), np.concatenate(W)


def _assemble_monomial(spec, sigma, M, c, X, W):
    u = (spec.eval(X) - c) / sigma
    g = np.exp(-0.5 * u * u) / (sqrt(2.0 * pi) * sigma)
    H = hermite_e.hermevander(u, M - 1) * sigma ** (-np.arange(M, dtype=float))
    inv_fact = np.array([1.0 / factorial(k) for k in range(M)])
    V = (X - c)[:, None] ** np.arange(M) * inv_fact
    weighted = H * (W * g)[:, None]
    A = weighted.T @ V
    bound = np.abs(weighted).T @ np.abs(V)
    return A, bound


def quadrature_matrix(
    spec: MapSpec,
    sigma: float,
    M: int,
    center: float | None = None,
    nodes: int = 64,
    tol: float = 1e-10,
    max_doublings: int = 8,
    q: int = 16,
) -> DirectMatrix:
    """``L[l, k] = d^l/dy^l [ int g_sigma(y - f(x)) (x - c)**k / k! dx ]`` at ``y = c``.

    The ``x``-integral covers the level set ``|f(x) - c| <= T sigma`` with
    composite Gauss-Legendre panels; the panel count doubles until no entry
    moves by more than ``tol`` relative (or by more than its own rounding
    bound).
    """
    if not sigma > 0:
        raise ContractError("quadrature matrix needs sigma > 0")
    if not 2 <= M <= MAX_BASIS:
        raise ContractError(f"basis size must lie in 2..{MAX_BASIS}; the monomial basis is "
                            "too ill-conditioned beyond that")
    c = spec.basis_center if center is None else float(center)
    lo, hi = spec.domain
    width = hi - lo
    intervals = _level_set_intervals(spec.eval, lo - width, hi + width,
                                     c - TAIL * sigma, c + TAIL * sigma)
    panels = max(1, nodes // (q * len(intervals)))
    X, W = _panels(intervals, panels, q)
    A, bound = _assemble_monomial(spec, sigma, M, c, X, W)
    for _ in range(max_doublings):
        panels *= 2
        X, W = _panels(intervals, panels, q)
        A2, bound2 = _assemble_monomial(spec, sigma, M, c, X, W)
        floor = 64 * _EPS * np.maximum(bound, bound2)
        if np.all(np.abs(A2 - A) <= tol * np.abs(A2) + floor):
            A, bound = A2, bound2
            break
        A, bound = A2, bound2
    else:
        raise AccuracyError(f"quadrature did not converge after {max_doublings} node doublings")
    meta = {"nodes": int(len(X)), "center": c, "intervals": intervals}
    return DirectMatrix(A, float(sigma), 64 * _EPS * bound, meta)


def _power(A, x0, tol, maxiter):
    v = x0 / np.linalg.norm(x0)
    lam = None
    for it in range(1, maxiter + 1):
        Av = A @ v
        new = float(v @ Av)
        nrm = np.linalg.norm(Av)
        if nrm == 0.0:
            return 0.0, v, it
        if lam is not None and abs(new - lam) <= tol * abs(new):
            resid = np.linalg.norm(Av - new * v) / nrm
            if resid <= 1e-6:
                return new, Av / nrm, it
        lam = new
        v = Av / nrm
    raise ConvergenceError(
        "power iteration did not converge (dominant eigenvalues of equal modulus?)"
    )


def leading_eigenvalue(
    A,
    tol: float = 1e-12,
    maxiter: int = 100_000,
    certify: float | None = 1e-10,
) -> float:
    """Dominant eigenvalue by power iteration.

    ``A`` is a :class:`DirectMatrix`, a dense array or a sparse matrix.  For a
    :class:`DirectMatrix` the first-order eigenvalue perturbation implied by
    its rounding bound is checked against ``certify`` (relative) and an
    :class:`AccuracyError` raised when it is exceeded.
    """
    bound = None
    if isinstance(A, DirectMatrix):
        bound = A.rounding_bound
        A = A.entries
    if sparse.issparse(A):
        x0 = np.ones(A.shape[0])
        lam, _, _ = _power(A, x0, tol, maxiter)
        return lam
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ContractError("matrix has non-finite entries")
    # diagonal similarity by powers of two: exact, spectrum unchanged
    with warnings.catch_warnings():
        # scipy casts huge scale factors through int for the unused permutation
        warnings.simplefilter("ignore", RuntimeWarning)
        Ab, (scale, _) = matrix_balance(A, permute=False, separate=True)
    x0 = np.ones(A.shape[0])
    lam, right, _ = _power(Ab, x0, tol, maxiter)
    if bound is not None and certify is not None:
        _, left, _ = _power(Ab.T, x0, 1e-10, maxiter)
        Eb = bound * scale[None, :] / scale[:, None]
        overlap = abs(float(left @ right))
        err = float(np.abs(left) @ Eb @ np.abs(right)) / max(overlap, 1e-300)
        if not err <= certify * abs(lam):
            raise AccuracyError(
                f"eigenvalue {lam:.12g} not certified: rounding bound {err:.2e} "
                f"exceeds {certify:g} relative"
            )
    return lam


# --------------------------------------------------------------------------
# Nystrom


def _graded_edges(spec: MapSpec, a: float, b: float, h0: float) -> np.ndarray:
    e = [a]
    while e[-1] < b:
        x = e[-1]
        h = h0 / max(1.0, abs(float(spec.deriv(x))))
        # re-evaluate at the far end so steep sides never get an overlong panel
        h = h0 / max(1.0, abs(float(spec.deriv(x))), abs(float(spec.deriv(min(x + h, b)))))
        e.append(min(x + h, b))
    return np.array(e)


def _nystrom_operator(spec, sigma, panel_width, q):
    lo, hi = spec.domain
    width = hi - lo
    y_lo, y_hi = lo - TAIL * sigma, hi + TAIL * sigma
    # sources whose image can still reach the target window
    intervals = _level_set_intervals(spec.eval, y_lo - width, y_hi + width,
                                     y_lo - TAIL * sigma, y_hi + TAIL * sigma)
    t, w = legendre.leggauss(q)
    X, W = [], []
    for a, b in intervals:
        a, b = max(a, y_lo), min(b, y_hi)
        if b <= a:
            continue
        e = _graded_edges(spec, a, b, panel_width * sigma)
        half = 0.5 * np.diff(e)
        mid = 0.5 * (e[1:] + e[:-1])
        X.append((mid[:, None] + half[:, None] * t).ravel())
        W.append((half[:, None] * w).ravel())
    X = np.concatenate(X)
    W = np.concatenate(W)
    order = np.argsort(X, kind="stable")
    X, W = X[order], W[order]
    FX = spec.eval(X)
    reach = TAIL * sigma
    start = np.searchsorted(X, FX - reach, side="left")
    stop = np.searchsorted(X, FX + reach, side="right")
    counts = stop - start
    cols = np.repeat(np.arange(len(X)), counts)
    offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    rows = np.repeat(start, counts) + offsets
    d = (X[rows] - FX[cols]) / sigma
    data = np.exp(-0.5 * d * d) / (sqrt(2.0 * pi) * sigma) * W[cols]
    K = sparse.csr_matrix((data, (rows, cols)), shape=(len(X), len(X)))
    return K, len(X)


def nystrom_eigenvalue(
    spec: MapSpec,
    sigma: float,
    panel_width: float = 1.0,
    q: int = 16,
    tol: float = 1e-13,
    check: float | None = 1e-11,
) -> float:
    """Leading eigenvalue from a Nystrom discretization on graded panels.

    Panels have width ``panel_width * sigma / max(1, |f'|)``.  With ``check``
    set, the computation is repeated on panels half as wide and an
    :class:`AccuracyError` raised if the two disagree by more than ``check``
    relative.
    """
    if not sigma > 0:
        raise ContractError("Nystrom discretization needs sigma > 0")
    K, _ = _nystrom_operator(spec, sigma, panel_width, q)
    lam = leading_eigenvalue(K, tol=tol)
    if check is not None:
        K2, _ = _nystrom_operator(spec, sigma, 0.5 * panel_width, q)
        lam2 = leading_eigenvalue(K2, tol=tol)
        if abs(lam2 - lam) > check * abs(lam2):
            raise AccuracyError(
                f"Nystrom eigenvalue not converged at sigma={sigma}: {lam!r} vs {lam2!r}"
            )
        lam = lam2
    return lam


# --------------------------------------------------------------------------
# lattice


def lattice_eigenvalue(
    spec: MapSpec,
    sigma: float,
    bins: int = 1024,
    padding: float | None = None,
    quad_points: int = 8,
) -> float:
    """Leading eigenvalue of the bin-transition matrix on the padded domain.

    ``P[i, j] = (1/w_j) int_{bin j} int_{bin i} g_sigma(y - f(x)) dy dx``, the
    inner integral exactly via the normal CDF, the outer by Gauss-Legendre.
    """
    if bins < 32:
        raise ContractError("lattice needs at least 32 bins")
    padding = 4.0 * sigma if padding is None else float(padding)
    if padding < 4.0 * sigma:
        raise ContractError("padding must be at least 4 sigma")
    lo, hi = spec.domain[0] - padding, spec.domain[1] + padding
    edges = np.linspace(lo, hi, bins + 1)
    t, w = legendre.leggauss(quad_points)
    half = 0.5 * (edges[1] - edges[0])
    mid = 0.5 * (edges[1:] + edges[:-1])
    xq = (mid[:, None] + half * t).ravel()
    fx = spec.eval(xq)
    cdf = ndtr((edges[:, None] - fx[None, :]) / sigma)
    mass = np.diff(cdf, axis=0).reshape(bins, bins, quad_points)
    P = mass @ (w / w.sum())
    return leading_eigenvalue(P, tol=1e-13)


# --------------------------------------------------------------------------
# comparison with the perturbative series

COMPARE_COLUMNS = (
    ["sigma", "lambda_direct", "lambda_lattice"]
    + [f"sum_K{k}" for k in range(6)]
    + [f"diff_K{k}" for k in range(6)]
    + ["lambda_polybasis"]
)


def compare_curves(
    spec: MapSpec,
    sigma_grid: Sequence[float],
    expansion: EigenExpansion,
    M: int = 30,
    bins: int = 1024,
    polybasis: bool = True,
    nystrom_kw: dict | None = None,
) -> list[dict]:
    """Direct eigenvalues against the partial sums ``sum_{k<=K} nu_2k sigma**2k``.

    One row per ``sigma``, keyed by :data:`COMPARE_COLUMNS`.  ``lambda_direct``
    is the Nystrom value; ``lambda_lattice`` is skipped (NaN) if ``bins`` is 0;
    ``lambda_polybasis`` is NaN wherever the monomial-basis eigenvalue cannot
    be certified.  At ``sigma = 0`` the direct columns hold the noiseless
    limit ``nu_0``.
    """
    grid = [float(s) for s in sigma_grid]
    if any(s < 0 for s in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ContractError("sigma grid must be non-negative and strictly ascending")
    nystrom_kw = nystrom_kw or {}
    K_max = min(5, (len(expansion.nu) - 1) // 2)
    rows = []
    for s in grid:
        row = {"sigma": s}
        if s == 0.0:
            direct = lattice = poly = float(expansion.nu[0])
        else:
            direct = nystrom_eigenvalue(spec, s, **nystrom_kw)
            lattice = lattice_eigenvalue(spec, s, bins) if bins else float("nan")
            poly = float("nan")
            if polybasis:
                try:
                    poly = leading_eigenvalue(quadrature_matrix(spec, s, M))
                except (AccuracyError, ConvergenceError):
                    pass
        row["lambda_direct"] = direct
        row["lambda_lattice"] = lattice
        for k in range(6):
            part = expansion.partial_sum(s, k) if k <= K_max else float("nan")
            row[f"sum_K{k}"] = part
            row[f"diff_K{k}"] = direct - part
        row["lambda_polybasis"] = poly
        rows.append({c: row[c] for c in COMPARE_COLUMNS})
    return rows


def curves_to_csv(rows: Sequence[dict], stream=None, header_lines: Sequence[str] = ()) -> str:
    own = stream is None
    stream = io.StringIO() if own else stream
    for line in header_lines:
        stream.write(f"# {line}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(COMPARE_COLUMNS)
    for r in rows:
        w.writerow(["" if np.isnan(r[c]) else f"{r[c]:.15g}" for c in COMPARE_COLUMNS])
    return stream.getvalue() if own else ""


def fit_power_law(sigmas, values) -> tuple[float, float]:
    """Least-squares ``log|v| = slope log sigma + log amplitude``."""
    s = np.log(np.asarray(sigmas, dtype=float))
    v = np.log(np.abs(np.asarray(values, dtype=float)))
    slope, intercept = np.polyfit(s, v, 1)
    return float(slope), float(np.exp(intercept))


def fit_fixed_power(sigmas, values, power: float) -> float:
    """Amplitude ``A`` of ``|v| ~ A sigma**power`` (least squares in log space)."""
    s = np.asarray(sigmas, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    return float(np.exp(np.mean(np.log(v) - power * np.log(s))))


@dataclass(frozen=True)
class GrowthFit:
    """``|nu_2k| ~ C k! a**k k**b`` fitted over ``ks``."""

    a: float
    b: float
    log_c: float
    ks: tuple[int, ...]
    residuals: tuple[float, ...]
    ratios: tuple[float, ...]


def asymptotic_ratio_fit(nu_even: Sequence[float]) -> GrowthFit:
    """Fit late-term growth of the sigma**2k coefficients (``k >= 1``).

    Purely descriptive.  ``ratios[i]`` is ``nu_{2k}/(k nu_{2k-2})`` for
    consecutive ``k``, which tends to ``a`` under the fitted law.
    """
    nu = np.asarray(nu_even, dtype=float)
    ks = [k for k in range(1, len(nu)) if nu[k] != 0.0]
    if len(ks) < 4:
        raise ContractError("need at least 4 nonzero coefficients to fit a growth law")
    k = np.array(ks, dtype=float)
    y = np.log(np.abs(nu[ks])) - np.array([lgamma(kk + 1) for kk in k])
    design = np.column_stack([k, np.log(k), np.ones_like(k)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    ratios = tuple(
        float(nu[kk] / (kk * nu[kk - 1])) for kk in ks if kk - 1 >= 1 and nu[kk - 1] != 0
    )
    return GrowthFit(
        a=float(np.exp(coef[0])),
        b=float(coef[1]),
        log_c=float(coef[2]),
        ks=tuple(ks),
        residuals=tuple(float(r) for r in resid),
        ratios=ratios,
    )
