"""
One-dimensional expanding maps with a finite Markov partition.

A :class:`MapSpec` bundles the forward map, its derivative, the monotone
branch intervals that assign symbols to points, and the inverse branches both
pointwise and as jets about an arbitrary image point.

Built-in maps
-------------
:func:`quartic_map`
    ``f(x) = 20 (1/16 - (1/2 - x)**4)`` on ``[0, 1]`` with closed-form inverse
    branches ``1/2 -+ (1/16 - y/20)**(1/4)``.
:func:`linear_map`
    ``f(x) = Lambda x``, a single expanding branch.
:func:`polynomial_map`
    arbitrary polynomial given by coefficients and branch breakpoints; the
    inverse jets are obtained by series reversion of the forward expansion.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from .errors import ContractError, DomainError, SingularityError
from .series import Jet, jet_fractional_power, jet_invert

__all__ = [
    "MapSpec",
    "quartic_map",
    "linear_map",
    "polynomial_map",
    "branch_inverse_jet",
    "check_hyperbolic",
]

# a radicand below this is treated as sitting on the quartic's branch point
_BRANCH_POINT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MapSpec:
    """Immutable description of a piecewise-monotone analytic map.

    Attributes
    ----------
    name : str
        Identifier; used as cache key together with itineraries.
    branch_count : int
    domain : (float, float)
        The interval carrying the repeller.
    breakpoints : tuple of float
        Interior boundaries of the monotone branches, ascending.  A point on a
        boundary belongs to the branch on its right.
    eval, deriv : callable
        ``x -> f(x)`` and ``x -> f'(x)``; both accept numpy arrays.
    inverse_point : callable
        ``(branch, y) -> x`` with ``f(x) = y`` on ``branch``.
    inverse_jet : callable
        ``(branch, y_center, order) -> Jet`` of
        ``y' -> f^{-1}(y_center + y') - f^{-1}(y_center)``.
    forward_jet : callable
        ``(x_center, order) -> Jet`` of ``x' -> f(x_center + x') - f(x_center)``.
    basis_center : float
        Expansion point of the monomial basis used by the direct solver.
    """

    name: str
    branch_count: int
    domain: tuple[float, float]
    breakpoints: tuple[float, ...]
    eval: Callable = field(repr=False)
    deriv: Callable = field(repr=False)
    inverse_point: Callable = field(repr=False)
    inverse_jet: Callable = field(repr=False)
    forward_jet: Callable = field(repr=False)
    basis_center: float = 0.0

    def symbol(self, x: float) -> int:
        """Branch label of ``x`` (ties go to the right-hand branch)."""
        return int(np.searchsorted(self.breakpoints, x, side="right"))

    def branch_interval(self, branch: int) -> tuple[float, float]:
        edges = (self.domain[0], *self.breakpoints, self.domain[1])
        return edges[branch], edges[branch + 1]

    def markov_interval(self, branch: int) -> tuple[float, float]:
        """Preimage of the domain under ``branch``; the repeller lives here."""
        lo, hi = self.domain
        a = self.inverse_point(branch, lo)
        b = self.inverse_point(branch, hi)
        return (a, b) if a <= b else (b, a)

    def branch_sign(self, branch: int) -> float:
        lo, hi = self.markov_interval(branch)
        return float(np.sign(self.deriv(0.5 * (lo + hi))))


def check_hyperbolic(spec: MapSpec, samples: int = 1000, margin: float = 1e-9) -> float:
    """Return ``min |f'|`` over the Markov intervals; raise if it is not ``> 1``."""
    worst = np.inf
    for b in range(spec.branch_count):
        lo, hi = spec.markov_interval(b)
        xs = np.linspace(lo, hi, samples)
        worst = min(worst, float(np.min(np.abs(spec.deriv(xs)))))
    if not worst > 1.0 + margin:
        raise ContractError(f"map {spec.name!r} is not expanding: min |f'| = {worst:.6g}")
    return worst


def branch_inverse_jet(spec: MapSpec, branch: int, y_center: float, order: int) -> Jet:
    """Jet of ``y' -> f_b^{-1}(y_center + y') - f_b^{-1}(y_center)``."""
    if not 0 <= branch < spec.branch_count:
        raise ContractError(f"branch {branch} not in alphabet of {spec.name!r}")
    if order < 1:
        raise ContractError("inverse jet needs order >= 1")
    return spec.inverse_jet(branch, y_center, order)


# --------------------------------------------------------------------------
# quartic map

_Q_TOP = 1.25  # f(1/2), the common branch point of both inverse branches


def _quartic_radicand(y):
    return 1.0 / 16.0 - np.asarray(y, dtype=float) / 20.0


def _quartic_inverse_point(branch: int, y: float) -> float:
    r = float(_quartic_radicand(y))
    if r < -_BRANCH_POINT_TOL:
        raise DomainError(f"y = {y!r} lies above the branch image (y <= {_Q_TOP})")
    root = max(r, 0.0) ** 0.25
    return 0.5 - root if branch == 0 else 0.5 + root


def _quartic_inverse_jet(branch: int, y_center: float, order: int) -> Jet:
    r = float(_quartic_radicand(y_center))
    if r < -_BRANCH_POINT_TOL:
        raise DomainError(f"y = {y_center!r} lies above the branch image (y <= {_Q_TOP})")
    if r < _BRANCH_POINT_TOL:
        raise SingularityError(f"y = {y_center!r} sits on the inverse branch point")
    radicand = np.zeros(order + 1)
    radicand[0] = r
    radicand[1] = -1.0 / 20.0
    root = jet_fractional_power(Jet(radicand), 0.25).coeffs.copy()
    root[0] = 0.0
    return Jet(-root if branch == 0 else root)


def _poly_forward_jet(coeffs: np.ndarray) -> Callable:
    def forward_jet(x_center: float, order: int) -> Jet:
        # Taylor coefficients about x_center by repeated differentiation
        out = np.zeros(order + 1)
        c = np.asarray(coeffs, dtype=float)
        fact = 1.0
        for l in range(1, order + 1):
            c = P.polyder(c) if len(c) > 1 else np.zeros(1)
            fact *= l
            out[l] = P.polyval(x_center, c) / fact
        return Jet(out)

    return forward_jet


def quartic_map() -> MapSpec:
    """The quartic repeller ``f(x) = 20 (1/16 - (1/2 - x)**4)``."""
    coeffs = 20.0 * P.polysub([1.0 / 16.0], P.polypow([0.5, -1.0], 4))
    return MapSpec(
        name="quartic",
        branch_count=2,
        domain=(0.0, 1.0),
        breakpoints=(0.5,),
        eval=lambda x: 20.0 * (1.0 / 16.0 - (0.5 - np.asarray(x, dtype=float)) ** 4),
        deriv=lambda x: 80.0 * (0.5 - np.asarray(x, dtype=float)) ** 3,
        inverse_point=_quartic_inverse_point,
        inverse_jet=_quartic_inverse_jet,
        forward_jet=_poly_forward_jet(coeffs),
        basis_center=0.5,
    )


# --------------------------------------------------------------------------
# linear map


def linear_map(slope: float) -> MapSpec:
    """Single-branch repeller ``f(x) = slope * x`` with ``|slope| > 1``."""
    slope = float(slope)
    if not abs(slope) > 1.0:
        raise ContractError(f"linear map with slope {slope} is not expanding")

    def inverse_jet(branch, y_center, order):
        c = np.zeros(order + 1)
        c[1] = 1.0 / slope
        return Jet(c)

    def forward_jet(x_center, order):
        c = np.zeros(order + 1)
        c[1] = slope
        return Jet(c)

    return MapSpec(
        name=f"linear({slope:g})",
        branch_count=1,
        domain=(-1.0, 1.0),
        breakpoints=(),
        eval=lambda x: slope * np.asarray(x, dtype=float),
        deriv=lambda x: np.full_like(np.asarray(x, dtype=float), slope),
        inverse_point=lambda branch, y: float(y) / slope,
        inverse_jet=inverse_jet,
        forward_jet=forward_jet,
        basis_center=0.0,
    )


# --------------------------------------------------------------------------
# user-defined polynomial maps


def polynomial_map(
    coefficients: Sequence[float],
    breakpoints: Sequence[float],
    domain: tuple[float, float] = (0.0, 1.0),
    name: str = "polynomial",
    basis_center: float | None = None,
) -> MapSpec:
    """Map given by ascending polynomial coefficients and branch breakpoints.

    Each branch must be strictly monotone on its interval.  Inverse points are
    found by bracketing; inverse jets by reversion of the forward expansion.
    """
    coeffs = np.asarray(coefficients, dtype=float)
    if coeffs.ndim != 1 or len(coeffs) < 2:
        raise ContractError("polynomial map needs at least a linear term")
    breakpoints = tuple(float(b) for b in breakpoints)
    lo, hi = float(domain[0]), float(domain[1])
    edges = (lo, *breakpoints, hi)
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ContractError("breakpoints must be ascending and inside the domain")
    dcoeffs = P.polyder(coeffs)
    f = lambda x: P.polyval(np.asarray(x, dtype=float), coeffs)
    df = lambda x: P.polyval(np.asarray(x, dtype=float), dcoeffs)
    forward_jet = _poly_forward_jet(coeffs)

    # the inverse may have to reach slightly outside the branch interval
    width = hi - lo

    def inverse_point(branch: int, y: float) -> float:
        a, b = edges[branch], edges[branch + 1]
        # extend outward away from the interior breakpoints only
        a_ext = a - width if branch == 0 else a
        b_ext = b + width if branch == len(edges) - 2 else b
        g = lambda x: float(f(x)) - y
        ga, gb = g(a_ext), g(b_ext)
        if ga * gb > 0:
            raise DomainError(f"y = {y!r} is not in the image of branch {branch}")
        if ga == 0.0:
            return a_ext
        if gb == 0.0:
            return b_ext
        return brentq(g, a_ext, b_ext, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def inverse_jet(branch: int, y_center: float, order: int) -> Jet:
        x0 = inverse_point(branch, y_center)
        fj = forward_jet(x0, order)
        if abs(fj[1]) < 1e-12:
            raise SingularityError(f"vanishing derivative at preimage x = {x0!r}")
        return jet_invert(fj)

    return MapSpec(
        name=name,
        branch_count=len(edges) - 1,
        domain=(lo, hi),
        breakpoints=breakpoints,
        eval=f,
        deriv=df,
        inverse_point=inverse_point,
        inverse_jet=inverse_jet,
        forward_jet=forward_jet,
        basis_center=0.5 * (lo + hi) if basis_center is None else float(basis_center),
    )
