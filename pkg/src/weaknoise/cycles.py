"""
Prime cycles of a map with complete binary (or n-ary) symbolic dynamics.

Itineraries are tuples of branch labels.  The canonical representative of a
prime cycle is the lexicographically smallest rotation of a primitive word.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, ConvergenceError, DomainError
from .maps import MapSpec

__all__ = [
    "PrimeCycle",
    "enumerate_prime_itineraries",
    "itinerary_str",
    "parse_itinerary",
    "locate_cycle",
    "locate_cycles",
    "cycles_to_csv",
    "cycles_from_csv",
]

Itinerary = tuple


@dataclass(frozen=True)
class PrimeCycle:
    itinerary: tuple[int, ...]
    points: tuple[float, ...]
    multiplier: float
    residual: float

    @property
    def length(self) -> int:
        return len(self.itinerary)

    @property
    def label(self) -> str:
        return itinerary_str(self.itinerary)


def itinerary_str(itinerary: Sequence[int]) -> str:
    return "".join(str(s) for s in itinerary)


def parse_itinerary(word: str) -> tuple[int, ...]:
    return tuple(int(ch) for ch in word)


def _is_canonical_prime(word: tuple) -> bool:
    n = len(word)
    for k in range(1, n):
        rot = word[k:] + word[:k]
        if rot <= word:
            # equal rotation means the word is a repeat; smaller means not minimal
            return False
    return True


def enumerate_prime_itineraries(n_max: int, alphabet: int = 2) -> list[tuple[int, ...]]:
    """All canonical primitive necklaces of length ``1..n_max``.

    Sorted by length, then lexicographically.

    >>> [itinerary_str(w) for w in enumerate_prime_itineraries(3)]
    ['0', '1', '01', '001', '011']
    """
    if not 1 <= n_max <= 24:
        raise ContractError("n_max must lie in 1..24")
    out = []
    for n in range(1, n_max + 1):
        out.extend(w for w in product(range(alphabet), repeat=n) if _is_canonical_prime(w))
    return out


def _residual(spec: MapSpec, xs: np.ndarray) -> float:
    return float(np.max(np.abs(spec.eval(xs) - np.roll(xs, -1))))


def _backward_sweep(spec: MapSpec, itinerary, x_first: float) -> np.ndarray:
    n = len(itinerary)
    xs = np.empty(n)
    y = x_first
    for i in range(n - 1, -1, -1):
        y = spec.inverse_point(itinerary[i], y)
        xs[i] = y
    return xs


def _newton_polish(spec: MapSpec, xs: np.ndarray, steps: int = 3) -> np.ndarray:
    # residual r_i = f(x_i) - x_{i+1}; cyclic bidiagonal Jacobian
    n = len(xs)
    best, best_res = xs, _residual(spec, xs)
    for _ in range(steps):
        jac = np.diag(spec.deriv(best))
        jac[np.arange(n), (np.arange(n) + 1) % n] -= 1.0
        r = spec.eval(best) - np.roll(best, -1)
        trial = best - np.linalg.solve(jac, r)
        res = _residual(spec, trial)
        if not res < best_res:
            break
        best, best_res = trial, res
    return best


def locate_cycle(
    spec: MapSpec,
    itinerary: Sequence[int],
    max_sweeps: int = 200,
    tol: float = 1e-15,
    residual_tol: float = 1e-12,
) -> PrimeCycle:
    """Find the periodic orbit with the given itinerary by backward iteration.

    Each sweep applies the inverse branches ``f_{s_n}^{-1}, ..., f_{s_1}^{-1}``
    starting from the previous first point, which contracts uniformly on a
    hyperbolic repeller.  A short Newton polish on the full cycle map follows.
    """
    itinerary = tuple(int(s) for s in itinerary)
    if not itinerary:
        raise ContractError("empty itinerary")
    if any(not 0 <= s < spec.branch_count for s in itinerary):
        raise ContractError(f"itinerary {itinerary} uses symbols outside the alphabet")
    lo, hi = spec.markov_interval(itinerary[-1])
    seed = spec.eval(0.5 * (lo + hi))
    xs = _backward_sweep(spec, itinerary, float(seed))
    for _ in range(max_sweeps):
        new = _backward_sweep(spec, itinerary, xs[0])
        delta = float(np.max(np.abs(new - xs)))
        xs = new
        if delta <= tol * max(1.0, float(np.max(np.abs(xs)))):
            break
    else:
        if _residual(spec, xs) > residual_tol:
            raise ConvergenceError(
                f"backward iteration for {itinerary_str(itinerary)} did not converge"
            )
    xs = _newton_polish(spec, xs)
    res = _residual(spec, xs)
    if res > residual_tol:
        raise ConvergenceError(
            f"cycle {itinerary_str(itinerary)} residual {res:.3g} exceeds {residual_tol:g}"
        )
    lo_d, hi_d = spec.domain
    slack = residual_tol * max(1.0, hi_d - lo_d)
    for s, x in zip(itinerary, xs):
        if not lo_d - slack <= x <= hi_d + slack or spec.symbol(x) != s:
            raise DomainError(
                f"cycle {itinerary_str(itinerary)}: point {x!r} left partition element {s}"
            )
    multiplier = float(np.prod(spec.deriv(xs)))
    return PrimeCycle(itinerary, tuple(float(x) for x in xs), multiplier, res)


def locate_cycles(
    spec: MapSpec,
    itineraries: Iterable[Sequence[int]],
    cache: dict | None = None,
    workers: int | None = None,
    **kwargs,
) -> list[PrimeCycle]:
    """Locate many cycles, optionally in parallel; output follows input order."""
    itineraries = [tuple(w) for w in itineraries]
    cache = {} if cache is None else cache
    todo = [w for w in itineraries if (spec.name, w) not in cache]
    if workers and workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = list(pool.map(lambda w: locate_cycle(spec, w, **kwargs), todo))
    else:
        found = [locate_cycle(spec, w, **kwargs) for w in todo]
    for w, c in zip(todo, found):
        cache[(spec.name, w)] = c
    return [cache[(spec.name, w)] for w in itineraries]


CSV_COLUMNS = ("itinerary", "point_index", "x", "multiplier", "residual")


def cycles_to_csv(cycles: Iterable[PrimeCycle], stream=None) -> str:
    """Write one row per cycle point; returns the text if ``stream`` is None."""
    own = stream is None
    stream = io.StringIO() if own else stream
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cycles:
        for i, x in enumerate(c.points):
            w.writerow((c.label, i, f"{x:.17g}", f"{c.multiplier:.17g}", f"{c.residual:.3e}"))
    return stream.getvalue() if own else ""


def cycles_from_csv(stream) -> list[PrimeCycle]:
    rows = [r for r in csv.reader(line for line in stream if not line.startswith("#"))]
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ContractError(f"cycle table must start with header {CSV_COLUMNS}")
    grouped: dict[str, list] = {}
    for label, idx, x, mult, res in rows[1:]:
        grouped.setdefault(label, []).append((int(idx), float(x), float(mult), float(res)))
    out = []
    for label, pts in grouped.items():
        pts.sort()
        out.append(
            PrimeCycle(parse_itinerary(label), tuple(p[1] for p in pts), pts[0][2], pts[0][3])
        )
    return out
