"""Piecewise-polynomial splines and their construction from clamped B-splines."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial as NpPolynomial

from .poly import Interval, Polynomial, derivative, evaluate, subtract


class DomainError(ValueError):
    """Evaluation point outside a spline's domain."""


@dataclass(frozen=True)
class PiecewiseSpline:
    """Knots ``t_0 < ... < t_k`` and one polynomial per region ``[t_{i-1}, t_i]``.

    Interior knots belong to the region on their right; the last region is
    closed.
    """

    knots: tuple[float, ...]
    pieces: tuple[Polynomial, ...]
    degree: int

    def __init__(self, knots: Sequence[float], pieces: Sequence, degree: int | None = None):
        knots = tuple(float(t) for t in knots)
        pieces = tuple(p if isinstance(p, Polynomial) else Polynomial(p) for p in pieces)
        if len(knots) < 2:
            raise ValueError("a spline needs at least two knots")
        if len(pieces) != len(knots) - 1:
            raise ValueError(f"{len(knots)} knots need {len(knots) - 1} pieces, got {len(pieces)}")
        if any(b <= a for a, b in zip(knots[:-1], knots[1:])):
            raise ValueError("knots must be strictly increasing")
        if degree is None:
            degree = max(0, max(p.canonical().degree for p in pieces))
        if degree < 0:
            raise ValueError("degree must be non-negative")
        for i, p in enumerate(pieces):
            if p.canonical().degree > degree:
                raise ValueError(f"piece {i} exceeds declared degree {degree}")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "degree", int(degree))

    @property
    def num_pieces(self) -> int:
        return len(self.pieces)

    @property
    def domain(self) -> Interval:
        return Interval(self.knots[0], self.knots[-1])

    def region(self, i: int) -> Interval:
        return Interval(self.knots[i], self.knots[i + 1])

    def piece_index(self, x: float) -> int:
        return min(bisect.bisect_right(self.knots, x) - 1, len(self.pieces) - 1)

    def piece_indices(self, xs: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.knots, xs, side="right") - 1
        return np.clip(idx, 0, len(self.pieces) - 1)

    def __call__(self, x):
        if np.ndim(x) == 0:
            return eval_spline(self, float(x))
        return eval_spline_many(self, np.asarray(x, dtype=float))


def eval_spline(s: PiecewiseSpline, x: float) -> float:
    if not s.knots[0] <= x <= s.knots[-1]:
        raise DomainError(f"x={x!r} outside [{s.knots[0]}, {s.knots[-1]}]")
    return evaluate(s.pieces[s.piece_index(x)], x)


def eval_spline_many(s: PiecewiseSpline, xs: np.ndarray, extrapolate: bool = False) -> np.ndarray:
    """Vectorized evaluation. With ``extrapolate`` the edge pieces extend past the domain."""
    xs = np.asarray(xs, dtype=float)
    if not extrapolate and xs.size and (xs.min() < s.knots[0] or xs.max() > s.knots[-1]):
        raise DomainError(f"points outside [{s.knots[0]}, {s.knots[-1]}]")
    idx = s.piece_indices(xs)
    out = np.empty_like(xs)
    for i, p in enumerate(s.pieces):
        mask = idx == i
        if mask.any():
            out[mask] = evaluate(p, xs[mask])
    return out


def restrict(s: PiecewiseSpline, iv: Interval) -> PiecewiseSpline:
    """Sub-spline on a knot-aligned interval."""
    try:
        a = s.knots.index(iv.lo)
        b = s.knots.index(iv.hi)
    except ValueError:
        raise ValueError(f"[{iv.lo}, {iv.hi}] is not aligned to the spline's knots") from None
    if b <= a:
        raise ValueError("restriction interval must span at least one region")
    return PiecewiseSpline(s.knots[a:b + 1], s.pieces[a:b], s.degree)


def continuity_defect(s: PiecewiseSpline, order: int) -> float:
    """Largest jump of derivatives ``0..order`` across the interior knots."""
    if order > s.degree:
        raise ValueError(f"order {order} exceeds spline degree {s.degree}")
    worst = 0.0
    for m in range(1, len(s.pieces)):
        jump = subtract(s.pieces[m], s.pieces[m - 1])
        t = s.knots[m]
        for _ in range(order + 1):
            worst = max(worst, abs(evaluate(jump, t)))
            jump = derivative(jump)
    return worst


# -- B-spline conversion -------------------------------------------------------


@dataclass(frozen=True)
class BsplineDescriptor:
    knot_vector: tuple[float, ...]
    control_points: tuple[float, ...]
    degree: int

    def __init__(self, knot_vector: Sequence[float], control_points: Sequence[float], degree: int):
        object.__setattr__(self, "knot_vector", tuple(float(t) for t in knot_vector))
        object.__setattr__(self, "control_points", tuple(float(c) for c in control_points))
        object.__setattr__(self, "degree", int(degree))
        self.validate()

    def validate(self) -> None:
        t, d = self.knot_vector, self.degree
        if d < 0:
            raise ValueError("degree must be non-negative")
        if len(self.control_points) != len(t) - d - 1:
            raise ValueError(
                f"expected {len(t) - d - 1} control points for {len(t)} knots at degree {d}, "
                f"got {len(self.control_points)}"
            )
        if len(self.control_points) < 1:
            raise ValueError("no control points")
        if any(b < a for a, b in zip(t[:-1], t[1:])):
            raise ValueError("knot vector must be nondecreasing")
        if len(set(t[:d + 1])) != 1 or len(set(t[-(d + 1):])) != 1:
            raise ValueError(f"knot vector must be clamped with multiplicity {d + 1} at both ends")
        if not t[d] < t[-d - 1]:
            raise ValueError("B-spline has an empty domain")
        for v in set(t[d + 1:-d - 1]):
            if t.count(v) > d + 1:
                raise ValueError(f"interior knot {v} has multiplicity above {d + 1}")

    @property
    def domain(self) -> Interval:
        return Interval(self.knot_vector[self.degree], self.knot_vector[-self.degree - 1])


def de_boor(b: BsplineDescriptor, x: float, span: int | None = None) -> float:
    """Evaluate the B-spline at ``x`` with de Boor's recurrence.

    ``span`` is the index ``r`` with ``t[r] <= x < t[r+1]``; it is searched for
    when omitted (the right end of the domain maps to the last non-empty span).
    """
    t, c, p = b.knot_vector, b.control_points, b.degree
    if span is None:
        n = len(c)
        span = bisect.bisect_right(t, x) - 1
        span = min(max(span, p), n - 1)
        while t[span] == t[span + 1] and span > p:
            span -= 1
    d = [c[j + span - p] for j in range(p + 1)]
    for r in range(1, p + 1):
        for j in range(p, r - 1, -1):
            lo = t[j + span - p]
            hi = t[j + 1 + span - r]
            alpha = (x - lo) / (hi - lo)
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[p]


def chebyshev_points(lo: float, hi: float, n: int) -> np.ndarray:
    """``n`` Chebyshev points of the first kind mapped into ``(lo, hi)``, ascending."""
    k = np.arange(n)
    nodes = -np.cos((2 * k + 1) * np.pi / (2 * n))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes


def monomial_fit(xs: np.ndarray, ys: np.ndarray, degree: int, lo: float, hi: float) -> Polynomial:
    """Least-squares polynomial fit, solved by QR in the variable scaled to [-1, 1].

    The result is converted back to monomial coefficients in ``x``.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(np.unique(xs)) < degree + 1:
        raise ValueError("rank-deficient fit: fewer distinct samples than coefficients")
    u = (2.0 * xs - (lo + hi)) / (hi - lo)
    A = np.vander(u, degree + 1, increasing=True)
    q, r = np.linalg.qr(A)
    coef = np.linalg.solve(r, q.T @ ys)
    return scaled_to_monomial(coef, lo, hi)


def scaled_to_monomial(coef, lo: float, hi: float) -> Polynomial:
    mono = NpPolynomial(coef, domain=[lo, hi], window=[-1.0, 1.0]).convert().coef
    mono = mono[: len(coef)]
    return Polynomial(np.pad(mono, (0, len(coef) - len(mono))).tolist()).canonical()


def from_bspline(b: BsplineDescriptor) -> PiecewiseSpline:
    """Exact piecewise-polynomial form of a clamped B-spline."""
    b.validate()
    t, d = b.knot_vector, b.degree
    knots: list[float] = []
    pieces: list[Polynomial] = []
    for span in range(d, len(b.control_points)):
        lo, hi = t[span], t[span + 1]
        if hi <= lo:
            continue
        xs = chebyshev_points(lo, hi, d + 1)
        ys = np.array([de_boor(b, x, span) for x in xs])
        pieces.append(monomial_fit(xs, ys, d, lo, hi))
        if not knots:
            knots.append(lo)
        knots.append(hi)
    return PiecewiseSpline(knots, pieces, d)


def clamped_knot_vector(breakpoints: Sequence[float], degree: int) -> list[float]:
    """Knot vector with simple interior knots and ``degree + 1`` fold ends."""
    bp = [float(x) for x in breakpoints]
    return [bp[0]] * (degree + 1) + bp[1:-1] + [bp[-1]] * (degree + 1)
