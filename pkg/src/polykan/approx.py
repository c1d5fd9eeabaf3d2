"""Polynomial fits over merged regions and the certified mergability test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .poly import Interval, Polynomial, derivative, evaluate, roots_in_interval, IDENTICALLY_ZERO, subtract
from .spline import PiecewiseSpline, chebyshev_points, monomial_fit, restrict, scaled_to_monomial

CERT_SLACK = 1e-9
LEAST_SQUARES = "least_squares_chebyshev_grid"
REMEZ = "remez_minimax"
REMEZ_REL_TOL = 1e-6


@dataclass(frozen=True)
class FitMethod:
    kind: str = LEAST_SQUARES
    samples_per_piece: Optional[int] = None  # None -> 8 * (degree + 1)
    remez_iterations: int = 30
    pin_endpoints: bool = False

    def __post_init__(self):
        if self.kind not in (LEAST_SQUARES, REMEZ):
            raise ValueError(f"unknown fit method {self.kind!r}")
        if self.samples_per_piece is not None and self.samples_per_piece < 1:
            raise ValueError("samples_per_piece must be positive")
        if self.remez_iterations < 1:
            raise ValueError("remez_iterations must be >= 1")

    def samples_for(self, degree: int) -> int:
        n = self.samples_per_piece if self.samples_per_piece is not None else 8 * (degree + 1)
        if n < degree + 1:
            raise ValueError(f"samples_per_piece={n} is below degree + 1 = {degree + 1}")
        return n


@dataclass(frozen=True)
class MergeCertificate:
    merged_poly: Polynomial
    certified_error: float
    witness_x: float


def _sub_spline(s: PiecewiseSpline, iv: Interval) -> PiecewiseSpline:
    if iv.lo == s.knots[0] and iv.hi == s.knots[-1]:
        return s
    return restrict(s, iv)


def _residual_extrema(s: PiecewiseSpline, p: Polynomial):
    """Candidate extrema of ``s - p`` as ``(x, residual, piece)`` triples, left to right.

    Every region contributes both endpoints (one-sided values at knots) and the
    interior critical points of its residual polynomial.
    """
    out = []
    for i, q in enumerate(s.pieces):
        lo, hi = s.knots[i], s.knots[i + 1]
        r = subtract(q, p)
        xs = [lo]
        crit = roots_in_interval(derivative(r), Interval(lo, hi))
        if crit is not IDENTICALLY_ZERO:
            xs.extend(x for x in crit if lo < x < hi)
        xs.append(hi)
        out.extend((x, evaluate(r, x), i) for x in xs)
    return out


def certified_sup_error(s: PiecewiseSpline, p: Polynomial, iv: Interval | None = None) -> tuple[float, float]:
    """Exact ``sup |s - p|`` over a knot-aligned interval, with a witness point.

    The witness is chosen so that ``|s(w) - p(w)|`` reproduces the value under
    the half-open evaluation convention: a maximum reached at the right end of
    an inner region is reported one ulp to the left of the knot.
    """
    sub = s if iv is None else _sub_spline(s, iv)
    best, best_x, best_piece = -1.0, sub.knots[0], 0
    for x, r, i in _residual_extrema(sub, p):
        if abs(r) > best:
            best, best_x, best_piece = abs(r), x, i
    if best_piece < sub.num_pieces - 1 and best_x == sub.knots[best_piece + 1]:
        best_x = math.nextafter(best_x, -math.inf)
    return best, best_x


def _sample_spline(s: PiecewiseSpline, per_piece: int) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    for i, q in enumerate(s.pieces):
        pts = chebyshev_points(s.knots[i], s.knots[i + 1], per_piece)
        xs.append(pts)
        ys.append(evaluate(q, pts))
    return np.concatenate(xs), np.concatenate(ys)


def _least_squares(s: PiecewiseSpline, degree: int, method: FitMethod) -> Polynomial:
    lo, hi = s.knots[0], s.knots[-1]
    xs, ys = _sample_spline(s, method.samples_for(degree))
    if not method.pin_endpoints:
        return monomial_fit(xs, ys, degree, lo, hi)
    ya = evaluate(s.pieces[0], lo)
    yb = evaluate(s.pieces[-1], hi)
    if degree == 0:
        return Polynomial([0.5 * (ya + yb)]).canonical()
    # p(u) = line through the pinned values + (1 - u^2) * q(u), u in [-1, 1]
    u = (2.0 * xs - (lo + hi)) / (hi - lo)
    line = 0.5 * (ya + yb) + 0.5 * (yb - ya) * u
    bubble = 1.0 - u * u
    if degree == 1:
        coef = np.array([0.5 * (ya + yb), 0.5 * (yb - ya)])
    else:
        A = np.vander(u, degree - 1, increasing=True) * bubble[:, None]
        q, r = np.linalg.qr(A)
        qc = np.linalg.solve(r, q.T @ (ys - line))
        coef = np.zeros(degree + 1)
        coef[0] += 0.5 * (ya + yb)
        coef[1] += 0.5 * (yb - ya)
        coef[: degree - 1] += qc
        coef[2: degree + 1] -= qc
    return scaled_to_monomial(coef, lo, hi)


def _alternating_reference(extrema, n: int):
    """Pick ``n`` consecutive sign-alternating extrema containing the global max."""
    groups = []
    for x, r, i in extrema:
        if r == 0.0:
            continue
        if groups and (groups[-1][1] > 0) == (r > 0):
            if abs(r) > abs(groups[-1][1]):
                groups[-1] = (x, r, i)
        else:
            groups.append((x, r, i))
    if len(groups) < n:
        return None
    peak = max(range(len(groups)), key=lambda k: abs(groups[k][1]))
    lo, hi = 0, len(groups)
    while hi - lo > n:
        if peak == lo or (peak != hi - 1 and abs(groups[hi - 1][1]) < abs(groups[lo][1])):
            hi -= 1
        else:
            lo += 1
    return groups[lo:hi]


def _remez(s: PiecewiseSpline, degree: int, method: FitMethod) -> Polynomial:
    lo, hi = s.knots[0], s.knots[-1]
    p = _least_squares(s, degree, FitMethod(samples_per_piece=method.samples_per_piece))
    best, best_err = p, certified_sup_error(s, p)[0]
    n = degree + 2
    for _ in range(method.remez_iterations):
        ref = _alternating_reference(_residual_extrema(s, p), n)
        if ref is None:
            break
        xr = np.array([x for x, _, _ in ref])
        fr = np.array([evaluate(s.pieces[i], x) for x, _, i in ref])
        u = (2.0 * xr - (lo + hi)) / (hi - lo)
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        A = np.column_stack([np.vander(u, degree + 1, increasing=True), signs])
        try:
            sol = np.linalg.solve(A, fr)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(sol)):
            break
        level = abs(sol[-1])
        p = scaled_to_monomial(sol[:-1], lo, hi)
        err = certified_sup_error(s, p)[0]
        if err < best_err:
            best, best_err = p, err
        if err - level <= REMEZ_REL_TOL * err:
            break
    return best


def fit_poly(s: PiecewiseSpline, iv: Interval | None, degree: int, method: FitMethod = FitMethod()) -> Polynomial:
    """Single polynomial of the given degree approximating ``s`` on ``iv``."""
    sub = s if iv is None else _sub_spline(s, iv)
    if method.kind == REMEZ:
        return _remez(sub, degree, method)
    return _least_squares(sub, degree, method)


def try_merge(
    s: PiecewiseSpline,
    iv: Interval | None,
    degree: int,
    eps: float,
    method: FitMethod = FitMethod(),
) -> Optional[MergeCertificate]:
    """Certificate that ``s`` restricted to ``iv`` is within ``eps`` of one polynomial, else None."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    sub = s if iv is None else _sub_spline(s, iv)
    p = fit_poly(sub, None, degree, method)
    err, witness = certified_sup_error(sub, p)
    if err + CERT_SLACK <= eps:
        return MergeCertificate(p, err, witness)
    return None


def spline_gap(s: PiecewiseSpline, other: PiecewiseSpline) -> tuple[float, float]:
    """Exact ``sup |s - other|`` over the common domain of two piecewise splines."""
    lo = max(s.knots[0], other.knots[0])
    hi = min(s.knots[-1], other.knots[-1])
    if not lo < hi:
        raise ValueError("splines have no common domain")
    cuts = sorted({lo, hi} | {t for t in s.knots + other.knots if lo < t < hi})
    best, best_x = 0.0, lo
    for a, b in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a + b)
        r = subtract(s.pieces[s.piece_index(mid)], other.pieces[other.piece_index(mid)])
        xs = [a, b]
        crit = roots_in_interval(derivative(r), Interval(a, b))
        if crit is not IDENTICALLY_ZERO:
            xs.extend(crit)
        for x in xs:
            v = abs(evaluate(r, x))
            if v > best:
                best, best_x = v, x
    return best, best_x
