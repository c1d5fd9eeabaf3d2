"""Univariate polynomials in the monomial basis and certified extremum search."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

DEFAULT_ROOT_TOL = 1e-12
MAX_BISECTION_STEPS = 200


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial ``sum(c[k] * x**k)``, constant term first."""

    coefficients: tuple[float, ...] = ()

    def __init__(self, coefficients: Sequence[float] = ()):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in coefficients))

    @property
    def degree(self) -> int:
        """Nominal degree (length - 1); the zero polynomial has degree -1."""
        return len(self.coefficients) - 1

    def canonical(self) -> Polynomial:
        c = list(self.coefficients)
        while c and c[-1] == 0.0:
            c.pop()
        return Polynomial(c)

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.coefficients)

    def __call__(self, x):
        return evaluate(self, x)

    def __sub__(self, other: Polynomial) -> Polynomial:
        return subtract(self, other)

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coefficients)!r})"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


class IdenticallyZero:
    """Returned by :func:`roots_in_interval` for the zero polynomial."""

    def __repr__(self) -> str:
        return "IDENTICALLY_ZERO"


IDENTICALLY_ZERO = IdenticallyZero()


def evaluate(p: Polynomial, x):
    """Horner evaluation; works for floats and numpy arrays alike."""
    acc = 0.0 * x
    for c in reversed(p.coefficients):
        acc = acc * x + c
    return acc


def subtract(p: Polynomial, q: Polynomial) -> Polynomial:
    a, b = p.coefficients, q.coefficients
    n = max(len(a), len(b))
    a = a + (0.0,) * (n - len(a))
    b = b + (0.0,) * (n - len(b))
    return Polynomial([x - y for x, y in zip(a, b)]).canonical()


def derivative(p: Polynomial) -> Polynomial:
    return Polynomial([k * c for k, c in enumerate(p.coefficients)][1:]).canonical()


def _dedupe(xs: list[float], tol: float) -> list[float]:
    out: list[float] = []
    for x in sorted(xs):
        if not out or x - out[-1] > tol:
            out.append(x)
    return out


def _bisect(p: Polynomial, a: float, b: float, fa: float) -> float:
    for _ in range(MAX_BISECTION_STEPS):
        m = 0.5 * (a + b)
        if not a < m < b:
            break
        fm = evaluate(p, m)
        if fm == 0.0:
            return m
        if (fm < 0.0) == (fa < 0.0):
            a, fa = m, fm
        else:
            b = m
    return a if abs(fa) <= abs(evaluate(p, b)) else b


def _quadratic_roots(c0: float, c1: float, c2: float) -> list[float]:
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        # near-tangent case: report the vertex so a double root is not lost to rounding
        if -disc <= 1e-14 * max(c1 * c1, abs(4.0 * c2 * c0)):
            return [-c1 / (2.0 * c2)]
        return []
    sq = math.sqrt(disc)
    q = -0.5 * (c1 + math.copysign(sq, c1))
    if q == 0.0:
        return [0.0]
    return [q / c2, c0 / q]


def roots_in_interval(p: Polynomial, iv: Interval, tol: float = DEFAULT_ROOT_TOL):
    """Real roots of ``p`` inside ``iv``, sorted and deduplicated.

    Degrees up to two use closed forms. Higher degrees recurse on the
    derivative: its roots cut ``iv`` into monotone pieces, each holding at
    most one root, which is then bracketed and bisected. Returns
    :data:`IDENTICALLY_ZERO` for the zero polynomial.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = p.canonical()
    if p.is_zero():
        return IDENTICALLY_ZERO
    # roots are scale invariant; normalizing keeps the quadratic discriminant from underflowing
    top = max(abs(v) for v in p.coefficients)
    p = Polynomial([v / top for v in p.coefficients]).canonical()
    c = p.coefficients
    d = len(c) - 1
    if d == 0:
        return []
    if d == 1:
        cand = [-c[0] / c[1]]
    elif d == 2:
        cand = _quadratic_roots(c[0], c[1], c[2])
    else:
        crit = roots_in_interval(derivative(p), iv, tol)
        breaks = [iv.lo] + [x for x in crit if iv.lo < x < iv.hi] + [iv.hi]
        scale = max(abs(v) for v in c)
        cand = []
        for x in breaks:
            if abs(evaluate(p, x)) <= scale * tol:
                cand.append(x)
        for a, b in zip(breaks[:-1], breaks[1:]):
            fa, fb = evaluate(p, a), evaluate(p, b)
            if fa == 0.0 or fb == 0.0 or (fa < 0.0) == (fb < 0.0):
                continue
            cand.append(_bisect(p, a, b, fa))
    inside = [x for x in cand if iv.lo - tol <= x <= iv.hi + tol]
    inside = [min(max(x, iv.lo), iv.hi) for x in inside]
    return _dedupe(inside, tol)


def sup_abs_on_interval(p: Polynomial, iv: Interval, tol: float = DEFAULT_ROOT_TOL) -> tuple[float, float]:
    """Return ``(max |p(x)|, argmax)`` over ``iv`` from endpoints and critical points."""
    if iv.lo == iv.hi:
        raise ValueError("sup over a degenerate interval")
    p = p.canonical()
    if p.is_zero():
        return 0.0, iv.lo
    crit = roots_in_interval(derivative(p), iv, tol)
    cand = [iv.lo, iv.hi]
    if crit is not IDENTICALLY_ZERO:
        cand.extend(crit)
    best_x, best = iv.lo, -1.0
    for x in cand:
        v = abs(evaluate(p, x))
        if v > best:
            best, best_x = v, x
    return best, best_x
