import numpy as np
import pytest

from polykan.approx import FitMethod, REMEZ
from polykan.compressor import compress_spline
from polykan.poly import Interval, Polynomial
from polykan.spline import (
    BsplineDescriptor,
    DomainError,
    PiecewiseSpline,
    continuity_defect,
    de_boor,
    eval_spline,
    from_bspline,
    restrict,
)

from conftest import random_bspline

TENT = PiecewiseSpline([0, 1, 2], [[0, 1], [2, -1]], 1)


def test_eval_examples():
    assert eval_spline(TENT, 0.5) == 0.5
    assert eval_spline(TENT, 1.0) == 1.0
    assert eval_spline(TENT, 2.0) == 0.0


def test_eval_uses_right_piece_at_interior_knot(step):
    assert eval_spline(step, 1.0) == 1.0
    assert eval_spline(step, np.nextafter(1.0, 0.0)) == 0.0
    assert step(np.array([0.0, 1.0, 2.0])).tolist() == [0.0, 1.0, 1.0]


def test_eval_out_of_domain():
    with pytest.raises(DomainError):
        eval_spline(TENT, 2.5)
    with pytest.raises(DomainError):
        TENT(np.array([-0.1, 0.5]))


def test_constructor_rejects_bad_knots():
    with pytest.raises(ValueError):
        PiecewiseSpline([0, 1, 1, 2], [[0], [0], [0]], 0)
    with pytest.raises(ValueError):
        PiecewiseSpline([0, 1], [[0], [1]], 0)
    with pytest.raises(ValueError):
        PiecewiseSpline([0, 1], [[0, 0, 1]], 1)


def test_from_bspline_linear():
    s = from_bspline(BsplineDescriptor([0, 0, 1, 1], [0, 1], 1))
    assert s.knots == (0.0, 1.0)
    assert np.allclose(s.pieces[0].coefficients, [0, 1], atol=1e-15)


def test_from_bspline_step():
    s = from_bspline(BsplineDescriptor([0, 0.5, 1], [2, 5], 0))
    assert s.knots == (0.0, 0.5, 1.0)
    assert [p.coefficients for p in s.pieces] == [(2.0,), (5.0,)]


def test_from_bspline_skips_empty_spans():
    # double interior knot in a quadratic: spans of zero width must not become regions
    s = from_bspline(BsplineDescriptor([0, 0, 0, 0.5, 0.5, 1, 1, 1], [1, 2, 3, 4, 5], 2))
    assert s.knots == (0.0, 0.5, 1.0)


@pytest.mark.parametrize(
    "kv, ctrl, deg",
    [
        ([0, 0, 1], [1, 2], 1),  # not clamped on the right
        ([0, 0, 1, 1], [1, 2, 3], 1),  # wrong control count
        ([0, 0, 0, 0], [1, 2], 1),  # empty domain
        ([0, 0, 0.5, 0.5, 0.5, 1, 1], [1, 2, 3, 4, 5], 1),  # interior multiplicity 3 > d + 1
        ([0, 0, 1, 0.5, 1, 1], [1, 2, 3, 4], 1),  # decreasing
    ],
)
def test_bspline_descriptor_validation(kv, ctrl, deg):
    with pytest.raises(ValueError):
        BsplineDescriptor(kv, ctrl, deg)


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_from_bspline_matches_de_boor(rng, degree):
    for uniform in (True, False):
        b = random_bspline(rng, degree, 9, lo=-1.0, hi=2.0, uniform=uniform)
        s = from_bspline(b)
        xs = np.linspace(-1.0, 2.0, 10**4)
        ref = np.array([de_boor(b, x) for x in xs])
        assert np.abs(s(xs) - ref).max() <= 1e-9


def test_de_boor_partition_of_unity():
    b = BsplineDescriptor([0, 0, 0, 0, 0.3, 0.7, 1, 1, 1, 1], [1.0] * 6, 3)
    for x in np.linspace(0, 1, 57):
        assert de_boor(b, x) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_bspline_smoothness(rng, degree):
    s = from_bspline(random_bspline(rng, degree, 12))
    assert continuity_defect(s, degree - 1) <= 1e-8


def test_continuity_defect_examples(step):
    g = Polynomial([1, -2, 0.5, 0.25])
    s = PiecewiseSpline([0, 0.5, 1.5, 2.2, 3], [g] * 4, 3)
    assert continuity_defect(s, 2) <= 1e-9
    assert continuity_defect(step, 0) == 1.0
    with pytest.raises(ValueError):
        continuity_defect(step, 1)


def test_continuity_defect_after_compression(rng):
    eps = 0.1
    for _ in range(5):
        s = from_bspline(random_bspline(rng, 3, 10, scale=1.0))
        for fit in (FitMethod(), FitMethod(kind=REMEZ)):
            c, _ = compress_spline(s, eps, fit=fit)
            # each side is within eps of the continuous original at the knot
            assert continuity_defect(c, 0) <= 2 * eps + 1e-9


def test_restrict():
    s = PiecewiseSpline([0, 1, 2, 3], [[0, 1], [2, -1], [-4, 2]], 1)
    assert restrict(s, Interval(0, 3)) == s
    r = restrict(s, Interval(1, 2))
    assert r.knots == (1.0, 2.0) and r.pieces == (s.pieces[1],)
    with pytest.raises(ValueError):
        restrict(s, Interval(0.5, 2))


def test_restrict_preserves_values(rng):
    s = from_bspline(random_bspline(rng, 3, 8))
    r = restrict(s, Interval(s.knots[2], s.knots[6]))
    xs = rng.uniform(s.knots[2], s.knots[6], 100)
    assert np.array_equal(r(xs), s(xs))
