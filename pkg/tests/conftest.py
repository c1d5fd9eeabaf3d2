import numpy as np
import pytest

from polykan.spline import BsplineDescriptor, PiecewiseSpline, clamped_knot_vector, from_bspline


def random_bspline(rng, degree, pieces, lo=0.0, hi=1.0, scale=10.0, uniform=True):
    if uniform:
        breaks = np.linspace(lo, hi, pieces + 1)
    else:
        inner = np.sort(rng.uniform(lo, hi, pieces - 1))
        breaks = np.concatenate([[lo], inner, [hi]])
    kv = clamped_knot_vector(breaks, degree)
    ctrl = rng.uniform(-scale, scale, len(kv) - degree - 1)
    return BsplineDescriptor(kv, ctrl, degree)


def random_spline(rng, degree, pieces, **kw) -> PiecewiseSpline:
    return from_bspline(random_bspline(rng, degree, pieces, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def step():
    return PiecewiseSpline([0.0, 1.0, 2.0], [[0.0], [1.0]], 0)


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    detail = ""
    for key, value in report.user_properties:
        if key == "detail":
            detail = value
    ACCEPTANCE_RESULTS[name] = (report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, (ok, detail) in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
