import numpy as np
import pytest

from polykan.approx import REMEZ, FitMethod, certified_sup_error, spline_gap
from polykan.compressor import (
    CompressionConfig,
    allocate_budgets,
    compress_network,
    compress_spline,
    optimal_segmentation,
    recertify,
    verify_equivalence,
)
from polykan.network import KanLayer, KanNetwork, SyntheticSpec, generate_synthetic, layer_forward
from polykan.oracle import brute_force_compress, dense_sup_gap
from polykan.poly import Interval, Polynomial
from polykan.spline import PiecewiseSpline

from conftest import random_spline


def test_global_polynomial_collapses():
    g = Polynomial([0.3, -1, 2, 0.5])
    s = PiecewiseSpline([0, 0.2, 0.5, 0.9, 1.4, 2], [g] * 5, 3)
    for eps in (1e-6, 0.1):
        out, rec = compress_spline(s, eps)
        assert out.num_pieces == 1 and len(out.knots) == 2
        assert rec.knots_before == 6 and rec.knots_after == 2


def test_step_unchanged(step):
    out, rec = compress_spline(step, 0.4)
    assert out == step
    assert rec.certified_error == 0.0


def test_rejects_nonpositive_eps(step):
    with pytest.raises(ValueError):
        compress_spline(step, 0.0)


def test_dp_table_invariants(rng):
    s = random_spline(rng, 2, 8)
    table = optimal_segmentation(s, 0.5, 2, FitMethod())
    assert table.dp[0] == 0
    assert all(0 <= b - a <= 1 for a, b in zip(table.dp[:-1], table.dp[1:]))
    assert all(p < i for i, p in enumerate(table.prev) if i > 0)
    assert table.feasibility_calls == 8 * 9 // 2


def test_matches_brute_force_small(rng):
    for eps in (0.01, 0.1):
        for _ in range(10):
            s = random_spline(rng, 3, 8, scale=1.0)
            r = brute_force_compress(s, eps)
            assert r.alg_piece_count == r.optimum_piece_count
            assert r.alg_over_opt == 1.0


@pytest.mark.parametrize("fit", [FitMethod(), FitMethod(kind=REMEZ)])
def test_certified_and_recertified(rng, fit):
    for _ in range(10):
        s = random_spline(rng, int(rng.integers(1, 4)), 9, uniform=False)
        eps = 10 ** rng.uniform(-2, 0.5)
        out, rec = compress_spline(s, eps, fit=fit)
        assert rec.certified_error <= eps
        fresh = max(
            certified_sup_error(s, p, Interval(a, b))[0]
            for p, a, b in zip(out.pieces, out.knots[:-1], out.knots[1:])
        )
        assert abs(fresh - rec.certified_error) <= 1e-9
        assert spline_gap(s, out)[0] <= eps
        assert out.domain == s.domain


@pytest.mark.parametrize("fit", [FitMethod(), FitMethod(kind=REMEZ)])
def test_monotone_in_eps(rng, fit):
    s = random_spline(rng, 3, 10)
    counts = [compress_spline(s, eps, fit=fit)[0].num_pieces for eps in (0.01, 0.1, 0.5, 2.0, 20.0)]
    assert counts == sorted(counts, reverse=True)
    assert counts[0] <= s.num_pieces


def test_idempotent_when_nothing_merges(step, rng):
    out, _ = compress_spline(step, 0.4)
    assert compress_spline(out, 0.4)[0] == out
    s = random_spline(rng, 3, 8, scale=5.0)
    once, _ = compress_spline(s, 1e-4)
    assert compress_spline(once, 1e-4)[0] == once


def test_idempotent_sin():
    net = generate_synthetic(SyntheticSpec([1, 1], degree=3, knots=65, target="sin", domain=(0.0, 2 * np.pi)))
    s = net.layers[0].splines[0][0]
    once, _ = compress_spline(s, 1e-2)
    assert compress_spline(once, 1e-2)[0] == once


@pytest.mark.xfail(strict=True, reason="error is measured against the already-compressed spline on the second pass")
def test_idempotent_general():
    s = random_spline(np.random.default_rng(19), 2, 6)
    once, _ = compress_spline(s, 0.6)
    twice, _ = compress_spline(once, 0.6)
    assert twice == once


def test_degree_cap_reduces_degree(rng):
    s = random_spline(rng, 3, 6, scale=1.0)
    out, rec = compress_spline(s, 0.2, degree_cap=1)
    assert spline_gap(s, out)[0] <= 0.2
    assert all(p.canonical().degree <= 1 or p in s.pieces for p in out.pieces)


def test_feasibility_call_count(rng):
    for k in (1, 2, 5, 13):
        _, rec = compress_spline(random_spline(rng, 2, k), 0.05)
        assert rec.feasibility_calls == k * (k + 1) // 2


# -- budgets -------------------------------------------------------------------


def test_allocate_budget_examples():
    assert allocate_budgets(0.3, [5, 5, 5], "uniform") == pytest.approx([0.1, 0.1, 0.1], abs=1e-15)
    for policy in ("uniform", "knot_weighted", [0.3]):
        assert allocate_budgets(0.3, [7], policy) == [0.3]
    assert allocate_budgets(0.4, [30, 10], "knot_weighted") == pytest.approx([0.3, 0.1], abs=1e-15)
    assert allocate_budgets(0.05, [1, 1], [0.02, 0.03]) == pytest.approx([0.02, 0.03], abs=1e-15)
    with pytest.raises(ValueError):
        allocate_budgets(0.3, [], "uniform")
    with pytest.raises(ValueError):
        allocate_budgets(0.3, [1, 2], [0.1])


def test_budgets_sum_to_eps(rng):
    for _ in range(200):
        eps = 10 ** rng.uniform(-6, 2)
        shape = list(rng.integers(2, 500, int(rng.integers(1, 9))))
        for policy in ("uniform", "knot_weighted"):
            assert abs(sum(allocate_budgets(eps, shape, policy)) - eps) <= 1e-12


def test_config_validation():
    with pytest.raises(ValueError):
        CompressionConfig(eps=0)
    with pytest.raises(ValueError):
        CompressionConfig(eps=0.1, budget_policy=[0.05, 0.04])
    with pytest.raises(ValueError):
        CompressionConfig(eps=0.1, budget_policy="greedy")


# -- networks ------------------------------------------------------------------


def test_single_layer_budget_split():
    net = generate_synthetic(SyntheticSpec([3, 1], degree=3, knots=9, seed=4))
    out, report = compress_network(net, CompressionConfig(eps=0.03))
    assert report.layer_budgets == [0.03]
    assert all(r.budget == pytest.approx(0.01, abs=1e-15) for r in report.records)
    assert all(r.certified_error <= r.budget for r in report.records)
    box = [(iv.lo, iv.hi) for iv in net.input_domain]
    gap = dense_sup_gap(lambda x: layer_forward(net.layers[0], x), lambda x: layer_forward(out.layers[0], x), box, 40)
    assert gap <= 0.03
    assert verify_equivalence(net, out)[0] <= 0.03


def test_huge_eps_collapses_everything():
    net = generate_synthetic(SyntheticSpec([2, 3, 1], degree=2, knots=6, seed=1))
    out, report = compress_network(net, CompressionConfig(eps=1e6))
    assert all(s.num_pieces == 1 for _, _, _, s in out.splines())
    assert report.knots_after == 2 * 9


def test_single_layer_propagation_bound(rng):
    for n in (2, 3, 5):
        net = generate_synthetic(SyntheticSpec([n, 2], degree=3, knots=8, seed=n))
        out, report = compress_network(net, CompressionConfig(eps=0.05 * n))
        delta = max(r.certified_error for r in report.records)
        pts = rng.uniform(-1, 1, (10**5, n))
        gap = np.abs(layer_forward(net.layers[0], pts) - layer_forward(out.layers[0], pts)).max()
        assert gap <= n * delta + 1e-8


def test_lipschitz_deep_net_within_eps(rng):
    net = generate_synthetic(SyntheticSpec([2, 3, 2], degree=3, knots=12, seed=9, target="sin", lipschitz_normalize=True))
    out, report = compress_network(net, CompressionConfig(eps=0.1))
    pts = rng.uniform(-1, 1, (10**5, 2))
    gap = np.abs(net(pts) - out(pts)).max()
    assert gap <= 0.1 + 1e-6
    assert report.knots_after < report.knots_before


def test_threads_do_not_change_output():
    net = generate_synthetic(SyntheticSpec([2, 3, 1], degree=3, knots=7, seed=3))
    a, ra = compress_network(net, CompressionConfig(eps=0.05, threads=1))
    b, rb = compress_network(net, CompressionConfig(eps=0.05, threads=4))
    assert a == b
    assert [(r.layer, r.out_index, r.in_index, r.certified_error) for r in ra.records] == [
        (r.layer, r.out_index, r.in_index, r.certified_error) for r in rb.records
    ]


def test_recertify(rng):
    net = generate_synthetic(SyntheticSpec([2, 2], degree=2, knots=6, seed=2))
    out, report = compress_network(net, CompressionConfig(eps=0.1))
    for (l, j, i, g), r in zip(recertify(net, out), report.records):
        assert (l, j, i) == (r.layer, r.out_index, r.in_index)
        assert g <= r.budget


def test_verify_equivalence_examples():
    net = generate_synthetic(SyntheticSpec([2, 3, 1], degree=3, knots=5, seed=0))
    assert verify_equivalence(net, net)[0] <= 1e-12
    layer = net.layers[0]
    rows = [list(r) for r in layer.splines]
    s = rows[1][0]
    rows[1][0] = PiecewiseSpline(s.knots, [Polynomial((p.coefficients[0] + 0.05,) + p.coefficients[1:]) for p in s.pieces], s.degree)
    shifted = KanNetwork((KanLayer(tuple(map(tuple, rows))),) + net.layers[1:])
    # shift a first-layer spline into a single-layer comparison: exact constant gap
    one = KanNetwork((layer,))
    one_shifted = KanNetwork((shifted.layers[0],))
    gap, _ = verify_equivalence(one, one_shifted)
    assert gap == pytest.approx(0.05, abs=1e-9)
    with pytest.raises(ValueError):
        verify_equivalence(net, generate_synthetic(SyntheticSpec([3, 1])))
