"""Brute-force and dense-sampling oracles used to check the compressor."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .approx import FitMethod
from .compressor import compress_spline, fit_degree, segment_feasibility
from .network import KanNetwork
from .spline import PiecewiseSpline

MAX_INTERIOR_KNOTS = 14


@dataclass(frozen=True)
class OracleResult:
    optimum_piece_count: int
    optimal_subset: tuple[int, ...]  # kept interior knot indices
    alg_piece_count: int

    @property
    def alg_over_opt(self) -> float:
        return self.alg_piece_count / self.optimum_piece_count


def brute_force_compress(
    s: PiecewiseSpline, eps: float, fit: FitMethod = FitMethod(), degree_cap: int | None = None
) -> OracleResult:
    """Minimum piece count over every subset of interior knots.

    A subset is feasible when every segment it induces passes the same
    feasibility test the compressor uses. Subsets are tried in order of
    increasing size, so the first feasible one is optimal.
    """
    k = s.num_pieces
    if k - 1 > MAX_INTERIOR_KNOTS:
        raise ValueError(f"{k - 1} interior knots exceeds the oracle cap of {MAX_INTERIOR_KNOTS}")
    degree = fit_degree(s, degree_cap)
    feasible: dict[tuple[int, int], bool] = {}

    def ok(j: int, i: int) -> bool:
        if (j, i) not in feasible:
            feasible[(j, i)] = segment_feasibility(s, j, i, degree, eps, fit) is not None
        return feasible[(j, i)]

    best = None
    for size in range(k):
        for subset in itertools.combinations(range(1, k), size):
            cuts = (0,) + subset + (k,)
            if all(ok(a, b) for a, b in zip(cuts[:-1], cuts[1:])):
                best = subset
                break
        if best is not None:
            break
    assert best is not None, "the full knot set is always feasible"
    alg, _ = compress_spline(s, eps, fit=fit, degree_cap=degree_cap)
    return OracleResult(len(best) + 1, best, alg.num_pieces)


def dense_sup_gap(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    box: Sequence[tuple[float, float]],
    points_per_dim: int,
    knots: Sequence[Sequence[float]] = (),
) -> float:
    """Max ``|f - g|`` over a tensor grid, plus probes at ``knot +- 1e-9`` per axis.

    ``f`` and ``g`` take arrays of shape (N, d) (or (N,) when d == 1).
    """
    d = len(box)
    axes = []
    for a in range(d):
        lo, hi = box[a]
        if not lo < hi:
            raise ValueError("degenerate box")
        ax = np.linspace(lo, hi, points_per_dim)
        if a < len(knots) and len(knots[a]):
            t = np.asarray(knots[a], dtype=float)
            ax = np.concatenate([ax, t - 1e-9, t, t + 1e-9])
        axes.append(np.unique(np.clip(ax, lo, hi)))
    if d == 1:
        pts = axes[0]
    else:
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    diff = np.abs(np.asarray(f(pts), dtype=float) - np.asarray(g(pts), dtype=float))
    return float(diff.max())


def grid_region_count(net: KanNetwork, points_per_dim: int) -> int:
    """Distinct layer-1 piece-index signatures over a cell-centred grid of the input box."""
    box = net.input_domain
    if len(box) > 3:
        raise ValueError("grid region counting is limited to three inputs")
    axes = []
    for iv in box:
        step = (iv.hi - iv.lo) / points_per_dim
        axes.append(iv.lo + step * (np.arange(points_per_dim) + 0.5))
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
    columns = []
    for row in net.layers[0].splines:
        for i, s in enumerate(row):
            columns.append(np.searchsorted(s.knots, pts[:, i], side="right"))
    signatures = np.stack(columns, axis=1)
    return int(len(np.unique(signatures, axis=0)))
