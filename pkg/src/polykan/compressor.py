"""Optimal knot elimination for single splines and layered network compression."""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.stats import qmc

from .approx import FitMethod, MergeCertificate, spline_gap, try_merge
from .network import KanLayer, KanNetwork, forward
from .poly import Interval
from .spline import PiecewiseSpline

BudgetPolicy = Union[str, Sequence[float]]  # "uniform", "knot_weighted" or explicit per-layer budgets


@dataclass(frozen=True)
class CompressionConfig:
    eps: float
    budget_policy: BudgetPolicy = "uniform"
    fit: FitMethod = field(default_factory=FitMethod)
    degree_cap: Optional[int] = None  # None -> each spline's own degree
    threads: int = 1

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        policy = self.budget_policy
        if isinstance(policy, str):
            if policy not in ("uniform", "knot_weighted"):
                raise ValueError(f"unknown budget policy {policy!r}")
        else:
            budgets = [float(b) for b in policy]
            if not budgets or any(b <= 0 for b in budgets):
                raise ValueError("explicit budgets must be positive")
            if abs(sum(budgets) - self.eps) > 1e-12:
                raise ValueError(f"explicit budgets sum to {sum(budgets)!r}, not eps={self.eps!r}")
            object.__setattr__(self, "budget_policy", tuple(budgets))
        if self.degree_cap is not None and self.degree_cap < 0:
            raise ValueError("degree_cap must be non-negative")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class DpTable:
    """``dp[i]``: fewest pieces covering ``[t_0, t_i]``; ``prev[i]``: start knot of the last piece."""

    dp: list[int]
    prev: list[int]
    certificates: dict[tuple[int, int], MergeCertificate]
    feasibility_calls: int = 0


@dataclass
class SplineRecord:
    layer: int
    out_index: int
    in_index: int
    knots_before: int
    knots_after: int
    certified_error: float
    budget: float
    seconds: float = 0.0
    feasibility_calls: int = 0


@dataclass
class CompressionReport:
    eps: float
    budget_policy: str
    layer_budgets: list[float]
    spline_budgets: list[float]
    records: list[SplineRecord]
    out_of_domain_policy: str = "clamp"

    @property
    def knots_before(self) -> int:
        return sum(r.knots_before for r in self.records)

    @property
    def knots_after(self) -> int:
        return sum(r.knots_after for r in self.records)

    @property
    def ratio(self) -> float:
        return self.knots_after / self.knots_before

    @property
    def max_certified_error(self) -> float:
        return max(r.certified_error for r in self.records)


def fit_degree(s: PiecewiseSpline, cfg_or_cap) -> int:
    cap = cfg_or_cap.degree_cap if isinstance(cfg_or_cap, CompressionConfig) else cfg_or_cap
    return s.degree if cap is None else min(cap, s.degree)


def segment_feasibility(s: PiecewiseSpline, j: int, i: int, degree: int, eps: float, fit: FitMethod):
    """Certificate for merging regions ``j..i-1`` into one piece, or None.

    A single original region is always feasible: when the fit cannot certify
    it (degree cap below the piece's degree) the original piece is kept.
    """
    iv = Interval(s.knots[j], s.knots[i])
    cert = try_merge(s, iv, degree, eps, fit)
    if i - j == 1 and (cert is None or s.pieces[j].canonical().degree <= degree):
        # keep the original piece verbatim so untouched regions stay bit-identical
        return MergeCertificate(s.pieces[j], 0.0, s.knots[j])
    return cert


def optimal_segmentation(s: PiecewiseSpline, eps: float, degree: int, fit: FitMethod) -> DpTable:
    k = s.num_pieces
    inf = k + 1
    dp = [0] + [inf] * k
    prev = [-1] * (k + 1)
    certs: dict[tuple[int, int], MergeCertificate] = {}
    calls = 0
    for i in range(1, k + 1):
        for j in range(i):
            calls += 1
            cert = segment_feasibility(s, j, i, degree, eps, fit)
            if cert is None:
                continue
            certs[(j, i)] = cert
            if dp[j] + 1 < dp[i]:
                dp[i] = dp[j] + 1
                prev[i] = j
    return DpTable(dp, prev, certs, calls)


def backtrack(table: DpTable) -> list[int]:
    """Knot indices kept by the optimal segmentation, ascending."""
    i = len(table.dp) - 1
    kept = [i]
    while i > 0:
        i = table.prev[i]
        kept.append(i)
    return kept[::-1]


def compress_spline(
    s: PiecewiseSpline, eps: float, cfg: CompressionConfig | None = None, *, fit: FitMethod | None = None,
    degree_cap: int | None = None,
) -> tuple[PiecewiseSpline, SplineRecord]:
    """Fewest-piece spline within ``eps`` of ``s`` over all knot subsets the fit can certify."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if cfg is not None:
        fit = cfg.fit if fit is None else fit
        degree_cap = cfg.degree_cap if degree_cap is None else degree_cap
    fit = fit or FitMethod()
    degree = fit_degree(s, degree_cap)
    t0 = time.perf_counter()
    table = optimal_segmentation(s, eps, degree, fit)
    kept = backtrack(table)
    pieces = [table.certificates[(a, b)].merged_poly for a, b in zip(kept[:-1], kept[1:])]
    err = max(table.certificates[(a, b)].certified_error for a, b in zip(kept[:-1], kept[1:]))
    out = PiecewiseSpline([s.knots[i] for i in kept], pieces, s.degree)
    record = SplineRecord(
        layer=0, out_index=0, in_index=0,
        knots_before=len(s.knots), knots_after=len(out.knots),
        certified_error=err, budget=eps,
        seconds=time.perf_counter() - t0, feasibility_calls=table.feasibility_calls,
    )
    return out, record


def allocate_budgets(eps: float, net_shape: Sequence, policy: BudgetPolicy = "uniform") -> list[float]:
    """Split the global ``eps`` into per-layer budgets summing to ``eps``.

    ``net_shape`` is a sequence of per-layer knot totals (only its length
    matters for the uniform and explicit policies).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    L = len(net_shape)
    if L == 0:
        raise ValueError("cannot allocate budgets for an empty network")
    if L == 1:
        return [eps]
    if isinstance(policy, str):
        if policy == "uniform":
            weights = [1.0] * L
        elif policy == "knot_weighted":
            weights = [float(w) for w in net_shape]
        else:
            raise ValueError(f"unknown budget policy {policy!r}")
        total = sum(weights)
        budgets = [eps * w / total for w in weights]
    else:
        budgets = [float(b) for b in policy]
        if len(budgets) != L:
            raise ValueError(f"{len(budgets)} explicit budgets for {L} layers")
    # put the rounding residue on the largest budget so the sum is eps to the ulp
    k = max(range(L), key=budgets.__getitem__)
    budgets[k] += eps - sum(budgets)
    return budgets


def _policy_name(policy: BudgetPolicy) -> str:
    if isinstance(policy, str):
        return policy
    return "explicit:" + ",".join(repr(b) for b in policy)


def compress_network(net: KanNetwork, cfg: CompressionConfig) -> tuple[KanNetwork, CompressionReport]:
    """Layered compression: layer ``l`` gets ``eps_l`` and each of its splines ``eps_l / fan_in``."""
    layer_knots = [sum(len(s.knots) for row in layer.splines for s in row) for layer in net.layers]
    budgets = allocate_budgets(cfg.eps, layer_knots, cfg.budget_policy)
    per_spline = [b / layer.fan_in for b, layer in zip(budgets, net.layers)]
    jobs = list(net.splines())

    def run(job):
        l, j, i, s = job
        out, rec = compress_spline(s, per_spline[l], cfg)
        rec.layer, rec.out_index, rec.in_index = l, j, i
        return out, rec

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    grid = [[[None] * layer.fan_in for _ in range(layer.fan_out)] for layer in net.layers]
    certs = [[[None] * layer.fan_in for _ in range(layer.fan_out)] for layer in net.layers]
    for (out, rec) in results:
        grid[rec.layer][rec.out_index][rec.in_index] = out
        certs[rec.layer][rec.out_index][rec.in_index] = {
            "budget": rec.budget, "certified_error": rec.certified_error,
        }
    layers = tuple(KanLayer(tuple(tuple(row) for row in g)) for g in grid)
    compression = {
        "eps": cfg.eps,
        "layer_budgets": budgets,
        "splines": certs,
    }
    report = CompressionReport(
        eps=cfg.eps,
        budget_policy=_policy_name(cfg.budget_policy),
        layer_budgets=budgets,
        spline_budgets=per_spline,
        records=[rec for _, rec in results],
        out_of_domain_policy=net.out_of_domain_policy,
    )
    return KanNetwork(layers, net.out_of_domain_policy, compression), report


def recertify(original: KanNetwork, compressed: KanNetwork) -> list[tuple[int, int, int, float]]:
    """Exact per-spline sup gaps ``(layer, out, in, gap)`` between two same-shape networks."""
    if original.architecture != compressed.architecture:
        raise ValueError("architectures differ")
    out = []
    for (l, j, i, s), (_, _, _, c) in zip(original.splines(), compressed.splines()):
        out.append((l, j, i, spline_gap(s, c)[0]))
    return out


# -- empirical equivalence -----------------------------------------------------


@dataclass(frozen=True)
class Sampling:
    points: int = 2 ** 14
    probes_per_knot: int = 4
    seed: int = 0


def sample_points(net: KanNetwork, sampling: Sampling = Sampling()) -> np.ndarray:
    """Deterministic Sobol points over the input box plus probes straddling layer-1 knots."""
    box = net.input_domain
    d = len(box)
    lo = np.array([iv.lo for iv in box])
    hi = np.array([iv.hi for iv in box])
    m = max(1, int(np.ceil(np.log2(max(sampling.points, 2)))))
    sob = qmc.Sobol(d, scramble=True, seed=sampling.seed).random_base2(m)[: sampling.points]
    pts = [lo + sob * (hi - lo)]
    corners = np.array(np.meshgrid(*[[iv.lo, iv.hi] for iv in box], indexing="ij")).reshape(d, -1).T
    pts.append(corners)
    base = lo + sob[: sampling.probes_per_knot] * (hi - lo)
    for i in range(d):
        knots = sorted({t for row in net.layers[0].splines for t in row[i].knots})
        for t in knots:
            for off in (-1e-9, 0.0, 1e-9):
                probe = base.copy()
                probe[:, i] = min(max(t + off, lo[i]), hi[i])
                pts.append(probe)
    return np.vstack(pts)


def verify_equivalence(net: KanNetwork, net2: KanNetwork, sampling: Sampling = Sampling()) -> tuple[float, np.ndarray]:
    """Empirical ``sup |net - net2|`` over the input box and its witness point.

    For multi-input networks this is a sampled estimate; exact certification
    exists only per spline (see :func:`recertify`).
    """
    if net.architecture[0] != net2.architecture[0] or net.architecture[-1] != net2.architecture[-1]:
        raise ValueError(f"shape mismatch: {net.architecture} vs {net2.architecture}")
    box1 = [(iv.lo, iv.hi) for iv in net.input_domain]
    box2 = [(iv.lo, iv.hi) for iv in net2.input_domain]
    if box1 != box2:
        raise ValueError("input domains differ")
    pts = sample_points(net, sampling)
    gap = np.abs(forward(net, pts) - forward(net2, pts)).max(axis=1)
    k = int(np.argmax(gap))
    return float(gap[k]), pts[k]


def default_threads() -> int:
    env = os.environ.get("POLYKAN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1
