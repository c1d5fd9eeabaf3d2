"""KAN models: forward evaluation, region statistics, persistence and synthetic generation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import make_lsq_spline

from .poly import IDENTICALLY_ZERO, Interval, Polynomial, derivative, evaluate, roots_in_interval
from .spline import (
    BsplineDescriptor,
    DomainError,
    PiecewiseSpline,
    clamped_knot_vector,
    eval_spline_many,
    from_bspline,
)

FORMAT = "polykan/1"
POLICIES = ("clamp", "extrapolate", "error")
KNOT_DEDUP_TOL = 1e-12


class ModelFormatError(ValueError):
    """Schema violation in a model document; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass(frozen=True)
class KanLayer:
    splines: tuple[tuple[PiecewiseSpline, ...], ...]  # [out j][in i]

    def __post_init__(self):
        rows = self.splines
        if not rows or not rows[0]:
            raise ValueError("a layer needs at least one spline")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("spline grid is not rectangular")
        for i in range(len(rows[0])):
            dom = rows[0][i].knots[0], rows[0][i].knots[-1]
            for j in range(1, len(rows)):
                s = rows[j][i]
                if (s.knots[0], s.knots[-1]) != dom:
                    raise ValueError(f"splines consuming input {i} disagree on their domain")

    @property
    def fan_in(self) -> int:
        return len(self.splines[0])

    @property
    def fan_out(self) -> int:
        return len(self.splines)

    def input_domain(self, i: int) -> Interval:
        return self.splines[0][i].domain

    def __call__(self, x: np.ndarray, policy: str = "clamp") -> np.ndarray:
        return layer_forward(self, x, policy)


@dataclass(frozen=True)
class KanNetwork:
    layers: tuple[KanLayer, ...]
    out_of_domain_policy: str = "clamp"
    compression: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        if self.out_of_domain_policy not in POLICIES:
            raise ValueError(f"unknown out-of-domain policy {self.out_of_domain_policy!r}")
        for l in range(1, len(self.layers)):
            if self.layers[l].fan_in != self.layers[l - 1].fan_out:
                raise ValueError(f"layer {l} fan-in does not match layer {l - 1} fan-out")

    @property
    def architecture(self) -> list[int]:
        return [self.layers[0].fan_in] + [layer.fan_out for layer in self.layers]

    @property
    def input_domain(self) -> list[Interval]:
        first = self.layers[0]
        return [first.input_domain(i) for i in range(first.fan_in)]

    @property
    def depth(self) -> int:
        return len(self.layers)

    def splines(self):
        """Yield ``(layer, out_index, in_index, spline)`` in canonical order."""
        for l, layer in enumerate(self.layers):
            for j, row in enumerate(layer.splines):
                for i, s in enumerate(row):
                    yield l, j, i, s

    def __call__(self, x) -> np.ndarray:
        return forward(self, x)


def _apply_policy(s: PiecewiseSpline, xs: np.ndarray, policy: str) -> np.ndarray:
    lo, hi = s.knots[0], s.knots[-1]
    if policy == "clamp":
        return eval_spline_many(s, np.clip(xs, lo, hi))
    if policy == "extrapolate":
        return eval_spline_many(s, xs, extrapolate=True)
    return eval_spline_many(s, xs)


def layer_forward(layer: KanLayer, x: np.ndarray, policy: str = "clamp") -> np.ndarray:
    """``y[:, j] = sum_i s[j][i](x[:, i])`` for a batch ``x`` of shape (N, fan_in)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != layer.fan_in:
        raise ValueError(f"expected {layer.fan_in} inputs, got {x.shape[1]}")
    y = np.zeros((x.shape[0], layer.fan_out))
    for j, row in enumerate(layer.splines):
        for i, s in enumerate(row):
            y[:, j] += _apply_policy(s, x[:, i], policy)
    return y


def forward(net: KanNetwork, x) -> np.ndarray:
    """Evaluate the network on one point (1-D input) or a batch (2-D input)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    h = np.atleast_2d(arr)
    for layer in net.layers:
        h = layer_forward(layer, h, net.out_of_domain_policy)
    return h[0] if single else h


# -- region statistics ---------------------------------------------------------


@dataclass(frozen=True)
class RegionStats:
    bound: int
    layer1_bound: int
    exact_first_layer: int
    per_dim_knot_counts: list[int]
    per_dim_breakpoints: list[list[float]]

    def rectangles(self):
        """Iterate the first-layer regions as tuples of per-axis ``(lo, hi)`` intervals."""
        import itertools

        axes = [list(zip(bp[:-1], bp[1:])) for bp in self.per_dim_breakpoints]
        return itertools.product(*axes)


def region_bound(net: KanNetwork) -> int:
    """Product of ``(knot count - 1)`` over every spline of the network."""
    return math.prod(s.num_pieces for _, _, _, s in net.splines())


def layer_region_bound(layer: KanLayer) -> int:
    return math.prod(s.num_pieces for row in layer.splines for s in row)


def merged_interior_knots(splines: Sequence[PiecewiseSpline], tol: float = KNOT_DEDUP_TOL) -> list[float]:
    merged: list[float] = []
    for t in sorted(t for s in splines for t in s.knots[1:-1]):
        if not merged or t - merged[-1] > tol:
            merged.append(t)
    return merged


def exact_first_layer_partition(net: KanNetwork) -> RegionStats:
    first = net.layers[0]
    counts, breakpoints = [], []
    for i in range(first.fan_in):
        column = [row[i] for row in first.splines]
        interior = merged_interior_knots(column)
        dom = first.input_domain(i)
        counts.append(len(interior))
        breakpoints.append([dom.lo] + interior + [dom.hi])
    exact = math.prod(c + 1 for c in counts)
    return RegionStats(region_bound(net), layer_region_bound(first), exact, counts, breakpoints)


# -- persistence ---------------------------------------------------------------


def network_to_dict(net: KanNetwork) -> dict:
    doc: dict[str, Any] = {
        "format": FORMAT,
        "architecture": net.architecture,
        "input_domain": [[iv.lo, iv.hi] for iv in net.input_domain],
        "out_of_domain_policy": net.out_of_domain_policy,
        "layers": [
            {
                "splines": [
                    [
                        {
                            "knots": list(s.knots),
                            "degree": s.degree,
                            "pieces": [list(p.coefficients) for p in s.pieces],
                        }
                        for s in row
                    ]
                    for row in layer.splines
                ]
            }
            for layer in net.layers
        ],
    }
    if net.compression is not None:
        doc["compression"] = net.compression
    return doc


def save_model(net: KanNetwork) -> bytes:
    # json emits floats via repr, which round-trips exactly
    return (json.dumps(network_to_dict(net), indent=1, allow_nan=False) + "\n").encode()


def _expect(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ModelFormatError(path, message)


def _number(v, path: str) -> float:
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool), path, "expected a number")
    _expect(math.isfinite(v), path, "number must be finite")
    return float(v)


def _numbers(v, path: str) -> list[float]:
    _expect(isinstance(v, list), path, "expected a list of numbers")
    return [_number(x, f"{path}[{k}]") for k, x in enumerate(v)]


def _spline_from_doc(d, path: str) -> PiecewiseSpline:
    _expect(isinstance(d, dict), path, "expected an object")
    for key in ("knots", "degree", "pieces"):
        _expect(key in d, f"{path}.{key}", "missing field")
    knots = _numbers(d["knots"], f"{path}.knots")
    deg = d["degree"]
    _expect(isinstance(deg, int) and not isinstance(deg, bool) and deg >= 0, f"{path}.degree", "expected a non-negative integer")
    _expect(isinstance(d["pieces"], list), f"{path}.pieces", "expected a list")
    pieces = [Polynomial(_numbers(p, f"{path}.pieces[{k}]")) for k, p in enumerate(d["pieces"])]
    try:
        return PiecewiseSpline(knots, pieces, deg)
    except ValueError as exc:
        raise ModelFormatError(path, str(exc)) from None


def network_from_dict(doc) -> KanNetwork:
    _expect(isinstance(doc, dict), "$", "expected a JSON object")
    fmt = doc.get("format")
    _expect(isinstance(fmt, str), "$.format", "missing or non-string format tag")
    name, _, major = fmt.partition("/")
    _expect(name == "polykan", "$.format", f"unknown format {fmt!r}")
    _expect(major == "1", "$.format", f"unsupported format version {fmt!r}")
    policy = doc.get("out_of_domain_policy", "clamp")
    _expect(policy in POLICIES, "$.out_of_domain_policy", f"expected one of {POLICIES}")
    _expect(isinstance(doc.get("layers"), list) and doc["layers"], "$.layers", "expected a non-empty list")
    layers = []
    for l, ld in enumerate(doc["layers"]):
        lp = f"$.layers[{l}]"
        _expect(isinstance(ld, dict) and isinstance(ld.get("splines"), list), f"{lp}.splines", "expected a list")
        rows = []
        for j, row in enumerate(ld["splines"]):
            _expect(isinstance(row, list), f"{lp}.splines[{j}]", "expected a list")
            rows.append(tuple(_spline_from_doc(d, f"{lp}.splines[{j}][{i}]") for i, d in enumerate(row)))
        try:
            layers.append(KanLayer(tuple(rows)))
        except ValueError as exc:
            raise ModelFormatError(lp, str(exc)) from None
    try:
        net = KanNetwork(tuple(layers), policy, doc.get("compression"))
    except ValueError as exc:
        raise ModelFormatError("$.layers", str(exc)) from None
    if "architecture" in doc:
        _expect(doc["architecture"] == net.architecture, "$.architecture",
                f"declared {doc['architecture']} but layers give {net.architecture}")
    if "input_domain" in doc:
        box = doc["input_domain"]
        _expect(isinstance(box, list) and len(box) == len(net.input_domain), "$.input_domain", "wrong length")
        for k, (pair, iv) in enumerate(zip(box, net.input_domain)):
            lo, hi = _numbers(pair, f"$.input_domain[{k}]")
            _expect((lo, hi) == (iv.lo, iv.hi), f"$.input_domain[{k}]", "does not match layer-1 spline domains")
    return net


def load_model(data: bytes | str) -> KanNetwork:
    if isinstance(data, bytes):
        data = data.decode()
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"line {exc.lineno} column {exc.colno} (char {exc.pos})", exc.msg) from None
    return network_from_dict(doc)


# -- synthetic models ----------------------------------------------------------


def _ramp(x):
    return np.clip(2.0 * np.abs(x - np.round(x)), 0.0, 1.0) - 0.5


TARGETS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "exp": np.exp,
    "gaussian": lambda x: np.exp(-4.0 * np.square(x)),
    "ramp": _ramp,
}


@dataclass
class SyntheticSpec:
    architecture: Sequence[int]
    degree: int = 3
    knots: int | Sequence[int] = 5  # knot count per spline, endpoints included
    seed: int = 0
    target: str = "random_controls"  # or a name in TARGETS
    domain: tuple[float, float] = (-1.0, 1.0)
    lipschitz_normalize: bool = False  # scale layers >= 2 to be 1-Lipschitz maps
    policy: str = "clamp"


def spline_range(s: PiecewiseSpline) -> tuple[float, float]:
    """Exact ``(min, max)`` of a spline over its domain."""
    lo, hi = math.inf, -math.inf
    for i, p in enumerate(s.pieces):
        a, b = s.knots[i], s.knots[i + 1]
        xs = [a, b]
        crit = roots_in_interval(derivative(p), Interval(a, b))
        if crit is not IDENTICALLY_ZERO:
            xs.extend(crit)
        vals = [evaluate(p, x) for x in xs]
        lo, hi = min(lo, *vals), max(hi, *vals)
    return lo, hi


def max_slope(s: PiecewiseSpline) -> float:
    """Exact ``sup |s'|`` over the spline's domain."""
    best = 0.0
    for i, p in enumerate(s.pieces):
        dp = derivative(p)
        if dp.is_zero():
            continue
        a, b = s.knots[i], s.knots[i + 1]
        xs = [a, b]
        crit = roots_in_interval(derivative(dp), Interval(a, b))
        if crit is not IDENTICALLY_ZERO:
            xs.extend(crit)
        best = max(best, *(abs(evaluate(dp, x)) for x in xs))
    return best


def scale_spline(s: PiecewiseSpline, factor: float) -> PiecewiseSpline:
    return PiecewiseSpline(s.knots, [Polynomial([factor * c for c in p.coefficients]) for p in s.pieces], s.degree)


def _make_spline(lo: float, hi: float, nknots: int, degree: int, target: str, rng: np.random.Generator) -> PiecewiseSpline:
    breaks = np.linspace(lo, hi, nknots)
    kv = clamped_knot_vector(breaks, degree)
    ncoef = len(kv) - degree - 1
    if target == "random_controls":
        ctrl = rng.uniform(-1.0, 1.0, ncoef)
    else:
        f = TARGETS[target]
        xs = np.linspace(lo, hi, max(20 * ncoef, 200))
        ctrl = make_lsq_spline(xs, f(xs), np.asarray(kv), k=degree).c
    return from_bspline(BsplineDescriptor(kv, ctrl, degree))


def generate_synthetic(spec: SyntheticSpec) -> KanNetwork:
    """Deterministic random KAN for tests and benchmarks.

    Inner-layer domains cover the exact output range of the preceding layer
    plus a 10% margin on each side.
    """
    if spec.target != "random_controls" and spec.target not in TARGETS:
        raise ValueError(f"unknown target {spec.target!r}; expected random_controls or one of {sorted(TARGETS)}")
    arch = list(spec.architecture)
    if len(arch) < 2 or any(n < 1 for n in arch):
        raise ValueError(f"invalid architecture {arch}")
    rng = np.random.default_rng(spec.seed)
    n_splines = sum(a * b for a, b in zip(arch[:-1], arch[1:]))
    knots = [spec.knots] * n_splines if isinstance(spec.knots, int) else list(spec.knots)
    if len(knots) != n_splines or any(k < 2 for k in knots):
        raise ValueError("need one knot count >= 2 per spline")
    counts = iter(knots)
    domains = [tuple(map(float, spec.domain))] * arch[0]
    layers = []
    for l in range(len(arch) - 1):
        rows = [
            [_make_spline(*domains[i], next(counts), spec.degree, spec.target, rng) for i in range(arch[l])]
            for _ in range(arch[l + 1])
        ]
        if spec.lipschitz_normalize and l > 0:
            for row in rows:
                for i, s in enumerate(row):
                    slope = max_slope(s)
                    limit = 1.0 / arch[l]
                    if slope > limit:
                        row[i] = scale_spline(s, limit / slope)
        layer = KanLayer(tuple(tuple(r) for r in rows))
        layers.append(layer)
        domains = []
        for row in layer.splines:
            ranges = [spline_range(s) for s in row]
            lo, hi = sum(r[0] for r in ranges), sum(r[1] for r in ranges)
            margin = 0.1 * max(hi - lo, 1e-6)
            domains.append((lo - margin, hi + margin))
    return KanNetwork(tuple(layers), spec.policy)


def check_in_domain(net: KanNetwork, x: np.ndarray) -> None:
    x = np.atleast_2d(x)
    for i, iv in enumerate(net.input_domain):
        if x[:, i].min() < iv.lo or x[:, i].max() > iv.hi:
            raise DomainError(f"input coordinate {i} leaves [{iv.lo}, {iv.hi}]")
