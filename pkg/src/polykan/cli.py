"""Command-line front end: ``polykan {gen,info,eval,compress,verify}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .approx import CERT_SLACK, LEAST_SQUARES, REMEZ, FitMethod
from .compressor import CompressionConfig, Sampling, compress_network, default_threads, recertify, verify_equivalence
from .network import (
    ModelFormatError,
    SyntheticSpec,
    check_in_domain,
    exact_first_layer_partition,
    forward,
    generate_synthetic,
    load_model,
    region_bound,
    save_model,
)
from .report import dump_report
from .spline import DomainError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_VERIFY = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _read_model(path: str):
    try:
        return load_model(Path(path).read_bytes())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except ModelFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _write(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.write(data.decode())
    else:
        Path(path).write_bytes(data)


def _budget_policy(text: str, eps: float):
    if text in ("uniform", "knot-weighted", "knot_weighted"):
        return text.replace("-", "_")
    if text.startswith("explicit:"):
        budgets = _floats(text[len("explicit:"):])
        if abs(sum(budgets) - eps) > 1e-12:
            raise UsageError(f"explicit budgets sum to {sum(budgets)!r}, expected --eps {eps!r}")
        return budgets
    raise UsageError(f"unknown budget policy {text!r}")


def cmd_gen(args) -> int:
    target = args.target
    spec = SyntheticSpec(
        architecture=_ints(args.arch),
        degree=args.degree,
        knots=args.knots,
        seed=args.seed,
        target=target,
        domain=tuple(_floats(args.domain)),
        lipschitz_normalize=args.lipschitz,
        policy=args.policy,
    )
    if len(spec.domain) != 2 or not spec.domain[0] < spec.domain[1]:
        raise UsageError("--domain needs lo,hi with lo < hi")
    try:
        net = generate_synthetic(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _write(args.out, save_model(net))
    return EXIT_OK


def cmd_info(args) -> int:
    net = _read_model(args.model)
    stats = exact_first_layer_partition(net)
    info = {
        "architecture": net.architecture,
        "depth": net.depth,
        "splines": sum(1 for _ in net.splines()),
        "layer_knot_totals": [sum(len(s.knots) for row in layer.splines for s in row) for layer in net.layers],
        "region_bound": region_bound(net),
        "layer1_region_bound": stats.layer1_bound,
        "exact_first_layer_regions": stats.exact_first_layer,
        "first_layer_interior_knots_per_dim": stats.per_dim_knot_counts,
    }
    if args.json:
        print(json.dumps(info))
    else:
        for key, value in info.items():
            print(f"{key}: {value}")
    return EXIT_OK


def _read_points(path: str, dim: int) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    rows = []
    for n, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row:
            continue
        if len(row) != dim:
            raise UsageError(f"{path}:{n}: expected {dim} values, got {len(row)}")
        try:
            rows.append([float(v) for v in row])
        except ValueError:
            raise UsageError(f"{path}:{n}: non-numeric value") from None
    return np.array(rows, dtype=float).reshape(-1, dim)


def grid_points(net, n: int) -> np.ndarray:
    axes = [np.linspace(iv.lo, iv.hi, n) for iv in net.input_domain]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))


def cmd_eval(args) -> int:
    net = _read_model(args.model)
    if (args.points is None) == (args.grid is None):
        raise UsageError("give exactly one of --points or --grid")
    pts = grid_points(net, args.grid) if args.grid is not None else _read_points(args.points, net.architecture[0])
    try:
        if net.out_of_domain_policy == "error":
            check_in_domain(net, pts)
        out = forward(net, pts) if len(pts) else np.zeros((0, net.architecture[-1]))
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    buf = io.StringIO()
    for row in out:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    _write(args.out, buf.getvalue().encode())
    return EXIT_OK


def cmd_compress(args) -> int:
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    net = _read_model(args.input)
    fit = FitMethod(
        kind=REMEZ if args.fit == "remez" else LEAST_SQUARES,
        samples_per_piece=args.samples_per_piece,
        remez_iterations=args.remez_iterations,
        pin_endpoints=args.pin_endpoints,
    )
    threads = args.threads if args.threads is not None else default_threads()
    cfg = CompressionConfig(
        eps=args.eps,
        budget_policy=_budget_policy(args.budget_policy, args.eps),
        fit=fit,
        degree_cap=args.degree_cap,
        threads=threads,
    )
    compressed, report = compress_network(net, cfg)
    for r in report.records:
        if r.certified_error + CERT_SLACK > r.budget or r.knots_after > r.knots_before:
            print(f"internal error: spline {(r.layer, r.out_index, r.in_index)} violates its certificate",
                  file=sys.stderr)
            return EXIT_INTERNAL
    _write(args.out, save_model(compressed))
    if args.report:
        Path(args.report).write_bytes(dump_report(report, include_timings=args.timings))
    print(
        f"knots {report.knots_before} -> {report.knots_after} "
        f"(ratio {report.ratio:.4f}), max certified spline error {report.max_certified_error!r}",
        file=sys.stderr if args.out in (None, "-") else sys.stdout,
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    original = _read_model(args.original)
    candidate = _read_model(args.candidate)
    try:
        gap, witness = verify_equivalence(original, candidate, Sampling(points=args.points, seed=args.seed))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cert = candidate.compression
    bound = args.eps if args.eps is not None else (cert or {}).get("eps")
    status = EXIT_OK

    violations = []
    if cert is not None and original.architecture == candidate.architecture:
        try:
            gaps = recertify(original, candidate)
            for l, j, i, g in gaps:
                budget = cert["splines"][l][j][i]["budget"]
                if g > budget + CERT_SLACK:
                    violations.append((l, j, i, g, budget))
        except (KeyError, IndexError, TypeError, ValueError):
            raise UsageError("candidate carries a malformed compression block") from None
        print(f"recertified splines: {len(gaps)}, violations: {len(violations)}")
        for l, j, i, g, budget in violations:
            print(f"  spline layer={l} out={j} in={i}: exact gap {g!r} > budget {budget!r}")
        if violations:
            status = EXIT_VERIFY

    print(f"measured sup gap: {gap!r}")
    print(f"witness: {','.join(repr(float(v)) for v in witness)}")
    if bound is None:
        print("bound: none declared (reported-only)")
    elif original.depth == 1:
        ok = gap <= bound
        print(f"bound: {bound!r} ({'ok' if ok else 'VIOLATED'})")
        if not ok:
            status = EXIT_VERIFY
    else:
        print(f"bound: {bound!r} (reported-only for depth {original.depth})")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polykan", description="Certified knot-elimination compression of KAN models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a deterministic synthetic model")
    p.add_argument("--arch", required=True, help="layer widths, e.g. 2,3,1")
    p.add_argument("--knots", type=int, default=5, help="knots per spline, endpoints included")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--target", default="random_controls", help="random_controls, sin, exp, gaussian or ramp")
    p.add_argument("--domain", default="-1,1", help="input interval lo,hi")
    p.add_argument("--lipschitz", action="store_true", help="make every layer after the first 1-Lipschitz")
    p.add_argument("--policy", default="clamp", choices=["clamp", "extrapolate", "error"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("info", help="architecture and region statistics")
    p.add_argument("model")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_info)

    p = sub.add_parser("eval", help="evaluate a model on points")
    p.add_argument("model")
    p.add_argument("--points", help="CSV file, one input vector per row")
    p.add_argument("--grid", type=int, help="tensor grid with this many points per axis")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compress", help="compress a model within a global sup-norm budget")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--report")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--budget-policy", default="uniform", help="uniform | knot-weighted | explicit:e1,e2,...")
    p.add_argument("--fit", default="least-squares", choices=["least-squares", "remez"])
    p.add_argument("--degree-cap", type=int)
    p.add_argument("--samples-per-piece", type=int)
    p.add_argument("--remez-iterations", type=int, default=30)
    p.add_argument("--pin-endpoints", action="store_true")
    p.add_argument("--threads", type=int, help="worker threads (default: POLYKAN_THREADS or CPU count)")
    p.add_argument("--timings", action="store_true", help="include per-spline wall-clock in the report")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("verify", help="measure the sup gap between two models")
    p.add_argument("original")
    p.add_argument("candidate")
    p.add_argument("--eps", type=float, help="declared bound (default: the candidate's own eps)")
    p.add_argument("--points", type=int, default=2 ** 14)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (UsageError, ValueError) as exc:
        print(f"polykan {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"polykan {args.command}: internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
