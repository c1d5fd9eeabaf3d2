"""JSON form of compression reports."""

from __future__ import annotations

import json

from .compressor import CompressionReport

REPORT_FORMAT = "polykan-report/1"

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "polykan compression report",
    "type": "object",
    "required": ["format", "eps", "budget_policy", "layer_budgets", "spline_budgets", "totals", "splines"],
    "properties": {
        "format": {"const": REPORT_FORMAT},
        "eps": {"type": "number", "exclusiveMinimum": 0},
        "budget_policy": {"type": "string"},
        "out_of_domain_policy": {"enum": ["clamp", "extrapolate", "error"]},
        "layer_budgets": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "spline_budgets": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "totals": {
            "type": "object",
            "required": ["knots_before", "knots_after", "ratio", "max_certified_error"],
            "properties": {
                "knots_before": {"type": "integer", "minimum": 2},
                "knots_after": {"type": "integer", "minimum": 2},
                "ratio": {"type": "number", "minimum": 0, "maximum": 1},
                "max_certified_error": {"type": "number", "minimum": 0},
            },
        },
        "splines": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["layer", "out_index", "in_index", "knots_before", "knots_after",
                             "certified_error", "budget", "feasibility_calls"],
                "properties": {
                    "layer": {"type": "integer", "minimum": 0},
                    "out_index": {"type": "integer", "minimum": 0},
                    "in_index": {"type": "integer", "minimum": 0},
                    "knots_before": {"type": "integer", "minimum": 2},
                    "knots_after": {"type": "integer", "minimum": 2},
                    "certified_error": {"type": "number", "minimum": 0},
                    "budget": {"type": "number", "exclusiveMinimum": 0},
                    "feasibility_calls": {"type": "integer", "minimum": 1},
                    "seconds": {"type": "number", "minimum": 0},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}


def report_to_dict(report: CompressionReport, include_timings: bool = False) -> dict:
    """Serializable report. Timings are opt-in so that default output is byte-stable."""
    splines = []
    for r in sorted(report.records, key=lambda r: (r.layer, r.out_index, r.in_index)):
        entry = {
            "layer": r.layer,
            "out_index": r.out_index,
            "in_index": r.in_index,
            "knots_before": r.knots_before,
            "knots_after": r.knots_after,
            "certified_error": r.certified_error,
            "budget": r.budget,
            "feasibility_calls": r.feasibility_calls,
        }
        if include_timings:
            entry["seconds"] = r.seconds
        splines.append(entry)
    return {
        "format": REPORT_FORMAT,
        "eps": report.eps,
        "budget_policy": report.budget_policy,
        "out_of_domain_policy": report.out_of_domain_policy,
        "layer_budgets": list(report.layer_budgets),
        "spline_budgets": list(report.spline_budgets),
        "totals": {
            "knots_before": report.knots_before,
            "knots_after": report.knots_after,
            "ratio": report.ratio,
            "max_certified_error": report.max_certified_error,
        },
        "splines": splines,
    }


def dump_report(report: CompressionReport, include_timings: bool = False) -> bytes:
    return (json.dumps(report_to_dict(report, include_timings), indent=1) + "\n").encode()
