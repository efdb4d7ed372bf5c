"""Report assembly and canonical emission (JSON object or CSV table).

Emission is deterministic: keys are sorted, floats are written with 17
significant digits, and nothing time-dependent enters the document, so the
same configuration on the same engine version yields identical bytes.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math

from . import __version__
from .checks import Verdict

SCHEMA_VERSION = 1


def _fmt_float(x: float) -> str:
    return "%.17g" % x


def _plain(obj):
    """Enums, tuples and numpy scalars/arrays -> JSON-ready Python values."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if hasattr(obj, "tolist"):
        return _plain(obj.tolist())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Sorted keys, two-space indent, ``%.17g`` floats, non-finite floats as null."""

    def render(x, depth):
        pad, inner = "  " * depth, "  " * (depth + 1)
        if isinstance(x, dict):
            if not x:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {render(x[k], depth + 1)}" for k in sorted(x)]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(x, list):
            if not x:
                return "[]"
            return "[\n" + ",\n".join(inner + render(v, depth + 1) for v in x) + "\n" + pad + "]"
        if isinstance(x, bool) or x is None:
            return json.dumps(x)
        if isinstance(x, int):
            return str(x)
        if isinstance(x, float):
            return _fmt_float(x) if math.isfinite(x) else "null"
        return json.dumps(x)

    return render(_plain(obj), 0) + "\n"


def _result_dict(r):
    return dict(name=r.name, kind=r.kind, value=r.value, tolerance=r.tolerance, verdict=r.verdict,
                label=r.label, notes=r.notes)


def build_report(result, config_echo: dict, convergence=None) -> dict:
    """Plain-data report for a :class:`~kahlercheck.runner.RunResult`."""
    samples = []
    for i, (u, res) in enumerate(zip(result.grid, result.samples)):
        samples.append(dict(index=i, u=[float(x) for x in u], results=[_result_dict(r) for r in res]))
    aggs = [dict(name=a.name, kind=a.kind, verdict=a.verdict, maxResidual=a.maxResidual, minMargin=a.minMargin,
                 labels=a.labels, counts=a.counts) for a in result.aggregates]
    doc = dict(
        schemaVersion=SCHEMA_VERSION,
        engineVersion=__version__,
        config=config_echo,
        verdict=result.verdict,
        sliceLabel=result.sliceLabel,
        sampleCount=len(result.grid),
        errorCount=len(result.errors),
        errors=[dict(index=i, message=m) for i, m in result.errors],
        aggregates=aggs,
        gridResults=[_result_dict(r) for r in result.gridResults],
        samples=samples,
    )
    if convergence is not None:
        doc["convergence"] = convergence
    return _plain(doc)


def convergence_table(check: str, rows, orders) -> dict:
    return dict(check=check, rows=[dict(h=h, residual=r) for h, r in rows], observedOrders=list(orders),
                monotone=all(b[1] < a[1] for a, b in zip(rows, rows[1:])))


def report_csv(report: dict) -> str:
    """One row per sample x applicable per-sample check."""
    dim = len(report["samples"][0]["u"]) if report["samples"] else 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sample"] + [f"u{k + 1}" for k in range(dim)]
               + ["check", "kind", "value", "tolerance", "verdict", "label"])
    for s in report["samples"]:
        coords = [_fmt_float(x) for x in s["u"]]
        for r in s["results"]:
            if r["verdict"] == Verdict.NOT_APPLICABLE.value:
                continue
            val = "" if r["value"] is None else _fmt_float(r["value"])
            w.writerow([s["index"]] + coords + [r["name"], r["kind"], val, _fmt_float(r["tolerance"]),
                                                r["verdict"], r["label"] or ""])
    return buf.getvalue()


def convergence_csv(table: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "residual", "observed_order"])
    orders = [""] + [_fmt_float(o) for o in table["observedOrders"]]
    for row, order in zip(table["rows"], orders):
        w.writerow([_fmt_float(row["h"]), _fmt_float(row["residual"]), order])
    return buf.getvalue()


def emit(report: dict, fmt: str = "json") -> bytes:
    """Serialize ``report`` as canonical JSON or as the per-sample CSV table."""
    if fmt == "json":
        return canonical_json(report).encode("utf-8")
    if fmt == "csv":
        return report_csv(report).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")
