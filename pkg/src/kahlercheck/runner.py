"""Grid runner: evaluates the selected checks over a chart grid and aggregates them."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .checks import (
    ALL_CHECKS,
    GRID_CHECKS,
    SAMPLE_CHECKS,
    THIRD_ORDER_CHECKS,
    CheckKind,
    SliceLabel,
    Tolerances,
    Verdict,
    analyze_grid,
    evaluate_checks,
    grid_checks,
    slice_classifier,
)
from .catalog import default_grid
from .errors import EngineError
from .jetcalc import DEFAULT_H, ImmersionDefinition, chart_grid

THREADS_ENV = "KAHLERCHECK_THREADS"


@dataclass
class Aggregate:
    name: str
    kind: str
    verdict: Verdict
    maxResidual: float = None
    minMargin: float = None
    labels: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)


@dataclass
class RunResult:
    entry: str
    grid: np.ndarray
    h: float
    tolerances: Tolerances
    checks: list
    samples: list           # list (per sample) of list[CheckResult]
    gridResults: list
    errors: list            # (sample index, message)
    sliceLabel: SliceLabel
    aggregates: list

    @property
    def verdict(self) -> Verdict:
        verdicts = [a.verdict for a in self.aggregates]
        if self.errors or Verdict.FAIL in verdicts:
            return Verdict.FAIL
        return Verdict.PASS

    def aggregate(self, name) -> Aggregate:
        for a in self.aggregates:
            if a.name == name:
                return a
        raise KeyError(name)

    def values(self, name):
        """Numeric values of ``name`` over samples (NotApplicable skipped)."""
        return [r.value for s in self.samples for r in s if r.name == name and r.value is not None]


def resolve_checks(names) -> list:
    """Expand ``"all"`` and validate names, keeping catalogue order."""
    if names is None or names == "all" or list(names) == ["all"]:
        return list(ALL_CHECKS)
    names = list(names)
    if not names:
        raise ValueError("checks filter is empty")
    unknown = [n for n in names if n not in ALL_CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {', '.join(unknown)}")
    return [n for n in ALL_CHECKS if n in names]


def _thread_count():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _aggregate(name, results) -> Aggregate:
    applicable = [r for r in results if r.verdict is not Verdict.NOT_APPLICABLE]
    counts = {v.value: sum(r.verdict is v for r in results) for v in Verdict}
    kind = results[0].kind.value if results else CheckKind.RESIDUAL.value
    if not applicable:
        return Aggregate(name, kind, Verdict.NOT_APPLICABLE, counts=counts)
    verdict = Verdict.FAIL if any(r.verdict is Verdict.FAIL for r in applicable) else Verdict.PASS
    vals = [r.value for r in applicable if r.value is not None]
    agg = Aggregate(name, kind, verdict, counts=counts)
    if vals:
        if kind == CheckKind.MARGIN.value:
            agg.minMargin = float(min(vals))
        else:
            agg.maxResidual = float(max(abs(v) for v in vals))
    agg.labels = sorted({r.label for r in applicable if r.label is not None})
    return agg


def run(imm: ImmersionDefinition, points=None, h: float = DEFAULT_H, tol: Tolerances = None, checks="all",
        grid=None) -> RunResult:
    """Evaluate ``checks`` on the cell-centred grid of ``points`` per axis (or an explicit ``grid``).

    Sample-level evaluation errors are recorded, not raised; the run fails
    if any sample errored.
    """
    tol = tol or Tolerances()
    names = resolve_checks(checks)
    sample_names = [n for n in names if n in SAMPLE_CHECKS]
    if grid is None:
        grid = chart_grid(imm, default_grid(imm) if points is None else points)
    grid = np.atleast_2d(np.asarray(grid, float))
    third = any(n in THIRD_ORDER_CHECKS for n in sample_names)

    threads = _thread_count()
    if threads > 1 and len(grid) > 1:
        parts = np.array_split(grid, min(threads, len(grid)))
        with ThreadPoolExecutor(threads) as ex:
            chunks = list(ex.map(lambda part: analyze_grid(imm, part, h, tol, third), parts))
        analyses = [x for c in chunks for x in c]
    else:
        analyses = analyze_grid(imm, grid, h, tol, third)

    errors = [(i, msg) for i, (_, msg) in enumerate(analyses) if msg is not None]
    ok = [sa for sa, _ in analyses if sa is not None]
    traces = np.array([sa.pt.traceR for sa in ok]) if ok else np.array([np.nan])
    label = slice_classifier(traces, imm.dim, tol.algebraic) if ok else SliceLabel.GENERIC
    samples = [evaluate_checks(imm, sa, sample_names, tol, label) if sa is not None else [] for sa, _ in analyses]
    grid_res = grid_checks(imm, traces, [n for n in names if n in GRID_CHECKS], tol) if ok else []
    aggs = []
    for n in sample_names:
        aggs.append(_aggregate(n, [r for s in samples for r in s if r.name == n]))
    for r in grid_res:
        aggs.append(_aggregate(r.name, [r]))
    return RunResult(entry=imm.name, grid=grid, h=h, tolerances=tol, checks=names, samples=samples,
                     gridResults=grid_res, errors=errors, sliceLabel=label, aggregates=aggs)


def convergence(imm: ImmersionDefinition, check: str, hs, points=None, tol: Tolerances = None):
    """Table of ``(h, max residual)`` for one residual-type check over a grid.

    Returns ``(rows, orders)`` where ``orders[k]`` is the observed order between
    consecutive rows, ``log(r_k / r_{k+1}) / log(h_k / h_{k+1})``.
    """
    if check not in SAMPLE_CHECKS:
        raise ValueError(f"unknown check {check!r}")
    rows = []
    for h in hs:
        res = run(imm, points=points, h=float(h), tol=tol, checks=[check])
        if res.errors:
            raise EngineError(f"evaluation failed at h={h}: {res.errors[0][1]}")
        vals = [abs(v) for v in res.values(check)]
        rows.append((float(h), float(max(vals)) if vals else float("nan")))
    orders = []
    for (h0, r0), (h1, r1) in zip(rows, rows[1:]):
        if r0 > 0 and r1 > 0:
            orders.append(float(np.log(r0 / r1) / np.log(h0 / h1)))
        else:
            orders.append(float("inf"))
    return rows, orders
