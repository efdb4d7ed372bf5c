"""Run configuration: INI-style text with [target] [immersion] [grid] [checks] [output].

Example::

    [target]
    c1 = 1
    n1 = 3
    c2 = 0
    n2 = 1

    [immersion]
    name = my_torus
    dim = 2
    chart = 0, 2*pi; 0, 2*pi
    x1 = sqrt(0.5)*cos(u1)
    ...
    x5 = 0
    J = 0, -1; 1, 0

    [grid]
    points = 9
    h = 1e-3

    [checks]
    names = all
    algebraic = 1e-6
    fd = 1e-4

    [output]
    path = report.json
    format = json

``[immersion]`` may instead name a catalog entry (``entry = clifford_torus_slice``),
in which case ``[target]`` is optional and must match the entry when given.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

import numpy as np

from .ambient import AmbientProduct
from .catalog import default_grid, get_entry
from .checks import Tolerances
from .errors import ConfigError
from .expr import Expression, ExpressionError, compile_map, compile_matrix
from .jetcalc import DEFAULT_H, ImmersionDefinition
from .runner import resolve_checks

SECTIONS = ("target", "immersion", "grid", "checks", "output")
FORMATS = ("json", "csv")
_HEADER = re.compile(r"\s*\[([^\]]+)\]")
_KEY = re.compile(r"\s*([^=:\s][^=:]*?)\s*[=:]")


@dataclass
class RunConfig:
    immersion: ImmersionDefinition
    entry: str = None           # catalog name when the immersion came from the catalog
    points: object = None       # int or per-axis list
    h: float = DEFAULT_H
    tolerances: Tolerances = field(default_factory=Tolerances)
    checks: list = None
    outPath: str = None
    outFormat: str = "json"
    source: str = None

    def echo(self) -> dict:
        """Plain-data summary for report headers."""
        A = self.immersion.target
        return dict(
            entry=self.immersion.name,
            catalog=self.entry is not None,
            target=dict(c1=A.c1, n1=A.factor1.dim, c2=A.c2, n2=A.factor2.dim),
            points=self.points if self.points is not None else default_grid(self.immersion),
            h=self.h,
            tolerances=dict(algebraic=self.tolerances.algebraic, fd=self.tolerances.fd),
            checks=list(self.checks),
            format=self.outFormat,
        )


def _line_index(text):
    """``{(section, key): line}`` and ``{section: line}`` (1-based) from raw text."""
    keys, sections, current = {}, {}, None
    for no, line in enumerate(text.splitlines(), 1):
        if line.lstrip().startswith(("#", ";")):
            continue
        m = _HEADER.match(line)
        if m:
            current = m.group(1).strip().lower()
            sections.setdefault(current, no)
            continue
        m = _KEY.match(line)
        if m and current is not None and not line[:1].isspace():
            keys.setdefault((current, m.group(1).strip().lower()), no)
    return keys, sections


class _Reader:
    """Typed field access that raises :class:`ConfigError` with section/field/line."""

    def __init__(self, parser, text, source):
        self.parser = parser
        self.keys, self.sections = _line_index(text)
        self.source = source or "<config>"

    def fail(self, section, key, message):
        line = self.keys.get((section, key)) if key else self.sections.get(section)
        where = f"[{section}]" + (f" {key}" if key else "")
        at = f"{self.source}:{line}: " if line else f"{self.source}: "
        exc = ConfigError(f"{at}{where}: {message}")
        exc.section, exc.field, exc.line = section, key, line
        raise exc

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None, required=False):
        if not self.parser.has_section(section) or not self.parser.has_option(section, key):
            if required:
                self.fail(section, None, f"missing required field '{key}'")
            return default
        return self.parser.get(section, key).strip()

    def number(self, section, key, default=None, required=False, positive=False, integer=False):
        raw = self.raw(section, key, None, required)
        if raw is None:
            return default
        try:
            val = float(Expression(raw, 1).value(np.zeros(1)))
        except ExpressionError as exc:
            self.fail(section, key, f"not a number: {exc}")
        if not np.isfinite(val):
            self.fail(section, key, f"not finite: {raw!r}")
        if integer:
            if val != int(val):
                self.fail(section, key, f"expected an integer, got {raw!r}")
            val = int(val)
        if positive and val <= 0:
            self.fail(section, key, f"must be > 0, got {raw!r}")
        return val


def _split_rows(raw):
    """``"a, b; c, d"`` -> ``[["a", "b"], ["c", "d"]]``."""
    return [[c.strip() for c in row.split(",")] for row in raw.split(";") if row.strip()]


def _block_rotation(dim):
    J = np.zeros((dim, dim))
    for k in range(0, dim, 2):
        J[k + 1, k], J[k, k + 1] = 1.0, -1.0
    return J


def _target(rd: _Reader, required):
    if not rd.parser.has_section("target"):
        if required:
            rd.fail("target", None, "section is required for inline immersions")
        return None
    c1 = rd.number("target", "c1", required=True)
    c2 = rd.number("target", "c2", required=True)
    n1 = rd.number("target", "n1", required=True, positive=True, integer=True)
    n2 = rd.number("target", "n2", required=True, positive=True, integer=True)
    return AmbientProduct.of(c1, n1, c2, n2)


def _inline_immersion(rd: _Reader, A: AmbientProduct) -> ImmersionDefinition:
    sec = "immersion"
    dim = rd.number(sec, "dim", required=True, positive=True, integer=True)
    params = {"t": rd.number(sec, "t", default=0.0)}
    chart_raw = rd.raw(sec, "chart", required=True)
    rows = _split_rows(chart_raw)
    if len(rows) != dim or any(len(r) != 2 for r in rows):
        rd.fail(sec, "chart", f"expected {dim} ranges 'lo, hi' separated by ';'")
    try:
        chart = [[float(Expression(c, dim, params).value(np.zeros(dim))) for c in r] for r in rows]
    except ExpressionError as exc:
        rd.fail(sec, "chart", str(exc))
    N = A.flat_dim
    texts = []
    for k in range(1, N + 1):
        raw = rd.raw(sec, f"x{k}")
        if raw is None:
            rd.fail(sec, None, f"missing component x{k} (target {A.label()} has {N} ambient coordinates)")
        try:
            Expression(raw, dim, params)
        except ExpressionError as exc:
            rd.fail(sec, f"x{k}", str(exc))
        texts.append(raw)
    extra = [o for o in rd.parser.options(sec) if re.fullmatch(r"x\d+", o) and int(o[1:]) > N]
    if extra:
        rd.fail(sec, extra[0], f"target {A.label()} has only {N} ambient coordinates")
    f, df = compile_map(texts, dim, params)
    J = _block_rotation(dim)
    raw_J = rd.raw(sec, "j")
    if raw_J is not None:
        jrows = _split_rows(raw_J)
        if len(jrows) != dim or any(len(r) != dim for r in jrows):
            rd.fail(sec, "j", f"expected a {dim}x{dim} matrix written 'a, b; c, d'")
        try:
            J = compile_matrix(jrows, dim, params)
        except ExpressionError as exc:
            rd.fail(sec, "j", str(exc))
    name = rd.raw(sec, "name", default="inline")
    try:
        return ImmersionDefinition(name=name, dim=dim, chart=chart, map=f, dmap=df, target=A, J=J,
                                   description=rd.raw(sec, "description", default="inline immersion"))
    except ValueError as exc:
        rd.fail(sec, None, str(exc))


def parse_config(text: str, source: str = None) -> RunConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        err = ConfigError(f"{source or '<config>'}:{line or '?'}: {exc.message.splitlines()[0]}")
        err.section, err.field, err.line = None, None, line
        raise err from None
    rd = _Reader(parser, text, source)
    for s in parser.sections():
        if s not in SECTIONS:
            rd.fail(s, None, f"unknown section (expected one of {', '.join(SECTIONS)})")
    if not parser.has_section("immersion"):
        rd.fail("immersion", None, "section is required")

    entry = rd.raw("immersion", "entry")
    if entry is not None:
        try:
            imm = get_entry(entry)
        except KeyError:
            rd.fail("immersion", "entry", f"unknown catalog entry {entry!r}")
        A = _target(rd, required=False)
        if A is not None and A != imm.target:
            rd.fail("target", None, f"does not match entry {entry!r} ({imm.target.label()})")
    else:
        imm = _inline_immersion(rd, _target(rd, required=True))

    points = None
    raw_points = rd.raw("grid", "points")
    if raw_points is not None:
        try:
            vals = [int(p) for p in raw_points.replace(",", " ").split()]
        except ValueError:
            rd.fail("grid", "points", f"expected integers, got {raw_points!r}")
        if not vals or any(v < 1 for v in vals) or len(vals) not in (1, imm.dim):
            rd.fail("grid", "points", f"expected 1 or {imm.dim} positive integers")
        points = vals[0] if len(vals) == 1 else vals
    h = rd.number("grid", "h", default=DEFAULT_H, positive=True)
    if h >= 0.05:
        rd.fail("grid", "h", "relative step must be below 0.05 so stencils stay inside the chart")

    tol = Tolerances(
        algebraic=rd.number("checks", "algebraic", default=Tolerances().algebraic, positive=True),
        fd=rd.number("checks", "fd", default=Tolerances().fd, positive=True),
    )
    raw_names = rd.raw("checks", "names", default="all")
    names = [n.strip() for n in raw_names.replace(",", " ").split()]
    try:
        checks = resolve_checks(names if names != ["all"] else "all")
    except ValueError as exc:
        rd.fail("checks", "names", str(exc))

    fmt = rd.raw("output", "format", default="json").lower()
    if fmt not in FORMATS:
        rd.fail("output", "format", f"expected one of {', '.join(FORMATS)}, got {fmt!r}")
    return RunConfig(immersion=imm, entry=entry, points=points, h=h, tolerances=tol, checks=checks,
                     outPath=rd.raw("output", "path"), outFormat=fmt, source=source)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from None
    return parse_config(text, source=str(path))
