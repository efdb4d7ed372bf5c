"""Identities, obstructions and curvature bounds as named residuals and margins.

A *Residual* passes when ``|value| <= tolerance``, a *Margin* when
``value >= -tolerance``.  A *Classifier* carries a label; it fails only
when the label contradicts an expectation recorded on the immersion, or
when a nonexistence statement would be violated (which can only mean an
engine bug, since numerics cannot produce a genuine counterexample).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .ambient import on_manifold_residual, tangent_project_Q
from .errors import EngineError, KahlerError, TargetShapeError
from .jetcalc import DEFAULT_H, ImmersionDefinition, build_frames, compute_jet, metric_from_d1
from .kahler import (
    CurvaturePackage,
    J_in_frame,
    Route,
    _parallel_defect,
    _square_ortho,
    adapted_frame,
    coefficient_A,
    curvature_J_commutation,
    defect_arrays,
    curvature_package,
    ricci_J_invariance,
    riemann_coordinates,
    ricci_via_gauss,
    ricci_via_kahler_identity,
    trace_JR,
)
from .tensors import (
    GeometrySample,
    ProductTensors,
    coordinate_S_and_R,
    covariant_alpha_derivative,
    minimality_residual,
    normal_curvature,
    product_tensors,
    rj_jr,
    second_fundamental_form,
    vertical_projection_norm,
)

SPECTRAL_TOL = 1e-8
COMPLEMENT_TOL = 1e-9
ROUTE_TOL = 1e-7
COMMUTATION_TOL = 1e-5
EQUALITY_TOL = 1e-4
ANTI_EQUALITY_TOL = 1e-5


class CheckKind(enum.Enum):
    RESIDUAL = "Residual"
    MARGIN = "Margin"
    CLASSIFIER = "Classifier"


class Verdict(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    NOT_APPLICABLE = "NotApplicable"


class SliceLabel(enum.Enum):
    FIRST = "FirstFactorSlice"
    SECOND = "SecondFactorSlice"
    GENERIC = "Generic"


@dataclass
class Tolerances:
    algebraic: float = 1e-6
    fd: float = 1e-4

    def __post_init__(self):
        if not (self.algebraic > 0 and self.fd > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class CheckResult:
    name: str
    kind: CheckKind
    value: Optional[float]
    tolerance: float
    verdict: Verdict
    samplePoint: Optional[tuple] = None
    label: Optional[str] = None
    notes: str = ""


def residual(name, value, tol, u=None, notes="") -> CheckResult:
    v = float(value)
    ok = abs(v) <= tol
    return CheckResult(name, CheckKind.RESIDUAL, v, tol, Verdict.PASS if ok else Verdict.FAIL, u, None, notes)


def margin(name, value, tol, u=None, notes="") -> CheckResult:
    v = float(value)
    ok = v >= -tol
    return CheckResult(name, CheckKind.MARGIN, v, tol, Verdict.PASS if ok else Verdict.FAIL, u, None, notes)


def not_applicable(name, kind, tol, u=None, notes="") -> CheckResult:
    return CheckResult(name, kind, None, tol, Verdict.NOT_APPLICABLE, u, None, notes)


def classifier(name, label, value, tol, ok=True, u=None, notes="") -> CheckResult:
    v = None if value is None else float(value)
    return CheckResult(name, CheckKind.CLASSIFIER, v, tol, Verdict.PASS if ok else Verdict.FAIL, u, label, notes)


# -- pluriharmonicity ------------------------------------------------------------


@dataclass
class DefectVectors:
    """Stacked defect vectors ``u_i = (alpha(X_i, JX_j))_j`` and ``v_i = (alpha(X_j, JX_i))_j``."""

    u: np.ndarray  # (2n, 2n, k)
    v: np.ndarray
    uNorms: np.ndarray
    vNorms: np.ndarray
    diffNormsSq: np.ndarray
    sumNormsSq: np.ndarray


def pluriharmonic_residual(gs: GeometrySample, Jm) -> float:
    """``max_ij |alpha(X_i, JX_j) - alpha(JX_i, X_j)|``."""
    u, v = defect_arrays(gs, Jm)
    return float(np.max(np.linalg.norm(u - v, axis=-1))) if u.size else 0.0


def antipluriharmonic_residual(gs: GeometrySample, Jm) -> float:
    """``max_ij |alpha(X_i, JX_j) + alpha(JX_i, X_j)|``."""
    u, v = defect_arrays(gs, Jm)
    return float(np.max(np.linalg.norm(u + v, axis=-1))) if u.size else 0.0


def pluriharmonicity_property_lhs(R, Jm, c1: float, c2: float, n: int) -> float:
    """``4 c1 (n-1)(n - tr R) + (c1+c2)((tr R)^2 - |R|^2 - <RJ, JR>)``."""
    R = np.asarray(R, float)
    tr = np.trace(R)
    return float(4.0 * c1 * (n - 1) * (n - tr) + (c1 + c2) * (tr * tr - np.sum(R * R) - rj_jr(R, Jm)))


def defect_vectors(gs: GeometrySample, Jm) -> DefectVectors:
    u, v = defect_arrays(gs, Jm)
    return DefectVectors(
        u=u,
        v=v,
        uNorms=np.sqrt(np.einsum("ijn,ijn->i", u, u)),
        vNorms=np.sqrt(np.einsum("ijn,ijn->i", v, v)),
        diffNormsSq=np.einsum("ijn,ijn->i", u - v, u - v),
        sumNormsSq=np.einsum("ijn,ijn->i", u + v, u + v),
    )


def coefficients_BC(pt: ProductTensors, c1: float, c2: float):
    """``(B_i, C_i)``; C uses ``J^T R J`` and ``J^T R^2 J`` in place of R and R^2."""
    R, J = pt.Rmat, pt.Jm
    n = pt.n
    tr = np.trace(R)

    def coef(Rd, R2d):
        return c1 * (2 * n - 1 - tr - 2 * (n - 1) * Rd) + (c1 + c2) * (Rd * tr - R2d)

    R2 = R @ R
    B = coef(np.diag(R), np.diag(R2))
    C = coef(np.diag(J.T @ R @ J), np.diag(J.T @ R2 @ J))
    return B, C


def defect_identity_residuals(dv: DefectVectors, pt: ProductTensors, c1, c2, n, ric: CurvaturePackage):
    """Residuals of the two defect identities.

    Returns ``(pluri, scalar)``: ``|1/2 sum |u_i - v_i|^2 - LHS|`` and the
    larger of the per-direction identity ``|u_i + v_i|^2 = -4 Ric(X_i) + 2A_i
    + B_i + C_i`` and its sum against ``-4 Scal``.
    """
    lhs = pluriharmonicity_property_lhs(pt.Rmat, pt.Jm, c1, c2, n)
    pluri = abs(0.5 * float(np.sum(dv.diffNormsSq)) - lhs)
    A = coefficient_A(pt, c1, c2)
    B, C = coefficients_BC(pt, c1, c2)
    ricd = ric.ric_diag
    per = np.max(np.abs(dv.sumNormsSq - (-4.0 * ricd + 2.0 * A + B + C)))
    total = abs(float(np.sum(dv.sumNormsSq)) - (float(np.sum(2.0 * A + B + C)) - 4.0 * ric.scal))
    return pluri, float(max(per, total))


def scalar_bound_rhs(pt: ProductTensors, c1, c2, n) -> float:
    R = pt.Rmat
    tr = pt.traceR
    return float(2 * n * c1 * (n - tr) + 0.5 * (c1 + c2) * (tr * tr - np.sum(R * R) + pt.rjjr))


# -- slices and obstructions -----------------------------------------------------


def slice_classifier(traces, dim: int, tol: float = 1e-6) -> SliceLabel:
    traces = np.asarray(traces, float)
    if np.max(np.abs(traces)) < tol:
        return SliceLabel.FIRST
    if np.max(np.abs(traces - dim)) < tol:
        return SliceLabel.SECOND
    return SliceLabel.GENERIC


def warped_obstruction_lhs(n, c, rho, drho, ddrho, t, Tnorm2) -> float:
    """Pluriharmonicity expression for a warped target ``I x_rho Q_c``.

    ``rho``, ``drho``, ``ddrho`` are values at ``t`` or callables of ``t``.
    Returns ``4(n-1)(n lambda - |d_t^T|^2 mu)`` with ``lambda = (c - rho'^2)/rho^2``
    and ``mu = lambda + rho''/rho``.
    """
    def at(x):
        return float(x(t)) if callable(x) else float(x)

    r, dr, ddr = at(rho), at(drho), at(ddrho)
    if not r > 0:
        raise ValueError(f"warping function must be positive, got rho({t}) = {r}")
    lam = (c - dr * dr) / (r * r)
    mu = lam + ddr / r
    return 4.0 * (n - 1) * (n * lam - Tnorm2 * mu)


def obstruction_report(A, n, minimal: bool, pluriharmonic: bool, u=None) -> CheckResult:
    """Consistency with the n = 1 conclusion on targets ``Q_c^{m-1} x R``."""
    name = "obstruction_QxR"
    if not A.is_QxR():
        return not_applicable(name, CheckKind.CLASSIFIER, 0.0, u, "target is not Q x R")
    c = A.c1
    premises = (c < 0 and minimal) or (c > 0 and pluriharmonic)
    if not premises:
        why = "not minimal" if c < 0 else "not pluriharmonic"
        return not_applicable(name, CheckKind.CLASSIFIER, 0.0, u, f"premises fail: {why}")
    ok = n == 1
    # charts are local, so the simply-connected hypothesis is assumed rather than tested
    note = "simply connected domain assumed" if ok else \
        f"premises hold with n = {n}: the n = 1 conclusion is violated; engine bug suspected"
    return classifier(name, f"n={n}", n, 0.0, ok, u, note)


def opposite_curvature_branch(A, n, trR, pluriharmonic: bool, tol, u=None) -> CheckResult:
    """On ``Q_c x Q_{-c}`` a pluriharmonic sample has ``tr R = n`` or ``n = 1``."""
    name = "opposite_curvature_branch"
    if not A.is_opposite_curvature():
        return not_applicable(name, CheckKind.CLASSIFIER, tol, u, "curvatures are not opposite")
    if not pluriharmonic:
        return not_applicable(name, CheckKind.CLASSIFIER, tol, u, "not pluriharmonic")
    if n == 1:
        return classifier(name, "n=1", trR, tol, True, u)
    ok = abs(trR - n) <= tol
    return classifier(name, "trR=n" if ok else "violated", trR, tol, ok, u)


def rj_commutator_checks(pt: ProductTensors, c1, c2, n, pluriharmonic: bool, tol, u=None) -> CheckResult:
    name = "rj_commutator"
    if not pluriharmonic:
        return not_applicable(name, CheckKind.CLASSIFIER, tol, u, "not pluriharmonic")
    R, J = pt.Rmat, pt.Jm
    anti = float(np.max(np.abs(R @ J + J @ R)))
    twoJ = float(np.max(np.abs(R @ J + J @ R - 2.0 * J)))
    if anti <= tol:
        ok = (c1 == 0 or n == 1) and abs(pt.traceR) <= tol
        return classifier(name, "RJ+JR=0", anti, tol, ok, u, f"trR={pt.traceR:.3e}")
    if twoJ <= tol:
        ok = (c2 == 0 or n == 1) and abs(pt.traceR - 2 * n) <= tol
        return classifier(name, "RJ+JR=2J", twoJ, tol, ok, u, f"trR={pt.traceR:.3e}")
    return not_applicable(name, CheckKind.CLASSIFIER, tol, u, "neither RJ+JR=0 nor RJ+JR=2J")


# -- curvature bounds ------------------------------------------------------------


def ricci_margin_SxR(ric: CurvaturePackage, pt: ProductTensors, c, n) -> float:
    """``c(2n - |d_t^T|^2)/2 - max Ric`` over unit directions."""
    return c * (2 * n - pt.traceR) / 2.0 - ric.ric_extremes()[1]


def scalar_margin_SxR(ric: CurvaturePackage, pt: ProductTensors, c, n) -> float:
    return 2 * n * c * (n - pt.traceR) - ric.scal


def ricci_margin_SxH(ric: CurvaturePackage, pt: ProductTensors, c, n) -> float:
    return c * (2 * n - pt.traceR) / 2.0 - ric.ric_extremes()[1]


def scalar_margin_general(ric: CurvaturePackage, pt: ProductTensors, c1, c2, n) -> float:
    return scalar_bound_rhs(pt, c1, c2, n) - ric.scal


def takahashi_bounds(ric: CurvaturePackage, gs: GeometrySample, c, n_real):
    """``(Ric_min - lower, upper - Ric_max)`` with ``lower = ((n-1)/n)(cn - |alpha|^2)``, ``upper = c(n-1)``."""
    lo, hi = ric.ric_extremes()
    lower = (n_real - 1) / n_real * (c * n_real - gs.norm_alpha_sq)
    return lo - lower, c * (n_real - 1) - hi


def dajczer_rodriguez_margin(ric: CurvaturePackage, c, n) -> float:
    return c * n - ric.ric_extremes()[1]


# -- third-order residuals -------------------------------------------------------


def _steps_for(imm, h):
    return imm.steps(DEFAULT_H) if h is None else np.broadcast_to(np.asarray(h, float), (imm.dim,))


def _nabla_alpha(imm, u, steps, Nf):
    """Normal components of ``(nabla^perp_k alpha)(i, j)``, shape (..., k, i, j, a)."""
    D = covariant_alpha_derivative(imm, u, steps, Nf)
    Nb = Nf.reshape(Nf.shape[:-2] + (1, 1, 1) + Nf.shape[-2:])
    return np.einsum("...n,...an->...a", D * imm.target.eta, Nb)


def _codazzi_from(imm, u, D, Nf):
    """Per-sample max of |Codazzi LHS - RHS| from precomputed ``nabla^perp alpha``."""
    A = imm.target
    lhs = D - np.swapaxes(D, -4, -3)
    D1 = imm.eval_dmap(u)
    g = metric_from_d1(D1, A.eta)
    s, r = coordinate_S_and_R(imm.eval_map(u), D1, Nf, A)  # s[..., i, a]
    rhs = A.c1 * (np.einsum("...kj,...ia->...kija", g, s) - np.einsum("...ij,...ka->...kija", g, s)) + (
        A.c1 + A.c2
    ) * (np.einsum("...ij,...ka->...kija", r, s) - np.einsum("...kj,...ia->...kija", r, s))
    return np.max(np.linalg.norm(lhs - rhs, axis=-1), axis=(-3, -2, -1))


def codazzi_residual(imm: ImmersionDefinition, u, h=None, frames=None) -> float:
    """Max over coordinate triples of |Codazzi LHS - RHS| (normal components).

    ``h`` is the per-axis step; ``(nabla^perp alpha)`` comes from FD of the
    frame-free coordinate second fundamental form plus Christoffel terms.
    """
    u = np.asarray(u, float)
    steps = _steps_for(imm, h)
    if frames is None:
        frames = build_frames(compute_jet(imm, u, steps))
    Nf = frames.normalFrame
    if Nf.shape[-2] == 0:
        return 0.0
    return float(_codazzi_from(imm, u, _nabla_alpha(imm, u, steps, Nf), Nf))


def parallel_alpha_residual(imm: ImmersionDefinition, u, h=None, frames=None) -> float:
    """Max over coordinate triples of ``|(nabla^perp alpha)(d_k, d_i, d_j)|``."""
    u = np.asarray(u, float)
    steps = _steps_for(imm, h)
    if frames is None:
        frames = build_frames(compute_jet(imm, u, steps))
    Nf = frames.normalFrame
    if Nf.shape[-2] == 0:
        return 0.0
    return float(np.max(np.linalg.norm(_nabla_alpha(imm, u, steps, Nf), axis=-1)))


def _ricci_eq_from(imm, u, steps, j, Nf):
    """Per-sample max of |Ricci-equation LHS - RHS|; batched over ``u``."""
    A = imm.target
    lhs = normal_curvature(imm, u, steps, Nf)  # (..., i, j, a, b)
    d2t = tangent_project_Q(j.point[..., None, None, :], j.d2, A, check=False)
    Nb = Nf.reshape(Nf.shape[:-2] + (1, 1) + Nf.shape[-2:])
    H = np.moveaxis(np.einsum("...n,...an->...a", d2t * A.eta, Nb), -1, -3)  # H[..., a, i, j]
    ginv = np.linalg.inv(metric_from_d1(j.d1, A.eta))
    shape = np.einsum("...bil,...lm,...amj->...ijab", H, ginv, H)
    s, _ = coordinate_S_and_R(j.point, j.d1, Nf, A)
    rhs = shape - np.swapaxes(shape, -4, -3) + (A.c1 + A.c2) * (
        np.einsum("...ja,...ib->...ijab", s, s) - np.einsum("...ia,...jb->...ijab", s, s)
    )
    return np.max(np.abs(lhs - rhs), axis=(-4, -3, -2, -1))


def ricci_eq_residual(imm: ImmersionDefinition, u, h=None, frames=None) -> float:
    """Max over coordinate pairs and normal directions of |Ricci-equation LHS - RHS|."""
    u = np.asarray(u, float)
    steps = _steps_for(imm, h)
    j = compute_jet(imm, u, steps)
    if frames is None:
        frames = build_frames(j)
    Nf = frames.normalFrame
    if Nf.shape[-2] == 0:
        return 0.0
    return float(_ricci_eq_from(imm, u, steps, j, Nf))


# -- per-sample pipeline ---------------------------------------------------------


@dataclass
class SampleAnalysis:
    """Every per-sample quantity the checks read."""

    u: np.ndarray
    steps: np.ndarray
    onManifold: float
    frameDefect: float
    squareResidual: float
    orthoResidual: float
    parallelResidual: float
    kahler: bool
    adapted: bool
    Jm: np.ndarray
    gs: GeometrySample
    pt: ProductTensors
    ricFD: CurvaturePackage
    ricGauss: CurvaturePackage
    ricKahler: Optional[CurvaturePackage]
    minimality: float
    pluri: float
    antipluri: float
    dv: DefectVectors
    codazzi: Optional[float] = None
    ricciEq: Optional[float] = None
    parallelAlpha: Optional[float] = None
    sffDefect: float = 0.0
    tangentFrame: Optional[np.ndarray] = None  # adapted frame rows
    notes: list = field(default_factory=list)


def _sff_defect(gs: GeometrySample, fr, A):
    wein = gs.weingarten
    sym = float(np.max(np.abs(wein - np.swapaxes(wein, -1, -2)))) if wein.size else 0.0
    tang = float(np.max(np.abs(np.einsum("abn,n,cn->abc", gs.alpha, A.eta, fr.tangentFrame))))
    recon = np.einsum("abk,kn->abn", gs.alphaNormal, fr.normalFrame) if wein.size else 0.0 * gs.alpha
    normal = float(np.max(np.abs(gs.alpha - recon)))
    return max(sym, tang, normal)


def fd_batch(imm: ImmersionDefinition, U, steps, third_order: bool = True) -> dict:
    """Nested finite-difference quantities for a batch of parameter points ``U`` (P, 2n).

    These dominate the cost of a sample and vectorize across points:
    coordinate Riemann tensor ``Rc``, the J parallelism defect, and when
    ``third_order`` the Codazzi, Ricci-equation and parallel-alpha residuals.
    Every value has a leading axis of length P.
    """
    U = np.atleast_2d(np.asarray(U, float))
    A = imm.target
    imm.check_inside(U, 4 * np.asarray(steps))
    j = compute_jet(imm, U, steps)
    fr = build_frames(j, A)
    g = metric_from_d1(j.d1, A.eta)
    out = dict(
        Rc=riemann_coordinates(imm, U, steps),
        parallelJ=_parallel_defect(imm, U, steps, fr.coordToFrame, g),
    )
    if third_order:
        Nf = fr.normalFrame
        if Nf.shape[-2] == 0:
            zero = np.zeros(len(U))
            out.update(codazzi=zero, ricciEq=zero, parallelAlpha=zero)
        else:
            D = _nabla_alpha(imm, U, steps, Nf)
            out["codazzi"] = _codazzi_from(imm, U, D, Nf)
            out["parallelAlpha"] = np.max(np.linalg.norm(D, axis=-1), axis=(-3, -2, -1))
            out["ricciEq"] = _ricci_eq_from(imm, U, steps, j, Nf)
    return out


def analyze_sample(imm: ImmersionDefinition, u, h: float = DEFAULT_H, tol: Tolerances = None,
                   third_order: bool = True, fd: dict = None) -> SampleAnalysis:
    """Compute the full per-sample package at parameter point ``u``.

    ``h`` is the relative step; per-axis steps are ``h`` times the chart extent.
    ``fd`` optionally supplies this sample's slice of :func:`fd_batch`.
    """
    tol = tol or Tolerances()
    u = np.asarray(u, float)
    A = imm.target
    steps = imm.steps(h)
    if fd is None:
        fd = {k: v[0] for k, v in fd_batch(imm, u[None], steps, third_order).items()}
    j = compute_jet(imm, u, steps)
    fr = build_frames(j, A)
    gram = fr.gram(A)
    frame_defect = float(np.max(np.abs(gram - np.eye(len(gram)))))
    g = metric_from_d1(j.d1, A.eta)
    Jm0 = J_in_frame(imm.eval_J(u), fr.coordToFrame, g)
    sq, orth = _square_ortho(Jm0)
    par = float(fd["parallelJ"])
    notes = []
    try:
        afr, Jm = adapted_frame(fr, Jm0)
        adapted = True
    except KahlerError as exc:
        afr, Jm, adapted = fr, Jm0, False
        notes.append(str(exc))
    kahler = adapted and sq <= tol.algebraic and orth <= tol.algebraic and par <= tol.fd
    gs = second_fundamental_form(j, afr, A)
    pt = product_tensors(j, afr, Jm, A)
    B = afr.coordToFrame
    riem = np.einsum("ai,bj,ck,dl,ijkl->abcd", B, B, B, B, fd["Rc"], optimize=True)
    ric_fd = curvature_package(riem, Route.INTRINSIC_FD)
    ric_g = ricci_via_gauss(gs, pt, A.c1, A.c2)
    mres = minimality_residual(gs)
    ric_k = ricci_via_kahler_identity(gs, pt, A.c1, A.c2) if mres <= tol.algebraic else None
    sa = SampleAnalysis(
        u=u, steps=steps, onManifold=float(on_manifold_residual(j.point, A)), frameDefect=frame_defect,
        squareResidual=float(sq), orthoResidual=float(orth), parallelResidual=par, kahler=kahler,
        adapted=adapted, Jm=Jm, gs=gs, pt=pt, ricFD=ric_fd, ricGauss=ric_g, ricKahler=ric_k,
        minimality=mres, pluri=pluriharmonic_residual(gs, Jm), antipluri=antipluriharmonic_residual(gs, Jm),
        dv=defect_vectors(gs, Jm), sffDefect=_sff_defect(gs, afr, A), tangentFrame=afr.tangentFrame,
        notes=notes,
    )
    if third_order:
        sa.codazzi = float(fd["codazzi"])
        sa.ricciEq = float(fd["ricciEq"])
        sa.parallelAlpha = float(fd["parallelAlpha"])
    return sa


def analyze_grid(imm: ImmersionDefinition, U, h: float = DEFAULT_H, tol: Tolerances = None,
                 third_order: bool = True, chunk: int = 128) -> list:
    """``[(SampleAnalysis or None, error message or None)]`` in grid order.

    Finite-difference work is batched per chunk; if a chunk raises, its
    samples are redone one at a time so the error is pinned to a sample.
    """
    U = np.atleast_2d(np.asarray(U, float))
    steps = imm.steps(h)
    out = []
    for start in range(0, len(U), chunk):
        block = U[start:start + chunk]
        try:
            fd = fd_batch(imm, block, steps, third_order)
        except EngineError:
            fd = None
        for p, u in enumerate(block):
            try:
                mine = None if fd is None else {k: v[p] for k, v in fd.items()}
                out.append((analyze_sample(imm, u, h, tol, third_order, mine), None))
            except EngineError as exc:
                out.append((None, f"{type(exc).__name__}: {exc}"))
    return out


# -- check catalogue -------------------------------------------------------------

SAMPLE_CHECKS = (
    "on_manifold",
    "frame_orthonormality",
    "sff_consistency",
    "kahler_square",
    "kahler_orthogonal",
    "kahler_parallel",
    "spectral_R",
    "spectral_T",
    "complement_R",
    "trace_JR",
    "minimality",
    "pluriharmonic",
    "antipluriharmonic",
    "gauss_residual",
    "kahler_identity_residual",
    "ricci_J_invariance",
    "curvature_J_commutation",
    "pluriharmonicity_property",
    "scalar_defect_identity",
    "obstruction_QxR",
    "opposite_curvature_branch",
    "rj_commutator",
    "ricci_margin_SxR",
    "scalar_margin_SxR",
    "ricci_margin_SxH",
    "scalar_margin_general",
    "takahashi",
    "dajczer_rodriguez",
    "warped_specialization",
    "vertical_projection",
    "codazzi_residual",
    "ricci_eq_residual",
    "parallel_alpha",
)
GRID_CHECKS = ("slice_classifier",)
ALL_CHECKS = SAMPLE_CHECKS + GRID_CHECKS
THIRD_ORDER_CHECKS = {"codazzi_residual", "ricci_eq_residual", "parallel_alpha", "ricci_margin_SxR", "ricci_margin_SxH"}


def _expected_flag(name, observed: bool, expected: dict, key: str):
    want = expected.get(key)
    if want is None:
        return True, ""
    ok = bool(want) == observed
    return ok, "" if ok else f"expected {key}={want}, observed {observed}"


def evaluate_checks(imm: ImmersionDefinition, sa: SampleAnalysis, names, tol: Tolerances,
                    slice_label: SliceLabel) -> list:
    """CheckResults for the requested per-sample checks, in the order of ``names``."""
    A = imm.target
    n = imm.n
    c1, c2 = A.c1, A.c2
    u = tuple(float(x) for x in sa.u)
    pt, gs = sa.pt, sa.gs
    exp = imm.expected
    minimal = sa.minimality <= tol.algebraic
    pluri = minimal and sa.pluri <= tol.algebraic
    anti = sa.antipluri <= ANTI_EQUALITY_TOL
    mk = sa.kahler and minimal
    out = []
    for name in names:
        out.append(_one_check(name, imm, sa, tol, slice_label, A, n, c1, c2, u, pt, gs, exp,
                              minimal, pluri, anti, mk))
    return out


def _equality_case_ricci(name, value, sa, tol, u):
    """Margin plus the equality-case signature: ``tr R ~ 0`` and parallel alpha."""
    res = margin(name, value, 1e-6, u)
    if res.verdict is Verdict.PASS and value < EQUALITY_TOL:
        slice_ok = abs(sa.pt.traceR) <= tol.algebraic
        par_ok = sa.parallelAlpha is not None and sa.parallelAlpha <= tol.fd
        res.notes = f"equality case: trR={sa.pt.traceR:.3e}, parallel alpha={sa.parallelAlpha}"
        if not (slice_ok and par_ok):
            res.verdict = Verdict.FAIL
    return res


def _equality_case_scalar(name, value, sa, u):
    """Margin plus the biconditional: margin ~ 0 iff anti-pluriharmonic."""
    res = margin(name, value, 1e-6, u)
    eq = value < EQUALITY_TOL
    anti = sa.antipluri < ANTI_EQUALITY_TOL
    res.notes = f"equality={eq}, antipluriharmonic residual={sa.antipluri:.3e}"
    if res.verdict is Verdict.PASS and eq != anti:
        res.verdict = Verdict.FAIL
    return res


def _one_check(name, imm, sa, tol, slice_label, A, n, c1, c2, u, pt, gs, exp, minimal, pluri, anti, mk):
    R = CheckKind.RESIDUAL
    M = CheckKind.MARGIN
    C = CheckKind.CLASSIFIER
    if name == "on_manifold":
        return residual(name, sa.onManifold, 1e-9, u)
    if name == "frame_orthonormality":
        return residual(name, sa.frameDefect, 1e-10, u)
    if name == "sff_consistency":
        return residual(name, sa.sffDefect, 1e-9, u)
    if name == "kahler_square":
        return residual(name, sa.squareResidual, tol.algebraic, u)
    if name == "kahler_orthogonal":
        return residual(name, sa.orthoResidual, tol.algebraic, u)
    if name == "kahler_parallel":
        return residual(name, sa.parallelResidual, tol.fd, u)
    if name == "spectral_R":
        ev = pt.spectrum()
        return residual(name, max(0.0, -ev[0], ev[-1] - 1.0), SPECTRAL_TOL, u, f"eig in [{ev[0]:.3e}, {ev[-1]:.3e}]")
    if name == "spectral_T":
        if pt.Tmat.size == 0:
            return not_applicable(name, R, SPECTRAL_TOL, u, "normal bundle has rank 0")
        ev = np.linalg.eigvalsh(0.5 * (pt.Tmat + pt.Tmat.T))
        return residual(name, max(0.0, -ev[0], ev[-1] - 1.0), SPECTRAL_TOL, u)
    if name == "complement_R":
        I = np.eye(pt.Rmat.shape[0])
        return residual(name, np.linalg.norm(pt.Rmat + pt.Rtilde - I), COMPLEMENT_TOL, u)
    if name == "trace_JR":
        return residual(name, trace_JR(pt), 1e-9, u)
    if name == "minimality":
        return residual(name, sa.minimality, tol.algebraic, u)
    if name == "pluriharmonic":
        ok, note = _expected_flag(name, pluri, exp, "pluriharmonic")
        return classifier(name, "Pluriharmonic" if pluri else "NotPluriharmonic", sa.pluri, tol.algebraic, ok, u, note)
    if name == "antipluriharmonic":
        obs = sa.antipluri <= tol.algebraic
        ok, note = _expected_flag(name, obs, exp, "antiPluriharmonic")
        return classifier(name, "AntiPluriharmonic" if obs else "NotAntiPluriharmonic", sa.antipluri,
                          tol.algebraic, ok, u, note)
    if name == "gauss_residual":
        return residual(name, np.max(np.abs(sa.ricFD.ricMatrix - sa.ricGauss.ricMatrix)), tol.fd, u)
    if name == "kahler_identity_residual":
        if sa.ricKahler is None or not sa.kahler:
            return not_applicable(name, R, ROUTE_TOL, u, "needs a minimal Kähler sample")
        return residual(name, np.max(np.abs(sa.ricGauss.ric_diag - sa.ricKahler.ric_diag)), ROUTE_TOL, u)
    if name == "ricci_J_invariance":
        if not sa.kahler:
            return not_applicable(name, R, ROUTE_TOL, u, "J not certified")
        return residual(name, ricci_J_invariance(sa.ricGauss, sa.Jm), ROUTE_TOL, u)
    if name == "curvature_J_commutation":
        if not sa.kahler:
            return not_applicable(name, R, COMMUTATION_TOL, u, "J not certified")
        return residual(name, curvature_J_commutation(sa.ricGauss, sa.Jm), COMMUTATION_TOL, u)
    if name in ("pluriharmonicity_property", "scalar_defect_identity"):
        if not mk:
            return not_applicable(name, R, tol.algebraic, u, "needs a minimal Kähler sample")
        p, s = defect_identity_residuals(sa.dv, pt, c1, c2, n, sa.ricGauss)
        if name == "scalar_defect_identity":
            return residual(name, s, tol.algebraic, u)
        # the identity forces: property LHS = 0 iff pluriharmonic
        lhs = pluriharmonicity_property_lhs(pt.Rmat, pt.Jm, c1, c2, n)
        res = residual(name, p, tol.algebraic, u, f"LHS={lhs:.6e}")
        if res.verdict is Verdict.PASS and (abs(lhs) <= tol.algebraic) != (np.max(sa.dv.diffNormsSq) <= tol.algebraic):
            res.verdict = Verdict.FAIL
        return res
    if name == "obstruction_QxR":
        return obstruction_report(A, n, minimal, pluri, u)
    if name == "opposite_curvature_branch":
        return opposite_curvature_branch(A, n, pt.traceR, pluri and sa.kahler, tol.algebraic, u)
    if name == "rj_commutator":
        return rj_commutator_checks(pt, c1, c2, n, pluri and sa.kahler, tol.algebraic, u)
    if name in ("ricci_margin_SxR", "scalar_margin_SxR"):
        if not A.is_SxR():
            return not_applicable(name, M, 1e-6, u, "target is not S x R")
        if not mk:
            return not_applicable(name, M, 1e-6, u, "needs a minimal Kähler sample")
        if name == "ricci_margin_SxR":
            return _equality_case_ricci(name, ricci_margin_SxR(sa.ricGauss, pt, c1, n), sa, tol, u)
        return _equality_case_scalar(name, scalar_margin_SxR(sa.ricGauss, pt, c1, n), sa, u)
    if name == "ricci_margin_SxH":
        if not A.is_SxH():
            return not_applicable(name, M, 1e-6, u, "target is not S_c x H_-c")
        if not mk:
            return not_applicable(name, M, 1e-6, u, "needs a minimal Kähler sample")
        return _equality_case_ricci(name, ricci_margin_SxH(sa.ricGauss, pt, c1, n), sa, tol, u)
    if name == "scalar_margin_general":
        if not mk:
            return not_applicable(name, M, 1e-6, u, "needs a minimal Kähler sample")
        return _equality_case_scalar(name, scalar_margin_general(sa.ricGauss, pt, c1, c2, n), sa, u)
    if name in ("takahashi", "dajczer_rodriguez"):
        if slice_label is SliceLabel.GENERIC:
            return not_applicable(name, M, 1e-6, u, "not a slice")
        if not minimal:
            return not_applicable(name, M, 1e-6, u, "not minimal")
        c = c1 if slice_label is SliceLabel.FIRST else c2
        if name == "takahashi":
            lo, hi = takahashi_bounds(sa.ricGauss, gs, c, imm.dim)
            return margin(name, min(lo, hi), 1e-6, u, f"lower margin={lo:.6e}, upper margin={hi:.6e}")
        if not (sa.kahler and c > 0):
            return not_applicable(name, M, 1e-6, u, "needs a Kähler slice in a spherical factor")
        return margin(name, dajczer_rodriguez_margin(sa.ricGauss, c, n), 1e-6, u)
    if name == "warped_specialization":
        if not A.is_QxR():
            return not_applicable(name, R, tol.algebraic, u, "target is not Q x R")
        if not sa.kahler:
            return not_applicable(name, R, tol.algebraic, u, "J not certified")
        w = warped_obstruction_lhs(n, c1, 1.0, 0.0, 0.0, 0.0, vertical_projection_norm(pt, A))
        p = pluriharmonicity_property_lhs(pt.Rmat, pt.Jm, c1, c2, n)
        return residual(name, w - p, tol.algebraic, u, "unwarped specialization rho = 1")
    if name == "vertical_projection":
        try:
            tr = vertical_projection_norm(pt, A)
        except TargetShapeError as exc:
            return not_applicable(name, R, 1e-9, u, str(exc))
        dt = np.zeros(A.flat_dim)
        dt[-1] = 1.0
        direct = float(np.sum(np.einsum("an,n,n->a", sa.tangentFrame, A.eta, dt) ** 2))
        bad = max(abs(direct - tr), max(0.0, -tr), max(0.0, tr - 1.0 - SPECTRAL_TOL))
        return residual(name, bad, 1e-9, u, f"|d_t^T|^2={tr:.6e}")
    if name in ("codazzi_residual", "ricci_eq_residual", "parallel_alpha"):
        val = {"codazzi_residual": sa.codazzi, "ricci_eq_residual": sa.ricciEq, "parallel_alpha": sa.parallelAlpha}[name]
        if val is None:
            return not_applicable(name, R, tol.fd, u, "third-order data not computed")
        if name == "parallel_alpha":
            obs = val <= tol.fd
            ok, note = _expected_flag(name, obs, exp, "parallel")
            return classifier(name, "Parallel" if obs else "NotParallel", val, tol.fd, ok, u, note)
        return residual(name, val, tol.fd, u)
    raise KeyError(f"unknown check {name!r}")


def grid_checks(imm: ImmersionDefinition, traces, names, tol: Tolerances) -> list:
    out = []
    if "slice_classifier" in names:
        label = slice_classifier(traces, imm.dim, tol.algebraic)
        ok, note = True, ""
        want = imm.expected.get("slice")
        if want is not None and want != label.value:
            ok, note = False, f"expected {want}"
        out.append(classifier("slice_classifier", label.value, float(np.max(traces)), tol.algebraic, ok, None, note))
    return out
