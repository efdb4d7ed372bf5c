"""Kähler hypotheses, J-adapted frames and intrinsic curvature by three routes.

Curvature convention: ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
nabla_[X,Y] Z``, ``riem[a, b, c, d] = <R(X_a, X_b) X_c, X_d>`` and
``Ric(X, Y) = sum_k <R(X_k, X) Y, X_k>``, so the unit round sphere has
positive curvature.  Cross-checks against references using the opposite
sign must convert first.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import KahlerError, NotMinimalError
from .jetcalc import (
    DEFAULT_H,
    FrameSample,
    ImmersionDefinition,
    central_diff,
    christoffel_symbols,
    metric_field,
    tangent_frames,
)
from .tensors import GeometrySample, ProductTensors, minimality_residual

ADAPTED_TOL = 1e-6
MINIMAL_TOL = 1e-6


class Route(enum.Enum):
    INTRINSIC_FD = "IntrinsicFD"
    GAUSS = "GaussEquation"
    KAHLER = "KahlerIdentity"


@dataclass
class KahlerResiduals:
    squareResidual: float
    orthoResidual: float
    parallelResidual: float

    def certified(self, tol_alg: float = 1e-6, tol_fd: float = 1e-4) -> bool:
        return self.squareResidual <= tol_alg and self.orthoResidual <= tol_alg and self.parallelResidual <= tol_fd


@dataclass
class CurvaturePackage:
    riem: Optional[np.ndarray]  # (2n,)*4 over the adapted frame; None for the diagonal-only route
    ricMatrix: np.ndarray
    scal: float
    route: Route

    @property
    def ric_diag(self) -> np.ndarray:
        return np.diag(self.ricMatrix).copy()

    def ric_extremes(self):
        """``(min, max)`` of ``Ric(X, X)`` over all unit tangent directions.

        The diagonal-only route cannot see off-frame directions and falls
        back to the frame values.
        """
        if self.route is Route.KAHLER:
            d = self.ric_diag
            return float(d.min()), float(d.max())
        ev = np.linalg.eigvalsh(0.5 * (self.ricMatrix + self.ricMatrix.T))
        return float(ev[0]), float(ev[-1])


# -- J and frames ----------------------------------------------------------------


def J_in_frame(Jc, coordToFrame, g):
    """``Jm[a, b] = <J X_b, X_a>`` for the orthonormal frame ``X = B d``."""
    B = np.asarray(coordToFrame)
    return np.einsum("...ai,...ik,...kj,...bj->...ab", B, g, Jc, B)


def _square_ortho(Jm):
    I = np.eye(Jm.shape[-1])
    sq = np.max(np.abs(Jm @ Jm + I), axis=(-2, -1))
    orth = np.max(np.abs(np.swapaxes(Jm, -1, -2) @ Jm - I), axis=(-2, -1))
    return sq, orth


def _parallel_defect(imm, U, steps, B, g):
    """Max over frame pairs of ``|(nabla_{X_a} J) X_b|`` at a batch of points."""
    Gam = christoffel_symbols(imm, U, steps)  # (..., l, k, i)
    Jc = imm.eval_J(U)
    dJ = central_diff(imm.eval_J, U, steps)  # (..., k, i, j)
    # (nabla_k J)^i_j = d_k J^i_j + Gam^i_{kl} J^l_j - Gam^l_{kj} J^i_l
    nab = dJ + np.einsum("...ikl,...lj->...kij", Gam, Jc) - np.einsum("...lkj,...il->...kij", Gam, Jc)
    vec = np.einsum("...ak,...bj,...kij->...abi", B, B, nab)
    nrm = np.sqrt(np.abs(np.einsum("...abi,...il,...abl->...ab", vec, g, vec)))
    return np.max(nrm, axis=(-2, -1))


def kahler_residuals(imm: ImmersionDefinition, grid, h=None) -> KahlerResiduals:
    """Max over ``grid`` of the three Kähler defects of the supplied J.

    Square and orthogonality defects are max-abs entries in an orthonormal
    frame; the parallelism defect uses FD Christoffel symbols of the
    induced metric and FD derivatives of the J field, measured on unit
    frame vectors.
    """
    U = np.atleast_2d(np.asarray(grid, float))
    steps = imm.steps(DEFAULT_H) if h is None else np.broadcast_to(np.asarray(h, float), (imm.dim,))
    imm.check_inside(U, 4 * steps)
    D1 = imm.eval_dmap(U)
    _, B = tangent_frames(D1, imm.target.eta)
    g = metric_field(imm, U)
    Jm = J_in_frame(imm.eval_J(U), B, g)
    sq, orth = _square_ortho(Jm)
    par = _parallel_defect(imm, U, steps, B, g)
    return KahlerResiduals(float(np.max(sq)), float(np.max(orth)), float(np.max(par)))


def adapted_frame(fr: FrameSample, Jm, tol: float = ADAPTED_TOL):
    """J-adapted orthonormal frame ``X_{2j} = J X_{2j-1}``.

    Works on component vectors in the given orthonormal frame: ``X_1`` is the
    first frame vector; each later odd vector is the frame vector with the
    largest residual against the span so far, and each even vector is the
    J-image of its predecessor (not renormalized, so the pairing is exact).
    Returns ``(frame, Jm_adapted)`` where ``frame`` is a new FrameSample
    sharing the normal frame.
    """
    Jm = np.asarray(Jm, float)
    dim = Jm.shape[0]
    Q = np.zeros((dim, dim))
    eye = np.eye(dim)
    for p in range(dim // 2):
        if p == 0:
            x = eye[0]
        else:
            res = eye - (eye @ Q[: 2 * p].T) @ Q[: 2 * p]
            k = int(np.argmax(np.linalg.norm(res, axis=1)))
            x = res[k]
            x = x - Q[: 2 * p].T @ (Q[: 2 * p] @ x)
            x = x / np.linalg.norm(x)
        Q[2 * p] = x
        Q[2 * p + 1] = Jm @ x
    defect = float(np.max(np.abs(Q @ Q.T - eye)))
    if not defect <= tol:
        raise KahlerError(f"J is not metric-compatible at the sample: adapted-frame defect {defect:.3e}")
    adapted = FrameSample(
        tangentFrame=Q @ fr.tangentFrame,
        normalFrame=fr.normalFrame,
        coordToFrame=Q @ fr.coordToFrame,
    )
    return adapted, Q @ Jm @ Q.T


# -- curvature routes ------------------------------------------------------------


def riemann_coordinates(imm: ImmersionDefinition, u, steps) -> np.ndarray:
    """``<R(d_i, d_j) d_k, d_l>`` by FD of the FD Christoffel symbols."""
    Gam = christoffel_symbols(imm, u, steps)  # [..., m, i, j]
    dGam = central_diff(lambda V: christoffel_symbols(imm, V, steps), u, steps)  # [..., k, m, i, j]
    t1 = np.einsum("...imjk->...ijkm", dGam)
    t2 = np.einsum("...mip,...pjk->...ijkm", Gam, Gam)
    Rup = t1 - np.swapaxes(t1, -4, -3) + t2 - np.swapaxes(t2, -4, -3)
    return np.einsum("...ijkm,...ml->...ijkl", Rup, metric_field(imm, u))


def curvature_package(riem, route) -> CurvaturePackage:
    """Ricci and scalar curvature contracted from a frame Riemann tensor."""
    ric = np.einsum("abca->bc", riem)
    return CurvaturePackage(riem=riem, ricMatrix=ric, scal=float(np.trace(ric)), route=route)


def intrinsic_curvature_fd(imm: ImmersionDefinition, u, h=None, coordToFrame=None) -> CurvaturePackage:
    """Intrinsic curvature from the metric alone, in the frame ``coordToFrame``.

    ``h`` is the per-axis step (default scaled :data:`DEFAULT_H`); the frame
    defaults to Gram-Schmidt of the coordinate partials.
    """
    u = np.asarray(u, float)
    steps = imm.steps(DEFAULT_H) if h is None else np.broadcast_to(np.asarray(h, float), (imm.dim,))
    imm.check_inside(u, 4 * steps)
    if coordToFrame is None:
        _, coordToFrame = tangent_frames(imm.eval_dmap(u), imm.target.eta)
    return curvature_package(intrinsic_riemann_frame(imm, u, steps, coordToFrame), Route.INTRINSIC_FD)


def intrinsic_riemann_frame(imm: ImmersionDefinition, U, steps, coordToFrame) -> np.ndarray:
    """FD Riemann tensor converted to the frame ``coordToFrame``; batched over ``U``."""
    B = np.asarray(coordToFrame)
    Rc = riemann_coordinates(imm, U, steps)
    return np.einsum("...ai,...bj,...ck,...dl,...ijkl->...abcd", B, B, B, B, Rc, optimize=True)


def gauss_riemann(gs: GeometrySample, pt: ProductTensors, c1: float, c2: float) -> np.ndarray:
    """Riemann tensor over the frame of ``gs`` from the Gauss equation."""
    R = pt.Rmat
    d = np.eye(R.shape[0])
    al = gs.alphaNormal
    flat = np.einsum("bc,ad->abcd", d, d) - np.einsum("ac,bd->abcd", d, d)
    mixed = (
        np.einsum("bc,ad->abcd", R, d)
        - np.einsum("ac,bd->abcd", d, R)
        + np.einsum("bc,ad->abcd", d, R)
        - np.einsum("ac,bd->abcd", R, d)
    )
    quad = np.einsum("bc,ad->abcd", R, R) - np.einsum("ac,bd->abcd", R, R)
    sff = np.einsum("bcn,adn->abcd", al, al) - np.einsum("acn,bdn->abcd", al, al)
    return c1 * (flat - mixed) + (c1 + c2) * quad + sff


def ricci_via_gauss(gs: GeometrySample, pt: ProductTensors, c1: float, c2: float) -> CurvaturePackage:
    """Full contracted Gauss equation; minimality is not assumed."""
    return curvature_package(gauss_riemann(gs, pt, c1, c2), Route.GAUSS)


def defect_arrays(gs: GeometrySample, Jm):
    """``u[i, j] = alpha(X_i, J X_j)`` and ``v[i, j] = alpha(X_j, J X_i)`` as normal components."""
    al = gs.alphaNormal
    u = np.einsum("bj,ibn->ijn", Jm, al)
    v = np.einsum("bi,jbn->ijn", Jm, al)
    return u, v


def coefficient_A(pt: ProductTensors, c1: float, c2: float) -> np.ndarray:
    R, J = pt.Rmat, pt.Jm
    JRJ = J.T @ R @ J
    return c1 * (1.0 - np.diag(R) - np.diag(JRJ)) + (c1 + c2) * np.diag((R @ J).T @ (J @ R))


def ricci_via_kahler_identity(
    gs: GeometrySample, pt: ProductTensors, c1: float, c2: float, tol: float = MINIMAL_TOL
) -> CurvaturePackage:
    """``Ric(X_i) = -sum_j <alpha(X_i, JX_j), alpha(X_j, JX_i)> + A_i`` over the adapted frame.

    Only the diagonal is available; the derivation drops the mean-curvature
    term, so non-minimal input is rejected.
    """
    h = minimality_residual(gs)
    if h > tol:
        raise NotMinimalError(f"Kähler-identity route needs a minimal sample, |H| = {h:.3e}")
    u, v = defect_arrays(gs, pt.Jm)
    diag = -np.einsum("ijn,ijn->i", u, v) + coefficient_A(pt, c1, c2)
    return CurvaturePackage(riem=None, ricMatrix=np.diag(diag), scal=float(diag.sum()), route=Route.KAHLER)


# -- structural residuals --------------------------------------------------------


def ricci_J_invariance(pkg: CurvaturePackage, Jm) -> float:
    return float(np.max(np.abs(Jm.T @ pkg.ricMatrix @ Jm - pkg.ricMatrix)))


def curvature_J_commutation(pkg: CurvaturePackage, Jm) -> float:
    """Max over frame pairs of ``|R(X_a, X_b) J - J R(X_a, X_b)|``."""
    ops = np.swapaxes(pkg.riem, -1, -2)  # ops[a, b][d, c] = <R(X_a, X_b) X_c, X_d>
    return float(np.max(np.abs(ops @ Jm - Jm @ ops)))


def riemann_symmetry_residual(riem) -> float:
    """Max violation of the skew, pair and first Bianchi symmetries."""
    r = riem
    skew1 = r + np.swapaxes(r, 0, 1)
    skew2 = r + np.swapaxes(r, 2, 3)
    pair = r - np.transpose(r, (2, 3, 0, 1))
    bianchi = r + np.transpose(r, (1, 2, 0, 3)) + np.transpose(r, (2, 0, 1, 3))
    return float(max(np.max(np.abs(x)) for x in (skew1, skew2, pair, bianchi)))


def trace_JR(pt: ProductTensors) -> float:
    return float(np.trace(pt.Jm @ pt.Rmat))
