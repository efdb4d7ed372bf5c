"""Second fundamental form, normal connection and the product tensors L, K, R, S, T.

Frame-indexed quantities use the orthonormal tangent frame of a
:class:`~kahlercheck.jetcalc.FrameSample`; ``coord*`` quantities use the
coordinate basis ``d_i f``.  Matrix convention: ``M[a, b] = <M X_b, X_a>``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ambient import AmbientProduct, Kind, dpi_split, factor_tangent_basis, tangent_project_Q
from .errors import TargetShapeError
from .jetcalc import (
    FrameSample,
    ImmersionDefinition,
    Jet2,
    align_frames,
    build_frames,
    central_diff,
    christoffel_symbols,
    compute_jet,
    jet_arrays,
    metric_from_d1,
    normal_frames,
    tangent_frames,
)


@dataclass
class GeometrySample:
    alpha: np.ndarray        # (2n, 2n, N) over the tangent frame
    alphaNormal: np.ndarray  # (2n, 2n, k) components along the normal frame
    weingarten: np.ndarray   # (k, 2n, 2n); weingarten[c] is A_{xi_c}
    meanCurvature: np.ndarray  # (N,)
    coordAlpha: np.ndarray   # (2n, 2n, N) over d_i f
    target: AmbientProduct

    @property
    def norm_alpha_sq(self) -> float:
        """``||alpha||^2 = sum_ab |alpha(X_a, X_b)|^2``."""
        return float(np.sum(self.alphaNormal**2))


def _batched_frame(Nf, v_ndim):
    """Insert singleton axes so a (batch..., k, N) frame broadcasts against (batch..., extra..., N)."""
    extra = v_ndim - (Nf.ndim - 1)
    return Nf.reshape(Nf.shape[:-2] + (1,) * extra + Nf.shape[-2:])


def _normal_part(v, Nf, eta):
    """Normal part and normal components of ``v``; the frame may carry leading batch axes."""
    Nb = _batched_frame(np.asarray(Nf), np.ndim(v))
    comps = np.einsum("...n,...kn->...k", v * eta, Nb)
    return np.einsum("...k,...kn->...n", comps, Nb), comps


def second_fundamental_form(j: Jet2, fr: FrameSample, A: AmbientProduct = None) -> GeometrySample:
    A = A or j.target
    d2t = tangent_project_Q(j.point, j.d2, A, check=False)
    coord, _ = _normal_part(d2t, fr.normalFrame, A.eta)
    B = fr.coordToFrame
    alpha = np.einsum("...ai,...bj,...ijn->...abn", B, B, coord)
    _, comps = _normal_part(alpha, fr.normalFrame, A.eta)
    wein = np.moveaxis(comps, -1, -3)
    dim = alpha.shape[-2]
    H = np.einsum("...aan->...n", alpha) / dim
    return GeometrySample(
        alpha=alpha, alphaNormal=comps, weingarten=wein, meanCurvature=H, coordAlpha=coord, target=A
    )


def minimality_residual(gs: GeometrySample) -> float:
    return float(gs.target.norm(gs.meanCurvature))


# -- fields along the stencil ----------------------------------------------------


def alpha_field(imm: ImmersionDefinition, U, steps):
    """Coordinate second fundamental form at a batch of parameter points.

    Frame-free: the normal part is ``P_TQ(d2) - sum g^{ij} <., d_i f> d_j f``.
    Returns ``(alpha, P, D1)`` with alpha of shape (..., 2n, 2n, N).
    """
    A = imm.target
    P, D1, D2, _ = jet_arrays(imm, U, steps)
    d2t = tangent_project_Q(P[..., None, None, :], D2, A, check=False)
    g = metric_from_d1(D1, A.eta)
    ginv = np.linalg.inv(g)
    proj = np.einsum("...ijn,n,...kn->...ijk", d2t, A.eta, D1)
    tang = np.einsum("...ijk,...kl,...ln->...ijn", proj, ginv, D1)
    return d2t - tang, P, D1


def covariant_alpha_derivative(imm: ImmersionDefinition, u, steps, normal_frame):
    """``(nabla^perp_{d_k} alpha)(d_i, d_j)`` at ``u``, array (..., k, i, j, N).

    The normal derivative of the ambient field ``alpha(d_i, d_j)`` comes from
    central differences; Levi-Civita terms use the FD Christoffel symbols.
    ``u`` and ``normal_frame`` may carry matching leading batch axes.
    """
    A = imm.target
    imm.check_inside(u, 3 * np.asarray(steps))
    dalpha = central_diff(lambda U: alpha_field(imm, U, steps)[0], u, steps)  # (..., k, i, j, N)
    P = imm.eval_map(u)
    dalpha = tangent_project_Q(P.reshape(P.shape[:-1] + (1, 1, 1, P.shape[-1])), dalpha, A, check=False)
    dperp, _ = _normal_part(dalpha, normal_frame, A.eta)
    alpha0 = alpha_field(imm, u, steps)[0]
    Gam = christoffel_symbols(imm, u, steps)  # Gam[..., l, i, j]
    corr = np.einsum("...lki,...ljn->...kijn", Gam, alpha0) + np.einsum("...lkj,...iln->...kijn", Gam, alpha0)
    return dperp - corr


@dataclass
class NormalConnection:
    dxi: np.ndarray    # (2n, k, N): nabla^perp_{d_i} xi_a
    omega: np.ndarray  # (2n, k, k): omega[i, a, b] = <d_i xi_a, xi_b>


def _frame_field(imm, center_normals):
    A = imm.target

    def field(U):
        P = imm.eval_map(U)
        E, _ = tangent_frames(imm.eval_dmap(U), A.eta)
        ref = _batched_frame(center_normals, U.ndim)
        Nf = normal_frames(P, E, A, seeds=ref)
        return align_frames(Nf, ref)

    return field


def _omega(imm, U, steps, center_normals):
    field = _frame_field(imm, center_normals)
    dxi = central_diff(field, U, steps)  # (..., i, a, N)
    xi = field(U)  # (..., b, N)
    return np.einsum("...ian,n,...bn->...iab", dxi, imm.target.eta, xi), dxi, xi


def normal_connection(imm: ImmersionDefinition, u, h=None, normal_frame=None) -> NormalConnection:
    """Normal connection of the normal frame propagated from ``u``.

    Nearby frames are built by Gram-Schmidt seeded with the frame at ``u``
    and sign-aligned with it, so the field is smooth on the stencil.
    """
    u = np.asarray(u, float)
    steps = imm.steps(1e-3) if h is None else np.broadcast_to(np.asarray(h, float), (imm.dim,))
    imm.check_inside(u, 2 * steps)
    if normal_frame is None:
        fr = frames_at(imm, u, steps)
        normal_frame = fr.normalFrame
    omega, dxi, xi = _omega(imm, u, steps, normal_frame)
    A = imm.target
    dxi_t = tangent_project_Q(imm.eval_map(u), dxi, A, check=False)
    dperp, _ = _normal_part(dxi_t, normal_frame, A.eta)
    return NormalConnection(dxi=dperp, omega=omega)


def normal_curvature(imm: ImmersionDefinition, u, steps, normal_frame) -> np.ndarray:
    """``<R^perp(d_i, d_j) xi_a, xi_b>`` from FD of the connection forms, (..., i, j, a, b)."""
    imm.check_inside(u, 4 * np.asarray(steps))
    om0, _, _ = _omega(imm, u, steps, normal_frame)
    dom = central_diff(lambda U: _omega(imm, U, steps, normal_frame)[0], u, steps)  # dom[j, i] = d_j omega(i)
    quad = np.einsum("...jac,...icb->...ijab", om0, om0)
    return dom - np.swapaxes(dom, -4, -3) + quad - np.swapaxes(quad, -4, -3)


def frames_at(imm, u, steps):
    return build_frames(compute_jet(imm, u, steps))


# -- product tensors -------------------------------------------------------------


@dataclass
class ProductTensors:
    Lmat: np.ndarray    # (n2, 2n)
    Kmat: np.ndarray    # (n2, k)
    Rmat: np.ndarray    # (2n, 2n)
    Smat: np.ndarray    # (k, 2n)
    Tmat: np.ndarray    # (k, k)
    Ltilde: np.ndarray
    Ktilde: np.ndarray
    Rtilde: np.ndarray
    Stilde: np.ndarray
    Ttilde: np.ndarray
    traceR: float
    normR2: float
    rjjr: float
    Jm: np.ndarray

    @property
    def n(self) -> int:
        return self.Rmat.shape[0] // 2

    def spectrum(self):
        return np.linalg.eigvalsh(0.5 * (self.Rmat + self.Rmat.T))


def rj_jr(R, Jm) -> float:
    """Frobenius pairing ``trace((RJ)^T (JR))``."""
    return float(np.sum((R @ Jm) * (Jm @ R)))


def product_tensors(j: Jet2, fr: FrameSample, Jm, A: AmbientProduct = None) -> ProductTensors:
    A = A or j.target
    Jm = np.asarray(Jm, float)
    E = fr.tangentFrame
    Nf = fr.normalFrame
    out = {}
    for which, suffix in ((1, ""), (0, "tilde")):
        basis = factor_tangent_basis(j.point, A, which)
        pE = dpi_split(E, A)[which]
        pN = dpi_split(Nf, A)[which]
        L = A.inner(basis[:, None, :], pE[None, :, :])
        K = A.inner(basis[:, None, :], pN[None, :, :]) if len(Nf) else np.zeros((len(basis), 0))
        out["L" + suffix] = L
        out["K" + suffix] = K
        out["R" + suffix] = L.T @ L
        out["S" + suffix] = K.T @ L
        out["T" + suffix] = K.T @ K
    R = out["R"]
    return ProductTensors(
        Lmat=out["L"], Kmat=out["K"], Rmat=R, Smat=out["S"], Tmat=out["T"],
        Ltilde=out["Ltilde"], Ktilde=out["Ktilde"], Rtilde=out["Rtilde"],
        Stilde=out["Stilde"], Ttilde=out["Ttilde"],
        traceR=float(np.trace(R)), normR2=float(np.sum(R * R)), rjjr=rj_jr(R, Jm), Jm=Jm,
    )


def vertical_projection_norm(pt: ProductTensors, A: AmbientProduct) -> float:
    """``||d_t^T||^2`` for targets ``Q x R``; equals tr R there."""
    f2 = A.factor2
    if not (f2.kind is Kind.EUCLIDEAN and f2.dim == 1):
        raise TargetShapeError(f"second factor must be the real line, got {f2.label()}")
    return pt.traceR


def coordinate_S_and_R(P, D1, Nf, A: AmbientProduct):
    """``S d_i`` as normal components (i, k) and ``<R d_i, d_j>`` (i, j)."""
    _, p2 = dpi_split(D1, A)
    s = np.einsum("...in,n,...kn->...ik", p2, A.eta, Nf)
    r = np.einsum("...in,n,...jn->...ij", p2, A.eta, p2)
    return s, r
