"""Jets of immersions on a chart, induced metrics and orthonormal frames.

Callbacks are vectorized: ``map(U)`` takes parameter points of shape
(..., 2n) and returns ambient points (..., N); ``dmap(U)`` returns the exact
first partials (..., 2n, N) with row ``i`` holding ``d f / d u_i``.  Second
derivatives always come from central differences of the first partials with
one Richardson level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .ambient import AmbientProduct, gram_schmidt, on_manifold_residual, tangent_project_Q
from .errors import ChartBoundaryError, DegenerateImmersionError, EvaluationError, FrameContinuityError

DEFAULT_H = 1e-3
RANK_TOL = 1e-8
FRAME_TOL = 1e-10

# 4th-order central first-derivative stencil
_FIVE_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FIVE_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


# -- finite differences ----------------------------------------------------------


def _axis_offsets(dim, steps, offsets):
    """Offsets of shape (dim, len(offsets), dim): ``offsets[k] * steps[i] * e_i``."""
    eye = np.eye(dim)
    return offsets[None, :, None] * (np.asarray(steps, float)[:, None] * eye)[:, None, :]


def central_diff(f, U, steps):
    """All first partials of ``f`` at ``U`` by the 5-point stencil.

    ``U`` has shape (..., dim); returns (..., dim, *fshape) where axis
    ``U.ndim - 1`` indexes the differentiation direction.
    """
    U = np.asarray(U, dtype=float)
    dim = U.shape[-1]
    steps = np.broadcast_to(np.asarray(steps, float), (dim,))
    pts = U[..., None, None, :] + _axis_offsets(dim, steps, _FIVE_OFFSETS)
    F = np.asarray(f(pts))
    nb = U.ndim - 1
    D = np.tensordot(F, _FIVE_WEIGHTS, axes=([nb + 1], [0]))
    scale = steps.reshape((dim,) + (1,) * (D.ndim - nb - 1))
    return D / scale


def richardson_diff(f, U, steps):
    """Central differences at ``s`` and ``s/2`` combined by one Richardson level.

    Returns ``(derivative, error_estimate)`` with the derivative shaped like
    :func:`central_diff` and the error estimate the max-abs difference
    between the extrapolated value and the ``s/2`` difference.
    """
    U = np.asarray(U, dtype=float)
    dim = U.shape[-1]
    steps = np.broadcast_to(np.asarray(steps, float), (dim,))
    offs = np.array([-1.0, 1.0, -0.5, 0.5])
    pts = U[..., None, None, :] + _axis_offsets(dim, steps, offs)
    F = np.asarray(f(pts))
    nb = U.ndim - 1
    F = np.moveaxis(F, nb + 1, 0)  # (4, ..., dim, *fshape)
    scale = steps.reshape((dim,) + (1,) * (F.ndim - nb - 2))
    d_h = (F[1] - F[0]) / (2.0 * scale)
    d_h2 = (F[3] - F[2]) / scale
    rich = (4.0 * d_h2 - d_h) / 3.0
    err = float(np.max(np.abs(rich - d_h2))) if rich.size else 0.0
    return rich, err


# -- immersions ------------------------------------------------------------------


@dataclass
class ImmersionDefinition:
    """A closed-form immersion of a 2n-dimensional chart into a two-factor target.

    ``J`` is either a constant (2n, 2n) matrix of chart components
    (``J d_j = sum_i J[i, j] d_i``) or a callback ``U -> (..., 2n, 2n)``.
    ``expected`` carries the flags the catalog asserts (minimal,
    pluriharmonic, slice label, ...).
    """

    name: str
    dim: int
    chart: np.ndarray
    map: Callable
    target: AmbientProduct
    J: object
    dmap: Optional[Callable] = None
    expected: dict = field(default_factory=dict)
    description: str = ""
    diagnostic: bool = False

    def __post_init__(self):
        self.chart = np.asarray(self.chart, dtype=float).reshape(self.dim, 2)
        if self.dim % 2 or self.dim < 2:
            raise ValueError(f"{self.name}: domain dimension must be even and positive, got {self.dim}")
        if not self.diagnostic and not self.dim < self.target.total_dim:
            raise ValueError(
                f"{self.name}: need 2n < m for a proper immersion (2n={self.dim}, m={self.target.total_dim})"
            )
        if np.any(self.chart[:, 1] <= self.chart[:, 0]):
            raise ValueError(f"{self.name}: empty chart range")

    @property
    def n(self) -> int:
        return self.dim // 2

    @property
    def extent(self) -> np.ndarray:
        return self.chart[:, 1] - self.chart[:, 0]

    def _checked(self, arr, what, shape_tail):
        arr = np.asarray(arr, dtype=float)
        if arr.shape[-len(shape_tail):] != shape_tail:
            raise EvaluationError(f"{self.name}: {what} returned shape {arr.shape}, expected (..., {shape_tail})")
        if not np.all(np.isfinite(arr)):
            raise EvaluationError(f"{self.name}: {what} produced non-finite values")
        return arr

    def eval_map(self, U):
        try:
            out = self.map(np.asarray(U, float))
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationError(f"{self.name}: map failed: {exc}") from exc
        return self._checked(out, "map", (self.target.flat_dim,))

    def eval_dmap(self, U):
        if self.dmap is None:
            return central_diff(self.eval_map, U, _fd_step_for_d1(self))
        try:
            out = self.dmap(np.asarray(U, float))
        except (ArithmeticError, ValueError) as exc:
            raise EvaluationError(f"{self.name}: dmap failed: {exc}") from exc
        return self._checked(out, "dmap", (self.dim, self.target.flat_dim))

    def eval_J(self, U):
        U = np.asarray(U, float)
        if callable(self.J):
            out = np.asarray(self.J(U), float)
        else:
            out = np.broadcast_to(np.asarray(self.J, float), U.shape[:-1] + (self.dim, self.dim))
        return self._checked(out, "J", (self.dim, self.dim))

    def check_inside(self, U, reach):
        """Raise when the box ``U +- reach`` leaves the chart."""
        U = np.atleast_2d(np.asarray(U, float))
        reach = np.broadcast_to(np.asarray(reach, float), (self.dim,))
        lo = self.chart[:, 0]
        hi = self.chart[:, 1]
        bad = (U - reach < lo - 1e-12) | (U + reach > hi + 1e-12)
        if np.any(bad):
            k = int(np.argwhere(bad)[0][1])
            raise ChartBoundaryError(
                f"{self.name}: stencil of reach {reach[k]:.3g} around u{k + 1}="
                f"{U[np.any(bad, axis=1)][0][k]:.6g} leaves chart [{lo[k]:.6g}, {hi[k]:.6g}]"
            )

    def steps(self, h: float) -> np.ndarray:
        """Per-axis FD steps: ``h`` scaled by the chart extent."""
        return h * self.extent


def _fd_step_for_d1(imm: ImmersionDefinition):
    return 1e-3 * np.minimum(imm.extent, 1.0)


def chart_grid(imm: ImmersionDefinition, points) -> np.ndarray:
    """Cell-centred tensor grid of shape (P, 2n) in deterministic C order."""
    pts = np.broadcast_to(np.asarray(points, dtype=int), (imm.dim,))
    axes = [lo + (np.arange(k) + 0.5) * (hi - lo) / k for (lo, hi), k in zip(imm.chart, pts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


# -- jets ------------------------------------------------------------------------


@dataclass
class Jet2:
    point: np.ndarray          # (N,)
    d1: np.ndarray             # (2n, N)
    d2: np.ndarray             # (2n, 2n, N), symmetric in the first two axes
    stepUsed: np.ndarray       # per-axis step
    errorEstimate: float
    target: AmbientProduct
    u: np.ndarray = None


def jet_arrays(imm: ImmersionDefinition, U, steps):
    """Batched point, first and (symmetrized) second partials at ``U`` (..., 2n)."""
    U = np.asarray(U, float)
    steps = np.broadcast_to(np.asarray(steps, float), (imm.dim,))
    P = imm.eval_map(U)
    D1 = imm.eval_dmap(U)
    D2, err = richardson_diff(imm.eval_dmap, U, steps)
    D2 = 0.5 * (D2 + np.swapaxes(D2, -3, -2))
    return P, D1, D2, err


def compute_jet(imm: ImmersionDefinition, u, h=None) -> Jet2:
    """1- and 2-jet at the parameter point ``u`` with per-axis step ``h``.

    ``h`` defaults to :data:`DEFAULT_H` scaled by the chart extent.
    """
    u = np.asarray(u, float)
    steps = imm.steps(DEFAULT_H) if h is None else np.broadcast_to(np.asarray(h, float), (imm.dim,))
    reach = steps if imm.dmap is not None else steps + 2 * _fd_step_for_d1(imm)
    imm.check_inside(u, reach)
    P, D1, D2, err = jet_arrays(imm, u, steps)
    return Jet2(point=P, d1=D1, d2=D2, stepUsed=np.array(steps), errorEstimate=err, target=imm.target, u=u)


def metric_from_d1(D1, eta):
    return np.einsum("...in,n,...jn->...ij", D1, eta, D1)


def metric_field(imm: ImmersionDefinition, U):
    return metric_from_d1(imm.eval_dmap(U), imm.target.eta)


def christoffel_symbols(imm: ImmersionDefinition, U, steps):
    """``Gamma[..., l, i, j]`` of the induced metric; metric derivatives by 5-point FD."""
    g = metric_field(imm, U)
    dg = central_diff(lambda V: metric_field(imm, V), U, steps)  # dg[k, i, j] = d_k g_ij
    lower = np.swapaxes(dg, -3, -2) + np.einsum("...jmi->...mij", dg) - dg
    return 0.5 * np.einsum("...lm,...mij->...lij", np.linalg.inv(g), lower)


def induced_metric(j: Jet2) -> np.ndarray:
    g = metric_from_d1(j.d1, j.target.eta)
    check_nondegenerate(g)
    return g


def check_nondegenerate(g):
    ev = np.linalg.eigvalsh(g)
    lo = ev[..., 0]
    hi = ev[..., -1]
    if np.any(~(lo >= RANK_TOL * hi)) or np.any(hi <= 0):
        raise DegenerateImmersionError(
            f"induced metric is degenerate: eigenvalue ratio {float(np.min(lo / hi)):.3e} < {RANK_TOL:.0e}"
        )


# -- frames ----------------------------------------------------------------------


@dataclass
class FrameSample:
    tangentFrame: np.ndarray   # (2n, N) orthonormal rows
    normalFrame: np.ndarray    # (m - 2n, N)
    coordToFrame: np.ndarray   # (2n, 2n): tangentFrame = coordToFrame @ d1

    def gram(self, A: AmbientProduct) -> np.ndarray:
        F = np.concatenate([self.tangentFrame, self.normalFrame])
        return A.inner(F[:, None, :], F[None, :, :])


def tangent_frames(D1, eta):
    """Modified Gram-Schmidt (two passes) on the coordinate partials.

    Returns ``(E, B)`` with ``E = B @ D1`` orthonormal; works on batches.
    """
    D1 = np.asarray(D1, float)
    dim = D1.shape[-2]
    E = np.zeros_like(D1)
    B = np.zeros(D1.shape[:-2] + (dim, dim))

    def ip(v, w):
        return np.sum(v * eta * w, axis=-1)

    for k in range(dim):
        w = D1[..., k, :].copy()
        b = np.zeros(D1.shape[:-2] + (dim,))
        b[..., k] = 1.0
        for _ in range(2):
            for l in range(k):
                c = ip(w, E[..., l, :])
                w = w - c[..., None] * E[..., l, :]
                b = b - c[..., None] * B[..., l, :]
        nrm2 = ip(w, w)
        if np.any(~(nrm2 > 0)):
            raise DegenerateImmersionError("coordinate partials are linearly dependent")
        nrm = np.sqrt(nrm2)
        E[..., k, :] = w / nrm[..., None]
        B[..., k, :] = b / nrm[..., None]
    return E, B


def normal_frames(P, E, A: AmbientProduct, seeds=None):
    """Orthonormal frames of ``T_p Q^m`` minus the tangent space, batched.

    Default seeds are the flat coordinate directions in order; passing the
    normal frame of a nearby centre sample yields a smoothly varying field.
    """
    P = np.asarray(P, float)
    k = A.total_dim - E.shape[-2]
    if k <= 0:
        return np.zeros(P.shape[:-1] + (0, A.flat_dim))
    if seeds is None:
        seeds = np.eye(A.flat_dim)
    seeds = np.asarray(seeds, float)
    seeds = tangent_project_Q(P[..., None, :], seeds, A, check=False)
    return gram_schmidt(seeds, A.eta, want=k, against=E)


def build_frames(j: Jet2, A: AmbientProduct = None, seeds=None) -> FrameSample:
    A = A or j.target
    g = metric_from_d1(j.d1, A.eta)
    check_nondegenerate(g)
    E, B = tangent_frames(j.d1, A.eta)
    Nf = normal_frames(j.point, E, A, seeds=seeds)
    return FrameSample(tangentFrame=E, normalFrame=Nf, coordToFrame=B)


def align_frames(frames, reference, min_overlap=0.5):
    """Flip signs of ``frames`` (..., k, N) to agree with ``reference`` (..., k, N).

    Signs are chosen by the Euclidean overlap of matching vectors; an overlap
    below ``min_overlap`` means the frame jumped rather than rotated.
    """
    ov = np.einsum("...kn,...kn->...k", frames, reference)
    ref2 = np.einsum("...kn,...kn->...k", reference, reference)
    if ov.size and np.any(np.abs(ov) < min_overlap * ref2):
        raise FrameContinuityError(f"normal frame discontinuous on stencil (overlap {np.min(np.abs(ov)):.3f})")
    return frames * np.where(ov < 0, -1.0, 1.0)[..., None]


def on_manifold_max(imm: ImmersionDefinition, U) -> float:
    return float(np.max(on_manifold_residual(imm.eval_map(U), imm.target)))
