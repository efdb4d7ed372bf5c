"""Products of two real space forms realized inside a flat embedding space.

A factor of curvature ``c != 0`` is the level set ``<x, x> = 1/c`` of its
embedding space; hyperbolic factors use the Lorentz form ``-x0^2 + x1^2 + ...``
restricted to the sheet ``x0 > 0``.  Euclidean factors are embedded by the
identity.  Ambient vectors are plain numpy arrays of length ``flat_dim``
(block 1 followed by block 2); every function accepts leading batch axes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateImmersionError, NonTangentError, OffManifoldError

ON_MANIFOLD_TOL = 1e-9


class Kind(enum.Enum):
    SPHERICAL = "Spherical"
    EUCLIDEAN = "Euclidean"
    HYPERBOLIC = "Hyperbolic"


@dataclass(frozen=True)
class SpaceFormFactor:
    curvature: float
    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"space form dimension must be a positive integer, got {self.dim}")

    @property
    def kind(self) -> Kind:
        if self.curvature > 0:
            return Kind.SPHERICAL
        if self.curvature < 0:
            return Kind.HYPERBOLIC
        return Kind.EUCLIDEAN

    @property
    def curved(self) -> bool:
        return self.curvature != 0

    @property
    def embed_dim(self) -> int:
        return self.dim + 1 if self.curved else self.dim

    @property
    def signature(self) -> np.ndarray:
        eta = np.ones(self.embed_dim)
        if self.kind is Kind.HYPERBOLIC:
            eta[0] = -1.0
        return eta

    def inner(self, v, w):
        return np.einsum("...n,n,...n->...", v, self.signature, w)

    def label(self) -> str:
        sym = {Kind.SPHERICAL: "S", Kind.EUCLIDEAN: "R", Kind.HYPERBOLIC: "H"}[self.kind]
        return f"{sym}^{self.dim}({self.curvature:g})"


@dataclass(frozen=True)
class AmbientProduct:
    factor1: SpaceFormFactor
    factor2: SpaceFormFactor
    eta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "eta", np.concatenate([self.factor1.signature, self.factor2.signature]))

    @classmethod
    def of(cls, c1, n1, c2, n2) -> "AmbientProduct":
        return cls(SpaceFormFactor(float(c1), int(n1)), SpaceFormFactor(float(c2), int(n2)))

    @property
    def c1(self) -> float:
        return self.factor1.curvature

    @property
    def c2(self) -> float:
        return self.factor2.curvature

    @property
    def total_dim(self) -> int:
        return self.factor1.dim + self.factor2.dim

    @property
    def flat_dim(self) -> int:
        return self.factor1.embed_dim + self.factor2.embed_dim

    @property
    def split_index(self) -> int:
        return self.factor1.embed_dim

    def factors(self):
        return (self.factor1, self.factor2)

    def blocks(self):
        s = self.split_index
        return (slice(0, s), slice(s, self.flat_dim))

    def label(self) -> str:
        return f"{self.factor1.label()} x {self.factor2.label()}"

    def is_QxR(self) -> bool:
        """Target of the form Q^{m-1}_c x R with c != 0."""
        f2 = self.factor2
        return self.factor1.curved and f2.kind is Kind.EUCLIDEAN and f2.dim == 1

    def is_SxR(self) -> bool:
        return self.is_QxR() and self.c1 > 0

    def is_opposite_curvature(self) -> bool:
        return self.c1 != 0 and self.c1 + self.c2 == 0

    def is_SxH(self) -> bool:
        return self.c1 > 0 and self.is_opposite_curvature()

    # -- forms -----------------------------------------------------------------

    def inner(self, v, w):
        """Product form: signature form on block 1 plus signature form on block 2."""
        return np.einsum("...n,n,...n->...", v, self.eta, w)

    def norm(self, v):
        return np.sqrt(np.abs(self.inner(v, v)))


def dpi_split(v, A: AmbientProduct):
    """Return ``(dpi_1 v, dpi_2 v)`` as full-length ambient vectors."""
    v = np.asarray(v, dtype=float)
    b1, b2 = A.blocks()
    p1 = np.zeros_like(v)
    p2 = np.zeros_like(v)
    p1[..., b1] = v[..., b1]
    p2[..., b2] = v[..., b2]
    return p1, p2


def on_manifold_residual(p, A: AmbientProduct):
    p = np.asarray(p, dtype=float)
    res = np.zeros(p.shape[:-1])
    for fac, blk in zip(A.factors(), A.blocks()):
        if not fac.curved:
            continue
        x = p[..., blk]
        r = np.abs(fac.inner(x, x) - 1.0 / fac.curvature)
        if fac.kind is Kind.HYPERBOLIC:
            # lower sheet is off the model
            r = np.where(x[..., 0] > 0, r, np.inf)
        res = np.maximum(res, r)
    return res if res.ndim else float(res)


def _require_on_manifold(p, A, tol):
    r = np.max(on_manifold_residual(p, A))
    if not r <= tol:
        raise OffManifoldError(f"point is off Q^m: constraint residual {r:.3e} > {tol:.1e}")


def tangent_project_Q(p, v, A: AmbientProduct, tol: float = ON_MANIFOLD_TOL, check: bool = True):
    """Orthogonal projection of flat vectors ``v`` onto ``T_p Q^m``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    v = np.array(np.broadcast_to(v, np.broadcast_shapes(p.shape, v.shape)), copy=True)
    if check:
        _require_on_manifold(p, A, tol)
    for fac, blk in zip(A.factors(), A.blocks()):
        if not fac.curved:
            continue
        x = p[..., blk]
        coef = fac.curvature * fac.inner(v[..., blk], x)
        v[..., blk] -= coef[..., None] * x
    return v


def position_components(p, v, A: AmbientProduct):
    """Return ``<v_i, x_i>`` for each curved factor (0 for flat ones), shape (..., 2)."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    out = []
    for fac, blk in zip(A.factors(), A.blocks()):
        if fac.curved:
            out.append(fac.inner(v[..., blk], p[..., blk]))
        else:
            out.append(np.zeros(np.broadcast_shapes(p.shape, v.shape)[:-1]))
    return np.stack(out, axis=-1)


def is_tangent(p, v, A: AmbientProduct, tol: float = 1e-8) -> bool:
    scale = 1.0 + np.max(np.abs(v))
    return bool(np.max(np.abs(position_components(p, v, A))) <= tol * scale)


def ambient_covariant_derivative(p, X, dY, A: AmbientProduct, Y=None, tol: float = 1e-8):
    """Levi-Civita derivative ``D_X Y`` of Q^m from the flat derivative ``dY`` of Y along X.

    Each factor is a nondegenerate level set of its flat space, so the
    connection is the tangential part of the flat derivative.
    """
    _require_on_manifold(p, A, ON_MANIFOLD_TOL)
    if not is_tangent(p, X, A, tol):
        raise NonTangentError("direction X is not tangent to Q^m")
    if Y is not None and not is_tangent(p, Y, A, tol):
        raise NonTangentError("field Y is not tangent to Q^m")
    return tangent_project_Q(p, dY, A, check=False)


def factor_tangent_basis(p, A: AmbientProduct, which: int) -> np.ndarray:
    """Orthonormal basis of ``T Q^{n_i}`` at ``p`` as ambient vectors, shape (n_i, flat_dim).

    Gram-Schmidt of the block's coordinate directions after projection onto
    the factor's tangent space, in coordinate order.
    """
    fac = A.factors()[which]
    blk = A.blocks()[which]
    p = np.asarray(p, dtype=float)
    seeds = np.zeros((fac.embed_dim, A.flat_dim))
    seeds[:, blk] = np.eye(fac.embed_dim)
    seeds = tangent_project_Q(p, seeds, A, check=False)
    return gram_schmidt(seeds, A.eta, want=fac.dim)


def gram_schmidt(seeds, eta, want: int, against=None, thresholds=(1e-3, 1e-8)):
    """Deterministic Gram-Schmidt with a re-orthogonalization pass.

    ``seeds`` has shape (..., S, N) and ``against`` (optional, already
    orthonormal) shape (..., K, N); leading axes are independent problems.
    Seeds are taken in input order and a seed is accepted when its residual
    norm relative to its own norm exceeds the current threshold; the looser
    second sweep only runs for problems that came up short.  Returns
    (..., want, N).
    """
    seeds = np.asarray(seeds, dtype=float)
    if against is not None:
        against = np.asarray(against, dtype=float)
        lead = np.broadcast_shapes(seeds.shape[:-2], against.shape[:-2])
        against = np.broadcast_to(against, lead + against.shape[-2:])
    else:
        lead = seeds.shape[:-2]
    seeds = np.broadcast_to(seeds, lead + seeds.shape[-2:]).reshape((-1,) + seeds.shape[-2:])
    if against is not None:
        against = against.reshape((-1,) + against.shape[-2:])
    N = seeds.shape[-1]
    B = seeds.shape[0]
    out = np.zeros((B, want, N))
    count = np.zeros(B, dtype=int)
    used = np.zeros((B, seeds.shape[-2]), dtype=bool)

    def ip(v, w):
        return np.sum(v * eta * w, axis=-1)

    for thr in thresholds:
        for idx in range(seeds.shape[-2]):
            open_ = (count < want) & ~used[..., idx]
            if not np.any(open_):
                continue
            s = seeds[..., idx, :]
            s_norm = np.sqrt(np.abs(ip(s, s)))
            w = s.copy()
            for _ in range(2):
                if against is not None:
                    w = w - np.einsum("...k,...kn->...n", ip(w[..., None, :], against), against)
                # unfilled slots are zero and drop out of the projection
                w = w - np.einsum("...k,...kn->...n", ip(w[..., None, :], out), out)
            nrm2 = ip(w, w)
            nrm = np.sqrt(np.maximum(nrm2, 0.0))
            ok = open_ & (nrm2 > 0) & (nrm > thr * s_norm) & (s_norm > 0)
            if not np.any(ok):
                continue
            sel = np.nonzero(ok)[0]
            out[sel, count[sel]] = w[sel] / nrm[sel][:, None]
            count[sel] += 1
            used[sel, idx] = True
        if np.all(count == want):
            break
    if np.any(count < want):
        raise DegenerateImmersionError(
            f"could only complete {int(np.min(count))} of {want} frame vectors"
        )
    return out.reshape(lead + (want, N))
