"""Closed-form example immersions with exact first partials and expected flags.

Each entry is an :class:`~kahlercheck.jetcalc.ImmersionDefinition`; the
``expected`` dict records what the engine must observe (``minimal``,
``pluriharmonic``, ``antiPluriharmonic``, ``parallel``, ``slice``,
``traceR``, ``ric``, ``scal``, ``equalityCases``).  Sphere charts keep 0.2 rad
away from the poles.
"""

from __future__ import annotations

import numpy as np

from .ambient import AmbientProduct
from .jetcalc import ImmersionDefinition

POLE_MARGIN = 0.2
ROT = np.array([[0.0, -1.0], [1.0, 0.0]])
_S = 1.0 / np.sqrt(2.0)


def _stack(cols):
    """Stack scalar fields (broadcast to a common shape) along a new last axis."""
    shape = np.broadcast_shapes(*(np.shape(c) for c in cols))
    out = np.empty(shape + (len(cols),))
    for k, c in enumerate(cols):
        out[..., k] = c
    return out


def _partials(rows):
    """Rows of partials (each a list of components) -> (..., dim, N)."""
    return np.stack([_stack(r) for r in rows], axis=-2)


def _sphere_J(theta):
    """Rotation by pi/2 for the round metric in (theta, phi) chart coordinates."""
    s = np.sin(theta)
    z = np.zeros_like(theta)
    return np.stack([np.stack([z, -s], -1), np.stack([1.0 / s, z], -1)], -2)


_SPHERE_CHART = [[POLE_MARGIN, np.pi - POLE_MARGIN], [0.0, 2 * np.pi]]


def _round(U):
    th, ph = U[..., 0], U[..., 1]
    return np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)


def _round_d(U):
    th, ph = U[..., 0], U[..., 1]
    z = np.zeros_like(th)
    d_th = [np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)]
    d_ph = [-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph), z]
    return d_th, d_ph


def _sphere_J_field(U):
    return _sphere_J(U[..., 0])


# -- entries ---------------------------------------------------------------------


def clifford_torus_slice() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 3, 0, 1)

    def f(U):
        a, b = U[..., 0], U[..., 1]
        return _stack([_S * np.cos(a), _S * np.sin(a), _S * np.cos(b), _S * np.sin(b), 0.0 * a])

    def df(U):
        a, b = U[..., 0], U[..., 1]
        z = np.zeros_like(a)
        return _partials([[-_S * np.sin(a), _S * np.cos(a), z, z, z], [z, z, -_S * np.sin(b), _S * np.cos(b), z]])

    return ImmersionDefinition(
        name="clifford_torus_slice", dim=2, chart=[[0, 2 * np.pi], [0, 2 * np.pi]], map=f, dmap=df,
        target=A, J=ROT, description="Clifford torus in S^3 x {0} inside S^3 x R",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=False, parallel=True,
                      slice="FirstFactorSlice", traceR=0.0, ric=0.0, scal=0.0, equalityCases=["takahashi"]),
    )


def vertical_cylinder_S2xR() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 2, 0, 1)

    def f(U):
        a, t = U[..., 0], U[..., 1]
        return _stack([np.cos(a), np.sin(a), 0.0 * a, t])

    def df(U):
        a = U[..., 0]
        z = np.zeros_like(a)
        return _partials([[-np.sin(a), np.cos(a), z, z], [z, z, z, z + 1.0]])

    return ImmersionDefinition(
        name="vertical_cylinder_S2xR", dim=2, chart=[[0, 2 * np.pi], [-1, 1]], map=f, dmap=df,
        target=A, J=ROT, description="great circle x R in S^2 x R",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="Generic", traceR=1.0, ric=0.0, scal=0.0,
                      equalityCases=["scalar_margin_SxR", "scalar_margin_general"]),
    )


def totally_geodesic_slice_S2xR() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 2, 0, 1)
    height = 0.5

    def f(U):
        x, y, z = _round(U)
        return _stack([x, y, z, 0.0 * x + height])

    def df(U):
        d_th, d_ph = _round_d(U)
        z = np.zeros_like(U[..., 0])
        return _partials([d_th + [z], d_ph + [z]])

    return ImmersionDefinition(
        name="totally_geodesic_slice_S2xR", dim=2, chart=_SPHERE_CHART, map=f, dmap=df,
        target=A, J=_sphere_J_field, description="S^2 x {1/2} inside S^2 x R",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="FirstFactorSlice", traceR=0.0, ric=1.0, scal=2.0,
                      equalityCases=["ricci_margin_SxR", "scalar_margin_SxR", "scalar_margin_general",
                                     "takahashi", "dajczer_rodriguez"]),
    )


def geodesic_plane_H2xR() -> ImmersionDefinition:
    A = AmbientProduct.of(-1, 2, 0, 1)

    def f(U):
        s, t = U[..., 0], U[..., 1]
        return _stack([np.cosh(s), np.sinh(s), 0.0 * s, t])

    def df(U):
        s = U[..., 0]
        z = np.zeros_like(s)
        return _partials([[np.sinh(s), np.cosh(s), z, z], [z, z, z, z + 1.0]])

    return ImmersionDefinition(
        name="geodesic_plane_H2xR", dim=2, chart=[[-1, 1], [-1, 1]], map=f, dmap=df,
        target=A, J=ROT, description="hyperbolic geodesic x R in H^2 x R",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="Generic", traceR=1.0, ric=0.0, scal=0.0, equalityCases=["scalar_margin_general"]),
    )


def diagonal_sphere_S2xS2() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 2, 1, 2)

    def f(U):
        x, y, z = _round(U)
        return _stack([x, y, z, x, y, z])

    def df(U):
        d_th, d_ph = _round_d(U)
        return _partials([d_th + d_th, d_ph + d_ph])

    return ImmersionDefinition(
        name="diagonal_sphere_S2xS2", dim=2, chart=_SPHERE_CHART, map=f, dmap=df,
        target=A, J=_sphere_J_field, description="diagonal p -> (p, p) of the unit sphere in S^2 x S^2",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="Generic", traceR=1.0, ric=0.5, scal=1.0, equalityCases=["scalar_margin_general"]),
    )


def clifford_x_clifford_S3xS3() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 3, 1, 3)

    def f(U):
        a, b, c, d = (U[..., k] for k in range(4))
        return _stack([_S * np.cos(a), _S * np.sin(a), _S * np.cos(b), _S * np.sin(b),
                       _S * np.cos(c), _S * np.sin(c), _S * np.cos(d), _S * np.sin(d)])

    def df(U):
        out = np.zeros(U.shape[:-1] + (4, 8))
        for k in range(4):
            out[..., k, 2 * k] = -_S * np.sin(U[..., k])
            out[..., k, 2 * k + 1] = _S * np.cos(U[..., k])
        return out

    J = np.zeros((4, 4))
    J[:2, :2] = ROT
    J[2:, 2:] = ROT
    return ImmersionDefinition(
        name="clifford_x_clifford_S3xS3", dim=4, chart=[[0, 2 * np.pi]] * 4, map=f, dmap=df,
        target=A, J=J, description="product of two Clifford tori, T^4 in S^3 x S^3",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=False, parallel=True,
                      slice="Generic", traceR=2.0, ric=0.0, scal=0.0, equalityCases=[]),
    )


def geodesic_product_SxH() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 2, -1, 2)

    def f(U):
        a, s = U[..., 0], U[..., 1]
        z = 0.0 * a
        return _stack([np.cos(a), np.sin(a), z, np.cosh(s), np.sinh(s), z])

    def df(U):
        a, s = U[..., 0], U[..., 1]
        z = np.zeros_like(a)
        return _partials([[-np.sin(a), np.cos(a), z, z, z, z], [z, z, z, np.sinh(s), np.cosh(s), z]])

    return ImmersionDefinition(
        name="geodesic_product_SxH", dim=2, chart=[[0, 2 * np.pi], [-1, 1]], map=f, dmap=df,
        target=A, J=ROT, description="great circle x geodesic in S^2 x H^2",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="Generic", traceR=1.0, ric=0.0, scal=0.0, equalityCases=["scalar_margin_general"]),
    )


def latitude_sphere_nonminimal() -> ImmersionDefinition:
    """Umbilic 2-sphere at spherical distance pi/4 from a pole of S^3; |H| = 1."""
    A = AmbientProduct.of(1, 3, 0, 1)

    def f(U):
        x, y, z = _round(U)
        return _stack([0.0 * x + _S, _S * x, _S * y, _S * z, 0.0 * x])

    def df(U):
        d_th, d_ph = _round_d(U)
        z = np.zeros_like(U[..., 0])
        return _partials([[z] + [_S * c for c in d_th] + [z], [z] + [_S * c for c in d_ph] + [z]])

    return ImmersionDefinition(
        name="latitude_sphere_nonminimal", dim=2, chart=_SPHERE_CHART, map=f, dmap=df,
        target=A, J=_sphere_J_field, description="non-minimal umbilic sphere in S^3 x {0} (negative control)",
        expected=dict(minimal=False, pluriharmonic=False, antiPluriharmonic=True, parallel=True,
                      slice="FirstFactorSlice", traceR=0.0, ric=2.0, scal=4.0, meanCurvature=1.0,
                      equalityCases=[]),
    )


def totally_geodesic_slice_SxH() -> ImmersionDefinition:
    A = AmbientProduct.of(1, 3, -1, 2)

    def f(U):
        x, y, z = _round(U)
        o = 0.0 * x
        return _stack([x, y, z, o, o + 1.0, o, o])

    def df(U):
        d_th, d_ph = _round_d(U)
        z = np.zeros_like(U[..., 0])
        return _partials([d_th + [z] * 4, d_ph + [z] * 4])

    return ImmersionDefinition(
        name="totally_geodesic_slice_SxH", dim=2, chart=_SPHERE_CHART, map=f, dmap=df,
        target=A, J=_sphere_J_field, description="great S^2 x {p} inside S^3 x H^2",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="FirstFactorSlice", traceR=0.0, ric=1.0, scal=2.0,
                      equalityCases=["ricci_margin_SxH", "scalar_margin_general", "takahashi", "dajczer_rodriguez"]),
    )


def hyperbolic_slice_point_x_H2() -> ImmersionDefinition:
    """Totally geodesic H^2 in {p} x H^3 in Fermi coordinates; metric cosh(t)^2 ds^2 + dt^2."""
    A = AmbientProduct.of(1, 2, -1, 3)

    def f(U):
        s, t = U[..., 0], U[..., 1]
        o = 0.0 * s
        return _stack([o, o, o + 1.0, np.cosh(s) * np.cosh(t), np.sinh(s) * np.cosh(t), np.sinh(t), o])

    def df(U):
        s, t = U[..., 0], U[..., 1]
        z = np.zeros_like(s)
        return _partials([
            [z, z, z, np.sinh(s) * np.cosh(t), np.cosh(s) * np.cosh(t), z, z],
            [z, z, z, np.cosh(s) * np.sinh(t), np.sinh(s) * np.sinh(t), np.cosh(t), z],
        ])

    def J(U):
        ch = np.cosh(U[..., 1])
        z = np.zeros_like(ch)
        return np.stack([np.stack([z, -1.0 / ch], -1), np.stack([ch, z], -1)], -2)

    return ImmersionDefinition(
        name="hyperbolic_slice_point_x_H2", dim=2, chart=[[-1, 1], [-1, 1]], map=f, dmap=df,
        target=A, J=J, description="{p} x H^2 inside S^2 x H^3",
        expected=dict(minimal=True, pluriharmonic=True, antiPluriharmonic=True, parallel=True,
                      slice="SecondFactorSlice", traceR=2.0, ric=-1.0, scal=-2.0,
                      equalityCases=["scalar_margin_general", "takahashi"]),
    )


_BUILDERS = (
    clifford_torus_slice,
    vertical_cylinder_S2xR,
    totally_geodesic_slice_S2xR,
    geodesic_plane_H2xR,
    diagonal_sphere_S2xS2,
    clifford_x_clifford_S3xS3,
    geodesic_product_SxH,
    latitude_sphere_nonminimal,
    totally_geodesic_slice_SxH,
    hyperbolic_slice_point_x_H2,
)
REQUIRED = tuple(b.__name__ for b in _BUILDERS[:8])


def entry_names():
    return [b.__name__ for b in _BUILDERS]


def get_entry(name: str) -> ImmersionDefinition:
    for b in _BUILDERS:
        if b.__name__ == name:
            return b()
    raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(entry_names())}")


def default_grid(imm: ImmersionDefinition) -> int:
    """Points per axis: 9 for surfaces, 5 for four-dimensional domains."""
    return 9 if imm.dim == 2 else 5


def list_entries():
    """Names with target label, domain dimension, default grid and expected flags."""
    out = []
    for b in _BUILDERS:
        imm = b()
        out.append(dict(name=imm.name, target=imm.target.label(), dim=imm.dim, grid=default_grid(imm),
                        description=imm.description, expected=dict(imm.expected)))
    return out
