import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from kahlercheck.catalog import REQUIRED, entry_names
from kahlercheck.checks import analyze_sample
from kahlercheck.errors import KahlerError, NotMinimalError
from kahlercheck.jetcalc import build_frames, chart_grid, compute_jet, metric_from_d1
from kahlercheck.kahler import (
    J_in_frame,
    Route,
    adapted_frame,
    curvature_J_commutation,
    intrinsic_curvature_fd,
    kahler_residuals,
    ricci_J_invariance,
    ricci_via_gauss,
    ricci_via_kahler_identity,
    riemann_symmetry_residual,
)
from runs import entry, flat_torus_R4, sample


def frame_and_J(name, u=None):
    imm = entry(name)
    u = imm.chart.mean(axis=1) if u is None else np.asarray(u, float)
    j = compute_jet(imm, u)
    fr = build_frames(j)
    g = metric_from_d1(j.d1, imm.target.eta)
    return fr, J_in_frame(imm.eval_J(u), fr.coordToFrame, g)


# -- Kähler residuals ------------------------------------------------------------


def test_flat_torus_constant_J_is_kahler():
    imm = flat_torus_R4()
    res = kahler_residuals(imm, chart_grid(imm, 4))
    assert max(res.squareResidual, res.orthoResidual, res.parallelResidual) < 1e-10
    assert res.certified()


def test_round_sphere_rotation_is_parallel():
    imm = entry("totally_geodesic_slice_S2xR")
    res = kahler_residuals(imm, chart_grid(imm, 5))
    assert res.parallelResidual < 1e-5
    assert res.certified()


def test_scaled_J_fails_certification():
    imm = entry("totally_geodesic_slice_S2xR")
    scaled = dataclasses.replace(imm, J=lambda U: 1.1 * imm.eval_J(U))
    res = kahler_residuals(scaled, chart_grid(scaled, 3))
    assert res.squareResidual == pytest.approx(1.1**2 - 1, abs=1e-9)
    assert not res.certified()


@pytest.mark.parametrize("name", entry_names())
def test_catalog_structures_are_certified(name):
    imm = entry(name)
    assert kahler_residuals(imm, chart_grid(imm, 2)).certified()


# -- adapted frames --------------------------------------------------------------


def test_surface_adapted_frame_pairs_X_with_JX():
    fr, Jm = frame_and_J("diagonal_sphere_S2xS2")
    afr, Jad = adapted_frame(fr, Jm)
    X1, X2 = afr.tangentFrame
    np.testing.assert_array_equal(X1, fr.tangentFrame[0])
    JX1 = np.einsum("b,bn->n", Jm[:, 0], fr.tangentFrame)
    np.testing.assert_allclose(X2, JX1, atol=1e-15)
    np.testing.assert_allclose(Jad, [[0.0, -1.0], [1.0, 0.0]], atol=1e-12)


def test_four_dimensional_adapted_frame_is_orthonormal_and_J_paired():
    imm = entry("clifford_x_clifford_S3xS3")
    fr, Jm = frame_and_J("clifford_x_clifford_S3xS3")
    afr, Jad = adapted_frame(fr, Jm)
    E = afr.tangentFrame
    np.testing.assert_allclose(imm.target.inner(E[:, None], E[None, :]), np.eye(4), atol=1e-12)
    for p in range(2):
        # column 2p of the adapted J holds the components of J X_{2p}
        assert np.max(np.abs(Jad[:, 2 * p] - np.eye(4)[2 * p + 1])) < 1e-12


def test_adapted_frame_rejects_incompatible_J():
    fr, Jm = frame_and_J("diagonal_sphere_S2xS2")
    with pytest.raises(KahlerError):
        adapted_frame(fr, np.array([[0.0, -2.0], [0.5, 0.0]]))


# -- intrinsic curvature ---------------------------------------------------------


def test_flat_torus_intrinsic_curvature_vanishes():
    pkg = intrinsic_curvature_fd(flat_torus_R4(), np.array([1.0, 2.0]))
    assert pkg.route is Route.INTRINSIC_FD
    assert np.max(np.abs(pkg.riem)) < 1e-8


def test_round_sphere_has_unit_sectional_curvature():
    pkg = intrinsic_curvature_fd(entry("totally_geodesic_slice_S2xR"), np.array([1.0, 2.0]))
    # riem[a, b, b, a] = <R(X_a, X_b) X_b, X_a> is the sectional curvature
    assert pkg.riem[0, 1, 1, 0] == pytest.approx(1.0, abs=1e-4)


def test_clifford_torus_is_flat():
    pkg = intrinsic_curvature_fd(entry("clifford_torus_slice"), np.array([1.0, 2.0]))
    assert np.max(np.abs(pkg.riem)) < 1e-4


# -- Gauss and Kähler-identity routes -------------------------------------------


def test_gauss_route_on_totally_geodesic_slice():
    sa = sample("totally_geodesic_slice_S2xR", third_order=False)
    np.testing.assert_allclose(sa.ricGauss.ricMatrix, np.eye(2), atol=1e-9)


@pytest.mark.parametrize("name", ["clifford_torus_slice", "vertical_cylinder_S2xR"])
def test_gauss_route_flat_examples(name):
    sa = sample(name, third_order=False)
    np.testing.assert_allclose(sa.ricGauss.ricMatrix, 0.0, atol=1e-9)


@pytest.mark.parametrize("name, tol", [("totally_geodesic_slice_S2xR", 1e-9), ("clifford_torus_slice", 1e-7),
                                       ("clifford_x_clifford_S3xS3", 1e-7)])
def test_kahler_identity_route_agrees_with_gauss(name, tol):
    sa = sample(name, third_order=False)
    assert sa.ricKahler.route is Route.KAHLER
    assert np.max(np.abs(sa.ricKahler.ric_diag - sa.ricGauss.ric_diag)) < tol


def test_clifford_product_is_ricci_flat_by_both_routes():
    sa = sample("clifford_x_clifford_S3xS3", third_order=False)
    assert np.max(np.abs(sa.ricGauss.ricMatrix)) < 1e-9
    assert np.max(np.abs(sa.ricKahler.ric_diag)) < 1e-9


def test_kahler_identity_rejects_non_minimal_sample():
    sa = sample("latitude_sphere_nonminimal", third_order=False)
    assert sa.ricKahler is None
    with pytest.raises(NotMinimalError):
        ricci_via_kahler_identity(sa.gs, sa.pt, 1.0, 0.0)


@pytest.mark.parametrize("name", REQUIRED)
def test_route_agreement_and_structural_invariants(name):
    imm = entry(name)
    for u in chart_grid(imm, 2):
        sa = analyze_sample(imm, u, third_order=False)
        assert np.max(np.abs(sa.ricFD.ricMatrix - sa.ricGauss.ricMatrix)) < 1e-4
        if sa.ricKahler is not None:
            assert np.max(np.abs(sa.ricGauss.ric_diag - sa.ricKahler.ric_diag)) < 1e-7
        assert riemann_symmetry_residual(sa.ricGauss.riem) < 1e-9
        assert riemann_symmetry_residual(sa.ricFD.riem) < 1e-6
        for pkg in (sa.ricGauss, sa.ricFD):
            np.testing.assert_allclose(pkg.ricMatrix, pkg.ricMatrix.T, atol=1e-6)
            assert pkg.scal == pytest.approx(np.trace(pkg.ricMatrix))
        assert ricci_J_invariance(sa.ricGauss, sa.Jm) < 1e-7
        assert curvature_J_commutation(sa.ricGauss, sa.Jm) < 1e-5


def test_gauss_route_does_not_assume_minimality():
    # umbilic sphere of colatitude pi/4 has radius 1/sqrt(2): Ric = 2 identically
    sa = sample("latitude_sphere_nonminimal", third_order=False)
    np.testing.assert_allclose(sa.ricGauss.ricMatrix, 2 * np.eye(2), atol=1e-9)
    np.testing.assert_allclose(ricci_via_gauss(sa.gs, sa.pt, 1.0, 0.0).ricMatrix, sa.ricFD.ricMatrix, atol=1e-4)


@given(arrays(float, (4, 4), elements=st.floats(-3, 3)))
def test_trace_JR_vanishes_for_symmetric_R(M):
    R = M + M.T
    J = np.kron(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert abs(np.trace(J @ R)) < 1e-9
