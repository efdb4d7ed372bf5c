import numpy as np
import pytest

from kahlercheck.catalog import REQUIRED, default_grid, entry_names, get_entry, list_entries
from kahlercheck.checks import ALL_CHECKS, EQUALITY_TOL, CheckKind, Verdict
from kahlercheck.jetcalc import chart_grid, compute_jet, induced_metric
from runs import catalog_run, entry, sample

MARGIN_CHECKS = ("ricci_margin_SxR", "scalar_margin_SxR", "ricci_margin_SxH", "scalar_margin_general",
                 "takahashi", "dajczer_rodriguez")


def test_listing_covers_every_entry():
    listed = [e["name"] for e in list_entries()]
    assert listed == entry_names()
    assert set(REQUIRED) <= set(listed)
    assert len(REQUIRED) == 8


def test_unknown_entry_names_the_known_ones():
    with pytest.raises(KeyError, match="clifford_torus_slice"):
        get_entry("no_such_entry")


@pytest.mark.parametrize("name", entry_names())
def test_closed_forms_land_on_the_target(name):
    imm = entry(name)
    P = imm.eval_map(chart_grid(imm, default_grid(imm)))
    from kahlercheck.ambient import on_manifold_residual

    assert np.max(on_manifold_residual(P, imm.target)) < 1e-10


@pytest.mark.parametrize("name", entry_names())
def test_induced_metric_is_positive_definite(name):
    imm = entry(name)
    for u in chart_grid(imm, 3):
        assert np.linalg.eigvalsh(induced_metric(compute_jet(imm, u)))[0] > 1e-3


@pytest.mark.parametrize("name", entry_names())
def test_run_agrees_with_expected_flags(name):
    result = catalog_run(name)[0]
    exp = entry(name).expected
    assert result.errors == []
    assert result.sliceLabel.value == exp["slice"]
    assert (result.aggregate("minimality").verdict is Verdict.PASS) == exp["minimal"]
    for check, key in (("pluriharmonic", "pluriharmonic"), ("antipluriharmonic", "antiPluriharmonic"),
                       ("parallel_alpha", "parallel")):
        agg = result.aggregate(check)
        assert agg.verdict is Verdict.PASS, (check, agg)
        wanted = check.capitalize() if check != "parallel_alpha" else "Parallel"
        if check == "antipluriharmonic":
            wanted = "AntiPluriharmonic"
        assert (set(agg.labels) == {wanted}) == exp[key], (check, agg.labels)


@pytest.mark.parametrize("name", entry_names())
def test_curvature_values_match_expected(name):
    imm = entry(name)
    exp = imm.expected
    for u in chart_grid(imm, 2):
        sa = sample(name, u, third_order=False)
        assert sa.pt.traceR == pytest.approx(exp["traceR"], abs=1e-9)
        np.testing.assert_allclose(sa.ricGauss.ricMatrix, exp["ric"] * np.eye(imm.dim), atol=1e-7)
        assert sa.ricGauss.scal == pytest.approx(exp["scal"], abs=1e-7)
        if "meanCurvature" in exp:
            assert np.linalg.norm(sa.gs.meanCurvature) == pytest.approx(exp["meanCurvature"], abs=1e-6)


@pytest.mark.parametrize("name", entry_names())
def test_equality_cases_are_exactly_the_listed_ones(name):
    result = catalog_run(name)[0]
    listed = set(entry(name).expected["equalityCases"])
    for check in MARGIN_CHECKS:
        agg = result.aggregate(check)
        if agg.verdict is Verdict.NOT_APPLICABLE:
            assert check not in listed
            continue
        assert (agg.minMargin < EQUALITY_TOL) == (check in listed), (check, agg.minMargin)


@pytest.mark.parametrize("name", [n for n in REQUIRED if n != "latitude_sphere_nonminimal"])
def test_required_entries_pass_every_applicable_check(name):
    result = catalog_run(name)[0]
    bad = [a.name for a in result.aggregates if a.verdict is Verdict.FAIL]
    assert bad == []
    assert result.verdict is Verdict.PASS


def test_every_check_passes_somewhere_in_the_corpus():
    passed = set()
    for name in entry_names():
        passed |= {a.name for a in catalog_run(name)[0].aggregates if a.verdict is Verdict.PASS}
    assert set(ALL_CHECKS) <= passed, sorted(set(ALL_CHECKS) - passed)


def test_negative_control_fails_only_minimality():
    result = catalog_run("latitude_sphere_nonminimal")[0]
    failed = [a.name for a in result.aggregates if a.verdict is Verdict.FAIL]
    assert failed == ["minimality"]
    assert result.verdict is Verdict.FAIL
    assert result.aggregate("minimality").maxResidual == pytest.approx(1.0, abs=1e-6)


def test_negative_control_explains_skipped_checks():
    result = catalog_run("latitude_sphere_nonminimal")[0]
    for check in ("kahler_identity_residual", "scalar_margin_SxR", "scalar_margin_general", "takahashi"):
        agg = result.aggregate(check)
        assert agg.verdict is Verdict.NOT_APPLICABLE
        notes = {r.notes for s in result.samples for r in s if r.name == check}
        assert notes and all(notes), check
    # pluriharmonicity needs minimality, so the classifier reports it absent
    assert set(result.aggregate("pluriharmonic").labels) == {"NotPluriharmonic"}


def test_residual_aggregates_report_the_worst_sample():
    result = catalog_run("clifford_torus_slice")[0]
    agg = result.aggregate("gauss_residual")
    assert agg.kind == CheckKind.RESIDUAL.value
    assert agg.maxResidual == pytest.approx(max(result.values("gauss_residual")))
