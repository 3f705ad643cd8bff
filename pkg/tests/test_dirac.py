import json

import numpy as np
import pytest

from honeydirac.dirac import (
    DiracTolerances,
    _bands_below,
    characterize,
    detect_dirac,
    eps_scan,
    lambda_sharp,
    matrix_elements_M0,
    radius_ladder,
    unit_directions,
)
from honeydirac.errors import DiracDetectionError, SymmetryError
from honeydirac.lattice import TAU, index_R_action
from honeydirac.potential import cosine_mode
from honeydirac.spectral import BlochHamiltonian

M = 8
SMALL_EPS_SLOPE = 4.0 * np.pi / 3.0


def test_crossing_bands_follow_sign_of_coupling(report_01, report_m01):
    assert report_01.band_indices == (1, 2)
    assert report_m01.band_indices == (2, 3)


def test_detection_without_cone_has_no_verdict(report_01):
    assert report_01.cone is None
    assert report_01.anisotropy is None
    assert report_01.verdict is False


def test_cone_isotropy_and_slope(report_03):
    cone = report_03.cone
    assert len(cone.fits) == 8
    slopes = cone.slopes
    assert (slopes.max() - slopes.min()) / slopes.mean() <= 0.01
    np.testing.assert_allclose(slopes, abs(report_03.lambda_sharp), rtol=0.005)
    assert report_03.verdict


def test_small_coupling_slope(report_001):
    assert abs(report_001.lambda_sharp) == pytest.approx(SMALL_EPS_SLOPE, rel=0.01)
    np.testing.assert_allclose(report_001.cone.slopes, SMALL_EPS_SLOPE, rtol=0.01)


def test_cone_even_part_is_quadratic(report_03):
    ratios = [abs(fit.even_part[-1] / fit.even_part[0]) for fit in report_03.cone.fits]
    radii = report_03.cone.fits[0].radii
    expected = (radii[-1] / radii[0]) ** 2
    assert 0.75 * expected <= np.median(ratios) <= 1.25 * expected


def test_cone_slopes_on_both_sides(report_03):
    lam = abs(report_03.lambda_sharp)
    for fit in report_03.cone.fits:
        assert np.all(fit.slopes_plus > 0) and np.all(fit.slopes_minus > 0)
        mean = 0.5 * (fit.slopes_plus + fit.slopes_minus)
        # mean slope is |lambda#| plus a correction linear in the radius
        slope, intercept = np.polyfit(fit.radii, mean, 1)
        assert np.max(np.abs(mean - (intercept + slope * fit.radii))) <= 1e-3 * lam
        assert intercept == pytest.approx(lam, rel=0.005)
        assert mean[0] == pytest.approx(lam, rel=0.01)


def test_matrix_elements(geom, report_03):
    lam = report_03.lambda_sharp
    rng = np.random.default_rng(5)
    for kappa in rng.normal(size=(10, 2)):
        diag, offdiag = matrix_elements_M0(geom, report_03.basis, report_03.coeffs, kappa)
        assert abs(diag) <= 1e-10 * np.linalg.norm(kappa)
        expected = -np.conj(lam) * (kappa[0] + 1j * kappa[1])
        assert abs(offdiag - expected) <= 1e-8 * abs(expected)


def test_lambda_invariant_under_phase(geom, report_03):
    reps = report_03.basis.reps
    lam = lambda_sharp(geom, geom.K, report_03.coeffs, reps)
    assert lam == pytest.approx(report_03.lambda_sharp, rel=1e-12)
    for theta in (0.3, 1.7, -2.2):
        turned = lambda_sharp(geom, geom.K, np.exp(1j * theta) * report_03.coeffs, reps)
        assert abs(turned) == pytest.approx(abs(lam), rel=1e-12)


def test_lambda_invariant_under_relabeling(geom, report_03):
    reps = report_03.basis.reps
    lam = lambda_sharp(geom, geom.K, report_03.coeffs, reps)
    moved = np.array([index_R_action(m) for m in reps])
    relabeled = lambda_sharp(geom, geom.K, np.conj(TAU) * report_03.coeffs, moved)
    assert abs(relabeled - lam) <= 1e-12 * abs(lam)


def test_lambda_ignores_normalisation(geom, report_03):
    reps = report_03.basis.reps
    lam = lambda_sharp(geom, geom.K, report_03.coeffs, reps)
    assert lambda_sharp(geom, geom.K, 7.5 * report_03.coeffs, reps) == pytest.approx(lam, rel=1e-12)


def test_K_and_Kprime_agree(geom, optical):
    at_K = detect_dirac(geom, optical, 0.3, M)
    at_Kp = detect_dirac(geom, optical, 0.3, M, K_star=geom.Kprime)
    assert at_Kp.mu_star == pytest.approx(at_K.mu_star, rel=1e-8)
    assert abs(at_Kp.lambda_sharp) == pytest.approx(abs(at_K.lambda_sharp), rel=1e-8)


def test_conjugate_pair_residual(report_03):
    assert report_03.conj_residual <= 1e-9 * (1.0 + report_03.mu_star)
    assert report_03.isolation_gap > 0.1


def test_eigenfunctions(geom, report_03):
    phi1, phi2 = report_03.phi1(geom), report_03.phi2(geom)
    assert phi1.norm() == pytest.approx(1.0)
    assert phi2.norm() == pytest.approx(1.0)
    assert abs(phi1.inner(phi2)) <= 1e-12


def test_free_operator_is_exceptional(geom, optical):
    with pytest.raises(DiracDetectionError) as info:
        detect_dirac(geom, optical, 0.0, M)
    assert info.value.reason == "exceptional"


def test_vanishing_cone_threshold(geom, optical):
    tol = DiracTolerances(lambda_threshold=1e99)
    with pytest.raises(DiracDetectionError) as info:
        detect_dirac(geom, optical, 0.3, 4, tolerances=tol)
    assert info.value.reason == "degenerate"
    assert info.value.diagnostics["abs_lambda_sharp"] > 0


def test_non_honeycomb_rejected(geom):
    with pytest.raises(SymmetryError):
        detect_dirac(geom, cosine_mode((1, 0)), 0.3, 4)


def test_parallel_fit_with_custom_directions(geom, optical, report_03):
    rng = np.random.default_rng(2)
    directions = rng.normal(size=(5, 2))
    report = characterize(geom, optical, 0.3, M, directions=directions, workers=4)
    np.testing.assert_allclose(np.linalg.norm([f.direction for f in report.cone.fits], axis=1), 1.0)
    np.testing.assert_allclose(report.cone.slopes, abs(report_03.lambda_sharp), rtol=0.005)
    assert report.mu_star == report_03.mu_star


def test_directions_and_radii(geom, report_03):
    d = unit_directions(6)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    r = radius_ladder(geom, report_03)
    assert len(r) == 3
    assert np.all(np.diff(r) > 0)
    assert r[-1] <= 1e-2 * geom.q


def test_report_is_serialisable(report_03):
    data = json.loads(json.dumps(report_03.to_dict()))
    assert data["band_lo"] == 1 and data["band_hi"] == 2
    assert data["verdict"] is True
    assert len(data["cone"]) == 8
    assert data["abs_lambda_sharp"] == pytest.approx(abs(report_03.lambda_sharp))


def test_band_count_widens_past_the_first_solve():
    H = BlochHamiltonian(matrix=np.diag(np.arange(40.0)[::-1]).astype(complex), epsilon=0.0, basis=None)
    assert _bands_below(H, 30.5) == 31
    assert _bands_below(H, 3.5) == 4
    assert _bands_below(H, 100.0) == 40


@pytest.fixture(scope="module")
def optical_scan(geom, optical):
    return eps_scan(geom, optical, [0.2, -0.1, 0.0, 0.1, -0.2], 6, workers=2)


def test_eps_scan_follows_the_crossing_bands(optical_scan):
    assert [row.eps for row in optical_scan.rows] == [-0.2, -0.1, 0.0, 0.1, 0.2]
    assert [row.band_indices for row in optical_scan.rows] == [(2, 3), (2, 3), None, (1, 2), (1, 2)]
    assert optical_scan.brackets == [(-0.1, 0.1)]


def test_eps_scan_flags_the_free_operator(optical_scan):
    free = optical_scan.rows[2]
    assert free.reason == "exceptional"
    assert free.sector1_gap <= 1e-9
    assert free.abs_lambda_sharp is None
    assert optical_scan.candidates == [0.0]


def test_eps_scan_rows(optical_scan, geom, optical):
    for row in optical_scan.rows:
        if row.detected:
            assert row.simplicity_margin > 0.1
            assert row.sector1_gap > 0.05
            assert row.abs_lambda_sharp == pytest.approx(abs(detect_dirac(geom, optical, row.eps, 6).lambda_sharp))
    rows = list(optical_scan.as_rows())
    assert all(len(r) == len(optical_scan.header) for r in rows)
    assert rows[2][3:5] == ["", ""]
    assert rows[2][-2:] == ["exceptional", 1]
    assert rows[3][-2:] == ["dirac", 0]


def test_eps_scan_collapse_tolerance(geom, optical):
    scan = eps_scan(geom, optical, [0.1], 6, collapse_tol=1.0)
    assert scan.rows[0].detected
    assert scan.candidates == [0.1]
