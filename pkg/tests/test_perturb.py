import json

import numpy as np
import pytest

from honeydirac.dirac import detect_dirac
from honeydirac.errors import SymmetryError
from honeydirac.perturb import (
    SplitTable,
    deform_even,
    deform_odd_gap,
    deform_scan,
    inner_product_W,
    split_prediction,
    verify_split,
)
from honeydirac.potential import cosine_mode, from_fourier, optical_lattice, sine_mode

M = 8
FREE_MU = 16.0 * np.pi ** 2 / 9.0


@pytest.fixture(scope="module")
def cos_W():
    return cosine_mode((1, 0), 1.0)


@pytest.fixture(scope="module")
def sin_W():
    return sine_mode((1, 0), 1.0)


@pytest.fixture(scope="module")
def even_runs(geom, optical, cos_W, report_03):
    return {eta: deform_even(geom, optical, 0.3, cos_W, eta, M, report=report_03) for eta in (1e-2, 5e-3)}


@pytest.fixture(scope="module")
def odd_runs(geom, optical, sin_W, report_03):
    return {eta: deform_odd_gap(geom, optical, 0.3, sin_W, eta, M, report=report_03) for eta in (1e-2, 5e-3)}


def test_split_prediction(geom, optical):
    pred = split_prediction(geom, optical, 0.1)
    assert pred.mu_double_1st == pytest.approx(FREE_MU - 0.05)
    assert pred.mu_simple_1st == pytest.approx(FREE_MU + 0.1)
    assert pred.crossing_case == (1, 2)
    assert split_prediction(geom, optical, -0.1).crossing_case == (2, 3)
    assert split_prediction(geom, optical, 0.0).crossing_case is None


def test_split_is_quadratic(geom, optical):
    table = verify_split(geom, optical, [0.01, 0.02, 0.04], M)
    assert len(table.rows) == 3
    for row in table.rows:
        assert row.defect_double <= row.eps ** 2
        assert row.defect_simple <= row.eps ** 2
    for exponent in table.exponents_double + table.exponents_simple:
        assert exponent == pytest.approx(2.0, abs=0.3)
    assert table.quadratic


def test_split_check_on_a_tripling_ladder(geom, optical):
    table = verify_split(geom, optical, [0.01, 0.03], M)
    assert table.ratios_double[0] == pytest.approx(9.0, rel=0.05)
    assert table.exponents_double[0] == pytest.approx(2.0, abs=0.3)
    assert table.quadratic


def test_split_check_rejects_other_exponents():
    linear = SplitTable(rows=[], exponents_double=[1.0], exponents_simple=[2.0],
                        ratios_double=[2.0], ratios_simple=[4.0])
    assert not linear.quadratic
    assert not SplitTable(rows=[], exponents_double=[], exponents_simple=[],
                          ratios_double=[], ratios_simple=[]).quadratic


@pytest.mark.parametrize("eps", [0.05, -0.05, 0.2, -0.2])
def test_crossing_sign_rule(geom, optical, eps):
    report = detect_dirac(geom, optical, eps, M)
    assert report.band_indices == split_prediction(geom, optical, eps).crossing_case
    assert report.band_indices == ((1, 2) if eps > 0 else (2, 3))


def test_split_rows(geom, optical):
    table = verify_split(geom, optical, [0.0, -0.02, -0.01], M, workers=2)
    assert table.rows[0].defect_double <= 1e-12 * FREE_MU
    # ordering follows the sign of eps V11
    assert table.rows[1].measured_double > table.rows[1].measured_simple
    assert len(table.ratios_double) == 1
    assert len(list(table.as_rows())[0]) == len(table.header)


def test_inner_product_constant(geom, report_03):
    phi = report_03.phi1(geom)
    two = from_fourier([((0, 0), 2.0)])
    assert inner_product_W(geom, phi, phi, two) == pytest.approx(2.0)


def test_inner_product_hermitian(geom, report_03, sin_W, cos_W):
    phi1, phi2 = report_03.phi1(geom), report_03.phi2(geom)
    W = sin_W + cos_W.scale(0.5)
    assert inner_product_W(geom, phi1, phi2, W) == pytest.approx(np.conj(inner_product_W(geom, phi2, phi1, W)))


def test_inner_product_matches_quadrature(geom, optical, sin_W):
    report = detect_dirac(geom, optical, 0.3, 6)
    phi = report.phi1(geom)
    n = 96
    t = np.arange(n) / n
    t1, t2 = np.meshgrid(t, t, indexing="ij")
    pts = (t1[..., None] * geom.v1 + t2[..., None] * geom.v2).reshape(-1, 2)
    values = phi.evaluate(pts)
    w = np.sin(pts @ geom.k1)
    oracle = geom.cell_area * np.mean(np.abs(values) ** 2 * w)
    assert inner_product_W(geom, phi, phi, sin_W) == pytest.approx(oracle, abs=1e-10)


def test_even_deformation_keeps_the_crossing(even_runs):
    for eta, run in even_runs.items():
        assert run.W_parity == "even"
        assert run.gap_at_optimum <= 1e-4 * eta
        assert run.gap_at_optimum <= run.closure_bound


def test_even_deformation_shift(even_runs, report_03):
    full, half = even_runs[1e-2], even_runs[5e-3]
    assert np.linalg.norm(full.K_shifted - report_03.K_star) > 2 * full.shift_defect
    assert half.shift_defect <= 0.35 * full.shift_defect + 1e-8


def test_even_deformation_energy(even_runs, report_03):
    full, half = even_runs[1e-2], even_runs[5e-3]
    d_full = abs(full.mu_at_optimum - full.mu_first_order)
    d_half = abs(half.mu_at_optimum - half.mu_first_order)
    assert d_half <= 0.35 * d_full + 1e-8
    assert abs(full.mu_at_optimum - report_03.mu_star) > 2 * d_full


def test_odd_deformation_opens_gap(odd_runs):
    full, half = odd_runs[1e-2], odd_runs[5e-3]
    assert full.W_parity == "non-even"
    assert full.predicted_gap > 0
    assert full.gap_at_optimum == pytest.approx(full.predicted_gap, rel=0.1)
    assert 1.8 <= full.gap_at_optimum / half.gap_at_optimum <= 2.2


def test_zero_eta(geom, optical, cos_W, report_03):
    run = deform_even(geom, optical, 0.3, cos_W, 0.0, M, report=report_03)
    np.testing.assert_array_equal(run.K_shifted, report_03.K_star)
    assert run.gap_at_optimum <= 1e-10
    assert run.shift_defect == 0.0


def test_honeycomb_perturbation_does_not_move_the_point(geom, optical, report_03):
    run = deform_even(geom, optical, 0.3, optical_lattice(1.0), 1e-2, M, report=report_03)
    np.testing.assert_allclose(run.K_first_order, report_03.K_star, atol=1e-12)
    np.testing.assert_allclose(run.K_shifted, report_03.K_star, atol=1e-6)
    assert abs(run.w12) <= 1e-12


def test_even_path_rejects_odd_W(geom, optical, sin_W, report_03):
    with pytest.raises(SymmetryError):
        deform_even(geom, optical, 0.3, sin_W, 1e-2, M, report=report_03)


def test_complex_W_rejected(geom, optical, report_03):
    with pytest.raises(SymmetryError):
        deform_odd_gap(geom, optical, 0.3, cosine_mode((1, 0)).scale(1j), 1e-2, M, report=report_03)


def test_odd_path_falls_back_for_even_W(geom, optical, cos_W, report_03):
    run = deform_odd_gap(geom, optical, 0.3, cos_W, 5e-3, M, report=report_03)
    assert run.W_parity == "even"
    assert run.closure_bound is not None


def test_deform_scan(geom, optical, cos_W, even_runs):
    runs = deform_scan(geom, optical, 0.3, cos_W, [1e-2, 5e-3], M, workers=2)
    assert [r.eta for r in runs] == [1e-2, 5e-3]
    np.testing.assert_allclose(runs[0].K_first_order, even_runs[1e-2].K_first_order, rtol=1e-10)
    data = json.loads(json.dumps(runs[0].to_dict()))
    assert data["W_parity"] == "even"
    assert len(runs[0].csv_row()) == len(runs[0].csv_header)
