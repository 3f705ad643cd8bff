import json

import numpy as np
import pytest

from honeydirac.det2 import Det2Evaluator, det2_of, evaluate_E, zero_scan
from honeydirac.errors import DomainError
from honeydirac.lattice import SymmetrySector
from honeydirac.spectral import assemble_sector, solve

M = 8
FREE_MU = 16.0 * np.pi ** 2 / 9.0


def _lowest(geom, V, sigma, eps, n):
    return solve(assemble_sector(geom, V, sigma, eps, M), n).eigenvalues


def test_det2_of_small_cases():
    assert det2_of([]) == 1.0
    assert det2_of([0.0, 0.0]) == 1.0
    assert det2_of([-1.0, 0.3]) == 0.0
    assert det2_of([0.5]) == pytest.approx(1.5 * np.exp(-0.5))


def test_det2_of_pairs_and_zero_padding():
    assert det2_of([0.5, -0.5]) == pytest.approx(0.75)
    a = [0.3 + 0.1j, -0.7, 2.0]
    assert det2_of(a + [0.0]) == pytest.approx(det2_of(a), rel=1e-15)
    assert det2_of([0.0] + a + [0.0]) == pytest.approx(det2_of(a), rel=1e-15)


def test_free_operator_zeros(geom, optical):
    E = Det2Evaluator(geom, optical, "tau", 0.0, M)
    assert E.offset == 0.0
    assert not E.shifted
    assert abs(E(FREE_MU).value) <= 1e-10
    assert abs(E(FREE_MU + 3.0).value) > 1e-6


def test_values_are_real(geom, optical):
    E = Det2Evaluator(geom, optical, SymmetrySector.TAU, 0.3, M)
    mus = np.linspace(0.0, 40.0, 57)
    values = E.values(mus)
    assert np.all(np.abs(values.imag) <= 1e-12 * (1.0 + np.abs(values.real)))
    np.testing.assert_allclose(values[5], E(mus[5]).value, rtol=1e-12)


def test_sign_change_across_eigenvalue(geom, optical):
    mu = _lowest(geom, optical, "tau", 0.3, 1)[0]
    E = Det2Evaluator(geom, optical, "tau", 0.3, M)
    left, right = E(mu - 0.05).value.real, E(mu + 0.05).value.real
    assert left * right < 0


@pytest.mark.parametrize("eps", [0.3, -0.3])
def test_zero_scan_matches_lowest_five(geom, optical, eps):
    eigs = _lowest(geom, optical, "tau", eps, 6)
    lo, hi = eigs[0] - 0.5, 0.5 * (eigs[4] + eigs[5])
    gap = np.min(np.diff(eigs[:5]))
    grid_n = int(np.ceil(4.0 * (hi - lo) / gap)) + 1
    scan = zero_scan(geom, optical, "tau", eps, (lo, hi), grid_n, M)
    assert len(scan.zeros) == 5
    for match, mu in zip(scan.zeros, eigs[:5]):
        assert match.mu_zero == pytest.approx(mu, rel=1e-8)
        assert match.defect <= 1e-8 * (1.0 + abs(mu))


def test_zero_scan_high_window(geom, optical):
    scan = zero_scan(geom, optical, "tau", 0.3, (10.0, 30.0), 400, M)
    eigs = _lowest(geom, optical, "tau", 0.3, 4)
    expected = eigs[(eigs >= 10.0) & (eigs <= 30.0)]
    assert [z.matched_eigenvalue for z in scan.zeros] == pytest.approx(expected.tolist())


def test_empty_window(geom, optical):
    scan = zero_scan(geom, optical, "taubar", 0.3, (1.0, 5.0), 64, M)
    assert scan.zeros == []
    assert np.all(scan.values > 0)


def test_tau_and_taubar_agree(geom, optical):
    tau = Det2Evaluator(geom, optical, "tau", 0.3, M)
    taubar = Det2Evaluator(geom, optical, "taubar", 0.3, M)
    mus = np.linspace(15.0, 20.0, 11)
    np.testing.assert_allclose(tau.values(mus), taubar.values(mus), rtol=1e-9)


def test_negative_coupling_is_shifted(geom, optical):
    E = evaluate_E(geom, optical, "tau", FREE_MU, -0.3, M)
    assert E.shifted
    assert E.eps == -0.3
    ev = Det2Evaluator(geom, optical, "tau", -0.3, M)
    assert ev.offset == pytest.approx(-0.3 * 3.0, rel=1e-6)
    assert ev.base_eigenvalues[0] > 0


def test_evaluation_record(geom, optical):
    record = evaluate_E(geom, optical, "one", 10.0, 0.3, M)
    data = json.loads(json.dumps(record.to_dict()))
    assert data["sigma"] == "1"
    assert data["shifted"] is False
    assert data["M"] == M


def test_scan_output(geom, optical):
    scan = zero_scan(geom, optical, "tau", 0.3, (15.0, 19.0), 33, M)
    rows = list(scan.rows())
    assert len(rows) == 33
    assert len(rows[0]) == len(scan.header)
    assert json.loads(json.dumps(scan.to_dict()))["sigma"] == "tau"


@pytest.mark.parametrize("window, grid_n", [((5.0, 5.0), 64), ((6.0, 5.0), 64), ((0.0, 1.0), 4)])
def test_zero_scan_rejects_bad_input(geom, optical, window, grid_n):
    with pytest.raises(DomainError):
        zero_scan(geom, optical, "tau", 0.3, window, grid_n, M)


def test_potential_shift_moves_zeros_by_c_eps(geom, optical):
    c, eps = 2.0, 0.3
    lifted = optical.shifted(c)
    base = zero_scan(geom, optical, "tau", eps, (10.0, 30.0), 400, M)
    moved = zero_scan(geom, lifted, "tau", eps, (10.0 + c * eps, 30.0 + c * eps), 400, M)
    assert len(moved.zeros) == len(base.zeros) > 0
    for a, b in zip(base.zeros, moved.zeros):
        assert b.mu_zero - c * eps == pytest.approx(a.mu_zero, abs=1e-7)
        assert b.matched_eigenvalue - c * eps == pytest.approx(a.matched_eigenvalue, rel=1e-10)

    mus = np.linspace(12.0, 28.0, 9)
    values = Det2Evaluator(geom, optical, "tau", eps, M).values(mus)
    lifted_values = Det2Evaluator(geom, lifted, "tau", eps, M).values(mus + c * eps)
    np.testing.assert_allclose(lifted_values, values, rtol=1e-8, atol=1e-8 * np.max(np.abs(values)))
