import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsvtwave.errors import SingularMatrix
from qsvtwave.wave import (FieldSolution, WaveProblem, align_phase, build_matrix,
                           classical_solve, compare_solutions, condition, frequency_from_case,
                           residuals, write_fields)


def test_edge_row_coefficients():
    p = WaveProblem(3, 7.0)
    A, _ = build_matrix(p)
    assert A[0, 0] == p.eta_plus == 7j + 1 / p.h
    assert A[0, 1] == p.eta_minus == 7j - 1 / p.h


@pytest.mark.parametrize("n_x", [2, 3, 6])
def test_source_vector(n_x):
    _, b = build_matrix(WaveProblem(n_x, 5.0))
    assert b[-1] == 1.0
    assert np.count_nonzero(b) == 1
    assert len(b) == 2 * 2**n_x


def test_two_qubit_grid_matrix_by_hand():
    # N_x = 4, h = 1/8, sigma = 4, eta = 5i +- 8, eps = (1, 1, 4, 4)
    w = 5j
    ep, em = w + 8, w - 8
    expected = np.array([
        [ep, em, 0, 0, 0, 0, 0, 0],
        [0, w, 0, 0, -4, 4, 0, 0],
        [0, 0, 4 * w, 0, 0, -4, 4, 0],
        [0, 0, 0, 4 * w, 0, 0, -4, 4],
        [-4, 4, 0, 0, w, 0, 0, 0],
        [0, -4, 4, 0, 0, w, 0, 0],
        [0, 0, -4, 4, 0, 0, w, 0],
        [0, 0, 0, 0, 0, 0, em, ep],
    ])
    A, _ = build_matrix(WaveProblem(2, 5.0, eps1=4.0))
    np.testing.assert_array_equal(A, expected)


@given(st.integers(2, 7), st.floats(0.5, 40), st.floats(0.5, 8))
def test_sparsity_pattern(n_x, omega, eps1):
    A, _ = build_matrix(WaveProblem(n_x, omega, eps1=eps1))
    nnz = np.count_nonzero(A, axis=1)
    assert nnz.max() <= 3
    assert nnz[0] == 2 and nnz[-1] == 2


@pytest.mark.parametrize("case", [(4, 5.0, 1.0), (6, 20.0, 1.0), (6, 28.8, 4.0)])
def test_classical_residuals(case):
    n_x, lk, eps1 = case
    p = WaveProblem.from_case(n_x, lk, eps1=eps1)
    r = residuals(p, classical_solve(p))
    assert max(r.values()) <= 1e-9
    A, b = build_matrix(p)
    x = classical_solve(p).psi
    assert np.linalg.norm(A @ x - b) <= 1e-9 * np.linalg.norm(b)


@pytest.mark.parametrize("n_x,omega", [(5, 5.0), (6, 20.0)])
def test_vacuum_is_travelling_wave(n_x, omega):
    amp = np.abs(classical_solve(WaveProblem(n_x, omega)).E)
    assert amp.max() / amp.min() - 1 < 0.02


def test_vacuum_phase_advances_at_omega():
    p = WaveProblem(7, 5.0)
    E = classical_solve(p).E
    dphi = np.angle(E[1:] / E[:-1])
    assert np.allclose(np.abs(dphi), p.omega * p.dx, rtol=1e-3)


def test_layered_case_standing_wave_contrast():
    p = WaveProblem.from_case(6, 28.8, eps1=4.0)
    amp = np.abs(classical_solve(p).E[p.M_x:])
    assert amp.max() / amp.min() > 1.5


def test_condition_number_linear_in_grid():
    ns = np.array([3, 4, 5, 6])
    kap = [condition(WaveProblem(int(n), 5.0)) for n in ns]
    slope = np.polyfit(ns * np.log(2), np.log(kap), 1)[0]
    assert 0.7 <= slope <= 1.3


def test_singular_matrix_reported(monkeypatch):
    import qsvtwave.wave as wave

    def zero(problem):
        return np.zeros((4, 4), dtype=complex), np.ones(4)

    monkeypatch.setattr(wave, "build_matrix", zero)
    with pytest.raises(SingularMatrix):
        wave.classical_solve(WaveProblem(2, 5.0))


def test_frequency_from_case():
    assert frequency_from_case(20.0) == 20.0
    assert frequency_from_case(28.8) == 28.8
    assert frequency_from_case(20.0, 4.0) == 10.0
    with pytest.raises(ValueError):
        frequency_from_case(-1.0)


def test_compare_identical_and_phase_shifted(rng):
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    r = compare_solutions(v, v)
    assert r.max_abs == 0 and r.l2 == 0 and r.fidelity == pytest.approx(1.0)
    r = compare_solutions(v, np.exp(0.7j) * v)
    assert r.max_abs < 1e-14
    np.testing.assert_allclose(align_phase(v, np.exp(-2j) * v), v, atol=1e-14)


def test_compare_mismatched_grids():
    with pytest.raises(ValueError):
        compare_solutions(np.ones(4), np.ones(8))


def test_field_solution_roundtrip_and_csv(tmp_path):
    psi = np.arange(8) + 1j * np.arange(8)[::-1]
    s = FieldSolution.from_psi(psi)
    np.testing.assert_array_equal(s.psi, psi)
    write_fields(tmp_path / "f.csv", {"a": s}, ["hdr"])
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[:2] == ["# hdr", "j,re_E_a,im_E_a,re_B_a,im_B_a"]
    row = lines[3].split(",")
    assert [float(x) for x in row[1:]] == [1.0, 6.0, 5.0, 2.0]


def test_invalid_problem():
    with pytest.raises(ValueError):
        WaveProblem(1, 5.0)
    with pytest.raises(ValueError):
        WaveProblem(3, -1.0)
