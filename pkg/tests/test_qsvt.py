import numpy as np
import pytest
from hypothesis import given, strategies as st

from qsvtwave.blockencode import exact_dilation, structured_oracle, dilation_oracle
from qsvtwave.cheb import eval_cheb, inverse_target
from qsvtwave.circuit import QuantumState
from qsvtwave.qsp import PhaseVector, inverse_phases, qsp_eval
from qsvtwave.qsvt import (QueryCounter, apply_qsvt, encoded_kappa, invert_apply, prepare_b,
                           real_polynomial_action, real_qsvt_circuit, solver_layout,
                           zero_ancilla_conditions)
from qsvtwave.wave import WaveProblem, build_matrix, classical_solve

from conftest import random_complex


def random_block(rng, n, scale=0.95):
    A = random_complex(rng, (2**n, 2**n))
    return scale * A / np.linalg.norm(A, 2)


def system_state(enc, v):
    lay = solver_layout(enc)
    return QuantumState.from_register_amplitudes(lay, ["s"], v)


def zero_block_output(enc, state):
    return state.register_amplitudes(["s"], zero_ancilla_conditions(state, enc))


def reference_polynomial(A, values, odd, dagger=False):
    """U_L p(S) U_R^H (odd) or U_L p(S) U_L^H (even) from numpy's SVD; with
    ``dagger`` the roles of the singular vector bases swap."""
    u, s, vh = np.linalg.svd(A)
    left, right = (vh.conj().T, u) if dagger else (u, vh.conj().T)
    p = values(s)
    if odd:
        return left @ np.diag(p) @ right.conj().T
    return left @ np.diag(p) @ left.conj().T


def test_first_chebyshev_gives_block(rng):
    A = random_block(rng, 2)
    enc = exact_dilation(A)
    v = random_complex(rng, 4)
    v /= np.linalg.norm(v)
    out = zero_block_output(enc, apply_qsvt(enc, [0.0, 0.0], system_state(enc, v)))
    np.testing.assert_allclose(out, A @ v, atol=1e-13)


def test_second_chebyshev_gives_2AAh_minus_identity(rng):
    A = random_block(rng, 2)
    enc = exact_dilation(A)
    v = random_complex(rng, 4)
    v /= np.linalg.norm(v)
    out = zero_block_output(enc, apply_qsvt(enc, [0.0, 0.0, 0.0], system_state(enc, v)))
    np.testing.assert_allclose(out, (2 * A @ A.conj().T - np.eye(4)) @ v, atol=1e-13)


@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.booleans())
def test_qsvt_matches_svd_polynomial(seed, degree, dagger):
    rng = np.random.default_rng(seed)
    A = random_block(rng, 2)
    phases = rng.uniform(-np.pi, np.pi, degree + 1)
    enc = exact_dilation(A)
    v = random_complex(rng, 4)
    v /= np.linalg.norm(v)
    out = zero_block_output(enc, apply_qsvt(enc, phases, system_state(enc, v), dagger=dagger))
    ref = reference_polynomial(A, lambda s: qsp_eval(phases, s), degree % 2 == 1, dagger)
    np.testing.assert_allclose(out, ref @ v, atol=1e-11)


def test_query_count_equals_degree(rng):
    enc = exact_dilation(random_block(rng, 1))
    pv = inverse_phases(4.0, 1e-2)
    counter = QueryCounter()
    apply_qsvt(enc, pv, system_state(enc, np.array([1.0, 0.0])), counter=counter)
    assert counter.calls == pv.n_pol


def test_diagonal_block_inverse():
    kappa, eps = 5.0, 1e-3
    enc = exact_dilation(np.diag([0.5, 0.25]).astype(complex))
    pv = inverse_phases(kappa, eps)
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    out, p0 = real_polynomial_action(enc, pv, system_state(enc, v), dagger=True)
    x = out.register_amplitudes(["s"], zero_ancilla_conditions(out, enc)) * np.sqrt(p0)
    expected = v / np.array([0.5, 0.25]) / (pv.beta_sc * kappa)
    np.testing.assert_allclose(x, expected, atol=eps)


@pytest.mark.parametrize("dagger", [False, True])
def test_average_and_hadamard_agree(rng, dagger):
    A = random_block(rng, 2)
    enc = exact_dilation(A)
    pv = inverse_phases(8.0, 1e-3)
    v = random_complex(rng, 4)
    v /= np.linalg.norm(v)
    a, pa = real_polynomial_action(enc, pv, system_state(enc, v), "average", dagger)
    h, ph = real_polynomial_action(enc, pv, system_state(enc, v), "hadamard", dagger)
    assert pa == pytest.approx(ph, rel=1e-10)
    np.testing.assert_allclose(a.amps, h.amps, atol=1e-10)
    series, _ = inverse_target(8.0, 1e-3)
    ref = reference_polynomial(A, lambda s: qsp_eval(pv, s).real, True, dagger) @ v
    got = a.register_amplitudes(["s"], zero_ancilla_conditions(a, enc)) * np.sqrt(pa)
    np.testing.assert_allclose(got, ref, atol=1e-10)
    # the fitted phases reproduce the Chebyshev target on the singular values
    s = np.linalg.svd(A, compute_uv=False)
    np.testing.assert_allclose(qsp_eval(pv, s).real, eval_cheb(series, s), atol=1e-8)


def test_real_qsvt_circuit_matches_dense_run(rng):
    enc = exact_dilation(random_block(rng, 1))
    pv = inverse_phases(3.0, 1e-2)
    v = np.array([0.6, 0.8j])
    h, _ = real_polynomial_action(enc, pv, system_state(enc, v), "hadamard")
    lay = solver_layout(enc, [("h", 1)])
    st_ = QuantumState.from_register_amplitudes(lay, ["s"], v)
    st_.run(real_qsvt_circuit(lay, enc, pv))
    cond = zero_ancilla_conditions(st_, enc, ("q", "h"))
    got = st_.register_amplitudes(["s"], cond)
    ref = h.register_amplitudes(["s"], zero_ancilla_conditions(h, enc))
    np.testing.assert_allclose(got / np.linalg.norm(got), ref, atol=1e-10)


@pytest.mark.parametrize("n_x,index", [(2, 7), (6, 127)])
def test_prepare_b_index(n_x, index):
    enc = dilation_oracle(WaveProblem.from_case(n_x, 5.0))
    st_ = prepare_b(solver_layout(enc))
    assert abs(st_.amps[index]) == 1.0
    assert np.count_nonzero(st_.amps) == 1
    _, b = build_matrix(WaveProblem.from_case(n_x, 5.0))
    assert int(np.argmax(np.abs(b))) == index


def test_p0_scales_as_inverse_kappa_squared():
    enc = exact_dilation(np.diag([1.0, 0.5]).astype(complex))
    v = np.array([1.0, 1.0]) / np.sqrt(2)
    scaled = []
    for kappa in (5.0, 10.0, 20.0):
        pv = inverse_phases(kappa, 1e-3)
        _, p0 = real_polynomial_action(enc, pv, system_state(enc, v), dagger=True)
        scaled.append(p0 * kappa**2)
    assert max(scaled) / min(scaled) < 4.0


def test_unitary_block_inverse_is_adjoint():
    # A unitary: every singular value is one and A^{-1} b = A^H b
    theta = np.array([0.3, -1.1, 2.0, 0.7])
    A = np.diag(np.exp(1j * theta))
    enc = exact_dilation(A)
    pv = inverse_phases(2.0, 1e-4)
    b = np.array([0, 0, 0, 1.0])
    out, p0 = real_polynomial_action(enc, pv, system_state(enc, b), dagger=True)
    psi = out.register_amplitudes(["s"], zero_ancilla_conditions(out, enc))
    expected = A.conj().T @ b
    assert abs(np.vdot(expected, psi)) ** 2 == pytest.approx(1.0, abs=1e-8)


def test_wave_solve_fidelity_small_grid():
    p = WaveProblem.from_case(3, 5.0)
    enc = dilation_oracle(p)
    kappa_q = 1.5 * encoded_kappa(p, enc.normalization)
    pv = inverse_phases(kappa_q, 1e-3)
    rec = invert_apply(p, pv, encoding=enc)
    assert rec.errors.fidelity >= 1 - 1e-6
    assert rec.queries == pv.n_pol
    A, b = build_matrix(p)
    x = np.concatenate([rec.quantum.E, rec.quantum.B])
    assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) < 0.05
    ref = classical_solve(p)
    assert np.max(np.abs(np.abs(rec.quantum.E) - np.abs(ref.E))) < 1e-2 * np.max(np.abs(ref.E))


def test_structured_and_dilation_outputs_agree():
    p = WaveProblem.from_case(2, 5.0)
    pv = inverse_phases(20.0, 1e-2)
    s = invert_apply(p, pv, oracle="structured")
    d = invert_apply(p, pv, oracle="dilation")
    assert s.nu == d.nu
    assert abs(np.vdot(s.psi_x, d.psi_x)) ** 2 >= 1 - 1e-8
    assert s.p0 == pytest.approx(d.p0, rel=1e-6)


def test_solution_record_outputs(tmp_path):
    p = WaveProblem.from_case(2, 5.0)
    rec = invert_apply(p, inverse_phases(20.0, 1e-2))
    rec.write_csv(tmp_path / "f.csv", ["run"])
    rec.write_json(tmp_path / "f.json")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "# run"
    assert lines[1].startswith("j,re_E_quantum")
    assert len(lines) == 2 + p.N_x
    assert "kappa_enc" in (tmp_path / "f.json").read_text()
