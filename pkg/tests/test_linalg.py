import numpy as np
import pytest
from hypothesis import given, strategies as st

from waylab.linalg import (DimensionError, NotHermitianError, Operator, StateVector, basis,
                           commutator, commutator_norm, complete_unitary, diag, eig_hermitian,
                           equal_up_to_phase, heisenberg, identity, mat_exp, partial_trace,
                           pauli, phase_residual, random_density, random_hermitian,
                           random_state, random_unitary, spin_ops, swap, tensor)

seeds = st.integers(0, 2 ** 32 - 1)


def test_tensor_of_identities():
    assert np.array_equal(tensor(identity(2), identity(3)).entries, np.eye(6))


def test_tensor_spectrum_of_projector_times_identity():
    ev = np.linalg.eigvalsh(tensor(diag([0, 1]), identity(2)).entries)
    assert np.allclose(ev, [0, 0, 1, 1])


def test_tensor_dims_are_recorded():
    op = tensor(identity(2), identity(3), identity(2))
    assert op.dims == (2, 3, 2)


@given(seeds)
def test_tensor_norm_is_product(seed):
    r = np.random.default_rng(seed)
    u = r.normal(size=3) + 1j * r.normal(size=3)
    v = r.normal(size=4) + 1j * r.normal(size=4)
    w = tensor(StateVector(u), StateVector(v))
    assert abs(w.norm() - np.linalg.norm(u) * np.linalg.norm(v)) < 1e-12


@given(seeds)
def test_kronecker_associativity(seed):
    r = np.random.default_rng(seed)
    A, B, C = (Operator(random_hermitian(r, d)) for d in (2, 3, 2))
    lhs = tensor(tensor(A, B), C).entries
    rhs = tensor(A, tensor(B, C)).entries
    assert np.max(np.abs(lhs - rhs)) <= 1e-14


@given(seeds)
def test_partial_trace_of_product(seed):
    r = np.random.default_rng(seed)
    A = Operator(random_hermitian(r, 2))
    sigma = random_density(r, 3)
    red = partial_trace(tensor(A, sigma), keep=[0])
    assert np.allclose(red.entries, sigma.trace() * A.entries, atol=1e-12)


def test_partial_trace_keep_apparatus():
    r = np.random.default_rng(0)
    A, B = Operator(random_hermitian(r, 2)), Operator(random_hermitian(r, 3))
    red = partial_trace(tensor(A, B), keep=[1])
    assert np.allclose(red.entries, A.trace() * B.entries)


def test_partial_trace_over_everything_is_trace():
    r = np.random.default_rng(1)
    op = Operator(random_hermitian(r, 6), (2, 3))
    red = partial_trace(op, keep=[])
    assert red.shape == (1, 1)
    assert np.isclose(red.entries[0, 0], op.trace())


@given(seeds)
def test_reduced_density_is_a_state(seed):
    rho = random_density(np.random.default_rng(seed), (2, 3))
    red = partial_trace(rho, keep=[0])
    assert abs(red.trace() - 1) < 1e-12
    assert np.linalg.eigvalsh(red.entries).min() > -1e-12


def test_partial_trace_rejects_bad_dims():
    with pytest.raises(DimensionError):
        partial_trace(identity(6), keep=[0], dims=(2, 2))


def test_heisenberg_identity_and_swap():
    A = Operator(random_hermitian(np.random.default_rng(2), 3))
    assert np.allclose(heisenberg(identity(3), A).entries, A.entries)
    Z = diag([1.0, 0.0, -1.0])
    lhs = heisenberg(swap(3), tensor(identity(3), Z))
    assert np.allclose(lhs.entries, tensor(Z, identity(3)).entries)


@given(seeds)
def test_heisenberg_preserves_spectrum(seed):
    r = np.random.default_rng(seed)
    A = Operator(random_hermitian(r, 4))
    U = random_unitary(r, 4)
    assert np.allclose(np.linalg.eigvalsh(heisenberg(U, A).entries),
                       np.linalg.eigvalsh(A.entries), atol=1e-10)


def test_mat_exp_zero_and_group_law():
    assert np.allclose(mat_exp(np.zeros((3, 3)), 2.0).entries, np.eye(3))
    H = random_hermitian(np.random.default_rng(3), 3)
    prod = mat_exp(H, 0.7).entries @ mat_exp(H, -0.7).entries
    assert np.allclose(prod, np.eye(3), atol=1e-12)


def test_mat_exp_closed_form_diagonal():
    # exp(-i pi/2 diag(0, 2)) = diag(1, e^{-i pi}) = diag(1, -1)
    U = mat_exp(diag([0.0, 2.0]), np.pi / 2)
    assert equal_up_to_phase(U.entries, np.diag([1.0, -1.0]))


def test_mat_exp_matches_scipy_expm():
    from scipy.linalg import expm
    H = random_hermitian(np.random.default_rng(4), 4)
    assert np.allclose(mat_exp(H, 1.3).entries, expm(-1j * 1.3 * H), atol=1e-12)


@given(seeds, st.floats(-10, 10))
def test_mat_exp_unitarity(seed, t):
    U = mat_exp(random_hermitian(np.random.default_rng(seed), 4), t).entries
    assert np.linalg.norm(U.conj().T @ U - np.eye(4), 2) <= 1e-10


def test_mat_exp_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        mat_exp(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_hermitian_degenerate():
    sp = eig_hermitian(diag([3.0, 1.0, 1.0]))
    assert np.allclose(sp.eigenvalues, [1.0, 3.0])
    assert sp.ranks() == [2, 1]


@given(seeds)
def test_spectrum_resolution(seed):
    A = Operator(random_hermitian(np.random.default_rng(seed), 4))
    sp = eig_hermitian(A)
    P = [p.entries for _, p in sp]
    assert np.allclose(sum(P), np.eye(4), atol=1e-10)
    for i, Pi in enumerate(P):
        for j, Pj in enumerate(P):
            assert np.allclose(Pi @ Pj, Pi if i == j else 0, atol=1e-10)
        assert commutator_norm(A, Pi) <= 1e-10
    assert np.max(np.abs(sp.reconstruct().entries - A.entries)) <= 1e-10


def test_commutator_values():
    sx, sy, sz = spin_ops(0.5)
    A = Operator(random_hermitian(np.random.default_rng(5), 3))
    assert commutator_norm(A, A @ A) < 1e-12
    assert commutator_norm(diag([1, 2]), diag([3, 4])) == 0
    # [sx, sz] = -i sy, whose norm is 1/2
    assert abs(commutator_norm(sx, sz) - 0.5) < 1e-14
    assert np.allclose(commutator(sx, sz).entries, -1j * sy.entries)


@pytest.mark.parametrize("j", [0.5, 1.0, 1.5, 2.0])
def test_spin_algebra(j):
    sx, sy, sz = spin_ops(j)
    assert np.allclose(commutator(sx, sy).entries, 1j * sz.entries)
    cas = (sx @ sx + sy @ sy + sz @ sz).entries
    assert np.allclose(cas, j * (j + 1) * np.eye(int(2 * j + 1)))
    assert np.allclose(np.diag(sz.entries), np.arange(j, -j - 1, -1))


def test_pauli_are_twice_spin_half():
    sig = pauli()
    for s, o in zip(sig, spin_ops(0.5)):
        assert np.allclose(s.entries, 2 * o.entries)


def test_random_state_is_normalized_and_seeded():
    a = random_state(np.random.default_rng(9), 5)
    b = random_state(np.random.default_rng(9), 5)
    assert a.normalized
    assert np.array_equal(a.amplitudes, b.amplitudes)


def test_phase_tools():
    v = np.array([1.0, 2.0j, -1.0])
    assert equal_up_to_phase(v, np.exp(0.3j) * v)
    assert phase_residual(v, np.exp(-2.1j) * v) < 1e-14
    assert not equal_up_to_phase(v, v[::-1])


def test_state_and_operator_checks():
    with pytest.raises(ValueError):
        StateVector(np.zeros(3)).normalize()
    P = basis(3, 1).projector()
    assert P.is_projection() and P.is_effect() and P.is_hermitian()
    assert not Operator(2 * np.eye(2)).is_effect()
    assert random_unitary(np.random.default_rng(0), 3).is_unitary()


@given(seeds)
def test_complete_unitary_keeps_columns(seed):
    r = np.random.default_rng(seed)
    q, _ = np.linalg.qr(r.normal(size=(5, 2)) + 1j * r.normal(size=(5, 2)))
    U = complete_unitary(q)
    assert np.allclose(U[:, :2], q)
    assert np.allclose(U.conj().T @ U, np.eye(5), atol=1e-12)
