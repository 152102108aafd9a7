import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from waylab import zoo
from waylab.analysis import random_conserving_scheme
from waylab.linalg import (Operator, basis, diag, identity, mat_exp, random_hermitian,
                           random_state, random_unitary, spin_ops, swap, tensor)
from waylab.scheme import (AffineMap, ConservedQuantity, DiscretePOVM, LabelMismatch,
                           MeasurementScheme, SchemeError, accuracy_error, conservation_defect,
                           dumps_scheme, final_state, induced_povm, loads_scheme,
                           outcome_states, pointer_probabilities, repeatability_defect,
                           scheme_from_dict, scheme_to_dict, yanase_defect)

seeds = st.integers(0, 2 ** 32 - 1)
SX, SY, SZ = spin_ops(0.5)


def random_scheme(seed, ds=2, da=3):
    r = np.random.default_rng(seed)
    U = random_unitary(r, ds * da)
    Z = Operator(np.diag(r.integers(-1, 2, size=da).astype(float)))
    return MeasurementScheme(ds, da, U, random_state(r, da), Z, AffineMap(r.uniform(0.5, 2), r.normal()))


def sx_plus_minus():
    w, v = np.linalg.eigh(SX.entries)
    return v[:, 1], v[:, 0]


def test_affine_map():
    f = AffineMap(2.0, -1.0)
    assert f(3.0) == 5.0 and f.inverse(5.0) == 3.0
    assert np.allclose(f(np.array([0.0, 1.0])), [-1.0, 1.0])
    with pytest.raises(ValueError):
        AffineMap(0.0, 1.0)


def test_scheme_validation():
    with pytest.raises(SchemeError):
        MeasurementScheme(2, 2, 2 * np.eye(4), basis(2, 0), SZ)
    with pytest.raises(SchemeError):
        MeasurementScheme(2, 2, np.eye(4), np.array([1.0, 1.0]), SZ)
    with pytest.raises(SchemeError):
        MeasurementScheme(2, 2, np.eye(4), basis(2, 0), np.array([[0, 1], [0, 0]]))
    with pytest.raises(Exception):
        MeasurementScheme(2, 3, np.eye(4), basis(3, 0), np.eye(3))


def test_povm_validation():
    with pytest.raises(ValueError):
        DiscretePOVM([(0.0, Operator(np.eye(2))), (1.0, Operator(np.eye(2)))])
    with pytest.raises(ValueError):
        DiscretePOVM([(0.0, Operator(np.eye(2))), (0.0, Operator(np.zeros((2, 2))))])


def test_swap_scheme_reproduces_spectral_measure():
    s = MeasurementScheme(2, 2, swap(2), basis(2, 0), SX)
    povm, target = induced_povm(s), DiscretePOVM.spectral(SX)
    assert np.allclose(povm.labels, [-0.5, 0.5])
    for x, e in target:
        assert np.max(np.abs(povm.effect(x).entries - e.entries)) <= 1e-12
    assert accuracy_error(s, target) <= 1e-12


def test_trivial_coupling_gives_trivial_povm():
    phi = random_state(np.random.default_rng(0), 3)
    Z = diag([0.0, 1.0, 2.0])
    s = MeasurementScheme(2, 3, identity(6), phi, Z)
    for k, (z, e) in enumerate(induced_povm(s)):
        assert np.allclose(e.entries, abs(phi.amplitudes[k]) ** 2 * np.eye(2))
    assert accuracy_error(s, DiscretePOVM([(0.0, identity(2)), (1.0, 0 * identity(2)),
                                           (2.0, 0 * identity(2))])) > 0.1


def test_ohira_pearle_effects_are_sx_projectors():
    s = zoo.ohira_pearle().scheme
    plus, minus = sx_plus_minus()
    povm = induced_povm(s)
    assert np.allclose(povm.effect(0.5).entries, np.outer(plus, plus.conj()), atol=1e-12)
    assert np.allclose(povm.effect(-0.5).entries, np.outer(minus, minus.conj()), atol=1e-12)


def test_final_state_trivial_and_wigner():
    r = np.random.default_rng(1)
    psi, phi = random_state(r, 2), random_state(r, 3)
    s = MeasurementScheme(2, 3, identity(6), phi, diag([0, 1, 2]))
    assert np.allclose(final_state(s, psi).amplitudes, np.kron(psi.amplitudes, phi.amplitudes))
    w = zoo.wigner_ideal().scheme
    plus, _ = sx_plus_minus()
    out = final_state(w, plus).amplitudes
    pointer_plus = np.array([0.0, 1.0, 0.0])     # Z-eigenvector with value +1/2
    assert np.allclose(out, np.kron(plus, pointer_plus), atol=1e-12)


@given(seeds)
def test_final_state_is_normalized(seed):
    s = random_scheme(seed)
    psi = random_state(np.random.default_rng(seed + 1), 2)
    assert abs(final_state(s, psi).norm() - 1) < 1e-12


@given(seeds)
def test_povm_completeness(seed):
    povm = induced_povm(random_scheme(seed))
    assert np.max(np.abs(povm.total().entries - np.eye(2))) <= 1e-10
    for _, e in povm:
        assert e.is_effect()


@given(seeds)
def test_probability_reproducibility(seed):
    s = random_scheme(seed)
    psi = random_state(np.random.default_rng(seed + 7), 2)
    povm = induced_povm(s)
    direct = dict(pointer_probabilities(s, psi))
    post = {o.label: o.probability for o in outcome_states(s, psi)}
    for x, e in povm:
        pe = float(e.expect(psi).real)
        assert abs(direct[x] - pe) <= 1e-10
        assert abs(post[x] - pe) <= 1e-10


def test_outcome_states_ohira_pearle_and_trivial():
    s = zoo.ohira_pearle().scheme
    plus, _ = sx_plus_minus()
    outs = [o for o in outcome_states(s, plus) if o.probability > 1e-9]
    assert len(outs) == 1 and abs(outs[0].probability - 1) < 1e-12
    up = np.array([1.0, 0.0])
    assert np.allclose(outs[0].normalized().entries, np.outer(up, up), atol=1e-12)
    r = np.random.default_rng(2)
    psi = random_state(r, 2)
    t = MeasurementScheme(2, 3, identity(6), random_state(r, 3), diag([0, 1, 2]))
    for o in outcome_states(t, psi):
        if o.probability > 1e-9:
            assert np.allclose(o.normalized().entries, psi.projector().entries)


def test_swap_post_states_ignore_input():
    phi = random_state(np.random.default_rng(3), 2)
    s = MeasurementScheme(2, 2, swap(2), phi, SZ)
    for psi in (basis(2, 0), random_state(np.random.default_rng(4), 2)):
        for o in outcome_states(s, psi):
            if o.probability > 1e-9:
                assert np.allclose(o.normalized().entries, phi.projector().entries, atol=1e-12)


def test_repeatability_swap_orthogonal_pointer():
    # apparatus prepared in the spin-down state: the post-state never matches outcome +1/2
    s = MeasurementScheme(2, 2, swap(2), basis(2, 1), SZ)
    assert abs(repeatability_defect(s, DiscretePOVM.spectral(SZ)) - 1) < 1e-12


def test_repeatability_known_models():
    w = zoo.wigner_ideal()
    assert repeatability_defect(w.scheme, w.target) <= 1e-12
    op = zoo.ohira_pearle()
    assert abs(repeatability_defect(op.scheme, op.target) - 0.5) <= 1e-10


def test_label_mismatch():
    s = MeasurementScheme(2, 2, swap(2), basis(2, 0), SZ)
    with pytest.raises(LabelMismatch):
        accuracy_error(s, DiscretePOVM.spectral(2 * SZ.entries))


def test_yanase_defect():
    s = MeasurementScheme(2, 2, swap(2), basis(2, 0), SZ)
    assert yanase_defect(s, ConservedQuantity(SZ, SZ)) == 0
    op = zoo.ohira_pearle()
    # ||[J_x, J_z]|| / (||J_x|| ||J_z||) = (1/2) / (1/4)
    assert abs(yanase_defect(op.scheme, op.conserved) - 2.0) < 1e-12


def test_conservation_defect_cases():
    c = ConservedQuantity(SZ, diag([-1.0, 0.0, 1.0]))
    H = tensor(SZ, identity(3)) + tensor(identity(2), diag([-1.0, 0.0, 1.0]))
    s = MeasurementScheme(2, 3, mat_exp(H, 0.83), basis(3, 0), diag([0, 1, 2]))
    assert conservation_defect(s, c) <= 1e-12
    op = zoo.ohira_pearle()
    assert conservation_defect(op.scheme, op.conserved) <= 1e-12
    w = zoo.wigner_ideal()
    assert conservation_defect(w.scheme, w.conserved) > 0.1


@given(seeds)
def test_conservation_iff_block_diagonal(seed):
    c = ConservedQuantity(SZ, diag([-1.0, 0.0, 1.0]))
    L = np.diag(c.total().entries).real
    cross = np.abs(L[:, None] - L[None, :]) > 1e-9
    s = random_conserving_scheme(seed, (2, 3), c)
    assert conservation_defect(s, c) <= 1e-10
    assert np.max(np.abs(s.U.entries[cross])) <= 1e-9
    # a generic perturbation breaks both at once
    r = np.random.default_rng(seed)
    bad = s.U.entries @ mat_exp(random_hermitian(r, 6), 0.3).entries
    t = MeasurementScheme(2, 3, bad, s.phi, s.Z)
    assert conservation_defect(t, c) > 1e-6
    assert np.max(np.abs(bad[cross])) > 1e-9


def test_accuracy_of_approximate_wigner():
    b = zoo.wigner_approximate(3)
    assert abs(accuracy_error(b.scheme, b.target) - 0.2) < 1e-12


@given(seeds)
def test_serialization_roundtrip(seed):
    s = random_scheme(seed)
    t = loads_scheme(dumps_scheme(s))
    assert np.array_equal(t.U.entries, s.U.entries)
    assert np.array_equal(t.phi.amplitudes, s.phi.amplitudes)
    assert np.array_equal(t.Z.entries, s.Z.entries)
    assert (t.f.a, t.f.b) == (s.f.a, s.f.b)


def test_serialization_schema():
    doc = json.loads(dumps_scheme(zoo.ohira_pearle().scheme, note="x"))
    assert {"system_dim", "apparatus_dim", "U", "phi", "Z", "f"} <= set(doc)
    assert doc["f"] == {"a": 1.0, "b": 0.0}
    assert len(doc["U"]) == 16 and len(doc["U"][0]) == 2
    assert doc["note"] == "x"
    assert scheme_from_dict(scheme_to_dict(zoo.ohira_pearle().scheme)).dims == (2, 2)
