import itertools

import numpy as np
import pytest

from photonctx.hilbert import KET_H, KET_U, PhotonState, psi1, random_state, same_ray, tensor
from photonctx.observables import (
    CONTEXT_B_OUTCOMES,
    NAMES,
    anticommutator_norm,
    bell_basis,
    combination_operator,
    commutator_norm,
    context,
    context_b_measure,
    detector_values,
    make_observable,
    observable_bounds,
    verify_eigenstate_relations,
)
from photonctx.optics import DETECTORS, build_fig1_network, propagate

S = 1 / np.sqrt(2)

TABLE_1 = {
    # detector: (Z1X2, X1Z2, Z1X2*X1Z2)
    "D1": (-1, +1, -1),
    "D2": (-1, -1, +1),
    "D3": (-1, -1, +1),
    "D4": (-1, +1, -1),
    "D5": (+1, +1, +1),
    "D6": (+1, -1, -1),
    "D7": (+1, -1, -1),
    "D8": (+1, +1, +1),
}


def test_z_matrices():
    np.testing.assert_array_equal(make_observable("Z1").matrix, np.diag([1, 1, -1, -1]))
    np.testing.assert_array_equal(make_observable("Z2").matrix, np.diag([1, -1, 1, -1]))


def test_x2_swaps_polarization():
    m = make_observable("X2").matrix
    expected = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_allclose(m, expected, atol=1e-15)


def test_x1_swaps_paths():
    m = make_observable("X1").matrix
    expected = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    np.testing.assert_allclose(m, expected, atol=1e-15)


def test_z2_on_uh():
    s = tensor(KET_U, KET_H)
    np.testing.assert_allclose(make_observable("Z2").matrix @ s.amps, s.amps)


def test_unknown_name():
    with pytest.raises(KeyError):
        make_observable("Y1")


@pytest.mark.parametrize("name", NAMES)
def test_squares_to_identity_and_hermitian(name):
    op = make_observable(name).op
    assert op.is_hermitian()
    np.testing.assert_allclose(op.matrix @ op.matrix, np.eye(4), atol=1e-12)


def test_commutation_structure():
    ob = {n: make_observable(n).op for n in NAMES}
    assert commutator_norm(ob["Z1Z2"], ob["X1X2"]) < 1e-12
    assert commutator_norm(ob["Z1X2"], ob["X1Z2"]) < 1e-12
    assert anticommutator_norm(ob["Z1"], ob["X1"]) == 0.0
    assert anticommutator_norm(ob["Z2"], ob["X2"]) == 0.0
    assert commutator_norm(ob["Z1"], ob["X1"]) > 1


def test_psi1_eigen_relations():
    z = make_observable("Z1Z2").matrix
    x = make_observable("X1X2").matrix
    np.testing.assert_allclose(z @ psi1().amps, psi1().amps, atol=1e-12)
    np.testing.assert_allclose(x @ psi1().amps, psi1().amps, atol=1e-12)
    checks = verify_eigenstate_relations(psi1())
    assert all(c.passed for c in checks)
    assert max(c.residual for c in checks) < 1e-12


def test_eigen_relations_uh():
    first, second, _ = verify_eigenstate_relations(tensor(KET_U, KET_H))
    assert first.passed
    assert not second.passed


def test_eigen_relations_minus_state():
    s = PhotonState([S, 0, 0, -S])
    first, second, _ = verify_eigenstate_relations(s)
    assert first.passed
    assert not second.passed
    # X1X2 eigenvalue is -1, so the residual is |2 s| = 2
    assert second.residual == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("det", DETECTORS)
def test_detector_values_match_table(det):
    z1x2, x1z2, prod = detector_values(det)
    assert (z1x2, x1z2, prod) == TABLE_1[det]
    assert prod == z1x2 * x1z2


def test_detector_value_groups():
    minus = {d for d in DETECTORS if detector_values(d)[2] == -1}
    assert minus == {"D1", "D4", "D6", "D7"}


def test_context_b_examples():
    assert context_b_measure(psi1())[(+1, +1)] == pytest.approx(1, abs=1e-12)
    p = context_b_measure(tensor(KET_U, KET_H))
    assert p[(+1, +1)] == pytest.approx(0.5, abs=1e-12)
    assert p[(+1, -1)] == pytest.approx(0.5, abs=1e-12)
    assert p[(-1, +1)] == pytest.approx(0, abs=1e-12)
    rho = sum(np.outer(b.amps, b.amps.conj()) for b in bell_basis().values()) / 4
    np.testing.assert_allclose(context("B").probabilities_rho(rho), [0.25] * 4, atol=1e-12)


@pytest.mark.parametrize("name", ["A", "B"])
def test_context_projectors(name):
    ctx = context(name)
    projs = ctx.projectors
    np.testing.assert_allclose(sum(projs), np.eye(4), atol=1e-12)
    for a, b in itertools.product(range(4), repeat=2):
        expected = projs[a] if a == b else np.zeros((4, 4))
        np.testing.assert_allclose(projs[a] @ projs[b], expected, atol=1e-12)


def test_bell_basis_labels():
    zz = make_observable("Z1Z2").matrix
    xx = make_observable("X1X2").matrix
    for (a, b), s in bell_basis().items():
        np.testing.assert_allclose(zz @ s.amps, a * s.amps, atol=1e-12)
        np.testing.assert_allclose(xx @ s.amps, b * s.amps, atol=1e-12)
    assert tuple(bell_basis()) == CONTEXT_B_OUTCOMES


def test_network_reproduces_born_expectations():
    net = build_fig1_network()
    rng = np.random.default_rng(5)
    vals = np.array([detector_values(d) for d in DETECTORS], dtype=float)
    ops = [make_observable(n).matrix for n in ("Z1X2", "X1Z2", "Z1X2*X1Z2")]
    for _ in range(100):
        s = random_state(rng)
        probs = propagate(net, s).probabilities
        from_counts = probs @ vals
        direct = [np.vdot(s.amps, m @ s.amps).real for m in ops]
        np.testing.assert_allclose(from_counts, direct, atol=1e-12)


def test_bounds():
    b = observable_bounds()
    assert b.nchv_max == 2
    assert b.qm_max == pytest.approx(4, abs=1e-10)
    assert b.eigenvector_is_psi1
    # spectrum of C: Bell states give 1 + zz + xx - (-zz*xx)... computed directly
    np.testing.assert_allclose(np.linalg.eigvalsh(combination_operator().matrix), [0, 0, 0, 4], atol=1e-12)
    assert same_ray(b.qm_eigenvector, psi1(), tol=1e-10)
