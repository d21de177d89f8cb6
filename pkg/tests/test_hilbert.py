import numpy as np
import pytest
from hypothesis import given

from photonctx.errors import ConsistencyError, FrameMismatchError, NormalizationError
from photonctx.hilbert import (
    KET_D,
    KET_H,
    KET_M,
    KET_P,
    KET_U,
    Operator4,
    PhotonState,
    apply,
    expectation,
    path_basis_change,
    polarization_basis_change,
    psi1,
    random_state,
    same_ray,
    tensor,
)
from photonctx.observables import make_observable

from strategies import state_vectors

S = 1 / np.sqrt(2)


def test_tensor_basis_product():
    np.testing.assert_allclose(tensor([1, 0], [1, 0]).amps, [1, 0, 0, 0], atol=1e-15)


def test_tensor_u_diagonal():
    np.testing.assert_allclose(tensor(KET_U, [S, S]).amps, [S, S, 0, 0], atol=1e-15)


def test_tensor_hand_expansion():
    # (u + d)/sqrt2 (x) (H - V)/sqrt2 = (uH - uV + dH - dV)/2
    np.testing.assert_allclose(tensor([S, S], [S, -S]).amps, [0.5, -0.5, 0.5, -0.5], atol=1e-15)


def test_tensor_rejects_unnormalized():
    with pytest.raises(NormalizationError):
        tensor([1, 1], [1, 0])
    with pytest.raises(NormalizationError):
        tensor([1, 0], [0.5, 0])


def test_state_rejects_nonfinite():
    with pytest.raises(ValueError):
        PhotonState([np.nan, 0, 0, 0])


def test_states_are_immutable():
    s = psi1()
    with pytest.raises(ValueError):
        s.amps[0] = 0


def test_diag_to_rect():
    # |u>|P> written in the diagonal frame is (1, 0, 0, 0)
    s = PhotonState([1, 0, 0, 0], pol_frame="diag")
    r = polarization_basis_change(s, "rect")
    assert r.pol_frame == "rect"
    np.testing.assert_allclose(r.amps, [S, S, 0, 0], atol=1e-15)


def test_rect_to_diag():
    # |d>|H> = (|d>|P> + |d>|M>)/sqrt2
    r = polarization_basis_change(tensor(KET_D, KET_H), "diag")
    np.testing.assert_allclose(r.amps, [0, 0, S, S], atol=1e-15)


def test_same_frame_change_rejected():
    with pytest.raises(FrameMismatchError):
        polarization_basis_change(psi1(), "rect")


def test_random_round_trips_and_norms():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        s = random_state(rng)
        d = polarization_basis_change(s, "diag")
        assert abs(d.norm() - 1) < 1e-12
        back = polarization_basis_change(d, "rect")
        np.testing.assert_allclose(back.amps, s.amps, atol=1e-12)
        p = path_basis_change(s, "ud'")
        assert abs(p.norm() - 1) < 1e-12
        np.testing.assert_allclose(path_basis_change(p, "ud").amps, s.amps, atol=1e-12)


@given(state_vectors())
def test_polarization_change_is_involution(v):
    s = PhotonState(v)
    twice = polarization_basis_change(polarization_basis_change(s, "diag"), "rect")
    np.testing.assert_allclose(twice.amps, s.amps, atol=1e-12)


def test_psi1_has_both_forms():
    # (|uH> + |dV>)/sqrt2 = (|u'>|P> + |d'>|M>)/sqrt2
    other = PhotonState([S, 0, 0, S], path_frame="ud'", pol_frame="diag")
    assert same_ray(psi1(), other)


def test_apply_identity():
    s = random_state(np.random.default_rng(1))
    np.testing.assert_allclose(apply(Operator4.identity(), s).amps, s.amps)


def test_apply_z1_on_uh():
    out = apply(make_observable("Z1").op, tensor(KET_U, KET_H))
    np.testing.assert_allclose(out.amps, [1, 0, 0, 0])


def test_apply_x1x2_fixes_psi1():
    out = apply(make_observable("X1X2").op, psi1())
    np.testing.assert_allclose(out.amps, psi1().amps, atol=1e-12)


def test_apply_frame_mismatch():
    with pytest.raises(FrameMismatchError):
        apply(Operator4.identity(), polarization_basis_change(psi1(), "diag"))


def test_expectations():
    assert expectation(make_observable("Z1Z2").op, psi1()) == pytest.approx(1, abs=1e-12)
    assert expectation(make_observable("Z1X2*X1Z2").op, psi1()) == pytest.approx(-1, abs=1e-12)
    assert expectation(make_observable("Z2").op, tensor(KET_U, KET_H)) == pytest.approx(1, abs=1e-12)


def test_expectation_requires_hermitian():
    m = np.zeros((4, 4), dtype=complex)
    m[0, 1] = 1j
    with pytest.raises(ConsistencyError):
        expectation(Operator4(m), psi1())


def test_same_ray_ignores_global_phase():
    s = random_state(np.random.default_rng(3))
    assert same_ray(s, PhotonState(np.exp(0.7j) * s.amps))
    assert not same_ray(tensor(KET_U, KET_P), tensor(KET_U, KET_M))


@pytest.mark.parametrize("name", ["Z1", "X1", "Z2", "X2"])
def test_observables_hermitian_with_split_spectrum(name):
    op = make_observable(name).op
    assert op.is_hermitian()
    np.testing.assert_allclose(np.linalg.eigvalsh(op.matrix), [-1, -1, 1, 1], atol=1e-12)
