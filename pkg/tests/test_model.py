import numpy as np
import pytest

from nhcorr import linalg, model
from nhcorr.errors import PTBroken
from nhcorr.linalg import PAULI_X, PAULI_Z
from nhcorr.model import LocalTerm, TfimParams


class TestBuildHamiltonian:
    def test_empty_terms(self):
        h = model.build_hamiltonian([], (2, 2))
        assert np.allclose(h, 0.0)

    def test_single_site_embedding(self):
        h = model.build_hamiltonian([LocalTerm((0,), PAULI_Z)], (2, 2))
        assert np.allclose(h, np.kron(PAULI_Z, np.eye(2)))

    def test_tfim_hermitian_at_zero_gamma(self):
        p = TfimParams(n=4, gamma=0.0)
        h = model.build_nh_tfim(p)
        assert linalg.is_hermitian(h)
        assert np.max(np.abs(h.imag)) < 1e-14  # real symmetric

    def test_support_out_of_range(self):
        with pytest.raises(ValueError):
            model.build_hamiltonian([LocalTerm((5,), PAULI_Z)], (2, 2))

    def test_local_term_validation(self):
        with pytest.raises(ValueError):
            LocalTerm((1, 0), np.eye(4))


class TestNhTfim:
    def test_paper_parameters_hermitian_case(self):
        h = model.build_nh_tfim(TfimParams(n=2, J=0.95, g=1.0, h=0.5, gamma=0.0))
        assert h.shape == (4, 4)
        assert linalg.is_hermitian(h)

    def test_single_site_hand_expansion(self):
        # g sx + i gamma sy at g=1, gamma=0.5 -> [[0, 1.5], [0.5, 0]]
        h = model.build_nh_tfim(TfimParams(n=1, J=0.0, g=1.0, h=0.0, gamma=0.5))
        assert np.allclose(h, [[0.0, 1.5], [0.5, 0.0]])

    def test_gamma_breaks_hermiticity(self):
        h = model.build_nh_tfim(TfimParams(n=3, gamma=0.4))
        assert not linalg.is_hermitian(h)


class TestQuasiHermitian:
    def test_gamma_zero_trivial(self):
        m = model.build_quasi_hermitian(TfimParams(n=3, gamma=0.0))
        assert np.allclose(m.S, np.eye(8))
        assert np.allclose(m.eta, np.eye(8))
        assert np.allclose(m.H0, m.H)

    def test_beta_and_g0_values(self):
        m = model.build_quasi_hermitian(TfimParams(n=2, g=1.0, gamma=0.6))
        assert m.beta_site == pytest.approx(0.5 * np.log(1.6 / 0.4), rel=1e-12)
        assert m.beta_site == pytest.approx(np.log(2.0), rel=1e-12)
        # g0 enters H0's x-field: <0| H0 |1> on a single-site block
        m1 = model.build_quasi_hermitian(TfimParams(n=1, J=0.0, g=1.0, h=0.0, gamma=0.6))
        assert np.allclose(m1.H0, 0.8 * PAULI_X)

    def test_exceptional_point_rejected(self):
        with pytest.raises(PTBroken):
            model.build_quasi_hermitian(TfimParams(n=2, g=1.0, gamma=1.0))
        with pytest.raises(PTBroken):
            model.build_quasi_hermitian(TfimParams(n=2, g=1.0, gamma=1.5))
        with pytest.raises(ValueError):
            model.build_quasi_hermitian(TfimParams(n=2, gamma=-0.1))

    @pytest.mark.parametrize("gamma", [0.1, 0.3, 0.5, 0.7, 0.9])
    def test_isospectral(self, gamma):
        m = model.build_quasi_hermitian(TfimParams(n=6, gamma=gamma))
        ev_h = np.sort(np.linalg.eigvals(m.H).real)
        ev_h0 = np.sort(np.linalg.eigvalsh(linalg.hermitize(m.H0)))
        assert np.max(np.abs(np.sort(np.abs(np.linalg.eigvals(m.H).imag)))) < 1e-8
        assert np.max(np.abs(ev_h - ev_h0)) < 1e-8

    @pytest.mark.parametrize("n,gamma", [(2, 0.3), (4, 0.6), (6, 0.9)])
    def test_s_norm_growth(self, n, gamma):
        m = model.build_quasi_hermitian(TfimParams(n=n, gamma=gamma))
        assert linalg.operator_norm(m.S) == pytest.approx(
            np.exp(0.5 * m.beta_site * n), rel=1e-10)

    def test_model_invariants(self):
        m = model.build_quasi_hermitian(TfimParams(n=4, gamma=0.5))
        assert model.verify_pseudo_hermitian(m.H, m.eta) <= 1e-12
        s_inv = np.diag((1.0 / m.s_diag).astype(complex))
        shs = linalg.hs_norm(m.S @ m.H0 @ s_inv - m.H) / linalg.hs_norm(m.H)
        assert shs <= 1e-9
        assert np.min(np.linalg.eigvalsh(linalg.hermitize(m.eta))) > 0
        assert linalg.is_hermitian(m.S)

    def test_locality_of_conjugated_terms(self):
        # product S keeps the support of an embedded local term fixed
        m = model.build_quasi_hermitian(TfimParams(n=4, gamma=0.7))
        term = np.kron(PAULI_Z, PAULI_Z)
        embedded = linalg.embed_operator(term, [2, 3], m.dims)
        s_inv = np.diag((1.0 / m.s_diag).astype(complex))
        conjugated = s_inv @ embedded @ m.S
        site = np.diag(np.exp([0.5 * m.beta_site, -0.5 * m.beta_site])).astype(complex)
        small = np.kron(np.linalg.inv(site), np.linalg.inv(site)) @ term \
            @ np.kron(site, site)
        assert np.max(np.abs(conjugated - linalg.embed_operator(small, [2, 3], m.dims))) < 1e-12


class TestVerifyPseudoHermitian:
    def test_hermitian_with_identity(self):
        h = model.build_nh_tfim(TfimParams(n=3, gamma=0.0))
        assert model.verify_pseudo_hermitian(h, np.eye(8)) < 1e-15

    def test_nh_with_built_eta(self):
        m = model.build_quasi_hermitian(TfimParams(n=4, gamma=0.3))
        assert model.verify_pseudo_hermitian(m.H, m.eta) <= 1e-12

    def test_nh_with_identity_fails(self):
        m = model.build_quasi_hermitian(TfimParams(n=4, gamma=0.3))
        assert model.verify_pseudo_hermitian(m.H, np.eye(16)) > 0.01


def test_site_distance():
    assert model.site_distance([0], [4]) == 4
    assert model.site_distance([0, 1], [1, 5]) == 0
    assert model.site_distance([2], [0, 5]) == 2
