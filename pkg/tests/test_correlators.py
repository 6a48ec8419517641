import itertools

import numpy as np
import pytest
import scipy.linalg as sla

from nhcorr import correlators, evolution, linalg, model, states
from nhcorr.errors import MetricDivergence, TooManyParts, VanishingTrajectory
from nhcorr.linalg import PAULI_X, PAULI_Y, PAULI_Z
from nhcorr.model import TfimParams

DIMS4 = (2,) * 4


@pytest.fixture(scope="module")
def nh4():
    return model.build_quasi_hermitian(TfimParams(n=4, gamma=0.6))


@pytest.fixture(scope="module")
def herm4():
    return model.build_quasi_hermitian(TfimParams(n=4, gamma=0.0))


def op_at(pauli, site, n=4):
    return model.site_operator(pauli, site, (2,) * n)


class TestTraditional:
    def test_product_state_disjoint_ops(self, herm4):
        rho_parts = [states.random_full_rank(s, (2,)).matrix for s in range(4)]
        rho = states.DensityState(linalg.kron_all(rho_parts), DIMS4)
        cc = correlators.traditional_cc(rho, op_at(PAULI_X, 0), op_at(PAULI_Z, 3),
                                        0.0, 0.0, herm4)
        assert abs(cc) < 1e-13

    def test_ghz_end_to_end(self, herm4):
        cc = correlators.traditional_cc(states.ghz(4), op_at(PAULI_Z, 0),
                                        op_at(PAULI_Z, 3), 0.0, 0.0, herm4)
        assert abs(cc - 1.0) < 1e-12

    def test_equal_time_equals_cc_on_evolved_state(self, nh4):
        rho = states.random_full_rank(5, DIMS4)
        t = 1.1
        lhs = correlators.traditional_cc(rho, op_at(PAULI_Y, 0), op_at(PAULI_X, 2),
                                         t, t, nh4)
        # Heisenberg at equal times == equal-time CC on U rho U† / Tr
        cache = nh4.spectral_cache()
        u = cache.u_matrix(t)
        evolved = u @ rho.matrix @ u.conj().T
        evolved /= np.trace(evolved).real
        # equal-time CC on the evolved state, but without the normalization of
        # the trace (the traditional heisenberg form keeps <I(t)> != 1 weights)
        o1, o2 = op_at(PAULI_Y, 0), op_at(PAULI_X, 2)
        raw = u.conj().T @ o1 @ u
        raw2 = u.conj().T @ o2 @ u
        direct = (np.trace(rho.matrix @ raw @ raw2)
                  - np.trace(rho.matrix @ raw) * np.trace(rho.matrix @ raw2))
        assert abs(lhs - direct) < 1e-12


class TestSchrodinger:
    def test_hermitian_limit(self, herm4):
        rho = states.random_full_rank(8, DIMS4)
        for t, tp in [(0.4, 0.9), (1.3, 0.2)]:
            a = correlators.traditional_cc(rho, op_at(PAULI_X, 1), op_at(PAULI_Y, 3), t, tp, herm4)
            b = correlators.schrodinger_cc(rho, op_at(PAULI_X, 1), op_at(PAULI_Y, 3), t, tp, herm4)
            assert abs(a - b) < 1e-10

    def test_equal_time_equivalence(self, nh4):
        rho = states.random_full_rank(12, DIMS4)
        t = 0.8
        got = correlators.schrodinger_cc(rho, op_at(PAULI_Z, 0), op_at(PAULI_X, 3), t, t, nh4)
        rho_t = evolution.evolve_state(rho, nh4.spectral_cache().propagator(t))
        want = correlators.traditional_cc(rho_t, op_at(PAULI_Z, 0), op_at(PAULI_X, 3),
                                          0.0, 0.0, nh4)
        assert abs(got - want) < 1e-10

    def test_product_nh_evolution_vanishes(self):
        # the defining design goal: product evolution on a product state -> 0
        rng = np.random.default_rng(17)
        dims = (2, 2)
        site_h = []
        for _ in range(2):
            g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            site_h.append(g)  # generic non-Hermitian single-site generators
        h = (model.site_operator(site_h[0], 0, dims)
             + model.site_operator(site_h[1], 1, dims))
        rho = states.DensityState(
            np.kron(states.random_full_rank(1, (2,)).matrix,
                    states.random_full_rank(2, (2,)).matrix), dims)
        cc = correlators.schrodinger_cc(rho, model.site_operator(PAULI_X, 0, dims),
                                        model.site_operator(PAULI_Y, 1, dims),
                                        0.9, 0.4, h)
        assert abs(cc) < 1e-10

    def test_vanishing_trajectory_guard(self):
        h = -40.0j * np.eye(4)
        rho = states.make_state("plus_product", (2, 2))
        with pytest.raises(VanishingTrajectory):
            correlators.schrodinger_cc(rho, np.eye(4), np.eye(4), 10.0, 0.0, h)


class TestSigmaState:
    def test_identity_metric(self):
        rho = states.random_full_rank(3, (2, 2))
        sig = correlators.sigma_state(rho, np.eye(4))
        assert np.allclose(sig.matrix, rho.matrix)
        assert sig.eta_expectation == pytest.approx(1.0)

    def test_plus_state_hand_value(self):
        # <+| e^{-beta sz} |+> = cosh(beta) = 1.25 at beta = ln 2
        rho = states.make_state("plus_product", (2,))
        eta = sla.expm(-np.log(2.0) * PAULI_Z)
        sig = correlators.sigma_state(rho, eta)
        assert sig.eta_expectation == pytest.approx(1.25, abs=1e-12)

    def test_divergence(self):
        rho = states.make_state("plus_product", (2,))
        with pytest.raises(MetricDivergence):
            correlators.sigma_state(rho, PAULI_Z)  # <+|sz|+> = 0


class TestMetric:
    def test_identity_metric_hermitian_limit(self, herm4):
        rho = states.random_full_rank(6, DIMS4)
        a = correlators.traditional_cc(rho, op_at(PAULI_X, 0), op_at(PAULI_Z, 2), 0.7, 0.1, herm4)
        b = correlators.metric_cc(rho, np.eye(16), op_at(PAULI_X, 0), op_at(PAULI_Z, 2),
                                  0.7, 0.1, herm4)
        assert abs(a - b) < 1e-10

    def test_dyson_dual_route(self, nh4):
        # metric CC == traditional CC of hatted operators on sigma-hat,
        # with the right side evolved by the Hermitian counterpart
        rho = states.random_full_rank(9, DIMS4)
        o1, o2 = op_at(PAULI_Y, 1), op_at(PAULI_X, 3)
        t, tp = 0.9, 0.35
        lhs = correlators.metric_cc(rho, nh4.eta, o1, o2, t, tp, nh4)
        s_inv = np.diag((1.0 / nh4.s_diag).astype(complex))
        ev = complex(np.trace(rho.matrix @ nh4.eta))
        sigma_hat = s_inv @ rho.matrix @ s_inv / ev
        rhs = correlators.traditional_cc(sigma_hat, s_inv @ o1 @ nh4.S,
                                         s_inv @ o2 @ nh4.S, t, tp, nh4.H0)
        assert abs(lhs - rhs) < 1e-10

    def test_equal_time_state_route(self, nh4):
        # U rho eta U^{-1} = U rho U† eta lets the equal-time metric CC be
        # evaluated on the normalized evolved state
        rho = states.random_full_rank(10, DIMS4)
        o1, o2 = op_at(PAULI_X, 0), op_at(PAULI_Y, 2)
        t = 1.2
        lhs = correlators.metric_cc(rho, nh4.eta, o1, o2, t, t, nh4)
        rho_t = evolution.evolve_state(rho, nh4.spectral_cache().propagator(t))
        re = rho_t.matrix @ nh4.eta
        ev = complex(np.trace(re))
        rhs = (np.trace(re @ o1 @ o2) / ev
               - np.trace(re @ o1) * np.trace(re @ o2) / ev**2)
        assert abs(lhs - rhs) < 1e-10

    def test_phase_invariance(self, nh4):
        rho = states.random_full_rank(2, DIMS4)
        o1, o2 = op_at(PAULI_X, 0), op_at(PAULI_Z, 3)
        base = correlators.metric_cc(rho, nh4.eta, o1, o2, 0.6, 0.2, nh4)
        for phi1, phi2 in [(0.3, 1.1), (2.0, -0.7)]:
            rot = correlators.metric_cc(rho, nh4.eta, np.exp(1j * phi1) * o1,
                                        np.exp(1j * phi2) * o2, 0.6, 0.2, nh4)
            assert abs(abs(rot) - abs(base)) < 1e-12


class TestPartitions:
    def test_two_elements(self):
        parts = correlators.set_partitions(2)
        assert parts == [((0, 1),), ((0,), (1,))]

    def test_bell_numbers_against_recursion_oracle(self):
        # independent oracle: B(n+1) = sum_k C(n,k) B(k)
        from math import comb

        bell = [1, 1]
        for n in range(1, 6):
            bell.append(sum(comb(n, k) * bell[k] for k in range(n + 1)))
        for n in range(2, 7):
            assert len(correlators.set_partitions(n)) == bell[n]

    def test_blocks_sorted_and_deterministic(self):
        parts = correlators.set_partitions(4)
        assert len(parts) == 15
        for p in parts:
            for block in p:
                assert list(block) == sorted(block)
            assert [b[0] for b in p] == sorted(b[0] for b in p)
        assert parts == correlators.set_partitions(4)

    def test_arity_guard(self):
        with pytest.raises(TooManyParts):
            correlators.set_partitions(7)

    def test_cumulant_coefficients(self):
        assert [correlators.partition_weight(k) for k in (1, 2, 3, 4)] == [1, -1, 2, -6]


def cyclic_permutation(d: int, n: int) -> np.ndarray:
    """P with Tr[P (X_1 x ... x X_n)] = Tr[X_1 X_2 ... X_n]."""
    p = np.zeros((d**n, d**n))
    for idx in itertools.product(range(d), repeat=n):
        src = (idx[-1],) + idx[:-1]
        p[np.ravel_multi_index(idx, (d,) * n), np.ravel_multi_index(src, (d,) * n)] = 1.0
    return p


def generating_function_cc(kind, rho_mat, ops, h, eta=None, step=0.1):
    """Independent oracle: mixed finite-difference derivative of the log
    generating function on the cyclically permuted n-copy state, with one
    Richardson extrapolation step."""
    n = len(ops)
    d = rho_mat.shape[0]
    perm = cyclic_permutation(d, n)
    if kind == "metric":
        ev = np.trace(rho_mat @ eta)
        base = rho_mat @ eta / ev
    else:
        base = rho_mat
    extended = perm @ np.kron(base, np.eye(d ** (n - 1)))
    u_list = [sla.expm(-1j * h * t) for _, t in ops]
    left = linalg.kron_all(u_list)
    if kind == "schrodinger":
        right = linalg.kron_all([u_list[0].conj().T]
                                + [np.linalg.inv(u) for u in u_list[1:]])
    elif kind == "metric":
        right = linalg.kron_all([np.linalg.inv(u) for u in u_list])
    else:  # traditional with unitary evolution
        right = linalg.kron_all([u.conj().T for u in u_list])
    weight = left @ extended @ right

    def log_expectation(lams):
        factors = [sla.expm(lam * o) for lam, (o, _) in zip(lams, ops)]
        return np.log(np.trace(weight @ linalg.kron_all(factors)))

    def mixed_derivative(hh):
        total = 0.0
        for signs in itertools.product((1, -1), repeat=n):
            total += np.prod(signs) * log_expectation([s * hh for s in signs])
        return total / (2.0 * hh) ** n

    v1, v2 = mixed_derivative(step), mixed_derivative(step / 2.0)
    return (4.0 * v2 - v1) / 3.0


class TestNpartite:
    def test_bipartite_degeneration(self, nh4):
        rho = states.random_full_rank(13, DIMS4)
        ops = [(op_at(PAULI_X, 0), 0.5), (op_at(PAULI_Y, 3), 0.2)]
        trad = correlators.npartite_cc("traditional", rho, ops, nh4)
        assert abs(trad - correlators.traditional_cc(rho, ops[0][0], ops[1][0],
                                                     0.5, 0.2, nh4)) < 1e-12
        sch = correlators.npartite_cc("schrodinger", rho, ops, nh4)
        assert abs(sch - correlators.schrodinger_cc(rho, ops[0][0], ops[1][0],
                                                    0.5, 0.2, nh4)) < 1e-12
        met = correlators.npartite_cc("metric", rho, ops, nh4, eta=nh4.eta)
        assert abs(met - correlators.metric_cc(rho, nh4.eta, ops[0][0], ops[1][0],
                                               0.5, 0.2, nh4)) < 1e-12

    def test_three_partite_moment_expansion(self, herm4):
        rho = states.random_full_rank(14, DIMS4)
        ops = [(op_at(PAULI_X, 0), 0.3), (op_at(PAULI_Y, 1), 0.7), (op_at(PAULI_Z, 3), 0.1)]
        cache = herm4.spectral_cache()
        evolved = [cache.propagator(t).U_dag @ o @ cache.propagator(t).U for o, t in ops]
        a, b, c = evolved
        ev = lambda x: complex(np.trace(rho.matrix @ x))  # noqa: E731
        hand = (ev(a @ b @ c) - ev(a @ b) * ev(c) - ev(a @ c) * ev(b)
                - ev(b @ c) * ev(a) + 2 * ev(a) * ev(b) * ev(c))
        got = correlators.npartite_cc("traditional", rho, ops, herm4)
        assert abs(got - hand) < 1e-10

    def test_product_state_product_evolution_vanishes_n3(self):
        dims = (2, 2, 2)
        rng = np.random.default_rng(23)
        site_h, site_eta = [], []
        for _ in range(3):
            g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            h0 = linalg.hermitize(g)
            s = sla.expm(rng.standard_normal() * 0.4 * PAULI_Z)
            site_h.append(s @ h0 @ np.linalg.inv(s))
            site_eta.append(np.linalg.inv(s @ s))
        h = sum(model.site_operator(site_h[j], j, dims) for j in range(3))
        eta = linalg.kron_all(site_eta)
        rho = states.DensityState(
            linalg.kron_all([states.random_full_rank(30 + j, (2,)).matrix
                             for j in range(3)]), dims)
        ops = [(model.site_operator(p, j, dims), t)
               for j, (p, t) in enumerate([(PAULI_X, 0.4), (PAULI_Y, 0.9), (PAULI_Z, 0.2)])]
        assert abs(correlators.npartite_cc("schrodinger", rho, ops, h)) < 1e-10
        assert abs(correlators.npartite_cc("metric", rho, ops, h, eta=eta)) < 1e-10

    def test_generating_function_oracle_n2(self):
        # 2-qubit chain, genuinely non-Hermitian evolution
        m = model.build_quasi_hermitian(TfimParams(n=2, gamma=0.5))
        dims = (2, 2)
        rho = states.random_full_rank(3, dims)
        ops = [(model.site_operator(PAULI_X, 0, dims), 0.6),
               (model.site_operator(PAULI_Y, 1, dims), 0.3)]
        for kind in ("schrodinger", "metric"):
            closed = correlators.npartite_cc(kind, rho, ops, m, eta=m.eta)
            oracle = generating_function_cc(kind, rho.matrix, ops, m.H, eta=m.eta)
            assert abs(closed - oracle) < 1e-5

    def test_generating_function_oracle_n3(self):
        m = model.build_quasi_hermitian(TfimParams(n=3, gamma=0.4))
        dims = (2, 2, 2)
        rho = states.random_full_rank(4, dims)
        ops = [(model.site_operator(PAULI_X, 0, dims), 0.5),
               (model.site_operator(PAULI_Y, 1, dims), 0.25),
               (model.site_operator(PAULI_Z, 2, dims), 0.75)]
        for kind in ("schrodinger", "metric"):
            closed = correlators.npartite_cc(kind, rho, ops, m, eta=m.eta)
            oracle = generating_function_cc(kind, rho.matrix, ops, m.H, eta=m.eta)
            assert abs(closed - oracle) < 1e-4
        # Hermitian traditional against the same machinery
        m0 = model.build_quasi_hermitian(TfimParams(n=3, gamma=0.0))
        closed = correlators.npartite_cc("traditional", rho, ops, m0)
        oracle = generating_function_cc("traditional", rho.matrix, ops, m0.H)
        assert abs(closed - oracle) < 1e-4

    def test_arity_bounds(self, nh4):
        rho = states.random_full_rank(1, DIMS4)
        with pytest.raises(ValueError):
            correlators.npartite_cc("traditional", rho, [(np.eye(16), 0.0)], nh4)


class TestInvariants:
    def test_bilinearity(self, nh4):
        rho = states.random_full_rank(19, DIMS4)
        o1a, o1b = op_at(PAULI_X, 0), op_at(PAULI_Y, 0)
        o2 = op_at(PAULI_Z, 3)
        al, be = 0.7 - 0.2j, 1.3 + 0.5j
        for fn in (lambda a, b: correlators.traditional_cc(rho, a, b, 0.5, 0.1, nh4),
                   lambda a, b: correlators.schrodinger_cc(rho, a, b, 0.5, 0.1, nh4),
                   lambda a, b: correlators.metric_cc(rho, nh4.eta, a, b, 0.5, 0.1, nh4)):
            lhs = fn(al * o1a + be * o1b, o2)
            rhs = al * fn(o1a, o2) + be * fn(o1b, o2)
            assert abs(lhs - rhs) < 1e-12

    def test_identity_absorption(self, nh4, herm4):
        rho = states.random_full_rank(20, DIMS4)
        ident = np.eye(16)
        o = op_at(PAULI_Y, 2)
        # the Schrodinger and Metric kinds absorb the identity even under NH
        # evolution; the traditional kind only does so when U is unitary,
        # since I(t) = U†U != I is precisely its connectedness breakdown
        assert abs(correlators.schrodinger_cc(rho, ident, o, 0.4, 0.9, nh4)) < 1e-12
        assert abs(correlators.schrodinger_cc(rho, o, ident, 0.4, 0.9, nh4)) < 1e-12
        assert abs(correlators.metric_cc(rho, nh4.eta, ident, o, 0.4, 0.9, nh4)) < 1e-12
        assert abs(correlators.metric_cc(rho, nh4.eta, o, ident, 0.4, 0.9, nh4)) < 1e-12
        assert abs(correlators.traditional_cc(rho, ident, o, 0.4, 0.9, herm4)) < 1e-12
        assert abs(correlators.traditional_cc(rho, o, ident, 0.4, 0.9, herm4)) < 1e-12
        assert abs(correlators.traditional_cc(rho, ident, o, 0.4, 0.9, nh4)) > 1e-6


class TestThermal:
    def test_candidates_b_c_coincide(self, nh4):
        b = correlators.thermal_candidate(nh4, 1.0, "b")
        c = correlators.thermal_candidate(nh4, 1.0, "c")
        assert linalg.hs_norm(b - c) < 1e-10

    def test_eta_exp_identity(self, nh4):
        # eta e^{-beta H} = S^{-1} e^{-beta H0} S^{-1} via f(H†) = eta f(H) eta^{-1}
        beta = 0.8
        lhs = nh4.eta @ sla.expm(-beta * nh4.H)
        s_inv = np.diag((1.0 / nh4.s_diag).astype(complex))
        w, q = np.linalg.eigh(linalg.hermitize(nh4.H0))
        rhs = s_inv @ ((q * np.exp(-beta * w)) @ q.conj().T) @ s_inv
        assert linalg.hs_norm(lhs - rhs) / linalg.hs_norm(rhs) < 1e-10

    def test_hermitian_invariance(self, herm4):
        o_a = op_at(PAULI_Z, 0)
        o_b = op_at(PAULI_Z, 3)
        for t, tp in ((0.5, 0.2), (1.4, 0.7)):
            res = correlators.thermal_invariance_residual(herm4, 1.0, "a", o_a, o_b, t, tp)
            assert res <= 1e-9

    def test_nh_residuals_are_finite_and_reported(self, nh4):
        o_a = op_at(PAULI_Z, 0)
        o_b = op_at(PAULI_Z, 3)
        for cand in correlators.THERMAL_CANDIDATES:
            res = correlators.thermal_invariance_residual(nh4, 1.0, cand, o_a, o_b, 0.9, 0.3)
            assert np.isfinite(res)


class TestCorrelatorSpec:
    def test_metric_requires_eta(self, nh4):
        rho = states.random_full_rank(1, DIMS4)
        with pytest.raises(ValueError):
            correlators.CorrelatorSpec(kind="metric", ops=((np.eye(16), 0.0),) * 2,
                                       state=rho, hamiltonian=nh4)

    def test_evaluate_matches_direct_call(self, nh4):
        rho = states.random_full_rank(2, DIMS4)
        ops = ((op_at(PAULI_X, 0), 0.4), (op_at(PAULI_Z, 3), 0.1))
        spec = correlators.CorrelatorSpec(kind="metric", ops=ops, state=rho,
                                          hamiltonian=nh4, eta=nh4.eta)
        direct = correlators.metric_cc(rho, nh4.eta, ops[0][0], ops[1][0], 0.4, 0.1, nh4)
        assert abs(spec.evaluate() - direct) < 1e-12

    def test_times_must_be_finite(self, nh4):
        rho = states.random_full_rank(3, DIMS4)
        with pytest.raises(ValueError):
            correlators.CorrelatorSpec(kind="traditional",
                                       ops=((np.eye(16), np.inf),), state=rho,
                                       hamiltonian=nh4)
