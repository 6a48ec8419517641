"""Named invariant checks behind the ``verify`` subcommand.

The fast level runs identity checks at n <= 6; the full level additionally
emits the six figure-reproduction grids and checks their morphology.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import correlators, entanglement, evolution, linalg, model, states
from .errors import NhcorrError
from .linalg import PAULI_X, PAULI_Y, PAULI_Z


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def check_pseudo_hermiticity(use_identity_eta: bool = False) -> CheckResult:
    """||H† eta - eta H||_2 / (||H||_2 ||eta||_2) <= 1e-12 across the gamma grid.

    ``use_identity_eta`` injects the eta = I fault, which must fail for any
    gamma > 0 (the i*gamma*sy terms do not cancel)."""
    worst = 0.0
    for n in (2, 4, 6):
        for gamma in (0.3, 0.6, 0.9):
            m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=gamma))
            eta = np.eye(2**n, dtype=complex) if use_identity_eta else m.eta
            worst = max(worst, model.verify_pseudo_hermitian(m.H, eta))
    return _result("pseudo_hermiticity", worst <= 1e-12, f"max residual {worst:.3e}")


def check_dyson_decomposition() -> CheckResult:
    worst_shs = 0.0
    worst_spec = 0.0
    for n in (2, 4, 6):
        for gamma in (0.1, 0.5, 0.9):
            m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=gamma))
            s_inv = np.diag((1.0 / m.s_diag).astype(complex))
            shs = linalg.hs_norm(m.S @ m.H0 @ s_inv - m.H) / linalg.hs_norm(m.H)
            worst_shs = max(worst_shs, shs)
            ev_h = np.sort(np.linalg.eigvals(m.H).real)
            ev_h0 = np.sort(np.linalg.eigvalsh(linalg.hermitize(m.H0)))
            worst_spec = max(worst_spec, float(np.max(np.abs(ev_h - ev_h0))))
    ok = worst_shs <= 1e-9 and worst_spec <= 1e-8
    return _result("dyson_decomposition", ok,
                   f"max SHS residual {worst_shs:.3e}, spectral gap {worst_spec:.3e}")


def check_s_norm() -> CheckResult:
    worst = 0.0
    for n in (2, 4, 6):
        for gamma in (0.3, 0.9):
            m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=gamma))
            expected = np.exp(0.5 * m.beta_site * n)
            worst = max(worst, abs(linalg.operator_norm(m.S) - expected) / expected)
    return _result("s_norm_identity", worst <= 1e-10, f"max relative gap {worst:.3e}")


def check_locality_conjugation() -> CheckResult:
    """Conjugating an embedded local term by the product S keeps its support."""
    m = model.build_quasi_hermitian(model.TfimParams(n=5, gamma=0.6))
    dims = m.dims
    term = np.kron(PAULI_Z, PAULI_X)
    embedded = linalg.embed_operator(term, [1, 2], dims)
    s_inv = np.diag((1.0 / m.s_diag).astype(complex))
    conj_full = s_inv @ embedded @ m.S
    site = np.diag(np.exp([0.5 * m.beta_site, -0.5 * m.beta_site])).astype(complex)
    site_inv = np.linalg.inv(site)
    small = np.kron(site_inv, site_inv) @ term @ np.kron(site, site)
    gap = linalg.hs_norm(conj_full - linalg.embed_operator(small, [1, 2], dims))
    return _result("locality_conjugation", gap <= 1e-10, f"embedding gap {gap:.3e}")


def check_equal_time_equivalence() -> CheckResult:
    n, dims = 4, (2,) * 4
    paulis = (PAULI_X, PAULI_Y, PAULI_Z)
    rng = np.random.default_rng(1234)
    worst = 0.0
    for k in range(10):
        gamma = float(rng.uniform(0.0, 0.9))
        m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=gamma))
        rho = states.random_full_rank(int(rng.integers(1 << 31)), dims)
        o1 = model.site_operator(paulis[k % 3], 0, dims)
        o2 = model.site_operator(paulis[(k + 1) % 3], n - 1, dims)
        t = float(rng.uniform(0.0, 2.0))
        sc = correlators.schrodinger_cc(rho, o1, o2, t, t, m)
        rho_t = evolution.evolve_state(rho, m.spectral_cache().propagator(t))
        tc = correlators.traditional_cc(rho_t, o1, o2, 0.0, 0.0, m)
        worst = max(worst, abs(sc - tc))
    return _result("equal_time_equivalence", worst <= 1e-10, f"max gap {worst:.3e}")


def check_hermitian_degeneration() -> CheckResult:
    n, dims = 4, (2,) * 4
    m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=0.0))
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(10):
        rho = states.random_full_rank(int(rng.integers(1 << 31)), dims)
        o1 = model.site_operator(PAULI_Y, 0, dims)
        o2 = model.site_operator(PAULI_X, 3, dims)
        t, tp = (float(x) for x in rng.uniform(0.0, 2.0, size=2))
        a = correlators.traditional_cc(rho, o1, o2, t, tp, m)
        b = correlators.schrodinger_cc(rho, o1, o2, t, tp, m)
        c = correlators.metric_cc(rho, m.eta, o1, o2, t, tp, m)
        worst = max(worst, abs(a - b), abs(a - c))
    return _result("hermitian_degeneration", worst <= 1e-12, f"max spread {worst:.3e}")


def check_delta_rho_identity() -> CheckResult:
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(20):
        rho = states.random_full_rank(int(rng.integers(1 << 31)), (2,) * 4)
        rep = entanglement.delta_rho_analysis(rho, ((0, 1), (2, 3)))
        worst = max(worst, abs(rep.hs_norm**2 - float(np.sum(np.abs(rep.cc_values) ** 2))))
    return _result("delta_rho_identity", worst <= 1e-10, f"max norm-identity gap {worst:.3e}")


def check_mi_bound() -> CheckResult:
    rng = np.random.default_rng(1717)
    worst_violation = -np.inf
    worst_kgap = 0.0
    for _ in range(20):
        rho = states.random_full_rank(int(rng.integers(1 << 31)), (2, 2))
        mi = entanglement.mutual_information(rho, ((0,), (1,)))
        bound, k_star = entanglement.mi_bound(rho, ((0,), (1,)))
        worst_violation = max(worst_violation, mi - bound)
        # closed-form k* against a scalar grid search
        w = np.linalg.eigvalsh(linalg.hermitize(rho.matrix))
        ks = np.exp(np.linspace(np.log(k_star) - 1, np.log(k_star) + 1, 4001))
        vals = [np.sqrt(np.sum((np.log(k * w)) ** 2)) for k in ks]
        worst_kgap = max(worst_kgap, abs(ks[int(np.argmin(vals))] - k_star) / k_star)
    ok = worst_violation <= 1e-9 and worst_kgap <= 1e-3
    return _result("mi_bound", ok,
                   f"max I-bound {worst_violation:.3e}, k* grid gap {worst_kgap:.3e}")


def check_ghz_cc() -> CheckResult:
    worst = 0.0
    for n in range(2, 7):
        dims = (2,) * n
        rho = states.ghz(n)
        m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=0.0))
        cc = correlators.traditional_cc(rho, model.site_operator(PAULI_Z, 0, dims),
                                        model.site_operator(PAULI_Z, n - 1, dims),
                                        0.0, 0.0, m)
        worst = max(worst, abs(cc - 1.0))
    return _result("ghz_cc", worst <= 1e-12, f"max |cc - 1| = {worst:.3e}")


def check_propagator_properties() -> CheckResult:
    m = model.build_quasi_hermitian(model.TfimParams(n=4, gamma=0.6))
    cache = m.spectral_cache()
    d = 2**4
    group = linalg.hs_norm(cache.u_matrix(0.7) @ cache.u_matrix(0.4) - cache.u_matrix(1.1))
    rho = states.random_pure(5, (2,) * 4)
    shifted = m.H + (0.3 + 0.8j) * np.eye(d)
    r1 = evolution.evolve_state(rho, evolution.propagator(m.H, 1.3))
    r2 = evolution.evolve_state(rho, evolution.propagator(shifted, 1.3))
    shift_gap = linalg.hs_norm(r1.matrix - r2.matrix)
    purity = abs(np.trace(r1.matrix @ r1.matrix).real - 1.0)
    ok = group <= 1e-8 and shift_gap <= 1e-10 and purity <= 1e-10
    return _result("propagator_properties", ok,
                   f"group {group:.3e}, shift {shift_gap:.3e}, purity {purity:.3e}")


def check_povm() -> CheckResult:
    m = model.build_quasi_hermitian(model.TfimParams(n=3, gamma=0.5))
    damping = evolution.DampingPart.from_hamiltonian(m.H)
    w_min = float(np.min(np.linalg.eigvalsh(damping.Gamma)))
    # H = H0 - i Gamma; adding +i*w_min*I sends Gamma -> Gamma - w_min I >= 0
    h_shift = m.H + 1j * w_min * np.eye(2**3)
    damp_shift = evolution.DampingPart.from_hamiltonian(h_shift)
    psi0 = states.random_pure(3, (2,) * 3).pure_vector
    cache = evolution.build_cache(h_shift)
    norms = [float(np.vdot(v := cache.apply(t, psi0, "u"), v).real)
             for t in np.arange(0.0, 5.01, 0.1)]
    monotone = all(b <= a + 1e-10 for a, b in zip(norms, norms[1:]))
    t0 = 0.9
    psi_t = cache.apply(t0, psi0, "u")
    rate = evolution.success_decay_rate(psi_t, damp_shift)
    dt = evolution.FD_STEP
    fd = (float(np.linalg.norm(cache.apply(t0 + dt, psi0, "u")) ** 2)
          - float(np.linalg.norm(cache.apply(t0 - dt, psi0, "u")) ** 2)) / (2 * dt)
    fd_gap = abs(rate - fd)
    ok = monotone and fd_gap <= 1e-6
    return _result("povm", ok, f"monotone={monotone}, decay-rate fd gap {fd_gap:.3e}")


def check_partitions() -> CheckResult:
    bells = {2: 2, 3: 5, 4: 15, 5: 52, 6: 203}
    counts_ok = all(len(correlators.set_partitions(n)) == b for n, b in bells.items())
    coeffs_ok = [correlators.partition_weight(k) for k in (1, 2, 3, 4)] == [1, -1, 2, -6]
    return _result("partitions", counts_ok and coeffs_ok,
                   f"counts ok={counts_ok}, coefficients ok={coeffs_ok}")


def check_metric_identities() -> CheckResult:
    n, dims = 4, (2,) * 4
    m = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=0.6))
    rng = np.random.default_rng(31)
    worst_dual = 0.0
    for _ in range(5):
        rho = states.random_full_rank(int(rng.integers(1 << 31)), dims)
        o1 = model.site_operator(PAULI_X, 0, dims)
        o2 = model.site_operator(PAULI_Y, 3, dims)
        t, tp = (float(x) for x in rng.uniform(0.0, 1.5, size=2))
        lhs = correlators.metric_cc(rho, m.eta, o1, o2, t, tp, m)
        s_inv = np.diag((1.0 / m.s_diag).astype(complex))
        ev = complex(np.trace(rho.matrix @ m.eta))
        sigma_hat = s_inv @ rho.matrix @ s_inv / ev
        rhs = correlators.traditional_cc(sigma_hat, s_inv @ o1 @ m.S, s_inv @ o2 @ m.S,
                                         t, tp, m.H0)
        worst_dual = max(worst_dual, abs(lhs - rhs))
    site_eta = np.diag(np.exp([-m.beta_site, m.beta_site])).astype(complex)
    eta_a = np.kron(site_eta, site_eta)
    rho = states.random_full_rank(4242, dims)
    res = entanglement.metric_cc_decomposition_check(
        rho, eta_a, eta_a, np.kron(PAULI_X, PAULI_Y), np.kron(PAULI_Z, PAULI_X))
    aux = entanglement.metric_inverse_identity_residual(rho, eta_a, eta_a)
    ok = worst_dual <= 1e-10 and res <= 1e-10 and aux <= 1e-10
    return _result("metric_identities", ok,
                   f"dual route {worst_dual:.3e}, decomposition {res:.3e}, inverse {aux:.3e}")


def check_appendix_example() -> CheckResult:
    worst_cc = worst_c1k = 0.0
    min_delta = np.inf
    for seed in (1, 2):
        ex = entanglement.appendix_e_example((2, 2, 2), seed)
        worst_cc = max(worst_cc, ex.max_metric_cc)
        worst_c1k = max(worst_c1k, ex.max_c1k)
        min_delta = min(min_delta, ex.delta_rho_ab_norm)
    ok = worst_cc <= 1e-10 and worst_c1k <= 1e-10 and min_delta > 1e-9
    return _result("appendix_example", ok,
                   f"max metric cc {worst_cc:.3e}, max drift {worst_c1k:.3e}, "
                   f"min entanglement {min_delta:.3e}")


def check_thermal_gamma0() -> CheckResult:
    n, dims = 4, (2,) * 4
    m0 = model.build_quasi_hermitian(model.TfimParams(n=n, gamma=0.0))
    o_a = model.site_operator(PAULI_Z, 0, dims)
    o_b = model.site_operator(PAULI_Z, 3, dims)
    worst = 0.0
    for t, tp in ((0.5, 0.1), (1.0, 0.4)):
        worst = max(worst, correlators.thermal_invariance_residual(m0, 1.0, "a",
                                                                   o_a, o_b, t, tp))
    return _result("thermal_gamma0", worst <= 1e-9, f"max residual {worst:.3e}")


FAST_CHECKS = (
    check_pseudo_hermiticity,
    check_dyson_decomposition,
    check_s_norm,
    check_locality_conjugation,
    check_equal_time_equivalence,
    check_hermitian_degeneration,
    check_delta_rho_identity,
    check_mi_bound,
    check_ghz_cc,
    check_propagator_properties,
    check_povm,
    check_partitions,
    check_metric_identities,
    check_appendix_example,
    check_thermal_gamma0,
)


# ---------------------------------------------------------------------------
# full level: figure reproduction plus morphology checks

def figure_grids(out_dir: str, workers: int = 1, n: int = 11, steps: int = 51,
                 commutator_n: int | None = None) -> dict[str, dict[float, "object"]]:
    """Run all six pinned figure configs (optionally at reduced geometry),
    writing CSVs under out_dir; returns grids keyed by figure and gamma.

    The commutator figures need an operator norm per grid cell, which is far
    more expensive than the correlator scans, so they get their own (smaller)
    chain length; both lengths stay within the full level's n <= 11 contract.
    """
    import os

    from .config import REPRODUCE_CONFIGS, parse_config
    from .lightcone import scan_cc, scan_commutator, scan_mi, write_grid_csv
    from .model import TfimParams, build_quasi_hermitian
    from .states import make_state, minus_sum_sx

    grids: dict[str, dict[float, object]] = {}
    model_cache: dict[tuple[int, float], object] = {}
    for name, raw in REPRODUCE_CONFIGS.items():
        cfg = parse_config(raw)
        scan = cfg.scan
        n_fig = min(commutator_n or n, n) if scan.kind == "commutator" else n
        sites_b = tuple(range(min(scan.b_start, n_fig - 1), min(scan.b_stop, n_fig)))
        times = tuple(float(t) for t in np.linspace(scan.t_start, scan.t_stop, steps))
        hprime = minus_sum_sx(n_fig) if cfg.state.kind == "gibbs" else None
        state = make_state(cfg.state.kind, (2,) * n_fig, beta=cfg.state.beta,
                           hprime=hprime, seed=cfg.state.seed)
        grids[name] = {}
        for gamma in cfg.model.gamma:
            key = (n_fig, gamma)
            if key not in model_cache:
                model_cache[key] = build_quasi_hermitian(
                    TfimParams(n=n_fig, J=cfg.model.J, g=cfg.model.g, h=cfg.model.h,
                               gamma=gamma))
            mdl = model_cache[key]
            if scan.kind == "cc":
                grid = scan_cc(mdl, state, scan.correlator, scan.site_a, sites_b,
                               times, aggregate=scan.aggregate, workers=workers)
            elif scan.kind == "mi":
                grid = scan_mi(mdl, state, scan.site_a, sites_b, times, workers=workers)
            else:
                grid = scan_commutator(mdl, min(scan.site_a, n_fig - 1), sites_b, times,
                                       normalize=scan.normalize, picture=scan.picture,
                                       workers=workers)
            grids[name][gamma] = grid
            write_grid_csv(grid, os.path.join(out_dir, f"{name}_gamma{gamma:g}.csv"))
    return grids


def _monotone_front(front: np.ndarray, sites, site_a: int) -> bool:
    order = np.argsort([abs(s - site_a) for s in sites], kind="stable")
    seq = np.where(np.isnan(front[order]), np.inf, front[order])
    # pairwise comparison keeps an uncrossed (inf) tail monotone
    return all(b >= a - 1e-12 for a, b in zip(seq, seq[1:]))


def morphology_checks(grids: dict, site_a_cc: int = 0, threshold: float = 1e-2) -> list[CheckResult]:
    from .lightcone import extract_front

    results = []
    fig1, fig3 = grids["fig1"], grids["fig3"]
    trad0, metric0 = fig1[0.0], fig3[0.0]
    gap = float(np.max(np.abs(trad0.values - metric0.values)))
    front0 = extract_front(trad0, threshold)
    results.append(_result("fig13_gamma0_agreement",
                           gap <= 1e-10 and _monotone_front(front0, trad0.sites, site_a_cc),
                           f"cellwise gap {gap:.3e}"))
    far = max(trad0.sites, key=lambda s: abs(s - site_a_cc))
    ti = int(np.argmin(np.abs(np.asarray(trad0.times) - 0.1)))
    xi = trad0.sites.index(far)
    v0, v9 = trad0.values[ti, xi], fig1[0.9].values[ti, xi]
    results.append(_result("fig1_breakdown", v9 >= 10.0 * v0,
                           f"far-site early value {v9:.3e} vs {v0:.3e} at gamma=0"))
    front9 = extract_front(fig3[0.9], threshold)
    results.append(_result("fig3_metric_front",
                           _monotone_front(front9, fig3[0.9].sites, site_a_cc),
                           "front-arrival monotone at gamma=0.9"))
    mi0, mi9 = grids["fig2"][0.0], grids["fig2"][0.9]
    t0_vals = [mi0.values[0, xi] for xi, s in enumerate(mi0.sites) if s != site_a_cc]
    far_cols = [xi for xi, s in enumerate(mi0.sites) if abs(s - site_a_cc) >= 2]
    drop = float(np.max(mi9.values[:, far_cols])) < float(np.max(mi0.values[:, far_cols]))
    results.append(_result("fig2_mi", max(t0_vals) <= 1e-10 and drop,
                           f"t=0 max {max(t0_vals):.3e}, far-distance drop={drop}"))
    d1_0, d1_6 = grids["d1"][0.0], grids["d1"][0.6]
    d2_6 = grids["d2"][0.6]
    in_range = float(np.max(d1_6.values)) <= 1.0 + 1e-10
    a_comm = d1_0.meta["site_a"]
    f1 = extract_front(d1_6, threshold)
    f2 = extract_front(d2_6, threshold)
    mono = (_monotone_front(f1, d1_6.sites, a_comm)
            and _monotone_front(f2, d2_6.sites, a_comm))
    results.append(_result("d1_d2_fronts", in_range and mono,
                           f"normalized max {float(np.max(d1_6.values)):.6f}, monotone={mono}"))
    return results


def run_checks(level: str = "fast", out_dir: str = "out/verify", workers: int = 1,
               figure_n: int = 11, figure_steps: int = 51,
               commutator_n: int = 8) -> list[CheckResult]:
    results = []
    for check in FAST_CHECKS:
        try:
            results.append(check())
        except NhcorrError as exc:  # a failed precondition is a failed check
            results.append(_result(check.__name__.removeprefix("check_"), False,
                                   f"{type(exc).__name__}: {exc}"))
    if level == "full":
        grids = figure_grids(out_dir, workers=workers, n=figure_n, steps=figure_steps,
                             commutator_n=commutator_n)
        results.extend(morphology_checks(grids))
    return results
