"""Operator Schmidt decompositions, the correlation part delta-rho and its
norm identity, mutual-information bounds, the Metric-CC decomposition of the
traditional CC, and the product-sigma construction where the Metric-CC
lightcone bound is trivially satisfied."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .correlators import DIVERGENCE_FLOOR
from .errors import MetricDivergence, NotFullRank, PositivityFailure
from .evolution import resolve_cache
from .model import verify_pseudo_hermitian
from .states import DensityState

SCHMIDT_RANK_TOL = 1e-12     # lambda_i counted when > tol * lambda_max
PRODUCT_SIGMA_TOL = 1e-9     # ||delta sigma_AB||_2 threshold for "product"


# ---------------------------------------------------------------------------
# bipartition plumbing

def _state_matrix(rho) -> tuple[np.ndarray, tuple[int, ...]]:
    if isinstance(rho, DensityState):
        return rho.matrix, rho.dims
    raise TypeError("expected a DensityState; raw matrices need explicit dims")


def bipartite_matrix(mat: np.ndarray, dims: Sequence[int], a_sites: Sequence[int],
                     b_sites: Sequence[int]) -> tuple[np.ndarray, int, int]:
    """Reduce onto A union B and reorder factors to (A..., B...).

    Returns the grouped matrix together with the A and B dimensions.
    """
    a = sorted(int(s) for s in a_sites)
    b = sorted(int(s) for s in b_sites)
    if not a or not b:
        raise ValueError("both parts of the bipartition must be nonempty")
    if set(a) & set(b):
        raise ValueError(f"bipartition overlaps: {a} vs {b}")
    dims = tuple(int(d) for d in dims)
    keep = sorted(a + b)
    if keep != list(range(len(dims))):
        mat = linalg.partial_trace(mat, dims, keep)
        dims = tuple(dims[i] for i in keep)
    pos = {s: i for i, s in enumerate(keep)}
    order = [pos[s] for s in a] + [pos[s] for s in b]
    if order != list(range(len(order))):
        mat = linalg.permute_subsystems(mat, dims, order)
    d_a = int(np.prod([dims[pos[s]] for s in a]))
    d_b = int(np.prod([dims[pos[s]] for s in b]))
    return mat, d_a, d_b


def _marginals(mat: np.ndarray, d_a: int, d_b: int) -> tuple[np.ndarray, np.ndarray]:
    m_a = linalg.partial_trace(mat, (d_a, d_b), [0])
    m_b = linalg.partial_trace(mat, (d_a, d_b), [1])
    return m_a, m_b


def _equal_time_cc(mat: np.ndarray, d_a: int, d_b: int, x_a: np.ndarray, y_b: np.ndarray) -> complex:
    """<X_A, Y_B>_c at t=0 on a (possibly non-Hermitian) weight matrix."""
    m_a, m_b = _marginals(mat, d_a, d_b)
    joint = complex(np.einsum("ij,ji->", mat, np.kron(x_a, y_b)))
    return joint - complex(np.einsum("ij,ji->", m_a, x_a)) * complex(np.einsum("ij,ji->", m_b, y_b))


# ---------------------------------------------------------------------------
# operator Schmidt decomposition

@dataclass
class SchmidtDecomposition:
    """m = sum_i lambda_i Gamma_A^i (x) Gamma_B^i with orthonormal factors
    (Tr[Gamma^i† Gamma^j] = delta_ij) and descending lambda >= 0."""

    lambdas: np.ndarray
    gamma_a: np.ndarray  # shape (r, d_a, d_a)
    gamma_b: np.ndarray  # shape (r, d_b, d_b)
    rank: int
    rank_tol: float
    reconstruction_error: float = field(default=0.0)

    def reconstruct(self) -> np.ndarray:
        d_a, d_b = self.gamma_a.shape[1], self.gamma_b.shape[1]
        out = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
        for lam, ga, gb in zip(self.lambdas, self.gamma_a, self.gamma_b):
            out += lam * np.kron(ga, gb)
        return out


def _reshuffle(mat: np.ndarray, d_a: int, d_b: int) -> np.ndarray:
    return mat.reshape(d_a, d_b, d_a, d_b).transpose(0, 2, 1, 3).reshape(d_a * d_a, d_b * d_b)


def schmidt_of_matrix(mat: np.ndarray, d_a: int, d_b: int,
                      rank_tol: float = SCHMIDT_RANK_TOL) -> SchmidtDecomposition:
    """Operator Schmidt decomposition via SVD of the reshuffled matrix."""
    r = _reshuffle(mat, d_a, d_b)
    u, s, vh = np.linalg.svd(r)
    k = min(r.shape)
    gamma_a = u[:, :k].T.reshape(k, d_a, d_a)
    gamma_b = vh[:k, :].reshape(k, d_b, d_b)
    rank = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    dec = SchmidtDecomposition(lambdas=s[:k], gamma_a=gamma_a, gamma_b=gamma_b,
                               rank=rank, rank_tol=rank_tol)
    dec.reconstruction_error = linalg.hs_norm(dec.reconstruct() - mat)
    return dec


def operator_schmidt(rho: DensityState, bipartition: tuple[Sequence[int], Sequence[int]],
                     rank_tol: float = SCHMIDT_RANK_TOL) -> SchmidtDecomposition:
    """Operator Schmidt decomposition of a state across a bipartition."""
    mat, dims = _state_matrix(rho)
    a_sites, b_sites = bipartition
    grouped, d_a, d_b = bipartite_matrix(mat, dims, a_sites, b_sites)
    return schmidt_of_matrix(grouped, d_a, d_b, rank_tol)


# ---------------------------------------------------------------------------
# delta-rho analysis

@dataclass
class DeltaRhoReport:
    """delta = m - m_A (x) m_B expanded in its own Schmidt basis.

    The expansion coefficients equal equal-time connected correlators of the
    (daggered) Schmidt factors, so ||delta||_2^2 = sum |C_i|^2 exactly.
    """

    delta_rho: np.ndarray
    cc_values: np.ndarray
    hs_norm: float
    schmidt: SchmidtDecomposition

    def __post_init__(self):
        gap = abs(self.hs_norm**2 - float(np.sum(np.abs(self.cc_values) ** 2)))
        if gap > 1e-10 * max(1.0, self.hs_norm**2):
            raise AssertionError(f"norm identity violated: gap {gap:.3e}")


def _delta_report(mat: np.ndarray, d_a: int, d_b: int, cc_weight: np.ndarray) -> DeltaRhoReport:
    """Shared delta analysis; ``cc_weight`` is the matrix the CCs are taken
    against (rho itself, or sigma for the metric variant)."""
    m_a, m_b = _marginals(mat, d_a, d_b)
    delta = mat - np.kron(m_a, m_b)
    dec = schmidt_of_matrix(delta, d_a, d_b)
    ccs = np.array([
        _equal_time_cc(cc_weight, d_a, d_b, ga.conj().T, gb.conj().T)
        for ga, gb in zip(dec.gamma_a, dec.gamma_b)
    ])
    return DeltaRhoReport(delta_rho=delta, cc_values=ccs,
                          hs_norm=linalg.hs_norm(delta), schmidt=dec)


def delta_rho_analysis(rho: DensityState,
                       bipartition: tuple[Sequence[int], Sequence[int]]) -> DeltaRhoReport:
    """Expand rho - rho_A (x) rho_B as a sum of traditional equal-time CCs."""
    mat, dims = _state_matrix(rho)
    grouped, d_a, d_b = bipartite_matrix(mat, dims, *bipartition)
    return _delta_report(grouped, d_a, d_b, grouped)


def delta_sigma_analysis(rho: DensityState, eta: np.ndarray,
                         bipartition: tuple[Sequence[int], Sequence[int]]) -> DeltaRhoReport:
    """Same machinery applied to sigma = rho eta / <eta>; the coefficients are
    then Metric CCs of the Schmidt factors. Requires a full-system bipartition
    (the metric weight cannot be reduced cleanly otherwise)."""
    mat, dims = _state_matrix(rho)
    a_sites, b_sites = bipartition
    if sorted(list(a_sites) + list(b_sites)) != list(range(len(dims))):
        raise ValueError("delta_sigma_analysis requires a full-system bipartition")
    eta = linalg.as_matrix(eta)
    ev = complex(np.einsum("ij,ji->", mat, eta))
    if abs(ev) <= DIVERGENCE_FLOOR:
        raise MetricDivergence(f"<eta> = {ev}")
    sigma = mat @ eta / ev
    grouped, d_a, d_b = bipartite_matrix(sigma, dims, a_sites, b_sites)
    return _delta_report(grouped, d_a, d_b, grouped)


# ---------------------------------------------------------------------------
# mutual information and its CC-derived bound

def mutual_information(rho: DensityState,
                       bipartition: tuple[Sequence[int], Sequence[int]]) -> float:
    """I(A;B) = H(A) + H(B) - H(AB), natural-log entropies."""
    mat, dims = _state_matrix(rho)
    grouped, d_a, d_b = bipartite_matrix(mat, dims, *bipartition)
    m_a, m_b = _marginals(grouped, d_a, d_b)
    return linalg.vn_entropy(m_a) + linalg.vn_entropy(m_b) - linalg.vn_entropy(grouped)


def mi_bound(rho: DensityState, bipartition: tuple[Sequence[int], Sequence[int]],
             floor: float = 1e-12) -> tuple[float, float]:
    """min_k ||log(k rho_AB)||_2 ||delta rho||_2 together with the optimal k.

    log k* = -mean(log eigenvalues) minimizes sum (log lambda_i + log k)^2.
    Requires the reduced state to be full rank.
    """
    mat, dims = _state_matrix(rho)
    grouped, d_a, d_b = bipartite_matrix(mat, dims, *bipartition)
    w = np.linalg.eigvalsh(linalg.hermitize(grouped))
    if np.min(w) <= floor:
        raise NotFullRank(f"minimum eigenvalue {np.min(w):.3e} <= floor {floor:.3e}")
    log_w = np.log(w)
    log_k = -float(np.mean(log_w))
    log_norm = float(np.sqrt(np.sum((log_w + log_k) ** 2)))
    report = _delta_report(grouped, d_a, d_b, grouped)
    return log_norm * report.hs_norm, float(np.exp(log_k))


# ---------------------------------------------------------------------------
# Metric-CC decomposition of the traditional CC (system bipartition)

def _metric_cc_equal_time(rho_mat: np.ndarray, eta_a: np.ndarray, eta_b: np.ndarray,
                          x_a: np.ndarray, y_b: np.ndarray) -> complex:
    """Equal-time Metric CC on a bipartite state with <eta> already = 1."""
    ev = lambda m: complex(np.einsum("ij,ji->", rho_mat, m))  # noqa: E731
    d_a, d_b = eta_a.shape[0], eta_b.shape[0]
    joint = ev(np.kron(eta_a @ x_a, eta_b @ y_b))
    one = ev(np.kron(eta_a @ x_a, eta_b))
    two = ev(np.kron(eta_a, eta_b @ y_b))
    return joint - one * two


def _normalize_eta_pair(rho_mat: np.ndarray, eta_a: np.ndarray, eta_b: np.ndarray):
    ev = complex(np.einsum("ij,ji->", rho_mat, np.kron(eta_a, eta_b)))
    if abs(ev) <= DIVERGENCE_FLOOR:
        raise MetricDivergence(f"<eta> = {ev}")
    return eta_a / ev, eta_b


def metric_cc_decomposition_check(rho: DensityState, eta_a: np.ndarray, eta_b: np.ndarray,
                                  o_a: np.ndarray, o_b: np.ndarray) -> float:
    """Residual of the four-term expansion of the traditional CC as a linear
    combination of Metric CCs across a full-system bipartition:

        <O_A,O_B>_c = <eA' O_A, eB' O_B>_ec + <O_A eB><eA O_B><eA',eB'>_ec
                      - <eA' O_A, eB'>_ec <O_B> - <O_A eB><eA><eA', eB' O_B>_ec

    with eX' = eta_X^{-1} and eta normalized so <eta> = 1.
    """
    mat, dims = _state_matrix(rho)
    eta_a = linalg.as_matrix(eta_a)
    eta_b = linalg.as_matrix(eta_b)
    d_a = eta_a.shape[0]
    d_b = eta_b.shape[0]
    if d_a * d_b != mat.shape[0]:
        raise ValueError("eta factors do not bipartition the state")
    eta_a, eta_b = _normalize_eta_pair(mat, eta_a, eta_b)
    inv_a = np.linalg.inv(eta_a)
    inv_b = np.linalg.inv(eta_b)
    o_a = linalg.as_matrix(o_a)
    o_b = linalg.as_matrix(o_b)
    ev = lambda m: complex(np.einsum("ij,ji->", mat, m))  # noqa: E731

    lhs = ev(np.kron(o_a, o_b)) - ev(np.kron(o_a, np.eye(d_b))) * ev(np.kron(np.eye(d_a), o_b))

    mcc = lambda x, y: _metric_cc_equal_time(mat, eta_a, eta_b, x, y)  # noqa: E731
    t1 = mcc(inv_a @ o_a, inv_b @ o_b)
    t2 = mcc(inv_a @ o_a, inv_b)
    t3 = mcc(inv_a, inv_b @ o_b)
    t4 = mcc(inv_a, inv_b)
    a = ev(np.kron(o_a, eta_b))
    b = ev(np.kron(eta_a, o_b))
    p = ev(np.kron(eta_a, np.eye(d_b)))
    ob = ev(np.kron(np.eye(d_a), o_b))
    rhs = t1 + a * b * t4 - t2 * ob - a * p * t3
    return abs(lhs - rhs)


def metric_inverse_identity_residual(rho: DensityState, eta_a: np.ndarray,
                                     eta_b: np.ndarray) -> float:
    """Residual of 1 - <eta_A><eta_B> = <eta_A^{-1}, eta_B^{-1}>_ec at <eta> = 1."""
    mat, _ = _state_matrix(rho)
    eta_a = linalg.as_matrix(eta_a)
    eta_b = linalg.as_matrix(eta_b)
    d_a, d_b = eta_a.shape[0], eta_b.shape[0]
    eta_a, eta_b = _normalize_eta_pair(mat, eta_a, eta_b)
    ev = lambda m: complex(np.einsum("ij,ji->", mat, m))  # noqa: E731
    t4 = _metric_cc_equal_time(mat, eta_a, eta_b, np.linalg.inv(eta_a), np.linalg.inv(eta_b))
    p = ev(np.kron(eta_a, np.eye(d_b)))
    q = ev(np.kron(np.eye(d_a), eta_b))
    return abs(1.0 - p * q - t4)


# ---------------------------------------------------------------------------
# product-sigma membership and the trivial-bound construction

def product_factor_residual(mat: np.ndarray, dims: Sequence[int],
                            groups: Sequence[Sequence[int]]) -> float:
    """Relative distance of an operator from a product over the given site
    groups, built by peeling off leading Schmidt factors group by group."""
    mat = linalg.as_matrix(mat)
    dims = tuple(int(d) for d in dims)
    scale = linalg.hs_norm(mat)
    if scale == 0:
        return 0.0
    groups = [sorted(int(s) for s in g) for g in groups]
    factors = []
    current = mat
    cur_sites = list(range(len(dims)))
    for g in groups[:-1]:
        a_idx = [cur_sites.index(s) for s in g]
        b_idx = [i for i, s in enumerate(cur_sites) if s not in g]
        cur_dims = tuple(dims[s] for s in cur_sites)
        grouped, d_a, d_b = bipartite_matrix(current, cur_dims, a_idx, b_idx)
        dec = schmidt_of_matrix(grouped, d_a, d_b)
        factors.append(dec.lambdas[0] * dec.gamma_a[0])
        current = dec.gamma_b[0]
        cur_sites = [cur_sites[i] for i in b_idx]
    factors.append(current)
    grouped_order = [s for g in groups for s in g]
    target = linalg.permute_subsystems(mat, dims, grouped_order)
    return linalg.hs_norm(target - linalg.kron_all(factors)) / scale


@dataclass
class MembershipReport:
    """Per-time product check of sigma_AB plus the metric-compatibility checks
    that make the Metric-CC lightcone bound trivially satisfied."""

    times: np.ndarray
    delta_sigma_norms: np.ndarray
    product_flags: np.ndarray
    pseudo_hermitian_residual: float
    eta_product_residual: float
    trivial: bool


def sigma_product_membership(rho: DensityState, eta: np.ndarray, h,
                             tripartition: tuple[Sequence[int], Sequence[int], Sequence[int]],
                             t_grid: Sequence[float],
                             product_tol: float = PRODUCT_SIGMA_TOL) -> MembershipReport:
    """For each t, check whether sigma(t)_AB = Tr_C[rho(t) eta] / <eta> is
    product across A|B, and whether (H, eta) is a pseudo-Hermitian pair with
    product eta; when everything holds the Metric CC between A and B vanishes
    identically and its lightcone bound restricts nothing."""
    mat, dims = _state_matrix(rho)
    eta = linalg.as_matrix(eta)
    a_sites, b_sites, c_sites = (list(x) for x in tripartition)
    if sorted(a_sites + b_sites + c_sites) != list(range(len(dims))):
        raise ValueError("tripartition must cover all sites")
    cache = resolve_cache(h)
    ph_res = verify_pseudo_hermitian(cache.h, eta)
    eta_res = product_factor_residual(eta, dims, (a_sites, b_sites, c_sites))

    times = np.asarray(list(t_grid), dtype=float)
    norms = np.zeros_like(times)
    flags = np.zeros(times.shape, dtype=bool)
    for i, t in enumerate(times):
        u = cache.u_matrix(float(t))
        evolved = u @ mat @ u.conj().T
        evolved /= np.trace(evolved).real
        weighted = evolved @ eta
        ev = complex(np.trace(weighted))
        if abs(ev) <= DIVERGENCE_FLOOR:
            raise MetricDivergence(f"<eta> = {ev} at t={t}")
        keep = sorted(a_sites + b_sites)
        sigma_ab = linalg.partial_trace(weighted / ev, dims, keep)
        sub_dims = tuple(np.asarray(dims)[keep])
        pos = {s: j for j, s in enumerate(keep)}
        grouped, d_a, d_b = bipartite_matrix(sigma_ab, sub_dims,
                                             [pos[s] for s in sorted(a_sites)],
                                             [pos[s] for s in sorted(b_sites)])
        m_a, m_b = _marginals(grouped, d_a, d_b)
        norms[i] = linalg.hs_norm(grouped - np.kron(m_a, m_b))
        flags[i] = norms[i] <= product_tol
    trivial = bool(np.all(flags)) and ph_res <= 1e-10 and eta_res <= 1e-10
    return MembershipReport(times=times, delta_sigma_norms=norms, product_flags=flags,
                            pseudo_hermitian_residual=ph_res,
                            eta_product_residual=eta_res, trivial=trivial)


# ---------------------------------------------------------------------------
# trivial-bound example: product sigma with entangled rho_AB

def hermitian_basis(d: int) -> list[np.ndarray]:
    """Orthonormal Hermitian basis of d x d operators (HS inner product);
    for d=2 this is {I, X, Y, Z}/sqrt(2)."""
    out = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for m in range(1, d):
        diag = np.zeros(d)
        diag[:m] = 1.0
        diag[m] = -m
        out.append(np.diag(diag.astype(complex)) / np.sqrt(m * (m + 1)))
    for j in range(d):
        for k in range(j + 1, d):
            x = np.zeros((d, d), dtype=complex)
            x[j, k] = x[k, j] = 1.0 / np.sqrt(2.0)
            out.append(x)
            y = np.zeros((d, d), dtype=complex)
            y[j, k] = -1.0j / np.sqrt(2.0)
            y[k, j] = 1.0j / np.sqrt(2.0)
            out.append(y)
    return out


def _gram_schmidt_hermitian(seed_ops: list[np.ndarray], d: int) -> list[np.ndarray]:
    """Orthonormalize Hermitian operators under the HS inner product, then
    complete to a full basis; inner products stay real so factors stay Hermitian."""
    basis: list[np.ndarray] = []
    for op in seed_ops + hermitian_basis(d):
        v = op.astype(complex)
        for b in basis:
            v = v - np.trace(b.conj().T @ v) * b
        nrm = linalg.hs_norm(v)
        if nrm > 1e-10:
            basis.append(v / nrm)
        if len(basis) == d * d:
            break
    return basis


@dataclass
class AppendixExample:
    """A tripartite (rho, eta, H_C) where sigma_AB stays product (all Metric
    CCs between A and B vanish) while rho_AB itself is entangled."""

    rho: DensityState
    eta: np.ndarray
    eta_c: np.ndarray
    h_c: np.ndarray
    basis_c: list[np.ndarray]
    epsilon: float
    min_eig: float
    max_metric_cc: float
    delta_rho_ab_norm: float
    max_c1k: float

    @property
    def dims(self) -> tuple[int, ...]:
        return self.rho.dims


def _bounded_random_state(rng: np.random.Generator, d: int) -> np.ndarray:
    """Full-rank state with spectrum in [0.5, 1.5]/d: a safe product background."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    hmat = linalg.hermitize(g)
    hmat -= np.trace(hmat) / d * np.eye(d)
    hmat /= linalg.operator_norm(hmat)
    return (np.eye(d) + 0.5 * hmat) / d


def _entangled_correction(rng: np.random.Generator, d_a: int, d_b: int) -> np.ndarray:
    """delta-rho of a random pure state: Hermitian, traceless, with vanishing
    partial traces on both sides."""
    psi = rng.standard_normal(d_a * d_b) + 1j * rng.standard_normal(d_a * d_b)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    m_a, m_b = _marginals(rho, d_a, d_b)
    return rho - np.kron(m_a, m_b)


def appendix_e_example(dims: tuple[int, int, int], seed: int,
                       epsilon: float | None = None,
                       n_corrections: int = 3,
                       o_c: np.ndarray | None = None) -> AppendixExample:
    """Construct the trivial-bound example on A|B|C.

    O_C > 0 (not proportional to I) seeds a Hermitian orthonormal basis of
    operators on C with Gamma_C^1 = O_C/||O_C||_2; eta_C = Gamma_C^1 picks out
    only the first block of rho, which is kept product, while entangled
    corrections live in the higher blocks (the Gamma_C^2 block carries the
    entanglement of rho_AB since the k>2 factors are traceless). H_C is
    Hermitian and commutes with eta_C, which makes every first-order drift
    coefficient of the eta-weighted block vanish.
    """
    d_a, d_b, d_c = (int(d) for d in dims)
    if d_c < 2:
        raise ValueError("need d_C >= 2")
    rng = np.random.default_rng(np.uint64(seed))

    if o_c is None:
        q, _ = np.linalg.qr(rng.standard_normal((d_c, d_c))
                            + 1j * rng.standard_normal((d_c, d_c)))
        eigs = 1.0 + rng.uniform(0.25, 1.25, size=d_c)
        o_c = linalg.hermitize((q * eigs) @ q.conj().T)
    else:
        o_c = linalg.as_matrix(o_c)
        eigs, q = np.linalg.eigh(linalg.hermitize(o_c))
        if np.min(eigs) <= 0:
            raise ValueError("O_C must be positive definite")
    basis_c = _gram_schmidt_hermitian([o_c, np.eye(d_c, dtype=complex)], d_c)
    eta_c = basis_c[0]

    rho_a = _bounded_random_state(rng, d_a)
    rho_b = _bounded_random_state(rng, d_b)
    background = np.kron(np.kron(rho_a, rho_b), eta_c)

    n_corr = min(n_corrections, len(basis_c) - 1)
    corrections = np.zeros_like(background)
    for k in range(1, 1 + n_corr):
        m_k = _entangled_correction(rng, d_a, d_b)
        corrections += np.kron(m_k, basis_c[k])

    grid = (epsilon,) if epsilon is not None else (1e-1, 1e-2, 1e-3)
    chosen = None
    min_eig = -np.inf
    for eps in grid:
        cand = background + eps * corrections
        cand = linalg.hermitize(cand / np.trace(cand).real)
        min_eig = float(np.min(np.linalg.eigvalsh(cand)))
        if min_eig >= -1e-12:
            chosen = (eps, cand)
            break
    if chosen is None:
        raise PositivityFailure(
            f"no epsilon in {grid} gives a positive state (min eig {min_eig:.3e})")
    eps, rho_mat = chosen
    rho = DensityState(rho_mat, (d_a, d_b, d_c))
    eta = np.kron(np.eye(d_a * d_b, dtype=complex), eta_c)

    # H_C: Hermitian, commuting with eta_C (same eigenbasis, fresh spectrum)
    h_c = linalg.hermitize((q * rng.standard_normal(d_c)) @ q.conj().T)

    # (i) all equal-time Metric CCs between A and B vanish
    weighted = linalg.partial_trace(rho_mat @ eta, (d_a, d_b, d_c), [0, 1])
    ev = complex(np.trace(weighted))
    sigma_ab = weighted / ev
    ccs = [abs(_equal_time_cc(sigma_ab, d_a, d_b, x, y))
           for x in hermitian_basis(d_a) for y in hermitian_basis(d_b)]
    # (ii) rho_AB is entangled
    rho_ab = linalg.partial_trace(rho_mat, (d_a, d_b, d_c), [0, 1])
    m_a, m_b = _marginals(rho_ab, d_a, d_b)
    delta_norm = linalg.hs_norm(rho_ab - np.kron(m_a, m_b))
    # (iii) the eta-weighted drift coefficients vanish, in both index orders
    c1k = []
    d_gamma_1 = h_c @ basis_c[0] - basis_c[0] @ h_c.conj().T
    for k in range(d_c * d_c):
        c1k.append(abs(np.trace(basis_c[k].conj().T @ d_gamma_1)))
        d_gamma_k = h_c @ basis_c[k] - basis_c[k] @ h_c.conj().T
        c1k.append(abs(np.trace(basis_c[0].conj().T @ d_gamma_k)))

    return AppendixExample(rho=rho, eta=eta, eta_c=eta_c, h_c=h_c, basis_c=basis_c,
                           epsilon=eps, min_eig=min_eig,
                           max_metric_cc=float(np.max(ccs)),
                           delta_rho_ab_norm=float(delta_norm),
                           max_c1k=float(np.max(c1k)))


# ---------------------------------------------------------------------------
# Lieb-Robinson constants

@dataclass(frozen=True)
class LrBoundParams:
    """Constants of the operator LR bound (c, v, xi) and of the exponential
    clustering of the initial state (c_tilde, chi)."""

    c: float
    v: float
    xi: float
    c_tilde: float
    chi: float

    def __post_init__(self):
        for name in ("c", "v", "xi", "c_tilde", "chi"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def chi_prime(self) -> float:
        return self.chi + 2.0 * self.xi

    def c_bar(self, size_a: int = 1, size_b: int = 1) -> float:
        return self.c_tilde + self.c * (size_a + size_b)
