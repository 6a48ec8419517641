"""Traditional, Schrodinger, and Metric connected correlators, equal and
unequal time, bipartite and n-partite."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg
from .errors import MetricDivergence, TooManyParts, VanishingTrajectory
from .evolution import SpectralCache, propagator, resolve_cache
from .states import DensityState

DIVERGENCE_FLOOR = 1e-12  # on |<eta>| and |<I(t)>|
MAX_PARTITION_ARITY = 6   # Bell(6) = 203; applications use n <= 4


def _rho(rho) -> np.ndarray:
    m = rho.matrix if isinstance(rho, DensityState) else rho
    return linalg.as_matrix(m)


def _ev(rho_mat: np.ndarray, x: np.ndarray) -> complex:
    return complex(np.einsum("ij,ji->", rho_mat, x))


def traditional_cc(rho, o1, o2, t: float, t_prime: float, h) -> complex:
    """<O1(t) O2(t')> - <O1(t)><O2(t')> with Heisenberg evolution U† O U."""
    rho_mat = _rho(rho)
    cache = resolve_cache(h)
    p1, p2 = cache.propagator(t), cache.propagator(t_prime)
    o1_t = p1.U_dag @ linalg.as_matrix(o1) @ p1.U
    o2_t = p2.U_dag @ linalg.as_matrix(o2) @ p2.U
    return _ev(rho_mat, o1_t @ o2_t) - _ev(rho_mat, o1_t) * _ev(rho_mat, o2_t)


def schrodinger_correlator(rho, o1, o2, t: float, t_prime: float, h) -> complex:
    """Disconnected Schrodinger correlator
    <U_t† O1 U_{t-t'} O2 U_{t'}> / <U_t† U_t>."""
    rho_mat = _rho(rho)
    cache = resolve_cache(h)
    pt = cache.propagator(t)
    num = _ev(rho_mat, pt.U_dag @ linalg.as_matrix(o1) @ cache.u_matrix(t - t_prime)
              @ linalg.as_matrix(o2) @ cache.u_matrix(t_prime))
    den = _ev(rho_mat, pt.U_dag @ pt.U)
    if abs(den) <= DIVERGENCE_FLOOR:
        raise VanishingTrajectory(f"<I(t)> = {den} at t={t}")
    return num / den


def schrodinger_cc(rho, o1, o2, t: float, t_prime: float, h) -> complex:
    """Connected Schrodinger correlator: the product contribution
    <O1(t), I(t')>_s <I(t), O2(t')>_s is subtracted explicitly, which is what
    restores vanishing on product states under product NH evolutions."""
    rho_mat = _rho(rho)
    cache = resolve_cache(h)
    pt, ptp = cache.propagator(t), cache.propagator(t_prime)
    o1_t = pt.U_dag @ linalg.as_matrix(o1) @ pt.U
    o2_tilde = ptp.U_inv @ linalg.as_matrix(o2) @ ptp.U
    i_t = pt.U_dag @ pt.U
    den = _ev(rho_mat, i_t)
    if abs(den) <= DIVERGENCE_FLOOR:
        raise VanishingTrajectory(f"<I(t)> = {den} at t={t}")
    return (_ev(rho_mat, o1_t @ o2_tilde) / den
            - _ev(rho_mat, o1_t) * _ev(rho_mat, i_t @ o2_tilde) / den**2)


@dataclass(frozen=True)
class SigmaState:
    """sigma = rho eta / Tr[rho eta]: the density operator representing the
    same ensemble in the metric-modified Hilbert space."""

    matrix: np.ndarray
    eta_expectation: complex


def sigma_state(rho, eta) -> SigmaState:
    rho_mat = _rho(rho)
    eta = linalg.as_matrix(eta)
    ev = _ev(rho_mat, eta)
    if abs(ev) <= DIVERGENCE_FLOOR:
        raise MetricDivergence(f"<eta> = {ev}")
    return SigmaState(matrix=rho_mat @ eta / ev, eta_expectation=ev)


def metric_cc(rho, eta, o1, o2, t: float, t_prime: float, h) -> complex:
    """<eta O1~(t) O2~(t')>/<eta> - <eta O1~(t)><eta O2~(t')>/<eta>^2 with the
    tilde evolution O~ = U^{-1} O U."""
    rho_mat = _rho(rho)
    eta = linalg.as_matrix(eta)
    ev = _ev(rho_mat, eta)
    if abs(ev) <= DIVERGENCE_FLOOR:
        raise MetricDivergence(f"<eta> = {ev}")
    cache = resolve_cache(h)
    pt, ptp = cache.propagator(t), cache.propagator(t_prime)
    o1_tilde = pt.U_inv @ linalg.as_matrix(o1) @ pt.U
    o2_tilde = ptp.U_inv @ linalg.as_matrix(o2) @ ptp.U
    rho_eta = rho_mat @ eta
    return (_ev(rho_eta, o1_tilde @ o2_tilde) / ev
            - _ev(rho_eta, o1_tilde) * _ev(rho_eta, o2_tilde) / ev**2)


def set_partitions(n: int) -> list[tuple[tuple[int, ...], ...]]:
    """All set partitions of {0,..,n-1}; blocks internally sorted, blocks
    ordered by least element, deterministic enumeration order."""
    if n > MAX_PARTITION_ARITY:
        raise TooManyParts(f"n={n} exceeds the partition arity cap {MAX_PARTITION_ARITY}")
    if n < 1:
        raise ValueError("n must be >= 1")
    out: list[tuple[tuple[int, ...], ...]] = []

    def expand(i: int, blocks: list[list[int]]):
        if i == n:
            out.append(tuple(tuple(b) for b in blocks))
            return
        for b in blocks:
            b.append(i)
            expand(i + 1, blocks)
            b.pop()
        blocks.append([i])
        expand(i + 1, blocks)
        blocks.pop()

    expand(0, [])
    return out


def partition_weight(n_blocks: int) -> int:
    """g(k) = (-1)^(k-1) (k-1)!: the cumulant coefficient of a k-block partition."""
    return (-1) ** (n_blocks - 1) * math.factorial(n_blocks - 1)


def npartite_cc(kind: str, rho, ops: Sequence[tuple[np.ndarray, float]], h,
                eta: np.ndarray | None = None) -> complex:
    """n-partite connected correlator as a sum over set partitions.

    ``ops`` is an ordered list of (full-dimension operator, time); operator 0
    plays the distinguished role in the Schrodinger form (it is the one whose
    evolution carries the adjoint propagator). Within each partition block
    operators multiply in ascending index order.
    """
    n = len(ops)
    if n < 2:
        raise ValueError("need at least two operators")
    if n > MAX_PARTITION_ARITY:
        raise TooManyParts(f"n={n} exceeds the partition arity cap {MAX_PARTITION_ARITY}")
    rho_mat = _rho(rho)
    cache = resolve_cache(h)
    props = {t: cache.propagator(t) for t in {float(t) for _, t in ops}}

    if kind == "traditional":
        evolved = [props[float(t)].U_dag @ linalg.as_matrix(o) @ props[float(t)].U for o, t in ops]

        def block_value(block):
            acc = rho_mat
            for i in block:
                acc = acc @ evolved[i]
            return complex(np.trace(acc))

        return sum(partition_weight(len(p)) * np.prod([block_value(b) for b in p])
                   for p in set_partitions(n))

    if kind == "schrodinger":
        p0 = props[float(ops[0][1])]
        heis0 = p0.U_dag @ linalg.as_matrix(ops[0][0]) @ p0.U
        ident0 = p0.U_dag @ p0.U
        tilde = [None] + [props[float(t)].U_inv @ linalg.as_matrix(o) @ props[float(t)].U
                          for o, t in ops[1:]]
        den = _ev(rho_mat, ident0)
        if abs(den) <= DIVERGENCE_FLOOR:
            raise VanishingTrajectory(f"<I(t1)> = {den}")

        def block_value(block):
            acc = rho_mat @ (heis0 if 0 in block else ident0)
            for i in block:
                if i != 0:
                    acc = acc @ tilde[i]
            return complex(np.trace(acc))

        return sum(partition_weight(len(p)) / den ** len(p)
                   * np.prod([block_value(b) for b in p])
                   for p in set_partitions(n))

    if kind == "metric":
        if eta is None:
            raise ValueError("metric kind requires eta")
        eta = linalg.as_matrix(eta)
        ev = _ev(rho_mat, eta)
        if abs(ev) <= DIVERGENCE_FLOOR:
            raise MetricDivergence(f"<eta> = {ev}")
        rho_eta = rho_mat @ eta
        tilde = [props[float(t)].U_inv @ linalg.as_matrix(o) @ props[float(t)].U for o, t in ops]

        def block_value(block):
            acc = rho_eta
            for i in block:
                acc = acc @ tilde[i]
            return complex(np.trace(acc))

        return sum(partition_weight(len(p)) / ev ** len(p)
                   * np.prod([block_value(b) for b in p])
                   for p in set_partitions(n))

    raise ValueError(f"unknown correlator kind {kind!r}")


@dataclass(frozen=True)
class CorrelatorSpec:
    """A fully specified correlator evaluation request."""

    kind: str  # traditional | schrodinger | metric
    ops: tuple[tuple[np.ndarray, float], ...]
    state: DensityState
    hamiltonian: object  # ndarray, SpectralCache, or QuasiHermitianModel
    eta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "metric" and self.eta is None:
            raise ValueError("metric correlator requires eta")
        for _, t in self.ops:
            if not np.isfinite(t):
                raise ValueError("operator times must be finite")

    def evaluate(self) -> complex:
        return npartite_cc(self.kind, self.state, self.ops, self.hamiltonian, eta=self.eta)


THERMAL_CANDIDATES = ("a", "b", "c")


def thermal_candidate(model, beta: float, candidate: str) -> np.ndarray:
    """The three candidate 'thermal state of H' matrices, trace-normalized:
    (a) exp(-beta H); (b) S^{-1} exp(-beta H0) S^{-1}; (c) eta exp(-beta H).
    Only (b)/(c) are Hermitian positive; (a) is kept as a formal weight."""
    if candidate == "a":
        m = _nh_exp(model, beta)
    elif candidate == "b":
        w, q = np.linalg.eigh(linalg.hermitize(model.H0))
        exp_h0 = (q * np.exp(-beta * w)) @ q.conj().T
        s_inv = np.diag((1.0 / model.s_diag).astype(complex))
        m = s_inv @ exp_h0 @ s_inv
    elif candidate == "c":
        m = model.eta @ _nh_exp(model, beta)
    else:
        raise ValueError(f"unknown thermal candidate {candidate!r}")
    return m / np.trace(m)


def _nh_exp(model, beta: float) -> np.ndarray:
    cache = model.spectral_cache()
    return cache.w @ (np.exp(-beta * cache.eigvals)[:, None] * cache.w_inv)


def thermal_invariance_residual(model, beta: float, candidate: str, o_a, o_b,
                                t: float, t_prime: float) -> float:
    """|<O_A(t) O_B~(t')>_s - <O_A(0) O_B~(t'-t)>_s| for the candidate
    thermal state: the residual of time-translation invariance of the
    Schrodinger correlator."""
    rho = thermal_candidate(model, beta, candidate)
    cache = model.spectral_cache()
    lhs = schrodinger_correlator(rho, o_a, o_b, t, t_prime, cache)
    rhs = schrodinger_correlator(rho, o_a, o_b, 0.0, t_prime - t, cache)
    return abs(lhs - rhs)
