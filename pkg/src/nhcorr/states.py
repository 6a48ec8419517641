"""Initial-state constructors: product |+>, GHZ, Gibbs, and seeded random states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import NotHermitian

# spectrum check is O(d^3); skip it above this size and trust the recipe
_SPECTRUM_CHECK_MAX_DIM = 512

RANDOM_FULL_RANK_MIX = 1e-3  # identity admixture guaranteeing bounded log(rho)


@dataclass(frozen=True)
class DensityState:
    """Trace-one positive matrix with its subsystem dimension list.

    ``pure_vector`` is set by constructors that build the state from a ket;
    it lets scans use vector algebra without re-diagonalizing.
    """

    matrix: np.ndarray
    dims: tuple[int, ...]
    pure_vector: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        d = linalg.check_square(m)
        dims = linalg.check_dims(self.dims, d)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        scale = max(linalg.hs_norm(m), 1e-300)
        if linalg.hs_norm(m - m.conj().T) > 1e-10 * scale * np.sqrt(d):
            raise NotHermitian("density matrix is not Hermitian within 1e-10")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace {tr} differs from 1 beyond 1e-10")
        if d <= _SPECTRUM_CHECK_MAX_DIM:
            if float(np.min(np.linalg.eigvalsh(linalg.hermitize(m)))) < -1e-10:
                raise ValueError("density matrix has an eigenvalue below -1e-10")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate_spectrum(self) -> float:
        """Explicit positivity check; returns the minimum eigenvalue."""
        return float(np.min(np.linalg.eigvalsh(linalg.hermitize(self.matrix))))


def from_vector(psi: np.ndarray, dims: Sequence[int]) -> DensityState:
    psi = np.asarray(psi, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("zero state vector")
    psi = psi / nrm
    return DensityState(np.outer(psi, psi.conj()), tuple(dims), pure_vector=psi)


def plus_product(n: int) -> DensityState:
    psi = np.full(2**n, 2 ** (-n / 2), dtype=complex)
    return from_vector(psi, (2,) * n)


def ghz(n: int) -> DensityState:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = psi[-1] = 1.0 / np.sqrt(2.0)
    return from_vector(psi, (2,) * n)


def gibbs(hprime: np.ndarray, beta: float, dims: Sequence[int]) -> DensityState:
    """exp(-beta H') / Tr[exp(-beta H')] for Hermitian H'."""
    hprime = linalg.as_matrix(hprime)
    if not linalg.is_hermitian(hprime):
        raise NotHermitian("Gibbs construction requires a Hermitian Hamiltonian")
    w, v = np.linalg.eigh(linalg.hermitize(hprime))
    ew = np.exp(-beta * (w - np.min(w)))  # shift cancels in normalization
    ew /= np.sum(ew)
    rho = (v * ew) @ v.conj().T
    return DensityState(linalg.hermitize(rho), tuple(dims))


def random_pure(seed: int, dims: Sequence[int]) -> DensityState:
    d = int(np.prod(tuple(dims)))
    rng = np.random.default_rng(np.uint64(seed))
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return from_vector(psi, tuple(dims))


def random_full_rank(seed: int, dims: Sequence[int]) -> DensityState:
    """(1-eps) * normalized G†G + eps * I/d; min eigenvalue >= eps/d by construction."""
    d = int(np.prod(tuple(dims)))
    rng = np.random.default_rng(np.uint64(seed))
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    w = g.conj().T @ g
    w = w / np.trace(w).real
    eps = RANDOM_FULL_RANK_MIX
    rho = (1.0 - eps) * w + eps * np.eye(d) / d
    return DensityState(linalg.hermitize(rho), tuple(dims))


def make_state(kind: str, dims: Sequence[int], *, beta: float | None = None,
               hprime: np.ndarray | None = None, seed: int | None = None) -> DensityState:
    """Dispatch on the state kinds used by the experiments."""
    dims = tuple(int(d) for d in dims)
    n = len(dims)
    if kind == "plus_product":
        if dims != (2,) * n:
            raise ValueError("plus_product is defined for qubit chains")
        return plus_product(n)
    if kind == "ghz":
        if dims != (2,) * n:
            raise ValueError("ghz is defined for qubit chains")
        return ghz(n)
    if kind == "gibbs":
        if beta is None or hprime is None:
            raise ValueError("gibbs requires beta and hprime")
        return gibbs(hprime, beta, dims)
    if kind == "random_pure":
        if seed is None:
            raise ValueError("random_pure requires a seed")
        return random_pure(seed, dims)
    if kind == "random_full_rank":
        if seed is None:
            raise ValueError("random_full_rank requires a seed")
        return random_full_rank(seed, dims)
    raise ValueError(f"unknown state kind {kind!r}")


def reduced_state(rho: DensityState, keep: Sequence[int]) -> DensityState:
    """Partial trace over the complement of ``keep`` (kept sites keep their order)."""
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValueError("keep must be nonempty")
    sub = linalg.partial_trace(rho.matrix, rho.dims, keep)
    sub_dims = tuple(rho.dims[k] for k in keep)
    tr = complex(np.trace(sub))
    return DensityState(linalg.hermitize(sub / tr), sub_dims)


def minus_sum_sx(n: int) -> np.ndarray:
    """The quench Hamiltonian -sum_j sx_j on n qubits."""
    from .model import site_operator

    dims = (2,) * n
    h = np.zeros((2**n, 2**n), dtype=complex)
    for j in range(n):
        h -= site_operator(linalg.PAULI_X, j, dims)
    return h
