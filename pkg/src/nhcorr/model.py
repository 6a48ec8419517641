"""Local Hamiltonians, the imaginary-transverse-field Ising chain, and its
quasi-Hermitian decomposition H = S H0 S^{-1}."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import PTBroken
from .linalg import PAULI_X, PAULI_Y, PAULI_Z


@dataclass(frozen=True)
class LocalTerm:
    """A coefficient times an operator supported on a few sites."""

    support: tuple[int, ...]
    operator: np.ndarray
    coefficient: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(int(s) for s in self.support))
        if list(self.support) != sorted(set(self.support)):
            raise ValueError(f"support must be strictly increasing, got {self.support}")
        object.__setattr__(self, "operator", linalg.as_matrix(self.operator))
        linalg.check_square(self.operator)


@dataclass(frozen=True)
class TfimParams:
    """Couplings of the open-boundary NH Ising chain.

    H = J sum_j sz_j sz_{j+1} + sum_j (g sx_j + h sz_j + i*gamma sy_j),
    with the ZZ sum over j = 0..n-2 (open chain).
    """

    n: int
    J: float = 0.95
    g: float = 1.0
    h: float = 0.5
    gamma: float = 0.0
    boundary: str = "open"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one site, got n={self.n}")
        if self.boundary != "open":
            raise ValueError("only open boundary conditions are supported")

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.n


@dataclass
class QuasiHermitianModel:
    """The tuple (H, H0, S, eta) for a quasi-Hermitian chain.

    S is the (Hermitian, positive, site-product) Dyson map with
    H = S H0 S^{-1} and eta = S^{-2}; beta_site is the per-site angle
    atanh(gamma/g). ``s_diag``/``eta_diag`` hold the diagonals of S and eta
    in the computational basis (both are diagonal for the Ising chain).
    """

    H: np.ndarray
    H0: np.ndarray
    S: np.ndarray
    eta: np.ndarray
    beta_site: float
    params: TfimParams
    s_diag: np.ndarray = field(repr=False, default=None)
    eta_diag: np.ndarray = field(repr=False, default=None)
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.params.dims

    def spectral_cache(self):
        """Eigendecomposition of H via the Dyson similarity, built lazily
        and reused across propagator times."""
        if "spectral" not in self._cache:
            from .evolution import SpectralCache

            self._cache["spectral"] = SpectralCache.from_quasi_hermitian(
                self.H, self.H0, self.s_diag
            )
        return self._cache["spectral"]


def site_distance(a_sites: Sequence[int], b_sites: Sequence[int]) -> int:
    """Minimum |i - j| over site pairs; the 1D open-chain distance."""
    return min(abs(int(i) - int(j)) for i in a_sites for j in b_sites)


def site_operator(op: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """Embed a single-site operator into the full chain."""
    return linalg.embed_operator(op, [site], dims)


def build_hamiltonian(terms: Sequence[LocalTerm], dims: Sequence[int]) -> np.ndarray:
    """Sum of embedded local terms on the chain described by ``dims``."""
    dims = tuple(int(d) for d in dims)
    d = int(np.prod(dims))
    h = np.zeros((d, d), dtype=complex)
    for term in terms:
        h += term.coefficient * linalg.embed_operator(term.operator, term.support, dims)
    return h


def tfim_terms(p: TfimParams, gamma: float | None = None, g: float | None = None) -> list[LocalTerm]:
    g = p.g if g is None else g
    gamma = p.gamma if gamma is None else gamma
    terms = []
    for j in range(p.n - 1):
        terms.append(LocalTerm((j, j + 1), np.kron(PAULI_Z, PAULI_Z), p.J))
    for j in range(p.n):
        site = g * PAULI_X + p.h * PAULI_Z + 1j * gamma * PAULI_Y
        terms.append(LocalTerm((j,), site, 1.0))
    return terms


def build_nh_tfim(p: TfimParams) -> np.ndarray:
    """Dense NH Ising Hamiltonian on the open chain."""
    return build_hamiltonian(tfim_terms(p), p.dims)


def build_quasi_hermitian(p: TfimParams) -> QuasiHermitianModel:
    """Construct (H, H0, S, eta) for the NH chain at gamma < g.

    S = prod_j exp((beta/2) sz_j) with beta = atanh(gamma/g); eta = S^{-2};
    H0 is the Hermitian chain with g0 = sqrt(g^2 - gamma^2). H0 is built
    from couplings directly (not by conjugating H) so the S H0 S^{-1}
    residual is an independent cross-check.
    """
    if p.gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {p.gamma}")
    if p.g <= 0:
        raise ValueError(f"g must be positive, got {p.g}")
    if p.gamma >= p.g:
        raise PTBroken(
            f"gamma={p.gamma} >= g={p.g}: metric is indefinite at/past the exceptional point"
        )
    beta = float(np.arctanh(p.gamma / p.g))
    g0 = float(np.sqrt(p.g**2 - p.gamma**2))
    h = build_nh_tfim(p)
    h0 = build_hamiltonian(tfim_terms(p, gamma=0.0, g=g0), p.dims)

    # S and eta are diagonal: products over sites of exp(+-beta/2) per sz value
    z_single = np.array([1.0, -1.0])
    z_total = np.zeros(2**p.n)
    for j in range(p.n):
        reps_before = 2**j
        reps_after = 2 ** (p.n - j - 1)
        z_total += np.repeat(np.tile(z_single, reps_before), reps_after)
    s_diag = np.exp(0.5 * beta * z_total)
    eta_diag = s_diag**-2
    return QuasiHermitianModel(
        H=h,
        H0=h0,
        S=np.diag(s_diag.astype(complex)),
        eta=np.diag(eta_diag.astype(complex)),
        beta_site=beta,
        params=p,
        s_diag=s_diag,
        eta_diag=eta_diag,
    )


def verify_pseudo_hermitian(h: np.ndarray, eta: np.ndarray) -> float:
    """Relative pseudo-Hermiticity residual ||H† eta - eta H||_2 / (||H||_2 ||eta||_2)."""
    h = linalg.as_matrix(h)
    eta = linalg.as_matrix(eta)
    linalg.check_square(h)
    if h.shape != eta.shape:
        raise ValueError(f"shape mismatch {h.shape} vs {eta.shape}")
    num = linalg.hs_norm(h.conj().T @ eta - eta @ h)
    den = linalg.hs_norm(h) * linalg.hs_norm(eta)
    return num / den if den > 0 else 0.0
