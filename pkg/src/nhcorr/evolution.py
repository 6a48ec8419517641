"""Propagators, normalized state evolution, the three operator pictures,
and POVM success probabilities."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from . import linalg
from .errors import OperatorNormExceedsOne, VanishingTrajectory
from .states import DensityState

EIG_COND_LIMIT = 1e6       # above this, fall back to per-time Pade exponentials
TRAJECTORY_FLOOR = 1e-300  # underflow floor on Tr[U rho U†]
FD_STEP = 1e-5             # centered-difference step for decay-rate validation


class SpectralCache:
    """Eigendecomposition H = W diag(ev) W^{-1} reused across propagator times.

    ``from_quasi_hermitian`` builds W analytically from the Dyson map
    (W = S Q with Q the unitary eigenbasis of H0), which avoids a general
    eigensolve and keeps the eigenvalues exactly real.
    """

    def __init__(self, h: np.ndarray, eigvals: np.ndarray, w: np.ndarray, w_inv: np.ndarray):
        self.h = h
        self.eigvals = eigvals
        self.w = w
        self.w_inv = w_inv
        self._w_dag = None
        self._w_inv_dag = None

    @classmethod
    def from_hermitian(cls, h: np.ndarray) -> "SpectralCache":
        w, v = np.linalg.eigh(linalg.hermitize(h))
        cache = cls(h, w, v, v.conj().T)
        cache._w_dag = cache.w_inv
        cache._w_inv_dag = cache.w
        return cache

    @classmethod
    def from_quasi_hermitian(cls, h: np.ndarray, h0: np.ndarray, s_diag: np.ndarray) -> "SpectralCache":
        ev, q = np.linalg.eigh(linalg.hermitize(h0))
        s = np.asarray(s_diag, dtype=float)
        w = q * s[:, None]
        w_inv = q.conj().T * (1.0 / s)[None, :]
        return cls(h, ev, w, w_inv)

    @classmethod
    def from_general(cls, h: np.ndarray) -> "SpectralCache":
        ev, w = np.linalg.eig(h)
        sv = np.linalg.svd(w, compute_uv=False)
        cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
        if cond >= EIG_COND_LIMIT:
            raise np.linalg.LinAlgError(
                f"eigenvector condition number {cond:.2e} exceeds {EIG_COND_LIMIT:.0e}"
            )
        return cls(h, ev, w, np.linalg.inv(w))

    @property
    def w_dag(self) -> np.ndarray:
        if self._w_dag is None:
            self._w_dag = self.w.conj().T
        return self._w_dag

    @property
    def w_inv_dag(self) -> np.ndarray:
        if self._w_inv_dag is None:
            self._w_inv_dag = self.w_inv.conj().T
        return self._w_inv_dag

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.eigvals * t)

    @staticmethod
    def _scale(x: np.ndarray, p: np.ndarray) -> np.ndarray:
        return x * (p[:, None] if x.ndim == 2 else p)

    def apply(self, t: float, x: np.ndarray, mode: str = "u") -> np.ndarray:
        """Apply U_t (or a relative) to a vector or matrix without
        materializing the propagator.

        Modes: ``u`` = U_t, ``u_inv`` = U_t^{-1}, ``u_dag`` = U_t†,
        ``u_inv_dag`` = (U_t^{-1})†.
        """
        p = self.phases(t)
        if mode == "u":
            return self.w @ self._scale(self.w_inv @ x, p)
        if mode == "u_inv":
            return self.w @ self._scale(self.w_inv @ x, 1.0 / p)
        if mode == "u_dag":
            return self.w_inv_dag @ self._scale(self.w_dag @ x, p.conj())
        if mode == "u_inv_dag":
            return self.w_inv_dag @ self._scale(self.w_dag @ x, (1.0 / p).conj())
        raise ValueError(f"unknown mode {mode!r}")

    def u_matrix(self, t: float) -> np.ndarray:
        return self.w @ self._scale(self.w_inv, self.phases(t))

    def u_inv_matrix(self, t: float) -> np.ndarray:
        return self.w @ self._scale(self.w_inv, 1.0 / self.phases(t))

    def propagator(self, t: float) -> "Propagator":
        u = self.u_matrix(t)
        return Propagator(t=t, U=u, U_inv=self.u_inv_matrix(t), U_dag=u.conj().T,
                          source=self.h, spectral_cache=self)


@dataclass
class Propagator:
    """U_t together with its inverse and adjoint, plus the eigendecomposition
    used to build them (when one exists)."""

    t: float
    U: np.ndarray
    U_inv: np.ndarray
    U_dag: np.ndarray
    source: np.ndarray | None = field(default=None, repr=False)
    spectral_cache: SpectralCache | None = field(default=None, repr=False)


def build_cache(h) -> SpectralCache:
    """Diagonalize H, preferring the Hermitian path; raises LinAlgError when
    the eigenbasis is too ill-conditioned to be trusted."""
    if isinstance(h, SpectralCache):
        return h
    h = linalg.as_matrix(h)
    linalg.check_square(h)
    if linalg.is_hermitian(h):
        return SpectralCache.from_hermitian(h)
    return SpectralCache.from_general(h)


def resolve_cache(h) -> SpectralCache:
    """Accept an ndarray, a SpectralCache, or a QuasiHermitianModel."""
    if isinstance(h, SpectralCache):
        return h
    if hasattr(h, "spectral_cache"):
        return h.spectral_cache()
    return build_cache(h)


def propagator(h, t: float) -> Propagator:
    """U = exp(-iHt), U_inv = exp(+iHt), U_dag = U†.

    Uses a spectral decomposition when the eigenbasis is well conditioned,
    and scaling-and-squaring Pade exponentials otherwise.
    """
    if isinstance(h, SpectralCache):
        return h.propagator(t)
    if hasattr(h, "spectral_cache"):
        return h.spectral_cache().propagator(t)
    h = linalg.as_matrix(h)
    linalg.check_square(h)
    try:
        return build_cache(h).propagator(t)
    except np.linalg.LinAlgError:
        u = sla.expm(-1j * h * t)
        return Propagator(t=t, U=u, U_inv=sla.expm(1j * h * t), U_dag=u.conj().T, source=h)


def evolve_state(rho: DensityState, prop: Propagator) -> DensityState:
    """rho(t) = U rho U† / Tr[U rho U†] (manually trace-normalized)."""
    m = prop.U @ rho.matrix @ prop.U_dag
    tr = float(np.trace(m).real)
    if tr <= TRAJECTORY_FLOOR:
        raise VanishingTrajectory(f"trajectory norm {tr:.3e} at t={prop.t}")
    out = linalg.hermitize(m / tr)
    return DensityState(out, rho.dims)


def evolve_operator(o: np.ndarray, prop: Propagator, picture: str, s: np.ndarray | None = None) -> np.ndarray:
    """Evolve an operator in one of the three pictures.

    heisenberg: U† O U; tilde: U^{-1} O U; dyson: V† (S^{-1} O S) V with
    V = S^{-1} U S the unitary propagator of the Hermitian counterpart.
    """
    o = linalg.as_matrix(o)
    if picture == "heisenberg":
        return prop.U_dag @ o @ prop.U
    if picture == "tilde":
        return prop.U_inv @ o @ prop.U
    if picture == "dyson":
        if s is None:
            raise ValueError("dyson picture requires the Dyson map S")
        s = linalg.as_matrix(s)
        v = np.linalg.solve(s, prop.U @ s)
        o_hat = np.linalg.solve(s, o @ s)
        return v.conj().T @ o_hat @ v
    raise ValueError(f"unknown picture {picture!r}")


@dataclass(frozen=True)
class DampingPart:
    """Gamma = i(H - H†)/2, so that H = H0 - i Gamma with both Hermitian."""

    Gamma: np.ndarray

    def __post_init__(self):
        g = linalg.as_matrix(self.Gamma)
        if not linalg.is_hermitian(g):
            raise ValueError("Gamma must be Hermitian")
        object.__setattr__(self, "Gamma", linalg.hermitize(g))

    @classmethod
    def from_hamiltonian(cls, h: np.ndarray) -> "DampingPart":
        h = linalg.as_matrix(h)
        return cls(0.5j * (h - h.conj().T))


def povm_success(psi: np.ndarray, ops: Sequence[np.ndarray]) -> float:
    """Joint success probability ||O_k ... O_1 |psi>||^2 of applying the
    operators in order as POVM elements."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi must be normalized")
    v = psi
    for i, o in enumerate(ops):
        o = linalg.as_matrix(o)
        nrm = linalg.operator_norm(o)
        if nrm > 1.0 + 1e-10:
            raise OperatorNormExceedsOne(f"operator {i} has norm {nrm:.12f} > 1")
        v = o @ v
    return float(np.vdot(v, v).real)


def success_decay_rate(psi_t: np.ndarray, damping: DampingPart) -> float:
    """d/dt ||psi(t)||^2 = -2 <psi(t)| Gamma |psi(t)> under unnormalized
    evolution by H = H0 - i Gamma."""
    psi_t = np.asarray(psi_t, dtype=complex).ravel()
    return float(-2.0 * np.vdot(psi_t, damping.Gamma @ psi_t).real)
