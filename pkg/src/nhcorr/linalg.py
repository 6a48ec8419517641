"""Dense complex linear-algebra kernels shared by every other module.

All matrices are plain ``numpy.ndarray`` of complex128 in row-major order.
Subsystem structure is carried separately as a tuple of local dimensions
(``dims``), with site 0 the leftmost tensor factor.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import NotFullRank, NotHermitian, NotPositiveDefinite

HERMITICITY_RTOL = 1e-10  # relative to operator norm; survives exp roundtrips

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = {"x": PAULI_X, "y": PAULI_Y, "z": PAULI_Z}


def as_matrix(m) -> np.ndarray:
    """Coerce to a 2D complex ndarray, rejecting non-finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a.view(float))):
        raise ValueError("matrix contains non-finite entries")
    return a


def check_square(m: np.ndarray) -> int:
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m.shape[0]


def check_dims(dims: Sequence[int], dim: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"local dimensions must be >= 1, got {dims}")
    if int(np.prod(dims)) != dim:
        raise ValueError(f"prod(dims)={int(np.prod(dims))} does not match matrix dimension {dim}")
    return dims


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def hermitize(m: np.ndarray) -> np.ndarray:
    """Hermitian part (m + m†)/2."""
    return 0.5 * (m + m.conj().T)


def is_hermitian(m: np.ndarray, rtol: float = HERMITICITY_RTOL) -> bool:
    scale = operator_norm(m)
    if scale == 0.0:
        return True
    return operator_norm(m - m.conj().T) <= rtol * scale


def kron(a, b) -> np.ndarray:
    """Kronecker product; dimensions multiply."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not in ``keep``.

    The kept subsystems retain their original relative order, and the full
    trace is preserved: Tr[result] = Tr[m].
    """
    m = as_matrix(m)
    d = check_square(m)
    dims = check_dims(dims, d)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} subsystems")
    drop = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # move kept row/col axes to the front of their groups, then contract the rest
    row_order = keep + drop
    col_order = [n + i for i in row_order]
    t = t.transpose(row_order + col_order)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    dr = d // dk
    t = t.reshape(dk, dr, dk, dr)
    return np.einsum("arbr->ab", t)


def permute_subsystems(m, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator so factor ``order[j]`` moves to slot j."""
    m = as_matrix(m)
    d = check_square(m)
    dims = check_dims(dims, d)
    n = len(dims)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ValueError(f"order {order} is not a permutation of 0..{n - 1}")
    t = m.reshape(dims + dims)
    t = t.transpose(order + [n + i for i in order])
    return t.reshape(d, d)


def embed_operator(op, sites: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Embed an operator on ``sites`` (given in increasing order) into the full space."""
    op = as_matrix(op)
    dims = tuple(int(x) for x in dims)
    n = len(dims)
    sites = [int(s) for s in sites]
    if sites != sorted(set(sites)):
        raise ValueError(f"support sites must be strictly increasing, got {sites}")
    if any(s < 0 or s >= n for s in sites):
        raise ValueError(f"support {sites} out of range for {n} subsystems")
    d_s = int(np.prod([dims[s] for s in sites]))
    if op.shape != (d_s, d_s):
        raise ValueError(f"operator shape {op.shape} does not match support dims {d_s}")
    rest = [i for i in range(n) if i not in sites]
    d_r = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op, np.eye(d_r, dtype=complex))
    # full currently lives on sites-then-rest ordering; permute back
    current = sites + rest
    inverse = [current.index(i) for i in range(n)]
    cur_dims = [dims[i] for i in current]
    return permute_subsystems(full, cur_dims, inverse)


def matrix_exponential(m) -> np.ndarray:
    """exp(m) for square complex m.

    Hermitian inputs go through a spectral decomposition; everything else
    uses scaling-and-squaring Pade (scipy), which stays stable for the
    non-normal propagators near exceptional points.
    """
    m = as_matrix(m)
    check_square(m)
    if is_hermitian(m):
        w, v = np.linalg.eigh(hermitize(m))
        return (v * np.exp(w)) @ v.conj().T
    return sla.expm(m)


def svd(m) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD m = U diag(s) Vh with s descending and non-negative."""
    m = as_matrix(m)
    return np.linalg.svd(m)


def operator_norm(m) -> float:
    """Largest singular value."""
    m = as_matrix(m)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False)[0])


def hs_norm(m) -> float:
    """Hilbert-Schmidt (Frobenius) norm sqrt(sum |entries|^2)."""
    return float(np.linalg.norm(np.asarray(m)))


def norms(m) -> tuple[float, float]:
    """(operator norm, Hilbert-Schmidt norm)."""
    return operator_norm(m), hs_norm(m)


def hermitian_eigensystem(m, rtol: float = HERMITICITY_RTOL) -> tuple[np.ndarray, np.ndarray]:
    m = as_matrix(m)
    check_square(m)
    if not is_hermitian(m, rtol):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    return np.linalg.eigh(hermitize(m))


def hermitian_log(m, floor: float = 1e-12) -> np.ndarray:
    """Spectral logarithm of a Hermitian positive-definite matrix.

    Raises NotFullRank if any eigenvalue is at or below ``floor``.
    """
    w, v = hermitian_eigensystem(m)
    if np.min(w) <= floor:
        raise NotFullRank(f"minimum eigenvalue {np.min(w):.3e} <= floor {floor:.3e}")
    return (v * np.log(w)) @ v.conj().T


def psd_sqrt_and_inverse(m) -> tuple[np.ndarray, np.ndarray]:
    """(m^{1/2}, m^{-1/2}) for Hermitian positive definite m."""
    w, v = hermitian_eigensystem(m)
    if np.min(w) <= 0.0:
        raise NotPositiveDefinite(f"minimum eigenvalue {np.min(w):.3e} <= 0")
    sq = np.sqrt(w)
    return (v * sq) @ v.conj().T, (v / sq) @ v.conj().T


def vn_entropy(m, rtol: float = HERMITICITY_RTOL) -> float:
    """von Neumann entropy -Tr[m log m] in nats; zero eigenvalues contribute 0."""
    w, _ = hermitian_eigensystem(m, rtol)
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log(w)))
