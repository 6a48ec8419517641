"""Lightcone scan grids (site x time diagnostics), LR bound evaluators, and
the operator-restriction diagnostic."""

from __future__ import annotations

import concurrent.futures as cf
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .entanglement import LrBoundParams
from .errors import MetricDivergence, VanishingTrajectory
from .model import QuasiHermitianModel
from .states import DensityState

PAULI_LABELS = ("x", "y", "z")
OPNORM_EXACT_DIM = 512  # exact SVD up to here; deterministic power iteration above


# ---------------------------------------------------------------------------
# grid container and CSV schema

@dataclass
class ScanGrid:
    """Rectangular (site x time) array of real diagnostics plus provenance."""

    sites: tuple[int, ...]
    times: tuple[float, ...]
    values: np.ndarray  # shape (len(times), len(sites)); NaN marks a failed cell
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.times), len(self.sites)):
            raise ValueError(f"values shape {self.values.shape} does not match axes")

    def column(self, site: int) -> np.ndarray:
        return self.values[:, self.sites.index(site)]


def grid_to_csv(grid: ScanGrid) -> str:
    """Bit-exact CSV schema: header x,t,value; 17 significant digits; rows
    ordered by (t ascending, x ascending); missing cells emit nan."""
    t_order = np.argsort(grid.times, kind="stable")
    x_order = np.argsort(grid.sites, kind="stable")
    lines = ["x,t,value"]
    for ti in t_order:
        t = grid.times[ti]
        for xi in x_order:
            lines.append(f"{grid.sites[xi]},{t:.17g},{grid.values[ti, xi]:.17g}")
    return "\n".join(lines) + "\n"


def write_grid_csv(grid: ScanGrid, path: str) -> None:
    """Atomic write (temp file + rename) of the CSV schema."""
    data = grid_to_csv(grid)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def read_grid_csv(path: str) -> ScanGrid:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,t,value":
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    xs = sorted({int(r[0]) for r in rows})
    ts = sorted({float(r[1]) for r in rows})
    values = np.full((len(ts), len(xs)), np.nan)
    xi = {x: i for i, x in enumerate(xs)}
    ti = {t: i for i, t in enumerate(ts)}
    for x, t, v in rows:
        values[ti[float(t)], xi[int(x)]] = float(v)
    return ScanGrid(sites=tuple(xs), times=tuple(ts), values=values)


# ---------------------------------------------------------------------------
# fast single-site Pauli application

def apply_pauli(arr: np.ndarray, which: str, site: int, n: int) -> np.ndarray:
    """Left-multiply a state vector or a matrix of column vectors by a
    single-site Pauli without building the embedded operator."""
    lead, rest = 2**site, 2 ** (n - site - 1)
    a = arr.reshape(lead, 2, -1)
    out = np.empty_like(a)
    if which == "x":
        out[:, 0], out[:, 1] = a[:, 1], a[:, 0]
    elif which == "y":
        out[:, 0], out[:, 1] = -1j * a[:, 1], 1j * a[:, 0]
    elif which == "z":
        out[:, 0], out[:, 1] = a[:, 0], -a[:, 1]
    else:
        raise ValueError(f"unknown Pauli {which!r}")
    return out.reshape(arr.shape)


def apply_pauli_right(mat: np.ndarray, which: str, site: int, n: int) -> np.ndarray:
    """Right-multiply a matrix by a single-site Pauli (acts on column index)."""
    lead, rest = 2**site, 2 ** (n - site - 1)
    a = mat.reshape(mat.shape[0] * lead, 2, rest)
    out = np.empty_like(a)
    if which == "x":
        out[:, 0], out[:, 1] = a[:, 1], a[:, 0]
    elif which == "y":
        out[:, 0], out[:, 1] = 1j * a[:, 1], -1j * a[:, 0]
    elif which == "z":
        out[:, 0], out[:, 1] = a[:, 0], -a[:, 1]
    else:
        raise ValueError(f"unknown Pauli {which!r}")
    return out.reshape(mat.shape)


def _site_trace(mat: np.ndarray, which: str, site: int, n: int) -> complex:
    """Tr[mat . P_site] without embedding the Pauli."""
    return complex(np.trace(apply_pauli_right(mat, which, site, n)))


# ---------------------------------------------------------------------------
# operator norms at scan scale

def operator_norm_any(m: np.ndarray, rtol: float = 1e-9, max_sweeps: int = 200) -> float:
    """Operator norm: exact SVD for small matrices, deterministic block power
    iteration on M†M above OPNORM_EXACT_DIM (fixed start, fixed schedule)."""
    d = min(m.shape)
    if d <= OPNORM_EXACT_DIM:
        return linalg.operator_norm(m)
    rng = np.random.default_rng(0x5EED)  # fixed: results must not vary run to run
    x = rng.standard_normal((m.shape[1], 4)) + 1j * rng.standard_normal((m.shape[1], 4))
    x, _ = np.linalg.qr(x)
    est = 0.0
    hits = 0
    for _ in range(max_sweeps):
        y = m.conj().T @ (m @ x)
        x, r = np.linalg.qr(y)
        new = float(np.sqrt(np.max(np.abs(np.diag(r)))))
        if est > 0 and abs(new - est) <= rtol * new:
            hits += 1
            if hits >= 2:
                return new
        else:
            hits = 0
        est = new
    return est


# ---------------------------------------------------------------------------
# scan engine

def _run_rows(n_rows: int, task: Callable[[int], np.ndarray], workers: int) -> list[np.ndarray]:
    """Evaluate per-time rows, optionally on a thread pool. Each row is an
    independent pure computation, so the result is identical for any worker
    count; rows are assembled by index."""
    if workers <= 1:
        return [task(i) for i in range(n_rows)]
    out: list[np.ndarray | None] = [None] * n_rows
    with cf.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(task, i): i for i in range(n_rows)}
        for fut in cf.as_completed(futures):
            out[futures[fut]] = fut.result()
    return out  # type: ignore[return-value]


def _aggregate(block: np.ndarray, mode: str) -> np.ndarray:
    """Reduce |CC| over the Pauli-pair axis: block shape (n_pairs, n_sites)."""
    if mode == "mean_abs":
        return np.mean(np.abs(block), axis=0)
    if mode == "sum_abs":
        return np.sum(np.abs(block), axis=0)
    raise ValueError(f"unknown aggregate {mode!r}")


def scan_cc(model: QuasiHermitianModel, state: DensityState, kind: str, site_a: int,
            sites_b: Sequence[int], t_grid: Sequence[float], aggregate: str = "mean_abs",
            workers: int = 1) -> ScanGrid:
    """Grid of aggregated |CC(O_A(t), O_B(0))| over single-site Pauli pairs,
    with t' = 0. Cells that fail with a typed numerical error are recorded as
    NaN and logged in the grid metadata."""
    n = model.params.n
    if not (0 <= site_a < n) or any(not (0 <= b < n) for b in sites_b):
        raise ValueError("scan sites out of range")
    cache = model.spectral_cache()
    sites_b = tuple(int(b) for b in sites_b)
    times = tuple(float(t) for t in t_grid)
    errors: list[dict] = []

    if state.pure_vector is not None:
        psi = state.pure_vector
        cols = [apply_pauli(psi, pb, b, n) for b in sites_b for pb in PAULI_LABELS]
        base = np.column_stack([psi] + cols)
        eta_psi = model.eta_diag * psi if kind == "metric" else None
        w_b = None
        if kind == "metric":
            eta_ev = complex(np.vdot(psi, eta_psi))  # psi† eta psi, real for eta > 0
            if abs(eta_ev) <= 1e-12:
                raise MetricDivergence(f"<eta> = {eta_ev}")
            w_b = np.array([np.vdot(eta_psi, c) for c in cols])
        m_b = np.array([np.vdot(psi, c) for c in cols])

        def row(ti: int) -> np.ndarray:
            t = times[ti]
            pair_rows = []
            try:
                evolved = cache.apply(t, base, "u")
                phi, chi = evolved[:, 0], evolved[:, 1:]
                if kind == "metric":
                    zeta = cache.apply(t, eta_psi, "u_inv_dag")
                    for pa in PAULI_LABELS:
                        w_ab = zeta.conj() @ apply_pauli(chi, pa, site_a, n)
                        w_a = complex(np.vdot(zeta, apply_pauli(phi, pa, site_a, n)))
                        pair_rows.append(w_ab / eta_ev - w_a * w_b / eta_ev**2)
                else:
                    n_i = complex(np.vdot(phi, phi))
                    if kind == "schrodinger" and abs(n_i) <= 1e-12:
                        raise VanishingTrajectory(f"<I(t)> = {n_i} at t={t}")
                    s_ib = phi.conj() @ chi
                    for pa in PAULI_LABELS:
                        pa_chi = apply_pauli(chi, pa, site_a, n)
                        m_ab = phi.conj() @ pa_chi
                        m_a = complex(np.vdot(phi, apply_pauli(phi, pa, site_a, n)))
                        if kind == "traditional":
                            pair_rows.append(m_ab - m_a * m_b)
                        elif kind == "schrodinger":
                            pair_rows.append(m_ab / n_i - m_a * s_ib / n_i**2)
                        else:
                            raise ValueError(f"unknown correlator kind {kind!r}")
            except (VanishingTrajectory, MetricDivergence) as exc:
                errors.append({"t": t, "error": type(exc).__name__, "detail": str(exc)})
                return np.full(len(sites_b), np.nan)
            block = np.concatenate(pair_rows).reshape(len(PAULI_LABELS), len(sites_b),
                                                      len(PAULI_LABELS))
            block = block.transpose(0, 2, 1).reshape(-1, len(sites_b))
            return _aggregate(block, aggregate)

    else:
        rho = state.matrix
        rho_eta = rho @ model.eta if kind == "metric" else None
        if kind == "metric":
            eta_ev = complex(np.trace(rho_eta))
            if abs(eta_ev) <= 1e-12:
                raise MetricDivergence(f"<eta> = {eta_ev}")

        def row(ti: int) -> np.ndarray:
            t = times[ti]
            pair_rows = []
            try:
                u = cache.u_matrix(t)
                if kind == "traditional" or kind == "schrodinger":
                    u_dag = u.conj().T
                    i_t = u_dag @ u
                    den = complex(np.trace(rho @ i_t))
                    if kind == "schrodinger" and abs(den) <= 1e-12:
                        raise VanishingTrajectory(f"<I(t)> = {den} at t={t}")
                    rho_it = rho @ i_t
                    for pa in PAULI_LABELS:
                        a_t = u_dag @ apply_pauli(u, pa, site_a, n)
                        rho_a = rho @ a_t
                        m_a = complex(np.trace(rho_a))
                        cells = []
                        for b in sites_b:
                            for pb in PAULI_LABELS:
                                m_ab = _site_trace(rho_a, pb, b, n)
                                if kind == "traditional":
                                    m_bv = _site_trace(rho, pb, b, n)
                                    cells.append(m_ab - m_a * m_bv)
                                else:
                                    n3 = _site_trace(rho_it, pb, b, n)
                                    cells.append(m_ab / den - m_a * n3 / den**2)
                        pair_rows.append(np.array(cells))
                elif kind == "metric":
                    u_inv = cache.u_inv_matrix(t)
                    for pa in PAULI_LABELS:
                        a_t = u_inv @ apply_pauli(u, pa, site_a, n)
                        rea = rho_eta @ a_t
                        w_a = complex(np.trace(rea))
                        cells = []
                        for b in sites_b:
                            for pb in PAULI_LABELS:
                                w_ab = _site_trace(rea, pb, b, n)
                                w_bv = _site_trace(rho_eta, pb, b, n)
                                cells.append(w_ab / eta_ev - w_a * w_bv / eta_ev**2)
                        pair_rows.append(np.array(cells))
                else:
                    raise ValueError(f"unknown correlator kind {kind!r}")
            except (VanishingTrajectory, MetricDivergence) as exc:
                errors.append({"t": t, "error": type(exc).__name__, "detail": str(exc)})
                return np.full(len(sites_b), np.nan)
            block = np.stack([r.reshape(len(sites_b), len(PAULI_LABELS)).T for r in pair_rows])
            block = block.reshape(-1, len(sites_b))
            return _aggregate(block, aggregate)

    rows = _run_rows(len(times), row, workers)
    meta = {
        "scan": "cc", "correlator": kind, "aggregate": aggregate, "site_a": site_a,
        "model": {"n": n, "J": model.params.J, "g": model.params.g,
                  "h": model.params.h, "gamma": model.params.gamma},
        "operators": list(PAULI_LABELS), "t_prime": 0.0, "cell_errors": errors,
    }
    return ScanGrid(sites=sites_b, times=times, values=np.array(rows), meta=meta)


def scan_mi(model: QuasiHermitianModel, state: DensityState, site_a: int,
            sites_b: Sequence[int], t_grid: Sequence[float], workers: int = 1) -> ScanGrid:
    """Grid of I(A;B) on the trace-normalized evolved state; the B = A cell
    reports the single-site entropy H(A)."""
    n = model.params.n
    dims = model.dims
    cache = model.spectral_cache()
    sites_b = tuple(int(b) for b in sites_b)
    times = tuple(float(t) for t in t_grid)

    if state.pure_vector is not None:
        k_factor = state.pure_vector[:, None]
    else:
        w, v = np.linalg.eigh(linalg.hermitize(state.matrix))
        w = np.clip(w, 0.0, None)
        k_factor = v * np.sqrt(w)

    def entropy(mat: np.ndarray) -> float:
        ev = np.linalg.eigvalsh(linalg.hermitize(mat))
        ev = ev[ev > 1e-14]
        return float(-np.sum(ev * np.log(ev)))

    def row(ti: int) -> np.ndarray:
        t = times[ti]
        tt = cache.apply(t, k_factor, "u")
        norm = float(np.sum(np.abs(tt) ** 2))
        if norm <= 1e-300:
            raise VanishingTrajectory(f"trajectory norm {norm} at t={t}")
        tens = tt.reshape(dims + (-1,))
        out = np.zeros(len(sites_b))
        for xi, b in enumerate(sites_b):
            if b == site_a:
                t2 = np.moveaxis(tens, site_a, 0).reshape(2, -1)
                rho_a = (t2 @ t2.conj().T) / norm
                out[xi] = entropy(rho_a)
            else:
                t2 = np.moveaxis(tens, (site_a, b), (0, 1)).reshape(4, -1)
                rho_ab = (t2 @ t2.conj().T) / norm
                rho_a = linalg.partial_trace(rho_ab, (2, 2), [0])
                rho_b = linalg.partial_trace(rho_ab, (2, 2), [1])
                out[xi] = entropy(rho_a) + entropy(rho_b) - entropy(rho_ab)
        return out

    rows = _run_rows(len(times), row, workers)
    meta = {
        "scan": "mi", "site_a": site_a,
        "model": {"n": n, "J": model.params.J, "g": model.params.g,
                  "h": model.params.h, "gamma": model.params.gamma},
        "cell_errors": [],
    }
    return ScanGrid(sites=sites_b, times=times, values=np.array(rows), meta=meta)


def scan_commutator(model: QuasiHermitianModel, site_a: int, sites_b: Sequence[int],
                    t_grid: Sequence[float], normalize: bool = True,
                    picture: str = "tilde", workers: int = 1) -> ScanGrid:
    """Grid of (1/2)||[O_A(t), O_B]|| (operator norm) averaged over Pauli
    pairs, divided by ||O_A(t)|| when ``normalize`` is set. ``picture``
    selects the tilde evolution U^{-1} O U or the Heisenberg U† O U."""
    n = model.params.n
    cache = model.spectral_cache()
    sites_b = tuple(int(b) for b in sites_b)
    times = tuple(float(t) for t in t_grid)

    sandwiches = {}
    for pa in PAULI_LABELS:
        if picture == "tilde":
            sandwiches[pa] = cache.w_inv @ apply_pauli(cache.w, pa, site_a, n)
        elif picture == "heisenberg":
            sandwiches[pa] = cache.w_dag @ apply_pauli(cache.w_inv_dag, pa, site_a, n)
        else:
            raise ValueError(f"unknown picture {picture!r}")

    def row(ti: int) -> np.ndarray:
        t = times[ti]
        p = cache.phases(t)
        acc = np.zeros((len(PAULI_LABELS), len(sites_b)))
        for ai, pa in enumerate(PAULI_LABELS):
            core = sandwiches[pa] * p[None, :]
            if picture == "tilde":
                evolved = cache.w @ (core / p[:, None]) @ cache.w_inv
            else:
                evolved = cache.w_inv_dag @ (core * p.conj()[:, None]) @ cache.w_inv
            denom = operator_norm_any(evolved) if normalize else 1.0
            for xi, b in enumerate(sites_b):
                vals = []
                for pb in PAULI_LABELS:
                    comm = apply_pauli_right(evolved, pb, b, n) - apply_pauli(evolved, pb, b, n)
                    vals.append(0.5 * operator_norm_any(comm) / denom)
                acc[ai, xi] = np.mean(vals)
        return np.mean(acc, axis=0)

    rows = _run_rows(len(times), row, workers)
    meta = {
        "scan": "commutator", "site_a": site_a, "normalize": normalize, "picture": picture,
        "model": {"n": n, "J": model.params.J, "g": model.params.g,
                  "h": model.params.h, "gamma": model.params.gamma},
        "cell_errors": [],
    }
    return ScanGrid(sites=sites_b, times=times, values=np.array(rows), meta=meta)


# ---------------------------------------------------------------------------
# lightcone restriction

def restrict_to_lightcone(o_t: np.ndarray, site_a: int, radius: float,
                          dims: Sequence[int]) -> tuple[np.ndarray, float]:
    """Restriction of an evolved operator onto a lightcone of the given
    radius around A: Tr_S[O] (x) I_S / Tr[I_S] over the spacelike region S of
    sites at distance > radius, together with ||O - restriction|| (operator
    norm)."""
    o_t = linalg.as_matrix(o_t)
    dims = tuple(int(d) for d in dims)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    keep = [s for s in range(len(dims)) if abs(s - site_a) <= radius]
    d_space = int(np.prod([dims[s] for s in range(len(dims)) if s not in keep]))
    reduced = linalg.partial_trace(o_t, dims, keep) / d_space
    restricted = linalg.embed_operator(reduced, keep, dims)
    return restricted, operator_norm_any(o_t - restricted)


# ---------------------------------------------------------------------------
# closed-form bound evaluators

@dataclass(frozen=True)
class BoundGeometry:
    """Geometric inputs of the bound evaluators."""

    distance: float
    size_a: int = 1
    size_b: int = 1
    d_min: int = 2
    t: float = 0.0
    t_prime: float = 0.0


BOUND_KINDS = ("lr", "cc_lr", "cc_lr_unequal", "metric_cc_lr", "delta_rho_lr",
               "mi_lr", "commutator_d1", "entangling_time")


def eval_bounds(which: str, params: LrBoundParams, geometry: BoundGeometry,
                extras: dict | None = None) -> float:
    """Closed-form right-hand sides of the exponential bounds.

    ``extras`` supplies quantity-specific prefactors: operator norms
    (norm_a, norm_b, default 1), transformed-operator norms (hat_norm_a,
    hat_norm_b), Dyson-map norms (s_norm, s_inv_norm), the log-state norm
    for the mutual-information bound (log_norm), and the measured correlator
    magnitude for the entangling-time lower bound (cc_magnitude).
    """
    e = dict(extras or {})
    g = geometry
    l_dist, t, tp = g.distance, g.t, g.t_prime
    norm_a = e.get("norm_a", 1.0)
    norm_b = e.get("norm_b", 1.0)
    hat_a = e.get("hat_norm_a", 1.0)
    hat_b = e.get("hat_norm_b", 1.0)
    c_bar = params.c_bar(g.size_a, g.size_b)
    if which == "lr":
        n_min = min(g.size_a, g.size_b)
        return params.c * n_min * norm_a * norm_b * np.exp(-(l_dist - params.v * t) / params.xi)
    if which == "cc_lr":
        return c_bar * np.exp(-(l_dist - 2.0 * params.v * t) / params.chi_prime)
    if which == "cc_lr_unequal":
        return c_bar * np.exp(-(l_dist - params.v * (t + tp)) / params.chi_prime)
    if which == "metric_cc_lr":
        return c_bar * hat_a * hat_b * np.exp(-(l_dist - params.v * (t + tp)) / params.chi_prime)
    if which == "delta_rho_lr":
        return c_bar * g.d_min * np.exp(-(l_dist - 2.0 * params.v * t) / params.chi_prime)
    if which == "mi_lr":
        log_norm = e["log_norm"]
        return c_bar * log_norm * g.d_min * np.exp(-(l_dist - 2.0 * params.v * t) / params.chi_prime)
    if which == "commutator_d1":
        n_min = min(g.size_a, g.size_b)
        s_norm = e.get("s_norm", 1.0)
        s_inv_norm = e.get("s_inv_norm", 1.0)
        return (s_norm * s_inv_norm * hat_a * hat_b * params.c * n_min
                * np.exp(-(l_dist - params.v * t) / params.xi))
    if which == "entangling_time":
        cc = e["cc_magnitude"]
        if cc <= 0:
            raise ValueError("cc_magnitude must be positive")
        return (params.chi_prime / (2.0 * params.v) * np.log(cc / (c_bar * hat_a * hat_b))
                + l_dist / (2.0 * params.v))
    raise ValueError(f"unknown bound kind {which!r}")


def extract_front(grid: ScanGrid, threshold: float) -> np.ndarray:
    """Per-site first-crossing times: smallest t with value >= threshold,
    NaN when the column never crosses. NaN cells never cross."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    t_arr = np.asarray(grid.times)
    order = np.argsort(t_arr, kind="stable")
    out = np.full(len(grid.sites), np.nan)
    for xi in range(len(grid.sites)):
        col = grid.values[order, xi]
        hits = np.nonzero(~np.isnan(col) & (col >= threshold))[0]
        if hits.size:
            out[xi] = t_arr[order][hits[0]]
    return out
