"""Finite-alphabet integer least squares for the quantized precoder update.

For a fixed multiplier ``lam`` the power-penalized weighted MSE separates
into K problems ``min_p p^H V p - 2 Re(f^T p)`` with ``V = H^H D^H D H + lam I``.
Each is rewritten as ``||c - G p||^2`` over the codebook, real-expanded,
re-triangularized and solved exactly by Schnorr-Euchner enumeration.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.linalg import solve_triangular

from .errors import BudgetExceeded, ConfigurationError, NumericError
from .quantizer import QuantCodebook
from .wmmse import EffectiveWeights, PrecodingMatrix, effective_weights

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IlsInstance:
    G: np.ndarray  # upper triangular, positive diagonal
    c: np.ndarray
    alphabet: np.ndarray

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or np.any(np.tril(G, -1) != 0):
            raise ConfigurationError("G must be square upper-triangular")
        if np.any(np.diag(G) <= 0):
            raise ConfigurationError("G must have a strictly positive diagonal")
        if np.any(np.diff(self.alphabet) <= 0):
            raise ConfigurationError("alphabet must be strictly increasing")

    @property
    def n(self) -> int:
        return self.G.shape[0]


@dataclass(frozen=True, eq=False)
class IlsSolution:
    point: np.ndarray
    residual: float
    nodes_visited: int


def ils_residual(G, c, point) -> float:
    r = np.asarray(c) - np.asarray(G) @ np.asarray(point)
    return float(np.dot(r, r))


@njit(cache=True, nogil=True)
def _zigzag(center, alphabet, out):
    """Fill ``out`` with alphabet indices ordered by distance to ``center``; ties go low."""
    L = alphabet.shape[0]
    i0 = 0
    best = abs(center - alphabet[0])
    for i in range(1, L):
        dist = abs(center - alphabet[i])
        if dist < best:
            best = dist
            i0 = i
    out[0] = i0
    lo = i0 - 1
    hi = i0 + 1
    for t in range(1, L):
        if lo < 0:
            out[t] = hi
            hi += 1
        elif hi >= L:
            out[t] = lo
            lo -= 1
        elif abs(center - alphabet[lo]) <= abs(center - alphabet[hi]):
            out[t] = lo
            lo -= 1
        else:
            out[t] = hi
            hi += 1


@njit(cache=True, nogil=True)
def _se_enumerate(G, c, alphabet, budget):
    n = G.shape[0]
    L = alphabet.shape[0]
    order = np.empty((n, L), np.int64)
    pos = np.zeros(n, np.int64)
    x = np.zeros(n, np.int64)
    best_x = np.zeros(n, np.int64)
    target = np.zeros(n)  # level value after removing decided upper levels
    partial = np.zeros(n + 1)
    best = np.inf
    nodes = 0
    exceeded = False

    k = n - 1
    target[k] = c[k]
    _zigzag(target[k] / G[k, k], alphabet, order[k])
    while True:
        if pos[k] < L:
            idx = order[k, pos[k]]
            r = target[k] - G[k, k] * alphabet[idx]
            dist = partial[k + 1] + r * r
            nodes += 1
            if dist < best:
                x[k] = idx
                if k == 0:
                    best = dist
                    best_x[:] = x
                    pos[k] = L  # remaining siblings are farther
                else:
                    partial[k] = dist
                    k -= 1
                    acc = c[k]
                    for j in range(k + 1, n):
                        acc -= G[k, j] * alphabet[x[j]]
                    target[k] = acc
                    _zigzag(acc / G[k, k], alphabet, order[k])
                    pos[k] = 0
                    continue
            else:
                pos[k] = L
            if budget > 0 and nodes >= budget and best < np.inf:
                exceeded = True
                break
            continue
        if k == n - 1:
            break
        k += 1
        pos[k] += 1
    return best_x, nodes, exceeded


def sesd_solve(instance: IlsInstance, node_budget: Optional[int] = None) -> IlsSolution:
    """Exact minimizer of ``||c - G p||^2`` over ``alphabet^n``.

    Depth-first from the last level with candidates in zig-zag order around
    each level's conditional center and an initially infinite radius, so the
    first leaf is the Babai point. Raises :class:`BudgetExceeded` carrying
    the incumbent if more than ``node_budget`` nodes are expanded.
    """
    G = np.ascontiguousarray(instance.G, dtype=float)
    c = np.ascontiguousarray(instance.c, dtype=float)
    alphabet = np.ascontiguousarray(instance.alphabet, dtype=float)
    budget = 0 if node_budget is None else int(node_budget)
    idx, nodes, exceeded = _se_enumerate(G, c, alphabet, budget)
    point = alphabet[idx]
    sol = IlsSolution(point, ils_residual(G, c, point), int(nodes))
    if exceeded:
        raise BudgetExceeded(f"sphere decoder stopped after {nodes} nodes", best=sol)
    return sol


# --- per-UE instances ------------------------------------------------------------

def _as_D(D):
    return D.D if isinstance(D, EffectiveWeights) else np.asarray(D, dtype=complex)


def _quadratic_form(H, D, lam):
    DH = _as_D(D) @ H
    V = DH.conj().T @ DH
    V = 0.5 * (V + V.conj().T)
    return V + lam * np.eye(H.shape[1]), DH


def _real_instances(H, D, d, lam, alphabet):
    """All K real-expanded instances for one multiplier (they share ``G``)."""
    V, DH = _quadratic_form(H, D, lam)
    M = H.shape[1]
    if lam == 0 and np.linalg.matrix_rank(DH) < M:
        raise NumericError("quadratic form is singular at lam = 0; use lam > 0")
    try:
        Lc = np.linalg.cholesky(V)
    except np.linalg.LinAlgError as exc:
        raise NumericError("quadratic form is not positive definite; use lam > 0") from exc
    Gc = Lc.conj().T
    F = np.sqrt(np.asarray(d, dtype=float))[:, None] * DH  # row i is f_i^T
    Cc = solve_triangular(Lc, F.conj().T, lower=True)  # column i is c_i
    Gr = np.block([[Gc.real, -Gc.imag], [Gc.imag, Gc.real]])
    Q, R = np.linalg.qr(Gr)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    R = s[:, None] * R
    R = np.triu(R)
    Yr = s[:, None] * (Q.T @ np.vstack([Cc.real, Cc.imag]))
    return [IlsInstance(R, Yr[:, i].copy(), alphabet) for i in range(H.shape[0])], Cc


def build_per_ue_instance(H, D, d, lam, ue_index, codebook: QuantCodebook) -> IlsInstance:
    instances, _ = _real_instances(H, D, d, lam, codebook.labels)
    return instances[ue_index]


def per_ue_term(H, D, d, lam, p, ue_index) -> float:
    """``p^H V p - f_i^T p - (f_i^T p)^H`` evaluated directly."""
    V, DH = _quadratic_form(H, D, lam)
    f = np.sqrt(float(d[ue_index])) * DH[ue_index]
    lin = f @ p
    return float((p.conj() @ V @ p).real - 2 * lin.real)


def to_complex(point, M) -> np.ndarray:
    return point[:M] + 1j * point[M:]


def solve_for_multiplier(H, beta, d, lam, codebook: QuantCodebook, node_budget=None):
    """Assemble ``P(lam)`` column by column; returns (entries, budget hits)."""
    D = effective_weights(beta, d)
    instances, _ = _real_instances(H, D, d, lam, codebook.labels)
    M = H.shape[1]
    P = np.empty((M, len(instances)), dtype=complex)
    hits = 0
    for i, inst in enumerate(instances):
        try:
            sol = sesd_solve(inst, node_budget)
        except BudgetExceeded as exc:
            sol = exc.best
            hits += 1
        P[:, i] = to_complex(sol.point, M)
    return P, hits


def _power(P) -> float:
    return float(np.vdot(P, P).real)


def solve_quantized_subproblem(H, beta, d, q, codebook: QuantCodebook, node_budget=None,
                               lambda_tol=1e-6, max_bisections=50, max_doublings=60,
                               return_info=False):
    """Codebook-constrained precoder update with a bisection over the multiplier.

    Returns the highest-power feasible ``P(lam)`` found. ``P(lam)`` is
    piecewise constant, so exact power equality is not sought.
    """
    if q <= 0:
        raise ConfigurationError("q must be positive")
    D = effective_weights(beta, d)
    M = H.shape[1]
    V0, _ = _quadratic_form(H, D, 0.0)
    trace = float(np.trace(V0).real)
    lam_min = 1e-8 * trace / M if trace > 0 else 1e-8
    info = {"lambda": None, "evaluations": 0, "budget_hits": 0}

    def evaluate(lam):
        P, hits = solve_for_multiplier(H, beta, d, lam, codebook, node_budget)
        info["evaluations"] += 1
        info["budget_hits"] += hits
        return P

    try:
        lam_lo = 0.0
        P = evaluate(0.0)
    except NumericError:
        lam_lo = lam_min
        P = evaluate(lam_min)
    if _power(P) <= q:
        info["lambda"] = lam_lo
        return _finish(P, codebook, info, return_info)

    lam_hi = 1.0
    for _ in range(max_doublings):
        P_hi = evaluate(lam_hi)
        if _power(P_hi) <= q:
            break
        lam_lo, lam_hi = lam_hi, 2.0 * lam_hi
    else:
        raise ConfigurationError(
            "no multiplier satisfies the power budget; the codebook step is mis-scaled for q")

    best, best_lam = P_hi, lam_hi
    for _ in range(max_bisections):
        if lam_hi - lam_lo < lambda_tol * lam_hi:
            break
        mid = 0.5 * (lam_lo + lam_hi)
        P = evaluate(mid)
        if _power(P) <= q:
            lam_hi = mid
            if _power(P) > _power(best):
                best, best_lam = P, mid
        else:
            lam_lo = mid
    info["lambda"] = best_lam
    if info["budget_hits"]:
        log.debug("sphere decoder budget hit %d times", info["budget_hits"])
    return _finish(best, codebook, info, return_info)


def _finish(P, codebook, info, return_info):
    pm = PrecodingMatrix(P, constrained=True, codebook=codebook)
    return (pm, info) if return_info else pm
