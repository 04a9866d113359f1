"""Sum-rate / MSE algebra and the WMMSE block coordinate descent loop.

Conventions: ``H`` is K x M with row k equal to ``h_k^T``; ``P`` is M x K
with column k serving UE k, so ``(H @ P)[k, i] = h_k^T p_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError, NumericError, SolverFailure
from .quantizer import QuantCodebook


@dataclass(frozen=True, eq=False)
class PrecodingMatrix:
    entries: np.ndarray
    constrained: bool = False
    codebook: Optional[QuantCodebook] = None

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", entries)
        if not np.all(np.isfinite(entries)):
            raise DomainError("precoder entries must be finite")
        if self.constrained:
            if self.codebook is None:
                raise ConfigurationError("a constrained precoder needs its codebook")
            if not self.codebook.contains(entries):
                raise DomainError("constrained precoder has entries outside the codebook")

    @property
    def power(self) -> float:
        return float(np.vdot(self.entries, self.entries).real)


@dataclass(frozen=True, eq=False)
class EffectiveWeights:
    D: np.ndarray
    d: np.ndarray


@dataclass
class PrecoderConfig:
    """Per-run settings shared by the WMMSE loop and the schemes."""

    q: float
    n0: float = 1.0
    iterations: int = 10
    codebook: Optional[QuantCodebook] = None
    sd_node_budget: Optional[int] = None
    lambda_tol: float = 1e-6
    power_tol: float = 1e-8
    early_stop: bool = False
    heuristic_passes: int = 1


@dataclass
class WmmseState:
    precoder: PrecodingMatrix
    gains: np.ndarray
    weights: np.ndarray
    objective_trace: list = field(default_factory=list)
    sum_rate_trace: list = field(default_factory=list)
    best_iteration: int = 0


def _entries(P) -> np.ndarray:
    return P.entries if isinstance(P, PrecodingMatrix) else np.asarray(P, dtype=complex)


# --- per-UE quantities (vectorized forms first) -------------------------------

def sinrs(H, P, n0) -> np.ndarray:
    G = np.abs(H @ _entries(P)) ** 2
    signal = np.diag(G).copy()
    return signal / (G.sum(axis=1) - signal + n0)


def sinr(H, P, n0, k) -> float:
    return float(sinrs(H, P, n0)[k])


def receiver_gains(H, P, n0) -> np.ndarray:
    HP = H @ _entries(P)
    return np.conj(np.diag(HP)) / ((np.abs(HP) ** 2).sum(axis=1) + n0)


def receiver_gain(H, P, n0, k) -> complex:
    return complex(receiver_gains(H, P, n0)[k])


def mses(H, P, beta, n0) -> np.ndarray:
    HP = H @ _entries(P)
    beta = np.asarray(beta)
    total = (np.abs(HP) ** 2).sum(axis=1) + n0
    return np.abs(beta) ** 2 * total - 2 * np.real(beta * np.diag(HP)) + 1


def mse(H, P, beta_k, n0, k) -> float:
    HP = H @ _entries(P)
    total = float(np.sum(np.abs(HP[k]) ** 2)) + n0
    return abs(beta_k) ** 2 * total - 2 * (beta_k * HP[k, k]).real + 1


def ue_weights(H, P, n0) -> np.ndarray:
    return 1.0 + sinrs(H, P, n0)


def ue_weight(H, P, n0, k) -> float:
    return float(ue_weights(H, P, n0)[k])


def sum_rate(H, P, n0) -> float:
    return float(np.sum(np.log2(1.0 + sinrs(H, P, n0))))


def scale_to_power(P, q) -> np.ndarray:
    """The precoder after the antenna-side scaling ``alpha = sqrt(q / tr(PP^H))``."""
    P = _entries(P)
    power = np.vdot(P, P).real
    if power <= 0:
        raise DomainError("cannot scale a zero precoder to positive power")
    return np.sqrt(q / power) * P


def scaled_sum_rate(H, P, n0, q) -> float:
    return sum_rate(H, scale_to_power(P, q), n0)


def wmmse_objective(H, P, beta, d, n0) -> float:
    """sum_k d_k e_k(P, beta_k) - log2(d_k)."""
    d = np.asarray(d, dtype=float)
    return float(np.sum(d * mses(H, P, beta, n0) - np.log2(d)))


def weighted_mse(H, P, beta, d, n0) -> float:
    """sum_k d_k e_k(P, beta_k), the precoder subproblem objective."""
    return float(np.sum(np.asarray(d, dtype=float) * mses(H, P, beta, n0)))


def effective_weights(beta, d) -> EffectiveWeights:
    d = np.asarray(d, dtype=float)
    return EffectiveWeights(np.diag(np.sqrt(d) * np.asarray(beta, dtype=complex)), d)


# --- precoder updates ----------------------------------------------------------

def wf_init(H, q, n0) -> PrecodingMatrix:
    """Wiener filter (regularized zero-forcing) precoder, unscaled."""
    K = H.shape[0]
    A = H @ H.conj().T + (K * n0 / q) * np.eye(K)
    return PrecodingMatrix(np.linalg.solve(A.T, H.conj()).T)


def _subproblem_system(H, beta, d):
    """Quadratic ``A`` and linear ``B`` terms: the objective is tr(P^H A P) - 2 Re tr(B^H P) + const."""
    beta = np.asarray(beta, dtype=complex)
    d = np.asarray(d, dtype=float)
    A = H.conj().T @ ((d * np.abs(beta) ** 2)[:, None] * H)
    B = H.conj().T * (d * np.conj(beta))[None, :]
    return 0.5 * (A + A.conj().T), B


def infinite_res_subproblem(H, beta, d, q, power_tol=1e-8, max_doublings=60) -> PrecodingMatrix:
    """Exact minimizer of the weighted MSE over ``C^{M x K}`` with ``tr(PP^H) <= q``.

    ``P(lam) = (A + lam I)^{-1} B``; ``lam`` is zero when that is feasible and
    otherwise found by bisection on the strictly decreasing power curve.
    """
    if np.any(np.asarray(d) <= 0):
        raise DomainError("UE weights must be positive")
    A, B = _subproblem_system(H, beta, d)
    s, U = np.linalg.eigh(A)
    s = np.clip(s, 0.0, None)
    C = U.conj().T @ B
    c2 = np.sum(np.abs(C) ** 2, axis=1)
    keep = s > 1e-12 * max(s.max(), np.finfo(float).tiny)

    def power(lam):
        if lam == 0:
            return float(np.sum(c2[keep] / s[keep] ** 2))
        return float(np.sum(c2 / (s + lam) ** 2))

    def build(lam):
        if lam == 0:
            inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
        else:
            inv = 1.0 / (s + lam)
        return U @ (inv[:, None] * C)

    if power(0.0) <= q:
        return PrecodingMatrix(build(0.0))

    lo, hi = 0.0, 1.0
    for _ in range(max_doublings):
        if power(hi) <= q:
            break
        lo, hi = hi, 2 * hi
    else:
        raise NumericError("no feasible multiplier after doubling the upper bracket")
    for _ in range(400):
        if q - power(hi) <= power_tol * q:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if power(mid) <= q:
            hi = mid
        else:
            lo = mid
    return PrecodingMatrix(build(hi))


Solver = Callable[[np.ndarray, np.ndarray, np.ndarray, float], PrecodingMatrix]


def run_wmmse(H, config: PrecoderConfig, subproblem_solver: Solver, N: Optional[int] = None,
              quantized: bool = False, init: Optional[PrecodingMatrix] = None) -> WmmseState:
    """Alternate receiver gains, UE weights and precoder for ``N`` iterations.

    The starting point is the Wiener filter scaled to power ``q`` (quantized
    first when ``quantized``). Trace entry ``n`` is recorded at iterate ``n``
    with its own optimal gains and weights, so entry 0 describes the start.
    For quantized runs the best-objective iterate is returned.
    """
    N = config.iterations if N is None else N
    if N < 1:
        raise ConfigurationError("need at least one iteration")
    q, n0 = config.q, config.n0
    if init is None:
        init = PrecodingMatrix(scale_to_power(wf_init(H, q, n0), q))
        if quantized:
            from .quantizer import quantize_matrix
            init = quantize_matrix(init.entries, config.codebook)

    P = init
    beta, d = receiver_gains(H, P, n0), ue_weights(H, P, n0)
    state = WmmseState(P, beta, d)
    best_obj = wmmse_objective(H, P, beta, d, n0)
    state.objective_trace.append(best_obj)
    state.sum_rate_trace.append(scaled_sum_rate(H, P, n0, q))

    for n in range(1, N + 1):
        try:
            P = subproblem_solver(H, beta, d, q)
        except Exception as exc:
            raise SolverFailure(n, exc) from exc
        beta, d = receiver_gains(H, P, n0), ue_weights(H, P, n0)
        obj = wmmse_objective(H, P, beta, d, n0)
        state.objective_trace.append(obj)
        state.sum_rate_trace.append(scaled_sum_rate(H, P, n0, q))
        if not quantized or obj < best_obj:
            state.precoder, state.gains, state.weights = P, beta, d
            state.best_iteration = n
            best_obj = obj
        if config.early_stop:
            prev = state.objective_trace[-2]
            if abs(prev - obj) <= 1e-6 * max(abs(prev), 1e-300):
                break
    return state
