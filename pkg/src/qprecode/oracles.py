"""Brute-force references used by the tests and ``qprecode selftest``.

None of these share code with the solvers they check beyond the data types.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.stats import norm

from .errors import BudgetExceeded, ConfigurationError
from .ils import IlsInstance, IlsSolution, ils_residual
from .quantizer import QuantCodebook
from .wmmse import PrecodingMatrix


@dataclass(frozen=True)
class OracleBudget:
    max_points: int = 1 << 20

    def __post_init__(self):
        if self.max_points <= 0:
            raise ConfigurationError("oracle budget must be positive")

    def check(self, count: int, what: str) -> None:
        if count > self.max_points:
            raise BudgetExceeded(f"{what}: {count} points exceed budget {self.max_points}")


def _dfs_key(G, c, alphabet, point):
    """Position of ``point`` in depth-first zig-zag visiting order."""
    n = len(c)
    key = []
    for k in range(n - 1, -1, -1):
        target = c[k] - sum(G[k, j] * point[j] for j in range(k + 1, n))
        center = target / G[k, k]
        ranking = sorted(range(len(alphabet)), key=lambda i: (abs(center - alphabet[i]), i))
        key.append(ranking.index(int(np.flatnonzero(alphabet == point[k])[0])))
    return tuple(key)


def exhaustive_ils(instance: IlsInstance, budget: OracleBudget = OracleBudget()) -> IlsSolution:
    """Global minimizer by full enumeration over ``alphabet^n``.

    Exact ties (to round-off) resolve to the point the depth-first zig-zag
    enumeration reaches first.
    """
    G, c, a = instance.G, instance.c, np.asarray(instance.alphabet, dtype=float)
    n, L = len(c), len(a)
    budget.check(L**n, "exhaustive ILS")
    grid = np.array(list(itertools.product(a, repeat=n)), dtype=float).reshape(-1, n)
    res = np.sum((c[None, :] - grid @ G.T) ** 2, axis=1)
    m = res.min()
    tied = np.flatnonzero(res <= m + 1e-12 * max(m, 1.0))
    if len(tied) > 1:
        pick = min(tied, key=lambda t: _dfs_key(G, c, a, grid[t]))
    else:
        pick = tied[0]
    point = grid[pick].copy()
    return IlsSolution(point, ils_residual(G, c, point), int(len(grid)))


def exhaustive_p3(H, beta, d, q, codebook: QuantCodebook, n0: float = 1.0,
                  budget: OracleBudget = OracleBudget(), return_objective=False):
    """Best codebook matrix for the weighted MSE under ``tr(PP^H) <= q``.

    Enumerates every column in ``P^M`` and every combination of columns.
    """
    K, M = H.shape
    A = codebook.alphabet
    budget.check(len(A) ** (M * K), "exhaustive P3")
    cols = np.array(list(itertools.product(A, repeat=M)), dtype=complex).reshape(-1, M)
    beta = np.asarray(beta, dtype=complex)
    d = np.asarray(d, dtype=float)
    G = np.abs(cols @ H.T) ** 2  # [option, k] = |h_k^T p|^2
    shared = G @ (d * np.abs(beta) ** 2)
    col_power = np.sum(np.abs(cols) ** 2, axis=1)
    per_col = [shared - 2 * d[i] * np.real(beta[i] * (cols @ H[i])) for i in range(K)]

    total = per_col[0]
    power = col_power
    for i in range(1, K):
        total = np.add.outer(total, per_col[i])
        power = np.add.outer(power, col_power)
    total = total.ravel() + float(np.sum(d * (np.abs(beta) ** 2 * n0 + 1)))
    power = power.ravel()
    feasible = power <= q * (1 + 1e-12)
    if not feasible.any():
        raise ConfigurationError("no codebook matrix satisfies the power budget")
    masked = np.where(feasible, total, np.inf)
    flat = int(np.argmin(masked))
    choice = np.unravel_index(flat, (len(cols),) * K)
    P = np.stack([cols[j] for j in choice], axis=1)
    pm = PrecodingMatrix(P, constrained=True, codebook=codebook)
    return (pm, float(masked[flat])) if return_objective else pm


def quantizer_distortion(codebook: QuantCodebook, variance: float) -> float:
    """E[(X - Q(X))^2] for X ~ Normal(0, variance) by adaptive quadrature per cell."""
    sigma = np.sqrt(variance)
    edges = np.concatenate(([-np.inf], codebook.thresholds, [np.inf]))
    total = 0.0
    for label, a, b in zip(codebook.labels, edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda x, l=label: (x - l) ** 2 * norm.pdf(x, scale=sigma),
                                a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        total += val
    return total


def grid_search_scalar(H, beta, d, q, n0=1.0, n_grid=801):
    """Best scalar precoder (M = K = 1) on a Cartesian grid over the power disk."""
    H = np.asarray(H, dtype=complex)
    if H.shape != (1, 1):
        raise ConfigurationError("grid search only handles M = K = 1")
    r = np.sqrt(q)
    x = np.linspace(-r, r, n_grid)
    p = (x[:, None] + 1j * x[None, :]).ravel()
    p = p[np.abs(p) ** 2 <= q]
    h, b, w = H[0, 0], complex(np.ravel(beta)[0]), float(np.ravel(d)[0])
    obj = w * (abs(b) ** 2 * (np.abs(h * p) ** 2 + n0) - 2 * np.real(b * h * p) + 1)
    i = int(np.argmin(obj))
    return p[i], float(obj[i])
