"""The precoding schemes compared in the sum-rate experiments."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errors import ConfigurationError
from .ils import solve_quantized_subproblem
from .quantizer import quantize_matrix, quantize_real, second_nearest_real
from .wmmse import (PrecoderConfig, PrecodingMatrix, infinite_res_subproblem, receiver_gains,
                    run_wmmse, scale_to_power, ue_weights, wf_init)


class SchemeId(str, enum.Enum):
    INFINITE_RES = "infinite_res"
    UNAWARE = "unaware"
    PROPOSED_SD = "proposed_sd"
    HALF_AWARE = "half_aware"
    HEURISTIC = "heuristic"

    @classmethod
    def parse(cls, name):
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ConfigurationError(f"unknown scheme {name!r}; expected one of {valid}") from None


@dataclass(frozen=True, eq=False)
class GiOrdering:
    ue_order: np.ndarray
    gi_values: np.ndarray


def _continuous_solver(cfg: PrecoderConfig):
    return partial(infinite_res_subproblem, power_tol=cfg.power_tol)


def _quantized_solver(cfg: PrecoderConfig):
    if cfg.codebook is None:
        raise ConfigurationError("quantized schemes need a codebook")
    return partial(solve_quantized_subproblem, codebook=cfg.codebook,
                   node_budget=cfg.sd_node_budget, lambda_tol=cfg.lambda_tol)


def infinite_res_precoder(H, cfg: PrecoderConfig) -> PrecodingMatrix:
    return run_wmmse(H, cfg, _continuous_solver(cfg)).precoder


def unaware_precoder(H, cfg: PrecoderConfig, W=None) -> PrecodingMatrix:
    if W is None:
        W = infinite_res_precoder(H, cfg)
    return quantize_matrix(W.entries, cfg.codebook)


def proposed_sd_precoder(H, cfg: PrecoderConfig) -> PrecodingMatrix:
    return run_wmmse(H, cfg, _quantized_solver(cfg), quantized=True).precoder


def half_aware_precoder(H, cfg: PrecoderConfig) -> PrecodingMatrix:
    """Continuous updates for N-1 iterations, then one quantized update."""
    if cfg.iterations > 1:
        P = run_wmmse(H, cfg, _continuous_solver(cfg), N=cfg.iterations - 1).precoder
    else:
        P = PrecodingMatrix(scale_to_power(wf_init(H, cfg.q, cfg.n0), cfg.q))
    beta, d = receiver_gains(H, P, cfg.n0), ue_weights(H, P, cfg.n0)
    return _quantized_solver(cfg)(H, beta, d, cfg.q)


def gi_ordering(H, P, q) -> GiOrdering:
    """UEs sorted by the interference their (scaled) column leaks to the others."""
    G = np.abs(H @ scale_to_power(P, q)) ** 2
    gi = G.sum(axis=0) - np.diag(G)
    return GiOrdering(np.argsort(-gi, kind="stable"), gi)


def _rates_with_entry(H, HP, power, m, k, old, new_values, n0, q):
    """Scaled sum rate for each value in ``new_values`` placed at entry (m, k)."""
    delta = new_values - old
    HPc = np.repeat(HP[None], len(new_values), axis=0)
    HPc[:, :, k] += H[None, :, m] * delta[:, None]
    alpha2 = q / (power + np.abs(new_values) ** 2 - abs(old) ** 2)
    G = alpha2[:, None, None] * np.abs(HPc) ** 2
    signal = np.diagonal(G, axis1=1, axis2=2)
    interference = G.sum(axis=2) - signal
    return np.sum(np.log2(1 + signal / (interference + n0)), axis=1)


def heuristic_precoder(H, cfg: PrecoderConfig, W=None) -> PrecodingMatrix:
    """Refine Q(W) entry by entry over the four nearest codebook points of each w.

    UEs are visited in decreasing generated-interference order (computed once
    from Q(W)) and antennas in natural order. A candidate replaces the
    current entry only if it strictly raises the scaled sum rate.
    """
    cb = cfg.codebook
    if W is None:
        W = infinite_res_precoder(H, cfg)
    Wm = W.entries
    P = quantize_matrix(Wm, cb).entries.copy()
    re1, im1 = quantize_real(Wm.real, cb), quantize_real(Wm.imag, cb)
    re2, im2 = second_nearest_real(Wm.real, cb), second_nearest_real(Wm.imag, cb)
    order = gi_ordering(H, P, cfg.q)

    M = H.shape[1]
    HP = H @ P
    power = float(np.vdot(P, P).real)
    for _ in range(max(1, cfg.heuristic_passes)):
        changed = False
        for k in order.ue_order:
            for m in range(M):
                old = P[m, k]
                cands = np.array([old,
                                  re1[m, k] + 1j * im1[m, k], re1[m, k] + 1j * im2[m, k],
                                  re2[m, k] + 1j * im1[m, k], re2[m, k] + 1j * im2[m, k]])
                rates = _rates_with_entry(H, HP, power, m, k, old, cands, cfg.n0, cfg.q)
                j = int(np.argmax(rates))
                if j > 0 and rates[j] > rates[0]:
                    new = cands[j]
                    HP[:, k] += H[:, m] * (new - old)
                    power += abs(new) ** 2 - abs(old) ** 2
                    P[m, k] = new
                    changed = True
        if not changed:
            break
    return PrecodingMatrix(P, constrained=True, codebook=cb)


def run_scheme(scheme, H, cfg: PrecoderConfig, W=None) -> PrecodingMatrix:
    """Dispatch by :class:`SchemeId`; ``W`` reuses an infinite-resolution result."""
    scheme = SchemeId.parse(scheme) if not isinstance(scheme, SchemeId) else scheme
    if scheme is SchemeId.INFINITE_RES:
        return W if W is not None else infinite_res_precoder(H, cfg)
    if scheme is SchemeId.UNAWARE:
        return unaware_precoder(H, cfg, W)
    if scheme is SchemeId.PROPOSED_SD:
        return proposed_sd_precoder(H, cfg)
    if scheme is SchemeId.HALF_AWARE:
        return half_aware_precoder(H, cfg)
    return heuristic_precoder(H, cfg, W)
