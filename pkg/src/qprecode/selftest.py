"""Quick oracle cross-checks run by ``qprecode selftest``."""

from __future__ import annotations

import time

import numpy as np

from .ils import IlsInstance, sesd_solve, solve_quantized_subproblem
from .oracles import exhaustive_ils, exhaustive_p3, quantizer_distortion
from .quantizer import build_codebook, codebook_for_power, gaussian_distortion, optimal_step_size
from .wmmse import receiver_gains, ue_weights, weighted_mse, wf_init, scale_to_power


def random_instance(rng, n, L):
    G = np.triu(rng.standard_normal((n, n)))
    G[np.diag_indices(n)] = np.abs(G[np.diag_indices(n)]) + 0.2
    alphabet = np.arange(L) - (L - 1) / 2.0
    c = G @ rng.uniform(-L / 2, L / 2, n) + 0.3 * rng.standard_normal(n)
    return IlsInstance(G, c, alphabet)


def check_sesd(rng, count=200):
    for _ in range(count):
        inst = random_instance(rng, int(rng.choice([2, 4, 6])), int(rng.choice([2, 4])))
        a, b = sesd_solve(inst), exhaustive_ils(inst)
        if a.residual != b.residual or not np.array_equal(a.point, b.point):
            return False, "sphere decoder disagrees with enumeration"
    return True, f"{count} instances match exhaustive enumeration"


def check_quantizer():
    for L in (2, 4, 8):
        step = optimal_step_size(L, 1.0)
        cb = build_codebook(L, step)
        if abs(quantizer_distortion(cb, 1.0) - gaussian_distortion(L, step)) > 1e-9:
            return False, f"closed-form distortion mismatch at L={L}"
    return True, "closed-form distortion matches quadrature"


def check_p3_gap(rng, draws=5):
    gaps = []
    for _ in range(draws):
        H = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
        q = 10.0
        cb = codebook_for_power(4, q, 2, 2)
        P0 = scale_to_power(wf_init(H, q, 1.0), q)
        beta, d = receiver_gains(H, P0, 1.0), ue_weights(H, P0, 1.0)
        P = solve_quantized_subproblem(H, beta, d, q, cb)
        _, best = exhaustive_p3(H, beta, d, q, cb, return_objective=True)
        if P.power > q:
            return False, "power constraint violated"
        gaps.append((weighted_mse(H, P, beta, d, 1.0) - best) / best)
    return True, f"mean relative gap to exhaustive search {np.mean(gaps):.3%}"


def run_selftest(seed=0) -> bool:
    rng = np.random.default_rng(seed)
    checks = [("sesd-vs-exhaustive", lambda: check_sesd(rng)),
              ("quantizer-distortion", check_quantizer),
              ("p3-gap", lambda: check_p3_gap(rng))]
    all_ok = True
    for name, fn in checks:
        t0 = time.perf_counter()
        ok, detail = fn()
        all_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail} ({time.perf_counter() - t0:.1f}s)")
    return all_ok
