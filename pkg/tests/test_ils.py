import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qprecode.errors import BudgetExceeded, ConfigurationError, NumericError
from qprecode.ils import (IlsInstance, build_per_ue_instance, ils_residual, per_ue_term,
                          sesd_solve, solve_for_multiplier, solve_quantized_subproblem,
                          to_complex)
from qprecode.oracles import exhaustive_ils, exhaustive_p3
from qprecode.quantizer import build_codebook, codebook_for_power
from qprecode.wmmse import (effective_weights, receiver_gains, scale_to_power, ue_weights,
                            weighted_mse, wf_init)

from conftest import crandn


def random_instance(rng, n, L):
    A = rng.standard_normal((n, n))
    G = np.triu(A)
    G[np.diag_indices(n)] = np.abs(np.diag(G)) + 0.1
    alphabet = np.arange(L) - (L - 1) / 2
    return IlsInstance(G, rng.standard_normal(n) * L / 2, alphabet)


def test_diagonal_example():
    inst = IlsInstance(np.eye(2), np.array([0.6, -2.0]), np.array([-0.5, 0.5]))
    np.testing.assert_array_equal(sesd_solve(inst).point, [0.5, -0.5])


def test_instance_validation():
    with pytest.raises(ConfigurationError):
        IlsInstance(np.array([[1.0, 0], [1.0, 1.0]]), np.zeros(2), np.array([0.0, 1.0]))
    with pytest.raises(ConfigurationError):
        IlsInstance(np.diag([1.0, 0.0]), np.zeros(2), np.array([0.0, 1.0]))
    with pytest.raises(ConfigurationError):
        IlsInstance(np.eye(2), np.zeros(2), np.array([1.0, 0.0]))


def test_matches_exhaustive_on_500_instances(rng):
    for _ in range(500):
        n, L = int(rng.integers(1, 7)), int(rng.choice([2, 4]))
        inst = random_instance(rng, n, L)
        sd, ex = sesd_solve(inst), exhaustive_ils(inst)
        assert sd.residual == pytest.approx(ex.residual, rel=1e-12, abs=1e-12)
        np.testing.assert_array_equal(sd.point, ex.point)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 5), st.sampled_from([2, 4, 8]))
def test_deterministic_and_residual_consistent(seed, n, L):
    inst = random_instance(np.random.default_rng(seed), n, L)
    a, b = sesd_solve(inst), sesd_solve(inst)
    assert a.point.tobytes() == b.point.tobytes() and a.nodes_visited == b.nodes_visited
    assert a.residual == ils_residual(inst.G, inst.c, a.point)


def test_babai_optimal_node_count(rng):
    # strongly diagonal G with centres close to labels: Babai point is optimal
    n, L = 6, 4
    alphabet = np.arange(L) - 1.5
    G = np.eye(n) * 10 + np.triu(rng.standard_normal((n, n)) * 0.01, 1)
    target = rng.choice(alphabet, n)
    inst = IlsInstance(G, G @ target + rng.standard_normal(n) * 0.05, alphabet)
    sol = sesd_solve(inst)
    np.testing.assert_array_equal(sol.point, target)
    assert sol.nodes_visited <= n * L


def test_budget_reports_best(rng):
    inst = random_instance(rng, 8, 8)
    with pytest.raises(BudgetExceeded) as info:
        sesd_solve(inst, node_budget=5)
    best = info.value.best
    assert best is not None and best.point.shape == (8,)
    assert best.residual >= sesd_solve(inst).residual


def test_single_antenna_instance_is_two_dimensional():
    cb = build_codebook(4, 0.5)
    H = np.array([[1.0 + 1j], [0.5]])
    D = effective_weights(np.array([0.3, 0.2j]), np.array([1.0, 2.0]))
    inst = build_per_ue_instance(H, D, np.array([1.0, 2.0]), 0.1, 0, cb)
    assert inst.G.shape == (2, 2) and inst.c.shape == (2,)


def test_instance_objective_constant_offset(rng):
    M, K, lam = 2, 2, 0.1
    cb = build_codebook(4, 0.7)
    H, beta, d = crandn(rng, K, M), crandn(rng, K), rng.uniform(1, 4, K)
    D = effective_weights(beta, d)
    for ue in range(K):
        inst = build_per_ue_instance(H, D, d, lam, ue, cb)
        offsets = []
        for _ in range(50):
            p = rng.choice(cb.alphabet, M)
            point = np.concatenate([p.real, p.imag])
            offsets.append(ils_residual(inst.G, inst.c, point) - per_ue_term(H, D, d, lam, p, ue))
        assert np.ptp(offsets) < 1e-9
        assert offsets[0] == pytest.approx(inst.c @ inst.c, rel=1e-9)


def brute_column(H, D, d, lam, ue, cb):
    M = H.shape[1]
    pts = [np.array(p) for p in itertools.product(cb.alphabet, repeat=M)]
    vals = [per_ue_term(H, D, d, lam, p, ue) for p in pts]
    return pts[int(np.argmin(vals))], min(vals)


@pytest.mark.parametrize("lam", [1.0, 10.0, 100.0])
def test_multiplier_solution_matches_brute_force(rng, lam):
    cb = build_codebook(4, 0.5)
    for _ in range(5):
        H, beta, d = crandn(rng, 2, 2), crandn(rng, 2), rng.uniform(1, 4, 2)
        D = effective_weights(beta, d)
        P, hits = solve_for_multiplier(H, beta, d, lam, cb)
        assert hits == 0
        for ue in range(2):
            _, best = brute_column(H, D, d, lam, ue, cb)
            assert per_ue_term(H, D, d, lam, P[:, ue], ue) == pytest.approx(best, abs=1e-10)


def test_large_lambda_shrinks_to_smallest_labels(rng):
    cb = build_codebook(4, 0.5)
    H, beta, d = crandn(rng, 2, 3), crandn(rng, 2), rng.uniform(1, 4, 2)
    P, _ = solve_for_multiplier(H, beta, d, 1e6, cb)
    np.testing.assert_allclose(np.abs(P) ** 2, cb.min_entry_power)


def test_zero_multiplier_rank_deficient():
    cb = build_codebook(2, 1.0)
    H = np.ones((1, 2), dtype=complex)
    D = effective_weights(np.array([1.0]), np.array([1.0]))
    with pytest.raises(NumericError, match="lam > 0"):
        build_per_ue_instance(H, D, np.array([1.0]), 0.0, 0, cb)


def test_huge_budget_uses_unconstrained_minimizer(rng):
    cb = build_codebook(4, 0.5)
    H, beta, d = crandn(rng, 2, 3), crandn(rng, 2), rng.uniform(1, 4, 2)
    P, info = solve_quantized_subproblem(H, beta, d, 1e9, cb, return_info=True)
    lam = info["lambda"]
    assert lam == pytest.approx(1e-8 * np.trace(
        (effective_weights(beta, d).D @ H).conj().T @ (effective_weights(beta, d).D @ H)).real / 3)
    P_ref, _ = solve_for_multiplier(H, beta, d, lam, cb)
    np.testing.assert_array_equal(P.entries, P_ref)


def test_power_monotone_in_multiplier(rng):
    cb = build_codebook(4, 0.6)
    lams = np.geomspace(1e-3, 1e3, 13)
    for _ in range(100):
        H, beta, d = crandn(rng, 2, 2), crandn(rng, 2), rng.uniform(1, 4, 2)
        powers = [np.vdot(P, P).real for P in
                  (solve_for_multiplier(H, beta, d, lam, cb)[0] for lam in lams)]
        assert np.all(np.diff(powers) <= 1e-9)


def test_returned_precoder_feasible(rng):
    for _ in range(30):
        K, M = 2, 4
        q = 10 ** rng.uniform(-1, 2)
        cb = codebook_for_power(8, q, K, M)
        H, beta, d = crandn(rng, K, M), crandn(rng, K), rng.uniform(1, 4, K)
        P = solve_quantized_subproblem(H, beta, d, q, cb, node_budget=20000)
        assert P.power <= q
        assert cb.contains(P.entries)


def test_rejects_nonpositive_power(rng):
    with pytest.raises(ConfigurationError):
        solve_quantized_subproblem(crandn(rng, 1, 1), np.ones(1), np.ones(1), 0.0,
                                   build_codebook(2, 1.0))


def test_misscaled_codebook_is_configuration_error(rng):
    cb = build_codebook(2, 10.0)  # smallest entry power 50 per entry
    with pytest.raises(ConfigurationError):
        solve_quantized_subproblem(crandn(rng, 1, 1), np.ones(1), np.ones(1), 1.0, cb)


def test_gap_to_exhaustive_search(rng):
    q, K, M = 10.0, 2, 2
    cb = codebook_for_power(4, q, K, M)
    gaps = []
    for _ in range(50):
        H = crandn(rng, K, M)
        P0 = scale_to_power(wf_init(H, q, 1.0), q)
        beta, d = receiver_gains(H, P0, 1.0), ue_weights(H, P0, 1.0)
        P = solve_quantized_subproblem(H, beta, d, q, cb)
        _, best = exhaustive_p3(H, beta, d, q, cb, return_objective=True)
        obj = weighted_mse(H, P, beta, d, 1.0)
        assert obj >= best - 1e-9
        gaps.append((obj - best) / best)
    print(f"relative gap to exhaustive search: mean {np.mean(gaps):.3%}, max {np.max(gaps):.3%}")
    # single draws can sit on a non-convex-hull optimum the multiplier search
    # cannot reach, so the bound applies to the average over draws
    assert np.mean(gaps) < 0.05


def test_to_complex():
    np.testing.assert_array_equal(to_complex(np.array([1.0, 2.0, 3.0, 4.0]), 2), [1 + 3j, 2 + 4j])
