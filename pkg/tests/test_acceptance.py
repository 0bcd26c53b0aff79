"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Finite-N tolerances (Kolmogorov 0.08, 3 standard errors) are desk-scale
surrogates for asymptotic statements.
"""

import itertools
import math
import time

import numpy as np
import pytest

from asep_cutoff.experiments import (
    auxiliary_identity_mc,
    event_B_mc,
    exact_mixing_curve,
    kolmogorov_distance,
    pathwise_suite,
    step_fluct_mc,
    tv_lower_bound_mc,
    tv_upper_bound_mc,
)
from asep_cutoff.hecke import (
    apply_word,
    basis,
    corollary_event_check,
    distribution_identity_check,
    identity_element,
    involution,
    mallows_element,
    multiply,
    random_probability_element,
    reduced_words,
)
from asep_cutoff.stationary import (
    MallowsSpec,
    generator_matrix,
    mallows_pmf,
    mallows_sample_batch,
    stationary_tail_A,
    stationary_vector,
)
from asep_cutoff.tracy_widom import QuadratureSpec, f_alpha, f_gue, f_gue_series, f_gue_table, g_time

pytestmark = pytest.mark.acceptance


def test_c01_hecke_distribution_identity(record):
    t0 = time.perf_counter()
    worst = 0.0
    for (S, R, M), Q, t in itertools.product([(1, 1, 1), (1, 1, 2), (2, 1, 1)], [0.0, 0.25, 0.5], [0.1, 1.0, 5.0]):
        worst = max(worst, distribution_identity_check(S, R, M, t, 1 / (1 + Q), Q))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 60
    record(1, ok, f"max deviation {worst:.2e} (tol 1e-9) over 27 cases in {elapsed:.1f}s (limit 60s)")
    assert ok


def test_c02_mallows_absorption(record):
    Q = 0.5
    worst = 0.0
    for n in range(2, 6):
        M = mallows_element(1, n, Q)
        for seed in range(100):
            h = random_probability_element(1, n, seed=1000 * n + seed)
            worst = max(worst, multiply(h, M, Q).l1(M), multiply(M, h, Q).l1(M))
    ok = worst <= 1e-12
    record(2, ok, f"max l1 deviation {worst:.2e} (tol 1e-12), 100 elements per n in 2..5")
    assert ok


def test_c03_anti_homomorphism_and_reduced_words(record):
    Q = 0.5
    perms = list(itertools.permutations(range(1, 5)))
    anti = 0.0
    for u in perms:
        for v in perms:
            a, b = basis(1, 4, u), basis(1, 4, v)
            anti = max(anti, involution(multiply(a, b, Q)).distance(multiply(involution(b), involution(a), Q)))
    probes = [identity_element(1, 4)] + [random_probability_element(1, 4, seed=s) for s in range(3)]
    words = 0.0
    for w in perms:
        ws = reduced_words(w)
        for h in probes:
            ref = apply_word(ws[0], h, Q)
            for word in ws[1:]:
                words = max(words, apply_word(word, h, Q).distance(ref))
    ok = anti <= 1e-12 and words <= 1e-12
    record(3, ok, f"anti-homomorphism {anti:.2e}, reduced-word spread {words:.2e} on S4 (tol 1e-12)")
    assert ok


def test_c04_mallows_sampler(record):
    spec = MallowsSpec(1, 4, 0.5)
    n = 10**6
    batch = mallows_sample_batch(spec, n, seed=20240601)
    keys = list(itertools.permutations(range(1, 5)))
    index = {w: i for i, w in enumerate(keys)}
    codes = np.fromiter((index[tuple(r)] for r in batch.tolist()), dtype=np.int64, count=n)
    emp = np.bincount(codes, minlength=24) / n
    exact = np.array([mallows_pmf(spec, w) for w in keys])
    tv = 0.5 * np.abs(emp - exact).sum()
    ok = tv <= 0.005
    record(4, ok, f"TV {tv:.4f} (tol 0.005) from 1e6 samples on S4, Q=0.5")
    assert ok


def test_c05_stationarity(record):
    worst = 0.0
    for N in range(1, 7):
        for k in range(0, N + 1):
            for Q in (0.0, 0.25, 0.5, 0.9):
                pi = stationary_vector(N, k, Q)
                G = generator_matrix(N, k, 1 / (1 + Q))
                worst = max(worst, float(np.abs(pi @ G).max()))
    ok = worst <= 1e-12
    record(5, ok, f"max generator residual {worst:.2e} (tol 1e-12), N <= 6, all k")
    assert ok


def test_c06_f_gue_numerics(record):
    dual = max(abs(f_gue(s) - f_gue_series(s, 3)) for s in (0.0, 1.0, 2.0))
    conv = max(abs(f_gue(s, QuadratureSpec(m=60)) - f_gue(s, QuadratureSpec(m=120))) for s in (-2.0, 0.0, 2.0))
    grid = np.round(np.arange(-8.0, 4.0 + 1e-9, 0.1), 10)
    vals = f_gue_table(grid)
    monotone = bool(np.all(np.diff(vals) >= -1e-8))
    top = float(vals[-1])
    ok = dual <= 1e-6 and conv <= 1e-8 and monotone and top >= 0.999
    record(6, ok, f"series gap {dual:.1e} (tol 1e-6), m->2m change {conv:.1e} (tol 1e-8), "
                  f"monotone={monotone}, F(4)={top:.8f}")
    assert ok


def test_c07_exact_sandwich(record):
    t0 = time.perf_counter()
    N, k, reps = 8, 4, 5000
    grid = [-3.0, -2.0, -1.0, 0.0, 1.0]
    lines, ok = [], True
    for Q in (0.0, 0.5):
        p = 1 / (1 + Q)
        dense = exact_mixing_curve(N, k, p, np.linspace(0, g_time(N, k, 4.0, p), 60))
        nonincreasing = bool(np.all(np.diff([e.exact for e in dense]) <= 1e-12))
        up = tv_upper_bound_mc(N, k, p, grid, reps=reps, seed=71)
        lo = tv_lower_bound_mc(N, k, p, grid, reps=reps, seed=72)
        ex = exact_mixing_curve(N, k, p, [u.t for u in up])
        inside = all(w.lower - 3 * w.lower_se <= e.exact <= u.upper + 3 * u.upper_se
                     for u, w, e in zip(up, lo, ex))
        ok &= nonincreasing and inside
        lines.append(f"Q={Q}: nonincreasing={nonincreasing}, bracketed={inside}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    record(7, ok, "; ".join(lines) + f"; {elapsed:.0f}s (limit 300s)")
    assert ok


def test_c08_pathwise_suite(record):
    N, k, p = 50, 25, 0.75
    res = pathwise_suite(N, k, p, g_time(N, k, 0.0, p), reps=10_000, seed=8)
    counts = {key: res[key] for key in ("order", "h_le_H_particles", "h_le_H_times", "step_domination",
                                         "zeta1_behind_xi1")}
    ok = all(v == 0 for v in counts.values())
    record(8, ok, f"violations {counts} over 1e4 coupled runs (monotone construction, p=0.75)")
    assert ok


def test_c09_desk_scale_profile(record):
    t0 = time.perf_counter()
    N, k, p, reps = 256, 128, 0.85, 2000
    grid = [float(c) for c in range(-4, 5)]
    pts = step_fluct_mc(N, k, p, grid, reps=reps, seed=90)
    kdist = kolmogorov_distance(pts)
    est, _ = event_B_mc(N, k, p, grid, reps=reps, seed=91)
    fa = f_alpha(k / N)
    bdev = max(abs(e - f_gue(c * fa)) for c, e in zip(grid, est))
    elapsed = time.perf_counter() - t0
    ok = kdist <= 0.08 and bdev <= 0.08 and elapsed < 1800
    record(9, ok, f"Kolmogorov {kdist:.3f} (tol 0.08), event B max gap {bdev:.3f} (tol 0.08), "
                  f"p={p}, {elapsed:.0f}s")
    assert ok


def test_c10_stationary_tail(record):
    N, k, Q = 40, 20, 0.5
    ls = np.arange(2, 11)
    logs = np.log([stationary_tail_A(N, k, Q, int(l)) for l in ls])
    slope, icpt = np.polyfit(ls, logs, 1)
    resid = logs - (slope * ls + icpt)
    r2 = 1 - resid.var() / logs.var()
    decreasing = bool(np.all(np.diff(logs) < 0))
    # Monte Carlo cross-check of the exact values at the low end
    mc_ok = True
    for l in (2, 3):
        est, se = stationary_tail_A(N, k, Q, l, method="mc", reps=20_000, seed=l)
        mc_ok &= abs(est - math.exp(logs[l - 2])) <= 4 * se
    ok = decreasing and r2 >= 0.9 and mc_ok
    record(10, ok, f"decreasing={decreasing}, R^2={r2:.4f} (tol 0.9), slope {slope:.3f}, MC agrees={mc_ok}")
    assert ok


def test_c11_auxiliary_identity(record):
    Q = 0.5
    p = 1 / (1 + Q)
    exact = distribution_identity_check(1, 1, 1, 1.0, p, Q)
    for x in range(-3, 2):
        for y in range(x, 3):
            lhs, rhs = corollary_event_check(1, 1, 1, 1.0, p, Q, x, y)
            exact = max(exact, abs(lhs - rhs))
    est = auxiliary_identity_mc(50, 20, 20, 10.0, p, Q, -22, 22, reps=10_000, seed=11)
    z = est.z_score
    ok = exact <= 1e-9 and z <= 3
    record(11, ok, f"exact S=R=M=1 deviation {exact:.2e} (tol 1e-9); S=50: lhs {est.lhs:.4f}, "
                   f"rhs {est.rhs:.4f}, |z| {z:.2f} (tol 3)")
    assert ok
