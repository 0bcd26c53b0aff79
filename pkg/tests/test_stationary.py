import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asep_cutoff.lattice import ColoredConfig, SegmentConfig, TwoSpeciesConfig, make_named_config, parse_config
from asep_cutoff.stationary import (
    MallowsSpec,
    gaussian_binomial,
    generator_matrix,
    inversion_count,
    mallows_pmf,
    mallows_sample,
    mallows_sample_batch,
    normalizer,
    q_equilibrate,
    segment_states,
    stationary_pmf_pushforward,
    stationary_pmf_segment,
    stationary_tail_A,
    stationary_vector,
)


def perms(n):
    return [tuple(w) for w in itertools.permutations(range(1, n + 1))]


def brute_normalizer(n, Q):
    return 1.0 / sum(Q ** inversion_count(w) for w in perms(n))


def test_normalizer_examples():
    assert normalizer(MallowsSpec(3, 3, 0.5)) == 1.0
    assert normalizer(MallowsSpec(1, 2, 0.5)) == pytest.approx(2 / 3)
    assert 1 / normalizer(MallowsSpec(1, 3, 0.5)) == pytest.approx(21 / 8)
    assert normalizer(MallowsSpec(1, 5, 0.0)) == 1.0


@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("Q", [0.1, 0.5, 0.9])
def test_normalizer_matches_enumeration(n, Q):
    assert normalizer(MallowsSpec(1, n, Q)) == pytest.approx(brute_normalizer(n, Q), rel=1e-13)


def test_pmf_examples():
    spec = MallowsSpec(1, 2, 0.5)
    assert mallows_pmf(spec, (1, 2)) == pytest.approx(1 / 3)
    assert mallows_pmf(spec, (2, 1)) == pytest.approx(2 / 3)
    spec0 = MallowsSpec(1, 4, 0.0)
    assert mallows_pmf(spec0, (4, 3, 2, 1)) == 1.0
    assert mallows_pmf(spec0, (4, 3, 1, 2)) == 0.0
    with pytest.raises(ValueError):
        mallows_pmf(spec, (1, 1))


@pytest.mark.parametrize("Q", np.round(np.arange(0.1, 1.0, 0.1), 1))
def test_pmf_normalized_on_s3(Q):
    spec = MallowsSpec(1, 3, Q)
    assert sum(mallows_pmf(spec, w) for w in perms(3)) == pytest.approx(1.0, abs=1e-14)


def test_pmf_on_shifted_interval():
    spec = MallowsSpec(-1, 1, 0.4)
    total = sum(mallows_pmf(spec, w) for w in itertools.permutations((-1, 0, 1)))
    assert total == pytest.approx(1.0)
    assert mallows_pmf(spec, (1, 0, -1)) > mallows_pmf(spec, (-1, 0, 1))


def test_sampler_edge_cases():
    assert mallows_sample(MallowsSpec(1, 5, 0.0), 3) == (5, 4, 3, 2, 1)
    assert mallows_sample(MallowsSpec(7, 7, 0.5), 3) == (7,)
    assert mallows_sample(MallowsSpec(1, 6, 0.3), 11) == mallows_sample(MallowsSpec(1, 6, 0.3), 11)


def test_batch_matches_single_sampler():
    spec = MallowsSpec(1, 5, 0.6)
    batch = mallows_sample_batch(spec, 50, seed=4)
    assert batch.shape == (50, 5)
    assert all(sorted(r) == [1, 2, 3, 4, 5] for r in batch.tolist())


def test_sampler_tv_and_chisquare_s4():
    from scipy import stats

    spec = MallowsSpec(1, 4, 0.5)
    n = 10**6
    batch = mallows_sample_batch(spec, n, seed=2024)
    keys = perms(4)
    index = {w: i for i, w in enumerate(keys)}
    codes = np.array([index[tuple(r)] for r in batch.tolist()])
    emp = np.bincount(codes, minlength=24) / n
    exact = np.array([mallows_pmf(spec, w) for w in keys])
    assert 0.5 * np.abs(emp - exact).sum() <= 0.005
    assert stats.chisquare(emp * n, exact * n).pvalue > 1e-3


def test_stationary_examples():
    assert stationary_pmf_segment(2, 1, 0.5, parse_config("01")) == pytest.approx(2 / 3)
    assert stationary_pmf_segment(2, 1, 0.5, parse_config("10")) == pytest.approx(1 / 3)
    assert stationary_pmf_segment(5, 2, 0.0, make_named_config("xi1", 5, 2)) == 1.0
    assert stationary_pmf_segment(5, 2, 0.0, make_named_config("xi0", 5, 2)) == 0.0
    with pytest.raises(ValueError):
        stationary_pmf_segment(4, 2, 0.5, parse_config("1110"))


@pytest.mark.parametrize("N", range(1, 9))
def test_stationary_normalized(N):
    for k in range(0, N + 1):
        assert stationary_vector(N, k, 0.37).sum() == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("N,k", [(3, 1), (4, 2), (5, 2), (6, 3)])
@pytest.mark.parametrize("Q", [0.0, 0.3, 0.8])
def test_pushforward_equals_closed_form(N, k, Q):
    for row in segment_states(N, k):
        xi = SegmentConfig(1, N, row)
        assert stationary_pmf_pushforward(N, k, Q, xi) == pytest.approx(
            stationary_pmf_segment(N, k, Q, xi), abs=1e-14)


@pytest.mark.parametrize("N", range(2, 7))
def test_generator_annihilates_stationary_law(N):
    for k in range(1, N):
        for Q in (0.0, 0.25, 0.5, 0.9):
            p = 1 / (1 + Q)
            pi = stationary_vector(N, k, Q)
            G = generator_matrix(N, k, p)
            assert np.abs(pi @ G).max() <= 1e-12
            assert np.abs(np.asarray(G.sum(axis=1)).ravel()).max() <= 1e-12


def test_gaussian_binomial():
    # generating function of inversions between k particles and n-k holes
    for n, k, Q in [(4, 2, 0.3), (6, 3, 0.7), (7, 2, 0.5)]:
        brute = sum(Q ** sum(1 for a in pos for b in range(a + 1, n) if b not in pos)
                    for pos in itertools.combinations(range(n), k))
        assert gaussian_binomial(n, k, Q) == pytest.approx(brute, rel=1e-13)
    assert gaussian_binomial(4, 2, 0.5) == pytest.approx(1 + 0.5 + 2 * 0.25 + 0.125 + 0.0625)
    assert gaussian_binomial(5, 0, 0.3) == 1.0


def test_q_equilibrate_examples():
    c = parse_config("10")
    outs = [str(q_equilibrate(c, (1, 2), 0.5, s)) for s in range(20_000)]
    frac = outs.count("01") / len(outs)
    assert abs(frac - 2 / 3) <= 3 * math.sqrt(2 / 9 / len(outs))
    c = parse_config("10110")
    assert q_equilibrate(c, (3, 3), 0.5, 1) == c
    h = parse_config("11000")
    assert q_equilibrate(h, (3, 5), 0.5, 1) == h
    with pytest.raises(ValueError):
        q_equilibrate(h, (0, 2), 0.5, 1)


def test_q_equilibrate_colored_and_two_species():
    c = ColoredConfig(1, 5, [5, 1, 4, 2, 3])
    out = q_equilibrate(c, (2, 4), 0.3, 5)
    assert out.colors[0] == 5 and out.colors[4] == 3
    assert sorted(out.colors[1:4]) == [1, 2, 4]
    t = TwoSpeciesConfig.from_string("...(1)|1:2101|(0)...")
    out = q_equilibrate(t, (1, 4), 0.3, 5)
    assert sorted(out.occ.tolist()) == sorted(t.occ.tolist())


def test_q_equilibrate_preserves_mallows_law():
    Q = 0.4
    spec = MallowsSpec(1, 3, Q)
    keys = perms(3)
    rng = np.random.default_rng(0)
    n = 100_000
    counts = dict.fromkeys(keys, 0)
    starts = mallows_sample_batch(spec, n, seed=1)
    for i, w in enumerate(starts.tolist()):
        out = q_equilibrate(ColoredConfig(1, 3, w), (1, 3), Q, int(rng.integers(2**32)))
        counts[tuple(out.colors.tolist())] += 1
    emp = np.array([counts[w] / n for w in keys])
    exact = np.array([mallows_pmf(spec, w) for w in keys])
    assert 0.5 * np.abs(emp - exact).sum() <= 0.01


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 9), st.data())
def test_tail_exact_matches_enumeration(N, data):
    k = data.draw(st.integers(1, N - 2))
    l = data.draw(st.integers(1, N - k - 1))
    Q = data.draw(st.floats(0.0, 0.95))
    assert stationary_tail_A(N, k, Q, l) == pytest.approx(
        stationary_tail_A(N, k, Q, l, method="enumerate"), abs=1e-13)


def test_tail_examples():
    N, k = 6, 3
    # l = N-k-1 asks for a leftmost particle left of site 1, which is impossible
    assert stationary_tail_A(N, k, 0.5, N - k - 1) == 0.0
    assert stationary_tail_A(N, k, 0.5, N - k - 1, method="enumerate") == 0.0
    for l in range(1, N - k):
        assert stationary_tail_A(N, k, 0.0, l) == 0.0
    vals = [stationary_tail_A(20, 8, 0.6, l) for l in range(1, 12)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        stationary_tail_A(6, 3, 0.5, 3)


def test_tail_mc_consistent():
    est, se = stationary_tail_A(12, 6, 0.6, 2, method="mc", reps=20_000, seed=3)
    assert abs(est - stationary_tail_A(12, 6, 0.6, 2)) <= 4 * se
