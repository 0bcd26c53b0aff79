"""Mallows measures and the stationary laws of ASEP on a segment.

The Mallows measure on permutations of ``[a;b]`` gives ``w`` the mass
``Q^(n(n-1)/2 - l(w)) Z`` with ``n = b - a + 1``, ``l`` the inversion count
and ``Z = prod_i (1-Q)/(1-Q^i)``.  It is the stationary law of the colored
process, and its projection to ``k`` particles is the stationary law of the
single-species process on ``[1;N]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import _kernels
from ._util import as_generator
from .lattice import (
    PARTICLE,
    SPECIES_RANK,
    ColoredConfig,
    SegmentConfig,
    Species,
    TwoSpeciesConfig,
)

__all__ = [
    "MallowsSpec",
    "normalizer",
    "inversion_count",
    "mallows_pmf",
    "mallows_sample",
    "mallows_sample_batch",
    "gaussian_binomial",
    "stationary_pmf_segment",
    "stationary_pmf_pushforward",
    "stationary_vector",
    "segment_states",
    "generator_matrix",
    "q_equilibrate",
    "stationary_tail_A",
]


@dataclass(frozen=True)
class MallowsSpec:
    """Mallows measure on the permutations of ``[a;b]``."""

    a: int
    b: int
    Q: float

    def __post_init__(self):
        if self.b < self.a:
            raise ValueError("need b >= a")
        if not 0.0 <= self.Q < 1.0:
            raise ValueError("Q must lie in [0, 1)")

    @property
    def n(self) -> int:
        return self.b - self.a + 1


def normalizer(spec: MallowsSpec) -> float:
    """``Z = prod_{i=1}^n (1-Q)/(1-Q^i)``, the inverse of ``sum_w Q^l(w)``."""
    Q = spec.Q
    return math.prod((1.0 - Q) / (1.0 - Q**i) for i in range(1, spec.n + 1))


def inversion_count(w) -> int:
    """Number of pairs ``i < j`` with ``w(i) > w(j)``."""
    w = list(w)
    return sum(1 for i in range(len(w)) for j in range(i + 1, len(w)) if w[i] > w[j])


def _check_perm(spec, w):
    w = [int(v) for v in w]
    if sorted(w) != list(range(spec.a, spec.b + 1)):
        raise ValueError(f"{w} is not a permutation of [{spec.a}; {spec.b}]")
    return w


def mallows_pmf(spec: MallowsSpec, w) -> float:
    """Mallows probability of the one-line permutation ``w`` of ``[a;b]``.

    The order-reversing permutation carries the largest mass.
    """
    w = _check_perm(spec, w)
    n = spec.n
    e = n * (n - 1) // 2 - inversion_count(w)
    return (spec.Q**e if e else 1.0) * normalizer(spec)


def _sample_ranking(n, Q, rng):
    """One-line permutation ``w`` of ``1..n`` with ``P(w) ~ Q^(max - l(w))``.

    Builds ``u`` with ``P(u) ~ Q^l(u)`` by inserting ``1, 2, ..., n`` in turn;
    the new (largest) value overtakes ``j`` earlier values with ``P(j) ~ Q^j``
    on ``{0, ..., i-1}``.  Reversing ``u`` complements the inversion count.
    """
    u = []
    if n == 0:
        return np.empty(0, dtype=np.int64)
    U = rng.random(n)
    logQ = math.log(Q) if Q > 0 else None
    for i in range(1, n + 1):
        if logQ is None or i == 1:
            j = 0
        else:
            # inverse cdf of the geometric law truncated to {0..i-1}
            j = int(math.floor(math.log1p(-U[i - 1] * (1.0 - Q**i)) / logQ))
            j = min(j, i - 1)
        u.insert(len(u) - j, i)
    return np.array(u[::-1], dtype=np.int64)


def mallows_sample(spec: MallowsSpec, seed=None) -> tuple:
    """Exact Mallows sample, returned as the one-line tuple on ``[a;b]``."""
    rng = as_generator(seed)
    w = _sample_ranking(spec.n, spec.Q, rng)
    return tuple(int(v) + spec.a - 1 for v in w)


def mallows_sample_batch(spec: MallowsSpec, size: int, seed=None) -> np.ndarray:
    """``size`` independent samples as rows of an ``(size, n)`` array.

    Compiled version of :func:`mallows_sample`; with the same generator
    state both consume the uniforms identically row by row.
    """
    rng = as_generator(seed)
    U = rng.random((size, spec.n))
    return _kernels.mallows_rankings(spec.n, spec.Q, U) + (spec.a - 1)


def gaussian_binomial(n: int, k: int, Q: float) -> float:
    """``[n choose k]_Q = sum over 0/1 words with k ones of Q^(#10 pairs)``."""
    if k < 0 or k > n:
        return 0.0
    return math.prod((1.0 - Q ** (n - k + i)) / (1.0 - Q**i) for i in range(1, k + 1))


def _particle_hole_pairs(occ) -> int:
    occ = np.asarray(occ, dtype=np.int64)
    holes_after = np.cumsum((1 - occ)[::-1])[::-1]
    return int(np.sum(occ * holes_after))


def _check_state(N, k, xi):
    if (xi.lo, xi.hi) != (1, N):
        raise ValueError(f"configuration must live on [1; {N}]")
    if xi.n_particles != k:
        raise ValueError(f"configuration has {xi.n_particles} particles, expected {k}")


def stationary_pmf_segment(N: int, k: int, Q: float, xi: SegmentConfig) -> float:
    """``pi_{N,k}(xi)``: proportional to ``Q`` to the number of particle-hole pairs.

    A particle left of a hole is an inversion of the projected Mallows
    ranking, so summing the Mallows masses of all permutations projecting to
    ``xi`` gives ``Q^(#pairs) / [N choose k]_Q``.  The brute-force
    pushforward is :func:`stationary_pmf_pushforward`.
    """
    _check_state(N, k, xi)
    e = _particle_hole_pairs(xi.occ)
    return (Q**e if e else 1.0) / gaussian_binomial(N, k, Q)


def stationary_pmf_pushforward(N: int, k: int, Q: float, xi: SegmentConfig) -> float:
    """``pi_{N,k}(xi)`` by summing Mallows masses over all of ``S_N`` (small N)."""
    _check_state(N, k, xi)
    if N > 9:
        raise ValueError("pushforward enumeration is limited to N <= 9")
    spec = MallowsSpec(1, N, Q)
    target = xi.occ
    total = 0.0
    for w in itertools.permutations(range(1, N + 1)):
        if np.array_equal(np.asarray(w) <= k, target.astype(bool)):
            total += mallows_pmf(spec, w)
    return total


def segment_states(N: int, k: int) -> np.ndarray:
    """All of ``Omega^{N,k}`` as rows of a 0/1 array, in lexicographic order."""
    rows = []
    for sites in itertools.combinations(range(N), k):
        occ = np.zeros(N, dtype=np.int8)
        occ[list(sites)] = 1
        rows.append(occ)
    rows.sort(key=lambda r: tuple(r))
    return np.array(rows, dtype=np.int8).reshape(len(rows), N)


def stationary_vector(N: int, k: int, Q: float, states=None) -> np.ndarray:
    """``pi_{N,k}`` aligned with ``states`` (default :func:`segment_states`)."""
    states = segment_states(N, k) if states is None else states
    e = np.array([_particle_hole_pairs(s) for s in states])
    w = np.where(e == 0, 1.0, Q ** e.astype(float))
    return w / gaussian_binomial(N, k, Q)


def generator_matrix(N: int, k: int, p: float, states=None):
    """Sparse generator of ASEP on ``[1;N]`` over ``states`` (row = from).

    A particle jumps right at rate ``p`` and left at rate ``1 - p`` when the
    target site is empty.
    """
    states = segment_states(N, k) if states is None else states
    index = {s.tobytes(): i for i, s in enumerate(states)}
    q = 1.0 - p
    rows, cols, vals = [], [], []
    for i, s in enumerate(states):
        out = 0.0
        for z in range(N - 1):
            a, b = s[z], s[z + 1]
            if a == b:
                continue
            rate = p if a == PARTICLE else q
            if rate == 0:
                continue
            t = s.copy()
            t[z], t[z + 1] = b, a
            rows.append(i)
            cols.append(index[t.tobytes()])
            vals.append(rate)
            out += rate
        rows.append(i)
        cols.append(i)
        vals.append(-out)
    n = len(states)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _priority(c):
    if isinstance(c, SegmentConfig):
        return 1 - c.occ.astype(np.int64), c.lo
    if isinstance(c, ColoredConfig):
        return c.colors.astype(np.int64), c.lo
    if isinstance(c, TwoSpeciesConfig):
        lut = np.array([SPECIES_RANK[Species(s)] for s in range(3)], dtype=np.int64)
        return lut[c.occ], c.window_lo
    raise TypeError(f"unsupported configuration type {type(c).__name__}")


def _from_priority(c, ranks):
    if isinstance(c, SegmentConfig):
        return SegmentConfig(c.lo, c.hi, (1 - ranks).astype(np.int8))
    if isinstance(c, ColoredConfig):
        return ColoredConfig(c.lo, c.hi, ranks)
    inv = np.array([Species.FIRST, Species.SECOND, Species.HOLE], dtype=np.int8)
    return TwoSpeciesConfig(c.window_lo, c.window_hi, inv[ranks], c.left_tail, c.right_tail)


def equilibrate_ranks(ranks, start: int, n: int, Q: float, rng) -> None:
    """In place: rearrange ``ranks[start:start+n]`` by a fresh Mallows ranking."""
    seg = np.sort(ranks[start : start + n])
    if n <= 1 or seg[0] == seg[-1]:
        return
    w = _sample_ranking(n, Q, rng)
    ranks[start : start + n] = seg[w - 1]


def q_equilibrate(c, segment, Q: float, seed=None):
    """Bring ``segment = (a1, b1)`` of ``c`` into Q-equilibrium.

    The values inside the segment, sorted by priority, are placed according
    to a Mallows-distributed ranking: position ``a1 + i - 1`` receives the
    ``w(i)``-th highest priority value.  Values outside are untouched.
    """
    a1, b1 = segment
    ranks, lo = _priority(c)
    hi = lo + len(ranks) - 1
    if a1 > b1 or a1 < lo or b1 > hi:
        raise ValueError(f"segment [{a1}; {b1}] not inside [{lo}; {hi}]")
    ranks = ranks.copy()
    equilibrate_ranks(ranks, a1 - lo, b1 - a1 + 1, Q, as_generator(seed))
    return _from_priority(c, ranks)


def stationary_tail_A(N: int, k: int, Q: float, l: int, method: str = "exact",
                      reps: int = 10_000, seed=None):
    """``pi_{N,k}`` of ``A_N(l)``: fewer than ``k`` particles on ``[N-k-l; N]``.

    Equivalently the leftmost particle sits left of ``N - k - l``.

    Parameters
    ----------
    method : {"exact", "enumerate", "mc"}
        ``exact`` uses ``P(L >= m) = [N-m+1 choose k]_Q / [N choose k]_Q``
        (sites ``1..m-1`` empty contribute no particle-hole pairs);
        ``enumerate`` sums :func:`stationary_vector` over ``Omega^{N,k}``;
        ``mc`` projects ``reps`` Mallows samples.

    Returns
    -------
    float, or ``(estimate, standard_error)`` for ``mc``.
    """
    if not 1 <= k <= N:
        raise ValueError("need 1 <= k <= N")
    if not 1 <= l <= N - k - 1:
        raise ValueError(f"l must lie in [1; {N - k - 1}]")
    m = N - k - l
    if method == "exact":
        return max(0.0, 1.0 - gaussian_binomial(N - m + 1, k, Q) / gaussian_binomial(N, k, Q))
    if method == "enumerate":
        states = segment_states(N, k)
        pi = stationary_vector(N, k, Q, states)
        first = np.argmax(states == PARTICLE, axis=1) + 1
        return float(pi[first < m].sum())
    if method == "mc":
        rng = as_generator(seed)
        hits = 0
        for _ in range(reps):
            w = _sample_ranking(N, Q, rng)
            L = int(np.argmax(w <= k)) + 1
            hits += L < m
        est = hits / reps
        return est, math.sqrt(est * (1 - est) / reps)
    raise ValueError(f"unknown method {method!r}")
