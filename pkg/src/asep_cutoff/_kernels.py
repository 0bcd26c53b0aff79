"""Compiled inner loops of the exclusion dynamics.

Values are priority ranks; equal ranks never move.  Two update rules share
the loops, selected by ``rule`` with a threshold ``cut``:

* ``COLORED`` (``cut = Q``, clocks of rate ``p``): the lower rank on the left
  always swaps, the higher rank on the left swaps iff ``coin < Q``.
* ``MONOTONE`` (``cut = p``, clocks of rate 1): the lower rank on the left
  swaps iff ``coin < p``, the higher rank on the left iff ``coin >= p``.

Both give the same law for a single process; only the second preserves the
height order between coupled single-species processes.  Single-species
configurations use rank 0 for a particle and rank 1 for a hole.
"""

import numpy as np
from numba import njit

OK = 0
OVERFLOW = 1
COLORED = 0
MONOTONE = 1


@njit(cache=True, nogil=True, inline="always")
def _swaps(a, b, coin, cut, rule):
    if rule == COLORED:
        return a < b or (a > b and coin < cut)
    return (a < b and coin < cut) or (a > b and coin >= cut)


@njit(cache=True, nogil=True)
def apply_events(vals, lo, lt, rt, times, bonds, coins, start, t_from, t_to, cut, rule):
    """Replay events with ``t_from < time <= t_to`` starting at index ``start``.

    ``vals`` holds sites ``lo .. lo+len-1``.  ``lt``/``rt`` are the tail ranks
    beyond the array, or -1 for a reflecting wall (events off the array are
    then ignored).  Returns ``(next_index, status)``; the status flags an
    event that would have moved a non-tail value across the array edge.
    """
    n = vals.shape[0]
    hi = lo + n - 1
    i = start
    while i < times.shape[0] and times[i] <= t_to:
        if times[i] <= t_from:
            i += 1
            continue
        z = bonds[i]
        if z < lo - 1 or z > hi:
            i += 1
            continue
        if z == lo - 1 or z == hi:
            if z == lo - 1:
                if lt < 0:
                    i += 1
                    continue
                a = lt
                b = vals[0]
            else:
                if rt < 0:
                    i += 1
                    continue
                a = vals[n - 1]
                b = rt
            if _swaps(a, b, coins[i], cut, rule):
                return i, OVERFLOW
            i += 1
            continue
        a = vals[z - lo]
        b = vals[z + 1 - lo]
        if _swaps(a, b, coins[i], cut, rule):
            vals[z - lo] = b
            vals[z + 1 - lo] = a
        i += 1
    return i, OK


@njit(cache=True, nogil=True)
def first_match_time(vals, lo, target, other, times, bonds, coins, start, t_from, t_to, cut, rule):
    """Replay events until ``vals`` equals ``target`` (or ``other`` when given).

    If ``other`` is non-empty it is evolved in parallel and the stopping
    criterion is ``vals == other``; otherwise ``target`` is fixed.  Walls on
    both ends.  Returns ``(next_index, hit_time)`` with ``hit_time = -1`` when
    no match happened by ``t_to``.
    """
    n = vals.shape[0]
    coupled = other.shape[0] > 0
    ref = other if coupled else target
    mism = 0
    for j in range(n):
        if vals[j] != ref[j]:
            mism += 1
    if mism == 0:
        return start, t_from
    i = start
    while i < times.shape[0] and times[i] <= t_to:
        t = times[i]
        z = bonds[i]
        if t <= t_from or z < lo or z >= lo + n - 1:
            i += 1
            continue
        u = z - lo
        for arr_id in range(2 if coupled else 1):
            arr = vals if arr_id == 0 else other
            a = arr[u]
            b = arr[u + 1]
            if _swaps(a, b, coins[i], cut, rule):
                arr[u] = b
                arr[u + 1] = a
        mism = 0
        for j in range(n):
            if vals[j] != ref[j]:
                mism += 1
        i += 1
        if mism == 0:
            return i, t
    return i, -1.0


@njit(cache=True, nogil=True)
def _kth_from_right(x, off, f, g, walled, lo_w, hi_w, lt, m):
    # m-th particle (rank 0) counted from the right; -2**62 when undefined
    if walled:
        cnt = 0
        for s in range(hi_w, lo_w - 1, -1):
            if x[s - off] == 0:
                cnt += 1
                if cnt == m:
                    return s
        return -(2 ** 62)
    cnt = 0
    for s in range(g, f - 1, -1):
        if x[s - off] == 0:
            cnt += 1
            if cnt == m:
                return s
    if lt == 0:
        return f - (m - cnt)
    return -(2 ** 62)


@njit(cache=True, nogil=True)
def _leftmost_rank(x, off, lo_w, hi_w, rank):
    for s in range(lo_w, hi_w + 1):
        if x[s - off] == rank:
            return s
    return 2 ** 62


@njit(cache=True, nogil=True)
def _rightmost_rank(x, off, lo_w, hi_w, rank):
    for s in range(hi_w, lo_w - 1, -1):
        if x[s - off] == rank:
            return s
    return -(2 ** 62)


@njit(cache=True, nogil=True)
def run_adaptive(x, off, walled, lo_w, hi_w, lt, rt, p, Q, t0, checkpoints, m_label,
                 target, t_cap, seed):
    """Exact single-configuration run with an internally drawn Harris construction.

    Line mode (``walled`` False): sites outside the active window carry the
    tail ranks, so bonds inside a tail are no-ops and only the bonds
    ``[f-1; g]`` (``f`` first site differing from the left tail, ``g`` last
    site differing from the right tail) need clocks.  By memorylessness,
    drawing the next event among the currently active bonds at total rate
    ``p * #bonds`` reproduces the infinite-volume dynamics exactly.

    Segment mode (``walled`` True): bonds ``[lo_w; hi_w-1]`` only.

    Observations at each checkpoint: ``(f, g, x_m)`` in line mode and
    ``(leftmost particle, rightmost hole, x_m)`` in segment mode, where
    ``x_m`` is the ``m_label``-th particle from the right (0 disables).
    If ``target`` is non-empty (same layout as ``x``) the first time
    ``x == target`` is reported.  The run continues until all checkpoints
    are recorded and, if a target is set, until the hit or ``t_cap``.

    Returns ``(obs, hit_time, final_time, status)``.
    """
    if seed >= 0:
        np.random.seed(seed)
    nbuf = x.shape[0]
    ncheck = checkpoints.shape[0]
    obs = np.empty((ncheck, 3), dtype=np.int64)
    has_target = target.shape[0] > 0
    mism = 0
    if has_target:
        for j in range(nbuf):
            if x[j] != target[j]:
                mism += 1
    hit = -1.0
    if has_target and mism == 0:
        hit = t0
    if walled:
        f = lo_w
        g = hi_w
    else:
        f = off
        while f < off + nbuf and x[f - off] == lt:
            f += 1
        g = off + nbuf - 1
        while g >= off and x[g - off] == rt:
            g -= 1
        if f - 1 <= off or g + 1 >= off + nbuf - 1:
            return obs, hit, t0, OVERFLOW
    t_end = t0
    if ncheck > 0:
        t_end = checkpoints[ncheck - 1]
    if has_target and t_cap > t_end:
        t_end = t_cap
    t = t0
    ci = 0
    while True:
        if walled:
            first_bond = lo_w
            nb = hi_w - lo_w
        else:
            first_bond = f - 1
            nb = g - f + 2
            if lt == rt and g < f:
                nb = 0
        if nb <= 0:
            t_next = np.inf
        else:
            t_next = t + np.random.exponential(1.0 / (p * nb))
        while ci < ncheck and checkpoints[ci] < t_next:
            if walled:
                obs[ci, 0] = _leftmost_rank(x, off, lo_w, hi_w, 0)
                obs[ci, 1] = _rightmost_rank(x, off, lo_w, hi_w, 1)
            else:
                obs[ci, 0] = f
                obs[ci, 1] = g
            if m_label > 0:
                obs[ci, 2] = _kth_from_right(x, off, f, g, walled, lo_w, hi_w, lt, m_label)
            else:
                obs[ci, 2] = 0
            ci += 1
        done_target = (not has_target) or hit >= 0.0
        if ci >= ncheck and done_target:
            break
        if t_next > t_end:
            t = t_end
            break
        t = t_next
        z = first_bond + np.random.randint(nb)
        coin = np.random.random()
        u = z - off
        a = x[u]
        b = x[u + 1]
        if not (a < b or (a > b and coin < Q)):
            continue
        x[u] = b
        x[u + 1] = a
        if has_target:
            mism += (b != target[u]) - (a != target[u])
            mism += (a != target[u + 1]) - (b != target[u + 1])
            if mism == 0 and hit < 0.0:
                hit = t
        if not walled:
            if z < f:
                f = z
            else:
                while f <= off + nbuf - 1 and x[f - off] == lt:
                    f += 1
            if z + 1 > g:
                g = z + 1
            else:
                while g >= off and x[g - off] == rt:
                    g -= 1
            if f - 1 <= off or g + 1 >= off + nbuf - 1:
                return obs, hit, t, OVERFLOW
    return obs, hit, t, OK


@njit(cache=True, nogil=True)
def run_walled_until(x, lo, p, Q, t0, t1, seed):
    """Evolve a walled configuration of arbitrary ranks from ``t0`` to ``t1``."""
    if seed >= 0:
        np.random.seed(seed)
    n = x.shape[0]
    nb = n - 1
    if nb <= 0:
        return
    rate = p * nb
    t = t0 + np.random.exponential(1.0 / rate)
    while t <= t1:
        u = np.random.randint(nb)
        coin = np.random.random()
        a = x[u]
        b = x[u + 1]
        if a < b or (a > b and coin < Q):
            x[u] = b
            x[u + 1] = a
        t += np.random.exponential(1.0 / rate)


@njit(cache=True, nogil=True)
def _index_particles(x, from_left):
    n = x.shape[0]
    idx = np.full(n, -1, dtype=np.int64)
    cnt = 0
    for s in range(n):
        if x[s] == 0:
            cnt += 1
    pos = np.empty(cnt, dtype=np.int64)
    c = 0
    if from_left:
        for s in range(n):
            if x[s] == 0:
                idx[s] = c
                pos[c] = s
                c += 1
    else:
        for s in range(n - 1, -1, -1):
            if x[s] == 0:
                idx[s] = c
                pos[c] = s
                c += 1
    return idx, pos


@njit(cache=True, nogil=True)
def pathwise_suite(xs, off, walled, lo_w, hi_w, lts, rts, from_left, p, Q, t_end,
                   k, targets, seed, rule):
    """Coupled run of several single-species configurations on one buffer.

    ``xs`` is ``(n_configs, nbuf)`` of ranks sharing site offset ``off``.
    Config order is fixed: 0 = xi0, 1 = xi1 (both walled on ``[lo_w; hi_w]``),
    2 = zeta0, 3 = zeta1 (hole/particle tails), 4 = shifted step (particle /
    hole tails).  Particles are tracked by index; ``from_left`` selects the
    indexing direction per config.  Every event checks, for the particles
    that moved, the pathwise inequalities

    0. order preservation: xi0 <= xi1 and zeta0 <= zeta1 (indexwise positions),
    1. zeta0 particles never overtake xi0 particles (the mechanism behind
       the hitting-time comparison),
    2. each of the k xi0 particles stays weakly left of the shifted step
       particle with the same label (labels counted from the right),
    3. zeta1 particles never overtake xi1 particles.

    ``targets[0]``/``targets[1]`` are xi1 and zeta1 as fixed configurations;
    the first times xi0 and zeta0 equal them are returned.

    ``rule`` selects the update rule (clock rate ``p`` for ``COLORED``, 1
    for ``MONOTONE``).  Returns ``(violations[4], hit_xi, hit_zeta, status)``.
    """
    np.random.seed(seed)
    rate = p if rule == COLORED else 1.0
    cut = Q if rule == COLORED else p
    nconf, nbuf = xs.shape
    viol = np.zeros(4, dtype=np.int64)
    idxs = np.full((nconf, nbuf), -1, dtype=np.int64)
    poss = np.full((nconf, nbuf), -1, dtype=np.int64)
    for c in range(nconf):
        idx, pos = _index_particles(xs[c], from_left[c])
        idxs[c] = idx
        poss[c, :pos.shape[0]] = pos
    f = np.empty(nconf, dtype=np.int64)
    g = np.empty(nconf, dtype=np.int64)
    for c in range(nconf):
        if walled[c]:
            f[c] = lo_w
            g[c] = hi_w - 1
        else:
            fc = off
            while xs[c, fc - off] == lts[c]:
                fc += 1
            gc = off + nbuf - 1
            while xs[c, gc - off] == rts[c]:
                gc -= 1
            f[c] = fc
            g[c] = gc
    mism = np.zeros(2, dtype=np.int64)
    for j in range(nbuf):
        if xs[0, j] != targets[0, j]:
            mism[0] += 1
        if xs[2, j] != targets[1, j]:
            mism[1] += 1
    hit_xi = -1.0
    hit_zeta = -1.0
    t = 0.0
    moved = np.full(nconf, -1, dtype=np.int64)
    while True:
        A = 2 ** 62
        B = -(2 ** 62)
        for c in range(nconf):
            if walled[c]:
                a0 = lo_w
                b0 = hi_w - 1
            else:
                a0 = f[c] - 1
                b0 = g[c]
            if a0 < A:
                A = a0
            if b0 > B:
                B = b0
        nb = B - A + 1
        t += np.random.exponential(1.0 / (rate * nb))
        if t > t_end:
            break
        z = A + np.random.randint(nb)
        coin = np.random.random()
        u = z - off
        for c in range(nconf):
            moved[c] = -1
            if walled[c] and (z < lo_w or z > hi_w - 1):
                continue
            a = xs[c, u]
            b = xs[c, u + 1]
            if not _swaps(a, b, coin, cut, rule):
                continue
            xs[c, u] = b
            xs[c, u + 1] = a
            if a == 0:
                j = idxs[c, u]
                idxs[c, u + 1] = j
                idxs[c, u] = -1
                poss[c, j] = u + 1
            else:
                j = idxs[c, u + 1]
                idxs[c, u] = j
                idxs[c, u + 1] = -1
                poss[c, j] = u
            moved[c] = j
            if c == 0:
                mism[0] += (b != targets[0, u]) - (a != targets[0, u])
                mism[0] += (a != targets[0, u + 1]) - (b != targets[0, u + 1])
            if c == 2:
                mism[1] += (b != targets[1, u]) - (a != targets[1, u])
                mism[1] += (a != targets[1, u + 1]) - (b != targets[1, u + 1])
            if not walled[c]:
                if z < f[c]:
                    f[c] = z
                else:
                    while xs[c, f[c] - off] == lts[c]:
                        f[c] += 1
                if z + 1 > g[c]:
                    g[c] = z + 1
                else:
                    while xs[c, g[c] - off] == rts[c]:
                        g[c] -= 1
                if f[c] - 1 <= off or g[c] + 1 >= off + nbuf - 1:
                    return viol, hit_xi, hit_zeta, OVERFLOW
        if mism[0] == 0 and hit_xi < 0.0:
            hit_xi = t
        if mism[1] == 0 and hit_zeta < 0.0:
            hit_zeta = t
        # indices 0..k-1 from the left are labels k..1 for configs 0-3;
        # the shifted step is indexed from the right, index k-1 is label k
        for c in range(nconf):
            j = moved[c]
            if j < 0:
                continue
            if c <= 1 and j < k:
                if poss[0, j] > poss[1, j]:
                    viol[0] += 1
            if c == 2 or c == 3:
                if poss[2, j] > poss[3, j]:
                    viol[0] += 1
            if (c == 0 or c == 2) and j < k:
                if poss[2, j] > poss[0, j]:
                    viol[1] += 1
            # label i <= k: xi0 index k-i (from the left), step index i-1
            if (c == 0 or c == 4) and j < k:
                jx = j if c == 0 else k - 1 - j
                if poss[0, jx] > poss[4, k - 1 - jx]:
                    viol[2] += 1
            if (c == 1 or c == 3) and j < k:
                if poss[3, j] > poss[1, j]:
                    viol[3] += 1
    return viol, hit_xi, hit_zeta, OK


@njit(cache=True, nogil=True)
def mallows_rankings(n, Q, U):
    """Rows of one-line rankings from uniforms ``U`` (shape ``(reps, n)``).

    Same insertion construction as the pure Python sampler: value ``i``
    overtakes ``j ~ Q^j`` (truncated to ``{0..i-1}``) earlier values, then
    the word is reversed.
    """
    reps = U.shape[0]
    out = np.empty((reps, n), dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    logQ = np.log(Q) if Q > 0 else 0.0
    for r in range(reps):
        size = 0
        for i in range(1, n + 1):
            j = 0
            if Q > 0 and i > 1:
                j = int(np.floor(np.log1p(-U[r, i - 1] * (1.0 - Q ** i)) / logQ))
                if j > i - 1:
                    j = i - 1
            pos = size - j
            for s in range(size, pos, -1):
                buf[s] = buf[s - 1]
            buf[pos] = i
            size += 1
        for s in range(n):
            out[r, s] = buf[n - 1 - s]
    return out
