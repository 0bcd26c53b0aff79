"""Mixing-time experiments: exact curves, Monte Carlo bounds and profiles.

Every Monte Carlo routine draws one seed per replica with
:func:`asep_cutoff._util.replica_seeds`, so results depend only on the root
seed and the replica count, never on the number of worker threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from . import __version__, _kernels
from ._util import replica_seeds
from .dynamics import _line_buffer, _tail_ranks
from .lattice import make_named_config
from .stationary import (
    generator_matrix,
    segment_states,
    stationary_tail_A,
    stationary_vector,
)
from .tracy_widom import QuadratureSpec, f_alpha, f_gue, g_time
from .uniformization import transient

__all__ = [
    "DEFAULT_STATE_CAP",
    "TvEstimate",
    "ProfilePoint",
    "IdentityEstimate",
    "c_of_time",
    "exact_mixing_curve",
    "hitting_samples",
    "tv_upper_bound_mc",
    "tv_lower_bound_mc",
    "event_B_mc",
    "step_fluct_mc",
    "kolmogorov_distance",
    "hitting_after_B_mc",
    "auxiliary_identity_mc",
    "pathwise_suite",
    "profile_report",
    "write_csv",
    "TV_CURVE_COLUMNS",
    "PROFILE_COLUMNS",
    "IDENTITY_COLUMNS",
]

DEFAULT_STATE_CAP = 12870

TV_CURVE_COLUMNS = ("c", "t", "lower", "lower_se", "upper", "upper_se", "exact", "predicted")
PROFILE_COLUMNS = ("c", "empirical", "predicted", "gap")
IDENTITY_COLUMNS = ("lhs", "lhs_se", "rhs", "rhs_se")


@dataclass
class TvEstimate:
    """Bounds on ``d^{N,k}(t)`` at one time; absent entries are ``None``."""

    t: float
    c: float
    lower: float | None = None
    upper: float | None = None
    exact: float | None = None
    lower_se: float | None = None
    upper_se: float | None = None
    reps: int = 0
    seed: int | None = None
    timeouts: int = 0


@dataclass
class ProfilePoint:
    c: float
    empirical: float
    predicted: float
    se: float = 0.0

    @property
    def gap(self) -> float:
        return self.empirical - self.predicted

    def row(self) -> dict:
        return {"c": self.c, "empirical": self.empirical, "predicted": self.predicted, "gap": self.gap}


@dataclass
class IdentityEstimate:
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    reps: int
    params: dict = field(default_factory=dict)

    @property
    def z_score(self) -> float:
        se = math.hypot(self.lhs_se, self.rhs_se)
        return abs(self.lhs - self.rhs) / se if se > 0 else (0.0 if self.lhs == self.rhs else math.inf)

    def row(self) -> dict:
        return {"lhs": self.lhs, "lhs_se": self.lhs_se, "rhs": self.rhs, "rhs_se": self.rhs_se}


def _binom_se(p_hat: float, n: int) -> float:
    return math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n) if n else math.nan


def c_of_time(N: int, k: int, t: float, p: float) -> float:
    """Inverse of ``c -> g(k, c)``."""
    D = (math.sqrt(k) + math.sqrt(N - k)) ** 2
    return (t * (2 * p - 1) - D) / N ** (1 / 3)


def _run_parallel(fn, seeds, threads):
    # fn(i, seed) -> result; results returned in replica order
    if threads is None or threads <= 1 or len(seeds) < 2:
        return [fn(i, s) for i, s in enumerate(seeds)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(len(seeds)), seeds))


# -- exact curves -------------------------------------------------------------

def exact_mixing_curve(N: int, k: int, p: float, times, start: str = "xi0",
                       cap: int = DEFAULT_STATE_CAP, eps: float = 1e-12) -> list:
    """Exact ``||P_t^xi - pi_{N,k}||_TV`` by uniformization over ``Omega^{N,k}``.

    ``start`` is ``"xi0"``, ``"xi1"`` or ``"worst"`` (maximum over every
    initial state, ``N <= 8`` only).
    """
    n_states = math.comb(N, k)
    if n_states > cap:
        raise ValueError(f"C({N},{k}) = {n_states} exceeds the state cap {cap}")
    if start == "worst" and N > 8:
        raise ValueError("worst-case curves are limited to N <= 8")
    states = segment_states(N, k)
    Q = (1 - p) / p
    pi = stationary_vector(N, k, Q, states)
    G = generator_matrix(N, k, p, states)
    rate = max(float(-G.diagonal().min()), 1e-300)
    P = (sparse.identity(n_states, format="csr") + G / rate).T.tocsr()
    if start == "worst":
        v0 = np.eye(n_states)
    else:
        target = np.zeros(N, np.int8)
        if start == "xi0":
            target[:k] = 1
        elif start == "xi1":
            target[N - k :] = 1
        else:
            raise ValueError(f"unknown start {start!r}")
        v0 = (states == target).all(axis=1).astype(float)
        if v0.ndim == 1:
            v0 = v0[:, None]
    laws = transient(lambda v: P @ v, v0, rate, times, eps)
    out = []
    for t, law in zip(times, laws):
        tv = 0.5 * np.abs(law - pi[:, None]).sum(axis=0)
        out.append(TvEstimate(t=float(t), c=c_of_time(N, k, t, p), exact=float(tv.max())))
    return out


# -- line-process Monte Carlo --------------------------------------------------

def _line_run(config, p, checkpoints, m_label, seed, target=None, t_cap=0.0):
    """Adaptive-window run, rerun with a doubled buffer on overflow."""
    lt, rt = _tail_ranks(config)
    Q = (1 - p) / p
    checkpoints = np.asarray(checkpoints, dtype=float)
    horizon = max(float(checkpoints.max()) if checkpoints.size else 0.0, t_cap)
    margin = int(2 * p * horizon + 10 * math.sqrt(p * horizon + 1) + 16)
    while True:
        ranks, lo = _line_buffer(config, margin)
        tgt = (1 - target.materialize(lo, lo + len(ranks) - 1)).astype(np.int64) if target is not None \
            else np.empty(0, np.int64)
        obs, hit, _, status = _kernels.run_adaptive(
            ranks, lo, False, 0, 0, lt, rt, p, Q, 0.0, checkpoints, m_label, tgt, t_cap, int(seed)
        )
        if status == _kernels.OK:
            return obs, hit
        margin *= 2


def hitting_samples(N: int, k: int, p: float, reps: int, seed, t_cap: float,
                    checkpoints=(), threads: int | None = None):
    """Hitting times of ``zeta1`` from ``zeta0``; ``inf`` where censored at ``t_cap``.

    Also returns the ``(L, R, x_k)`` observations at ``checkpoints``.
    """
    z0 = make_named_config("zeta0", N, k)
    z1 = make_named_config("zeta1", N, k)
    seeds = replica_seeds(seed, reps)
    cps = np.asarray(checkpoints, dtype=float)

    def one(i, s):
        return _line_run(z0, p, cps, 0, s, target=z1, t_cap=t_cap)

    res = _run_parallel(one, seeds, threads)
    H = np.array([h if h >= 0 else np.inf for _, h in res])
    obs = np.array([o for o, _ in res]).reshape(reps, len(cps), 3)
    return H, obs


def _grid_times(N, k, p, c_grid, times):
    if times is not None:
        times = np.asarray(times, dtype=float)
        return np.array([c_of_time(N, k, t, p) for t in times]), times
    c_grid = np.asarray(c_grid, dtype=float)
    return c_grid, np.array([g_time(N, k, c, p) for c in c_grid])


def tv_upper_bound_mc(N: int, k: int, p: float, c_grid=(), reps: int = 1000, seed=0,
                      times=None, t_cap: float | None = None, threads: int | None = None) -> list:
    """Estimate ``P(H > g(k, c))``, an upper bound on ``d^{N,k}(g(k, c))``.

    ``times`` overrides the ``c`` grid with explicit times.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    cs, ts = _grid_times(N, k, p, c_grid, times)
    if len(ts) == 0:
        return []
    cap = t_cap if t_cap is not None else 4.0 * max(float(ts.max()), 1.0) + 100.0 * N / (2 * p - 1)
    H, _ = hitting_samples(N, k, p, reps, seed, cap, threads=threads)
    censored = int(np.isinf(H).sum())
    out = []
    for c, t in zip(cs, ts):
        est = float(np.mean(H > t))
        out.append(TvEstimate(t=float(t), c=float(c), upper=est, upper_se=_binom_se(est, reps),
                              reps=reps, seed=seed, timeouts=censored))
    return out


def tv_lower_bound_mc(N: int, k: int, p: float, c_grid=(), l: int | None = None, reps: int = 1000,
                      seed=0, times=None, threads: int | None = None) -> list:
    """Estimate ``P(xi0_t in A_N(l)) - pi(A_N(l))``, clamped at 0.

    ``A_N(l)`` means the leftmost particle sits left of ``N - k - l``; the
    default ``l`` is ``ceil(N^(1/4))``.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    l = math.ceil(N**0.25) if l is None else l
    if not 1 <= l <= N - k - 1:
        raise ValueError(f"l must lie in [1; {N - k - 1}]")
    cs, ts = _grid_times(N, k, p, c_grid, times)
    if len(ts) == 0:
        return []
    Q = (1 - p) / p
    pi_A = stationary_tail_A(N, k, Q, l)
    order = np.argsort(ts)
    cps = ts[order]
    m = N - k - l
    seeds = replica_seeds(seed, reps)
    init = np.r_[np.zeros(k, np.int64), np.ones(N - k, np.int64)]

    def one(i, s):
        x = init.copy()
        obs, _, _, _ = _kernels.run_adaptive(x, 1, True, 1, N, -1, -1, p, Q, 0.0, cps, 0,
                                             np.empty(0, np.int64), 0.0, int(s))
        return obs[:, 0] < m

    hits = np.array(_run_parallel(one, seeds, threads)).reshape(reps, len(cps))
    freq = np.empty(len(ts))
    freq[order] = hits.mean(axis=0)
    out = []
    for c, t, f in zip(cs, ts, freq):
        out.append(TvEstimate(t=float(t), c=float(c), lower=max(0.0, float(f) - pi_A),
                              lower_se=_binom_se(float(f), reps), reps=reps, seed=seed))
    return out


def event_B_mc(N: int, k: int, p: float, c_grid, w: float = 0.1, reps: int = 1000, seed=0,
               threads: int | None = None):
    """Estimate ``P(L(zeta0_t) > N-k-N^w, R(zeta0_t) <= N-k+N^w)`` at ``t = g(k, c)``.

    Returns ``(estimates, standard_errors)`` aligned with ``c_grid``; one
    trajectory per replica is observed at every grid time.
    """
    c_grid = np.asarray(c_grid, dtype=float)
    if c_grid.size == 0:
        return np.empty(0), np.empty(0)
    ts = np.array([g_time(N, k, c, p) for c in c_grid])
    order = np.argsort(ts)
    _, obs = hitting_samples(N, k, p, reps, seed, 0.0, checkpoints=ts[order], threads=threads)
    L, R = obs[:, :, 0], obs[:, :, 1]
    lo, hi = N - k - N**w, N - k + N**w
    ev = ((L > lo) & (R <= hi)).mean(axis=0)
    est = np.empty(len(ts))
    est[order] = ev
    return est, np.array([_binom_se(e, reps) for e in est])


def step_fluct_mc(N: int, k: int, p: float, c_grid, kappa: float = 0.0, c_prime: float = 0.0,
                  kappa_prime: float = 0.0, c_dprime: float = 0.0, reps: int = 1000, seed=0,
                  threads: int | None = None, quad: QuadratureSpec = QuadratureSpec()) -> list:
    """Empirical ``P(x^step_{k + c' N^kappa}(g(k, c)) <= N - 2k + c'' N^kappa')``.

    The particle label is rounded down to an integer.  Each point carries
    the prediction ``1 - F_GUE(c f(k/N))``.
    """
    if not (0 <= kappa < 1 / 3 and 0 <= kappa_prime < 1 / 3):
        raise ValueError("kappa and kappa' must lie in [0, 1/3)")
    c_grid = np.asarray(c_grid, dtype=float)
    if c_grid.size == 0:
        return []
    m = int(math.floor(k + c_prime * N**kappa))
    if m < 1:
        raise ValueError("particle label must be >= 1")
    thr = N - 2 * k + c_dprime * N**kappa_prime
    ts = np.array([g_time(N, k, c, p) for c in c_grid])
    order = np.argsort(ts)
    step = make_named_config("step", N)
    seeds = replica_seeds(seed, reps)

    def one(i, s):
        obs, _ = _line_run(step, p, ts[order], m, s)
        return obs[:, 2] <= thr

    hits = np.array(_run_parallel(one, seeds, threads)).reshape(reps, len(ts))
    emp = np.empty(len(ts))
    emp[order] = hits.mean(axis=0)
    fa = f_alpha(k / N)
    return [ProfilePoint(float(c), float(e), 1.0 - f_gue(c * fa, quad), _binom_se(float(e), reps))
            for c, e in zip(c_grid, emp)]


def kolmogorov_distance(points) -> float:
    """Largest ``|empirical - predicted|`` over a profile."""
    return max((abs(pt.gap) for pt in points), default=0.0)


def hitting_after_B_mc(N: int, k: int, p: float, c: float = 0.0, delay_exp: float = 0.2,
                       w: float = 0.1, reps: int = 1000, seed=0, threads: int | None = None):
    """Estimate ``P(H >= g(k, c) + N^delay_exp, B_N(c))`` with its standard error."""
    t = g_time(N, k, c, p)
    H, obs = hitting_samples(N, k, p, reps, seed, t + N**delay_exp, checkpoints=[t], threads=threads)
    L, R = obs[:, 0, 0], obs[:, 0, 1]
    B = (L > N - k - N**w) & (R <= N - k + N**w)
    ev = float(np.mean((H >= t + N**delay_exp) & B))
    return ev, _binom_se(ev, reps)


# -- auxiliary processes --------------------------------------------------------

def _equilibrate(ranks, start, n, Q, rng):
    seg = np.sort(ranks[start : start + n])
    if n > 1 and seg[0] != seg[-1]:
        w = _kernels.mallows_rankings(n, Q, rng.random((1, n)))[0]
        ranks[start : start + n] = seg[w - 1]


def auxiliary_identity_mc(S: int, R: int, M: int, t: float, p: float, Q: float, x: float, y: float,
                          reps: int = 10_000, seed=0, threads: int | None = None) -> IdentityEstimate:
    """Both sides of the particle-hole versus two-species identity by simulation.

    Left: particles on ``[-S-R; 0]``, holes on ``[1; S+M]``; bring
    ``[-S; S+M]`` and then ``[-S-R; 0]`` into Q-equilibrium, run for ``t``
    and test ``L > x, R <= y``.  Right: first class particles at ``<= x``,
    second class on ``(x; y]``, holes beyond; run for ``t``, bring
    ``[-S-R; 0]`` and then ``[-S; S+M]`` into Q-equilibrium and test that
    every first class particle sits at ``> 0`` and every hole at ``<= 0``.
    """
    if x > y:
        raise ValueError("need x <= y")
    a, b = -S - R, S + M
    sites = np.arange(a, b + 1)
    c0 = np.where(sites <= 0, 0, 1).astype(np.int64)
    d0 = np.where(sites <= x, 0, np.where(sites <= y, 1, 2)).astype(np.int64)
    seeds = replica_seeds(seed, reps)

    def one(i, s):
        ss = np.random.SeedSequence(int(s))
        r_pre, r_post, s_lhs, s_rhs = ss.spawn(4)
        rng = np.random.default_rng(r_pre)
        c = c0.copy()
        _equilibrate(c, -S - a, S + M + S + 1, Q, rng)
        _equilibrate(c, 0, -a + 1, Q, rng)
        _kernels.run_walled_until(c, a, p, Q, 0.0, t, int(s_lhs.generate_state(1)[0]))
        part = sites[c == 0]
        hole = sites[c == 1]
        lhs = (part.size == 0 or part.min() > x) and (hole.size == 0 or hole.max() <= y)
        d = d0.copy()
        _kernels.run_walled_until(d, a, p, Q, 0.0, t, int(s_rhs.generate_state(1)[0]))
        rng = np.random.default_rng(r_post)
        _equilibrate(d, 0, -a + 1, Q, rng)
        _equilibrate(d, -S - a, S + M + S + 1, Q, rng)
        rhs = bool(np.all(sites[d == 0] > 0) and np.all(sites[d == 2] <= 0))
        return lhs, rhs

    res = np.array(_run_parallel(one, seeds, threads), dtype=float).reshape(reps, 2)
    lhs, rhs = res.mean(axis=0)
    return IdentityEstimate(float(lhs), _binom_se(lhs, reps), float(rhs), _binom_se(rhs, reps), reps,
                            {"S": S, "R": R, "M": M, "t": t, "p": p, "Q": Q, "x": x, "y": y})


# -- pathwise inequalities ------------------------------------------------------

def pathwise_suite(N: int, k: int, p: float, t: float, reps: int, seed=0, threads: int | None = None,
                   rule: str = "monotone"):
    """Coupled runs of ``xi0, xi1, zeta0, zeta1`` and the shifted step.

    Returns a dict with violation counts of (i) order preservation,
    (ii) the particle comparison behind ``h <= H``, (iii) domination of
    ``xi0`` by the shifted step and (iv) ``zeta1`` behind ``xi1``, plus
    the number of runs where ``h <= H`` failed for the observed hitting
    times.  ``rule`` picks the graphical construction (see
    :mod:`asep_cutoff.dynamics`); with ``"colored"`` and ``Q > 0`` the
    comparisons are not expected to hold.
    """
    if rule not in ("colored", "monotone"):
        raise ValueError(f"unknown rule {rule!r}")
    code = _kernels.COLORED if rule == "colored" else _kernels.MONOTONE
    rate = p if rule == "colored" else 1.0
    names = ["xi0", "xi1", "zeta0", "zeta1", "step_shifted"]
    cfgs = [make_named_config(nm, N, k) for nm in names]
    Q = (1 - p) / p
    seeds = replica_seeds(seed, reps)
    margin0 = int(2 * rate * t + 10 * math.sqrt(rate * t + 1) + 16 + N)

    def build(margin):
        lo, hi = 1 - margin, N + margin
        nbuf = hi - lo + 1
        xs = np.empty((5, nbuf), np.int64)
        sites = np.arange(lo, hi + 1)
        for i, c in enumerate(cfgs):
            if i < 2:
                occ = np.zeros(nbuf, np.int64)
                occ[(sites >= 1) & (sites <= N)] = c.occ
            else:
                occ = c.materialize(lo, hi).astype(np.int64)
            xs[i] = 1 - occ
        tg = np.empty((2, nbuf), np.int64)
        tg[0] = xs[1]
        tg[1] = xs[3]
        return xs, lo, tg

    lts = np.array([-1, -1, 1, 1, 0], np.int64)
    rts = np.array([-1, -1, 0, 0, 1], np.int64)
    walled = np.array([True, True, False, False, False])
    from_left = np.array([True, True, True, True, False])

    def one(i, s):
        margin = margin0
        while True:
            xs, lo, tg = build(margin)
            viol, h_xi, h_zeta, status = _kernels.pathwise_suite(
                xs, lo, walled, 1, N, lts, rts, from_left, p, Q, t, k, tg, int(s), code)
            if status == _kernels.OK:
                return viol, h_xi, h_zeta
            margin *= 2

    res = _run_parallel(one, seeds, threads)
    viol = np.sum([r[0] for r in res], axis=0)
    order_fail = 0
    for _, h_xi, h_zeta in res:
        # H observed (>= 0) must not precede h
        if h_zeta >= 0 and (h_xi < 0 or h_xi > h_zeta):
            order_fail += 1
    return {
        "order": int(viol[0]),
        "h_le_H_particles": int(viol[1]),
        "step_domination": int(viol[2]),
        "zeta1_behind_xi1": int(viol[3]),
        "h_le_H_times": order_fail,
        "reps": reps,
        "rule": rule,
    }


# -- reports ----------------------------------------------------------------

def write_csv(rows, columns, fh=None) -> str:
    """Write dict rows with a fixed column order; returns the CSV text."""
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
    wr.writeheader()
    for r in rows:
        wr.writerow({c: ("" if r.get(c) is None else (f"{r[c]:.10g}" if isinstance(r[c], float) else r[c]))
                     for c in columns})
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def profile_report(config: dict) -> dict:
    """Run the sandwich sweep described by ``config`` and merge the results.

    Keys: ``N``, ``k``, ``p``, ``c_grid``, ``reps``, ``seed`` and optionally
    ``l``, ``exact`` (bool, small ``N`` only), ``threads``.  The report holds
    one ``tv_curve`` row per ``c`` with lower and upper bounds and the
    prediction ``1 - F_GUE(c f(k/N))``, plus a manifest of all inputs.
    """
    required = ("N", "k", "p", "c_grid", "reps", "seed")
    missing = [key for key in required if key not in config]
    if missing:
        raise ValueError(f"missing config keys: {missing}")
    N, k, p = int(config["N"]), int(config["k"]), float(config["p"])
    if not 1 <= k < N:
        raise ValueError("need 1 <= k < N")
    if not 0.5 < p <= 1:
        raise ValueError("p must lie in (1/2, 1]")
    c_grid = [float(c) for c in config["c_grid"]]
    reps, seed = int(config["reps"]), int(config["seed"])
    threads = config.get("threads")
    manifest = {"version": __version__, "config": config}
    if not c_grid:
        return {"manifest": manifest, "tv_curve": []}
    up = tv_upper_bound_mc(N, k, p, c_grid, reps, seed, threads=threads)
    lo = tv_lower_bound_mc(N, k, p, c_grid, config.get("l"), reps, seed + 1, threads=threads)
    ex = None
    if config.get("exact"):
        ex = exact_mixing_curve(N, k, p, [e.t for e in up])
    fa = f_alpha(k / N)
    rows = []
    for i, (u, lw) in enumerate(zip(up, lo)):
        rows.append({
            "c": u.c, "t": u.t, "lower": lw.lower, "lower_se": lw.lower_se,
            "upper": u.upper, "upper_se": u.upper_se,
            "exact": None if ex is None else ex[i].exact,
            "predicted": 1.0 - f_gue(u.c * fa),
        })
    return {"manifest": manifest, "tv_curve": rows}


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=float)
