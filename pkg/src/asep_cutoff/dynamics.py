"""Harris graphical construction and the basic coupling.

A :class:`CouplingEnvironment` stores, for every bond ``z`` (the pair of
sites ``z, z+1``) of a finite range, the event times of a Poisson clock
together with one uniform coin per event.  Evolving any configuration
through the same environment realizes the basic coupling.  Events are kept
in one time-sorted stream; since all times are distinct this is the same as
applying the update rule box by box.

Two update rules are available.  ``"colored"`` uses rate ``p`` clocks: a
higher-priority value on the left always swaps, a lower-priority one swaps
iff ``coin < Q``.  ``"monotone"`` uses rate 1 clocks: a higher-priority
value on the left swaps iff ``coin < p``, a lower-priority one iff
``coin >= p``.  Every single process has the same law under both, and they
coincide when ``Q = 0``.  Only the monotone rule keeps coupled
single-species processes ordered: under the colored rule a coin below ``Q``
swaps ``10`` and ``01`` alike, which exchanges two configurations that
differ at one bond.

Line configurations (infinite tails) are evolved exactly by tracking the
finite window outside of which every bond joins two equal tail values, see
:func:`evolve_line`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .lattice import (
    SPECIES_RANK,
    ColoredConfig,
    LineConfig,
    SegmentConfig,
    Species,
    TwoSpeciesConfig,
)

RULES = ("colored", "monotone")

__all__ = [
    "RULES",
    "SimulationParams",
    "CouplingEnvironment",
    "Timeout",
    "WindowExhausted",
    "sample_environment",
    "line_environment",
    "influence_margin",
    "evolve",
    "evolve_line",
    "coupled_evolve",
    "hitting_time",
    "coalescence_time",
    "trajectory_records",
]


@dataclass(frozen=True)
class SimulationParams:
    """Jump rates: right with ``p``, left with ``q = 1 - p``."""

    p: float

    def __post_init__(self):
        if not 0.5 < self.p <= 1.0:
            raise ValueError(f"p must lie in (1/2, 1], got {self.p}")

    @classmethod
    def from_Q(cls, Q: float) -> "SimulationParams":
        if not 0.0 <= Q < 1.0:
            raise ValueError("Q must lie in [0, 1)")
        return cls(1.0 / (1.0 + Q))

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def Q(self) -> float:
        return self.q / self.p


class WindowExhausted(RuntimeError):
    """A non-tail value reached the edge of the simulated window."""


@dataclass(frozen=True)
class Timeout:
    """Censored hitting time: the event did not happen before ``t_cap``."""

    t_cap: float

    def __float__(self):
        return math.inf


@dataclass(frozen=True, eq=False)
class CouplingEnvironment:
    """Poisson clocks with coins on the bonds ``first_bond .. last_bond``.

    Events are generated in chunks ``(edges[j], edges[j+1]]``; chunk ``j``
    depends only on ``(seed, j)``, so extending the horizon never changes
    events already present.  ``rule`` is ``"colored"`` (clock rate ``p``) or
    ``"monotone"`` (clock rate 1), see the module docstring.
    """

    first_bond: int
    last_bond: int
    p: float
    seed: int
    edges: tuple
    times: np.ndarray = field(repr=False)
    bonds: np.ndarray = field(repr=False)
    coins: np.ndarray = field(repr=False)
    rule: str = "colored"

    @property
    def rate(self) -> float:
        """Clock rate per bond."""
        return self.p if self.rule == "colored" else 1.0

    @property
    def cut(self) -> float:
        """Coin threshold of the update rule."""
        return (1.0 - self.p) / self.p if self.rule == "colored" else self.p

    @property
    def rule_code(self) -> int:
        return _kernels.COLORED if self.rule == "colored" else _kernels.MONOTONE

    @property
    def t_max(self) -> float:
        return self.edges[-1]

    @property
    def n_bonds(self) -> int:
        return max(self.last_bond - self.first_bond + 1, 0)

    def bond_events(self, z: int):
        """Event times and coins of the clock on bond ``z``."""
        sel = self.bonds == z
        return self.times[sel], self.coins[sel]

    def extended(self, t_max: float) -> "CouplingEnvironment":
        """Environment with horizon at least ``t_max``.

        The horizon doubles per added chunk, so chunk boundaries depend only
        on the initial horizon and repeated extensions agree on prefixes.
        """
        env = self
        while env.t_max < t_max:
            env = _append_chunk(env, max(2.0 * env.t_max, 1.0))
        return env

    def to_dict(self) -> dict:
        return {
            "first_bond": self.first_bond,
            "last_bond": self.last_bond,
            "p": self.p,
            "seed": self.seed,
            "edges": list(self.edges),
            "rule": self.rule,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CouplingEnvironment":
        env = sample_environment((d["first_bond"], d["last_bond"]), d["edges"][1], d["seed"], p=d["p"],
                                 rule=d.get("rule", "colored"))
        for edge in d["edges"][2:]:
            env = _append_chunk(env, edge)
        return env

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _chunk(first_bond, last_bond, rate, seed, index, t_a, t_b):
    nb = max(last_bond - first_bond + 1, 0)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))
    count = rng.poisson(rate * (t_b - t_a) * nb) if nb and t_b > t_a else 0
    times = np.sort(rng.uniform(t_a, t_b, count))
    bonds = rng.integers(first_bond, last_bond + 1, count) if count else np.empty(0, np.int64)
    coins = rng.random(count)
    return times, bonds.astype(np.int64), coins


def _append_chunk(env, t_new):
    idx = len(env.edges) - 1
    t, b, c = _chunk(env.first_bond, env.last_bond, env.rate, env.seed, idx, env.t_max, t_new)
    return CouplingEnvironment(
        env.first_bond,
        env.last_bond,
        env.p,
        env.seed,
        env.edges + (float(t_new),),
        np.concatenate((env.times, t)),
        np.concatenate((env.bonds, b)),
        np.concatenate((env.coins, c)),
        env.rule,
    )


def sample_environment(bonds, t_max: float, seed: int, p: float = 1.0,
                       rule: str = "colored") -> CouplingEnvironment:
    """Poisson clocks with uniform coins on an inclusive bond range.

    ``bonds`` is ``(first, last)``; bond ``z`` joins sites ``z`` and ``z+1``.
    The clock rate is ``p`` for the colored rule and 1 for the monotone
    rule.  An empty range (``last < first``) gives an environment without
    events.
    """
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")
    first, last = bonds
    rate = p if rule == "colored" else 1.0
    t, b, c = _chunk(first, last, rate, seed, 0, 0.0, float(t_max))
    return CouplingEnvironment(first, last, p, seed, (0.0, float(t_max)), t, b, c, rule)


def influence_margin(p: float, t: float, eps: float = 1e-12) -> int:
    """Smallest ``d`` with ``(p t)^d / d! <= eps``.

    ``(p t)^d / d!`` bounds the probability that a chain of increasing event
    times links two sites at distance ``d`` within time ``t``.
    """
    lam = p * t
    if lam <= 0:
        return 0
    log_eps = math.log(eps)
    d = 0
    while d * math.log(lam) - math.lgamma(d + 1) > log_eps or d < lam:
        d += 1
    return d


# -- rank encodings --------------------------------------------------------

def _ranks(c):
    if isinstance(c, SegmentConfig):
        return (1 - c.occ).astype(np.int64), c.lo
    if isinstance(c, ColoredConfig):
        return c.colors.astype(np.int64), c.lo
    if isinstance(c, TwoSpeciesConfig):
        lut = np.array([SPECIES_RANK[Species(s)] for s in range(3)], dtype=np.int64)
        return lut[c.occ], c.window_lo
    if isinstance(c, LineConfig):
        return (1 - c.occ).astype(np.int64), c.window_lo
    raise TypeError(f"unsupported configuration type {type(c).__name__}")


_SPECIES_OF_RANK = np.array([Species.FIRST, Species.SECOND, Species.HOLE], dtype=np.int8)


def _tail_ranks(c):
    if isinstance(c, LineConfig):
        return 1 - c.left_tail, 1 - c.right_tail
    return SPECIES_RANK[Species(c.left_tail)], SPECIES_RANK[Species(c.right_tail)]


def _rebuild(c, ranks, lo=None, hi=None):
    if isinstance(c, SegmentConfig):
        return SegmentConfig(c.lo, c.hi, (1 - ranks).astype(np.int8))
    if isinstance(c, ColoredConfig):
        return ColoredConfig(c.lo, c.hi, ranks)
    if isinstance(c, TwoSpeciesConfig):
        lo = c.window_lo if lo is None else lo
        hi = c.window_hi if hi is None else hi
        return TwoSpeciesConfig(lo, hi, _SPECIES_OF_RANK[ranks], c.left_tail, c.right_tail)
    lo = c.window_lo if lo is None else lo
    hi = c.window_hi if hi is None else hi
    return LineConfig(lo, hi, (1 - ranks).astype(np.int8), c.left_tail, c.right_tail)


def _check_horizon(env, t):
    if t > env.t_max:
        raise ValueError(f"time {t} exceeds the environment horizon {env.t_max}")


def _evolve_ranks(ranks, lo, lt, rt, env, t_from, t_to):
    idx0 = int(np.searchsorted(env.times, t_from, side="right"))
    _, status = _kernels.apply_events(
        ranks, lo, lt, rt, env.times, env.bonds, env.coins, idx0, t_from, t_to, env.cut, env.rule_code
    )
    if status != _kernels.OK:
        raise WindowExhausted("a non-tail value reached the environment edge; widen the bond range")


def evolve(c, env: CouplingEnvironment, t: float, t_start: float = 0.0):
    """Apply every event of ``env`` in ``(t_start, t]`` to ``c``.

    Segments, colored and two-species configurations evolve on their own
    interval with reflecting ends, so the environment must cover the bonds
    ``[lo; hi-1]``.  Line configurations use the environment's bonds as the
    whole world: the stored window must lie inside ``[first_bond+1;
    last_bond]``, and :class:`WindowExhausted` is raised if a non-tail value
    would have to leave it.
    """
    _check_horizon(env, t)
    if isinstance(c, LineConfig):
        lo, hi = env.first_bond + 1, env.last_bond
        if c.normalized().window_lo < lo or c.normalized().window_hi > hi:
            raise ValueError("line configuration does not fit inside the environment")
        ranks = (1 - c.materialize(lo, hi)).astype(np.int64)
        lt, rt = _tail_ranks(c)
        _evolve_ranks(ranks, lo, lt, rt, env, t_start, t)
        return _rebuild(c, ranks, lo, hi).normalized()
    ranks, lo = _ranks(c)
    hi = lo + len(ranks) - 1
    if hi > lo and (env.first_bond > lo or env.last_bond < hi - 1):
        raise ValueError("environment bonds do not cover the configuration")
    _evolve_ranks(ranks, lo, -1, -1, env, t_start, t)
    return _rebuild(c, ranks)


def coupled_evolve(cs, env: CouplingEnvironment, t: float, t_start: float = 0.0):
    """Evolve every configuration through the same clocks and coins."""
    spans = {(_ranks(c)[1], _ranks(c)[1] + len(_ranks(c)[0]) - 1) for c in cs if not isinstance(c, LineConfig)}
    for lo, hi in spans:
        if hi > lo and (env.first_bond > lo or env.last_bond < hi - 1):
            raise ValueError("environment bonds do not cover every configuration")
    return [evolve(c, env, t, t_start) for c in cs]


def line_environment(cs, p: float, t: float, seed: int, eps: float = 1e-12,
                     rule: str = "colored") -> CouplingEnvironment:
    """Environment wide enough to couple line and segment configs up to ``t``.

    The bond range extends :func:`influence_margin` beyond the union of the
    non-tail windows, so escaping the range has probability below ``eps``.
    """
    lo, hi = None, None
    for c in cs:
        if isinstance(c, LineConfig):
            core = c.normalized()
            a, b = core.window_lo, max(core.window_hi, core.window_lo)
        else:
            a, b = _ranks(c)[1], _ranks(c)[1] + len(_ranks(c)[0]) - 1
        lo = a if lo is None else min(lo, a)
        hi = b if hi is None else max(hi, b)
    d = influence_margin(p if rule == "colored" else 1.0, t, eps) + 1
    return sample_environment((lo - d, hi + d), t, seed, p=p, rule=rule)


def _line_buffer(c, margin):
    core = c.normalized() if isinstance(c, LineConfig) else c
    lo = core.window_lo - margin
    hi = max(core.window_hi, core.window_lo) + margin
    if isinstance(c, LineConfig):
        ranks = (1 - c.materialize(lo, hi)).astype(np.int64)
    else:
        lut = np.array([SPECIES_RANK[Species(s)] for s in range(3)], dtype=np.int64)
        full = np.full(hi - lo + 1, c.left_tail, dtype=np.int8)
        sites = np.arange(lo, hi + 1)
        full[sites > c.window_hi] = c.right_tail
        inside = (sites >= c.window_lo) & (sites <= c.window_hi)
        full[inside] = c.occ[sites[inside] - c.window_lo]
        ranks = lut[full]
    return ranks, lo


def _initial_margin(p, t):
    return int(2.0 * p * t + 10.0 * math.sqrt(p * t + 1.0) + 16)


def run_line(c, p, t_end, seed, checkpoints=(), m_label=0, target=None, t_cap=0.0):
    """Adaptive-window run of a line configuration; grows the buffer on demand.

    Returns ``(final_ranks, buffer_lo, obs, hit_time)``.  The random stream
    depends only on ``seed``, so reruns after a buffer overflow reproduce
    the same trajectory.
    """
    lt, rt = _tail_ranks(c)
    checkpoints = np.asarray(checkpoints, dtype=float)
    horizon = max(t_end, t_cap, checkpoints.max() if checkpoints.size else 0.0)
    margin = _initial_margin(p, horizon)
    Q = (1.0 - p) / p
    while True:
        ranks, lo = _line_buffer(c, margin)
        if target is not None:
            tgt = _line_buffer_like(target, lo, len(ranks))
        else:
            tgt = np.empty(0, dtype=np.int64)
        cps = checkpoints if checkpoints.size else np.array([t_end])
        obs, hit, _, status = _kernels.run_adaptive(
            ranks, lo, False, 0, 0, lt, rt, p, Q, 0.0, cps, m_label, tgt, t_cap, seed
        )
        if status == _kernels.OK:
            return ranks, lo, obs, hit
        margin *= 2


def _line_buffer_like(target, lo, n):
    if isinstance(target, LineConfig):
        return (1 - target.materialize(lo, lo + n - 1)).astype(np.int64)
    raise TypeError("line targets must be LineConfig")


def _seed_int(seed) -> int:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def evolve_line(c, params: SimulationParams, t: float, seed, region=None):
    """Sample the state at time ``t`` of the dynamics on Z started from ``c``.

    ``c`` is a :class:`LineConfig` or a two-species configuration with tails.
    The simulation is exact: sites outside the evolving non-tail window keep
    their tail values, and bonds between equal tail values are inert, so
    only the window and its two boundary bonds carry clocks.  ``region``
    (``(lo, hi)``) only widens the returned window.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return c
    ranks, lo, _, _ = run_line(c, params.p, t, _seed_int(seed))
    hi = lo + len(ranks) - 1
    out = _rebuild(c, ranks, lo, hi)
    if isinstance(out, LineConfig):
        out = out.normalized()
        if region is not None:
            a = min(region[0], out.window_lo)
            b = max(region[1], out.window_hi)
            out = out.with_window(a, b)
    return out


def hitting_time(c_start, c_target, params: SimulationParams, seed, t_cap: float):
    """First time the configuration started at ``c_start`` equals ``c_target``.

    Segments (and colored or two-species configurations) run through a
    :class:`CouplingEnvironment` whose horizon doubles until the hit or
    ``t_cap``; line configurations use the exact adaptive-window run.
    Returns a float, or :class:`Timeout` when the target is not reached by
    ``t_cap``.
    """
    if isinstance(c_start, LineConfig):
        if c_start.balance_point() != c_target.balance_point():
            raise ValueError("start and target lie in different Omega_Z")
        _, _, _, hit = run_line(c_start, params.p, 0.0, _seed_int(seed), target=c_target, t_cap=t_cap)
        return float(hit) if hit >= 0 else Timeout(t_cap)
    return _segment_match(c_start, c_target, None, params, seed, t_cap, "colored")


def coalescence_time(c1, c2, params: SimulationParams, seed, t_cap: float, rule: str = "monotone"):
    """First time two basically coupled segment configurations agree.

    The default monotone rule keeps ordered pairs ordered, which is what
    makes coalescence comparable with the hitting time of the maximum.
    """
    return _segment_match(c1, None, c2, params, seed, t_cap, rule)


def _segment_match(c_start, c_target, c_other, params, seed, t_cap, rule):
    ranks, lo = _ranks(c_start)
    hi = lo + len(ranks) - 1
    if c_target is not None:
        tgt, lo_t = _ranks(c_target)
        if lo_t != lo or len(tgt) != len(ranks):
            raise ValueError("start and target live on different segments")
        if np.sort(tgt).tolist() != np.sort(ranks).tolist():
            raise ValueError("start and target have different contents")
        other = np.empty(0, dtype=np.int64)
    else:
        tgt = np.empty(0, dtype=np.int64)
        other, lo_o = _ranks(c_other)
        if lo_o != lo or len(other) != len(ranks):
            raise ValueError("configurations live on different segments")
    ref = other if c_target is None else tgt
    if np.array_equal(ranks, ref):
        return 0.0
    horizon = min(t_cap, max(1.0, 4.0 * len(ranks) / params.p))
    env = sample_environment((lo, hi - 1), horizon, _seed_int(seed), p=params.p, rule=rule)
    t_from, idx = 0.0, 0
    while True:
        idx, hit = _kernels.first_match_time(
            ranks, lo, tgt, other, env.times, env.bonds, env.coins, idx, t_from, env.t_max, env.cut,
            env.rule_code,
        )
        if hit >= 0:
            return float(hit) if hit <= t_cap else Timeout(t_cap)
        if env.t_max >= t_cap:
            return Timeout(t_cap)
        t_from = env.t_max
        env = _append_chunk(env, min(t_cap, 2.0 * env.t_max))


def trajectory_records(c, env: CouplingEnvironment, t: float):
    """Per-event replay log of a segment-type configuration.

    Yields text lines ``"time bond coin swapped"`` suitable for diffing two
    runs of the same environment.
    """
    ranks, lo = _ranks(c)
    hi = lo + len(ranks) - 1
    for time, z, coin in zip(env.times, env.bonds, env.coins):
        if time > t:
            break
        swapped = 0
        if lo <= z < hi:
            a, b = ranks[z - lo], ranks[z + 1 - lo]
            if _kernels._swaps(a, b, coin, env.cut, env.rule_code):
                ranks[z - lo], ranks[z + 1 - lo] = b, a
                swapped = 1
        yield f"{time:.17g} {int(z)} {coin:.17g} {swapped}"
