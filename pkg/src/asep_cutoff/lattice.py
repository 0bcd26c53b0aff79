"""Particle configurations on segments and on the integer line.

Four value types cover every state space used in the package:

* :class:`SegmentConfig` -- particles (1) and holes (0) on ``[lo; hi]``.
* :class:`LineConfig` -- an explicit window plus constant tails on both sides.
* :class:`ColoredConfig` -- a permutation of ``[lo; hi]``; ``colors[i - lo]``
  is the color of the particle sitting at site ``i``.
* :class:`TwoSpeciesConfig` -- first class particles, second class particles
  and holes on a window with constant tails.

All types are immutable; their arrays are flagged read-only.

Text format
-----------
Segments are written as a digit string, optionally prefixed by the index of
the first site: ``"1100"`` lives on ``[1; 4]`` and ``"-2:01"`` on ``[-2; -1]``.
Line configurations wrap a segment string in tail markers,
``"...(0)|1100|(1)..."``; the digit inside each pair of parentheses is the
constant tail value (``"…"`` is accepted in place of ``"..."``).
Two-species configurations use ``1`` (first class), ``2`` (second class) and
``0`` (hole) with the same syntax.  Colored configurations are written as
``"lo:c1 c2 ..."``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum
from functools import total_ordering

import numpy as np

PARTICLE = 1
HOLE = 0


class Species(IntEnum):
    """Two-species occupation codes, ordered by jump priority."""

    HOLE = 0
    FIRST = 1
    SECOND = 2


# Priority ranks used by the dynamics: a lower rank beats a higher rank.
SPECIES_RANK = {Species.FIRST: 0, Species.SECOND: 1, Species.HOLE: 2}


@total_ordering
class _Infinite:
    __slots__ = ("sign",)

    def __init__(self, sign):
        self.sign = sign

    def __eq__(self, other):
        return isinstance(other, _Infinite) and other.sign == self.sign

    def __lt__(self, other):
        if isinstance(other, _Infinite):
            return self.sign < other.sign
        return self.sign < 0

    def __hash__(self):
        return hash(("inf", self.sign))

    def __neg__(self):
        return PLUS_INFINITY if self.sign < 0 else MINUS_INFINITY

    def __repr__(self):
        return "+inf" if self.sign > 0 else "-inf"


MINUS_INFINITY = _Infinite(-1)
PLUS_INFINITY = _Infinite(+1)


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise ValueError("occupancy must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SegmentConfig:
    lo: int
    hi: int
    occ: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "occ", _frozen(self.occ, np.int8))
        if self.hi < self.lo:
            raise ValueError(f"empty segment [{self.lo}; {self.hi}]")
        if len(self.occ) != self.hi - self.lo + 1:
            raise ValueError("occupancy length does not match [lo; hi]")
        if not np.isin(self.occ, (HOLE, PARTICLE)).all():
            raise ValueError("occupancy values must be 0 or 1")

    @classmethod
    def from_string(cls, text: str) -> "SegmentConfig":
        lo, digits = _split_origin(text.strip(), default_lo=1)
        occ = [int(ch) for ch in digits]
        return cls(lo, lo + len(occ) - 1, occ)

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def n_particles(self) -> int:
        return int(self.occ.sum())

    def __getitem__(self, site: int) -> int:
        if not self.lo <= site <= self.hi:
            raise IndexError(site)
        return int(self.occ[site - self.lo])

    def particle_positions(self) -> np.ndarray:
        """Sites of the particles, labelled from right to left."""
        return (np.flatnonzero(self.occ) + self.lo)[::-1]

    def __eq__(self, other):
        return (
            isinstance(other, SegmentConfig)
            and (self.lo, self.hi) == (other.lo, other.hi)
            and np.array_equal(self.occ, other.occ)
        )

    def __hash__(self):
        return hash((self.lo, self.hi, self.occ.tobytes()))

    def __str__(self):
        digits = "".join(str(int(v)) for v in self.occ)
        return digits if self.lo == 1 else f"{self.lo}:{digits}"

    __repr__ = __str__


@dataclass(frozen=True, eq=False)
class LineConfig:
    """Configuration on Z: ``occ`` over ``[window_lo; window_hi]`` plus tails."""

    window_lo: int
    window_hi: int
    occ: np.ndarray
    left_tail: int
    right_tail: int

    def __post_init__(self):
        object.__setattr__(self, "occ", _frozen(self.occ, np.int8))
        if self.window_hi < self.window_lo - 1:
            raise ValueError("window_hi must be >= window_lo - 1")
        if len(self.occ) != self.window_hi - self.window_lo + 1:
            raise ValueError("occupancy length does not match the window")
        if self.left_tail not in (HOLE, PARTICLE) or self.right_tail not in (HOLE, PARTICLE):
            raise ValueError("tails must be 0 or 1")
        if not np.isin(self.occ, (HOLE, PARTICLE)).all():
            raise ValueError("occupancy values must be 0 or 1")

    @classmethod
    def from_string(cls, text: str) -> "LineConfig":
        left, lo, digits, right = _split_line(text)
        occ = [int(ch) for ch in digits]
        return cls(lo, lo + len(occ) - 1, occ, left, right)

    def __getitem__(self, site: int) -> int:
        if site < self.window_lo:
            return self.left_tail
        if site > self.window_hi:
            return self.right_tail
        return int(self.occ[site - self.window_lo])

    def materialize(self, lo: int, hi: int) -> np.ndarray:
        """Occupancy over ``[lo; hi]`` with tails filled in (writable copy)."""
        out = np.empty(hi - lo + 1, dtype=np.int8)
        sites = np.arange(lo, hi + 1)
        out[sites < self.window_lo] = self.left_tail
        out[sites > self.window_hi] = self.right_tail
        inside = (sites >= self.window_lo) & (sites <= self.window_hi)
        out[inside] = self.occ[sites[inside] - self.window_lo]
        return out

    def with_window(self, lo: int, hi: int) -> "LineConfig":
        """Same configuration, stored on ``[lo; hi]`` (must cover the non-tail part)."""
        core = self.normalized()
        if core.window_hi >= core.window_lo and (core.window_lo < lo or core.window_hi > hi):
            raise ValueError("requested window cuts off non-tail sites")
        return LineConfig(lo, hi, self.materialize(lo, hi), self.left_tail, self.right_tail)

    def normalized(self) -> "LineConfig":
        """Trim tail-valued sites off both ends of the window."""
        occ = self.occ
        a, b = 0, len(occ)
        while a < b and occ[a] == self.left_tail:
            a += 1
        while b > a and occ[b - 1] == self.right_tail:
            b -= 1
        lo = self.window_lo + a
        return LineConfig(lo, lo + (b - a) - 1, occ[a:b], self.left_tail, self.right_tail)

    def balance_point(self) -> int:
        """The Z with #particles below Z == #holes at or above Z.

        Only defined for hole left tails and particle right tails (the spaces
        Omega_Z of positive recurrent line configurations).
        """
        if (self.left_tail, self.right_tail) != (HOLE, PARTICLE):
            raise ValueError("balance point needs a hole left tail and a particle right tail")
        core = self.normalized()
        if core.window_hi < core.window_lo:
            return core.window_lo
        lo = core.window_lo
        occ = core.occ.astype(int)
        particles_below = np.concatenate(([0], np.cumsum(occ)))
        holes_from = np.concatenate((np.cumsum((1 - occ)[::-1])[::-1], [0]))
        hit = np.flatnonzero(particles_below == holes_from)
        return int(lo + hit[0])

    def __eq__(self, other):
        if not isinstance(other, LineConfig):
            return False
        if (self.left_tail, self.right_tail) != (other.left_tail, other.right_tail):
            return False
        a, b = self.normalized(), other.normalized()
        if a.window_hi < a.window_lo and b.window_hi < b.window_lo:
            return self.left_tail == self.right_tail or a.window_lo == b.window_lo
        return (a.window_lo, a.window_hi) == (b.window_lo, b.window_hi) and np.array_equal(
            a.occ, b.occ
        )

    def __hash__(self):
        a = self.normalized()
        return hash((a.window_lo, a.window_hi, a.occ.tobytes(), self.left_tail, self.right_tail))

    def __str__(self):
        digits = "".join(str(int(v)) for v in self.occ)
        return f"...({self.left_tail})|{self.window_lo}:{digits}|({self.right_tail})..."

    __repr__ = __str__


@dataclass(frozen=True, eq=False)
class ColoredConfig:
    lo: int
    hi: int
    colors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "colors", _frozen(self.colors, np.int64))
        if len(self.colors) != self.hi - self.lo + 1:
            raise ValueError("colors length does not match [lo; hi]")
        if not np.array_equal(np.sort(self.colors), np.arange(self.lo, self.hi + 1)):
            raise ValueError("colors must be a permutation of [lo; hi]")

    @classmethod
    def identity(cls, lo: int, hi: int) -> "ColoredConfig":
        return cls(lo, hi, np.arange(lo, hi + 1))

    @classmethod
    def reversal(cls, lo: int, hi: int) -> "ColoredConfig":
        return cls(lo, hi, np.arange(hi, lo - 1, -1))

    @classmethod
    def from_string(cls, text: str) -> "ColoredConfig":
        lo, body = _split_origin(text.strip(), default_lo=1, digits_only=False)
        colors = [int(tok) for tok in body.split()]
        return cls(lo, lo + len(colors) - 1, colors)

    def __eq__(self, other):
        return (
            isinstance(other, ColoredConfig)
            and (self.lo, self.hi) == (other.lo, other.hi)
            and np.array_equal(self.colors, other.colors)
        )

    def __hash__(self):
        return hash((self.lo, self.hi, self.colors.tobytes()))

    def __str__(self):
        return f"{self.lo}:" + " ".join(str(int(c)) for c in self.colors)

    __repr__ = __str__


@dataclass(frozen=True, eq=False)
class TwoSpeciesConfig:
    """First/second class particles and holes; tails are FIRST or HOLE."""

    window_lo: int
    window_hi: int
    occ: np.ndarray
    left_tail: int = Species.HOLE
    right_tail: int = Species.HOLE

    def __post_init__(self):
        object.__setattr__(self, "occ", _frozen(self.occ, np.int8))
        if len(self.occ) != self.window_hi - self.window_lo + 1:
            raise ValueError("occupancy length does not match the window")
        for tail in (self.left_tail, self.right_tail):
            if tail not in (Species.FIRST, Species.HOLE):
                raise ValueError("tails must be FIRST or HOLE")
        if not np.isin(self.occ, list(Species)).all():
            raise ValueError("occupancy values must be Species codes")

    @classmethod
    def from_string(cls, text: str) -> "TwoSpeciesConfig":
        text = text.strip()
        if "|" in text:
            left, lo, digits, right = _split_line(text, alphabet="012")
        else:
            lo, digits = _split_origin(text, default_lo=1, alphabet="012")
            left = right = Species.HOLE
        occ = [int(ch) for ch in digits]
        return cls(lo, lo + len(occ) - 1, occ, left, right)

    @property
    def lo(self) -> int:
        return self.window_lo

    @property
    def hi(self) -> int:
        return self.window_hi

    def counts(self) -> dict:
        return {s: int((self.occ == s).sum()) for s in Species}

    def __eq__(self, other):
        return (
            isinstance(other, TwoSpeciesConfig)
            and (self.window_lo, self.window_hi, self.left_tail, self.right_tail)
            == (other.window_lo, other.window_hi, other.left_tail, other.right_tail)
            and np.array_equal(self.occ, other.occ)
        )

    def __hash__(self):
        return hash((self.window_lo, self.window_hi, self.occ.tobytes()))

    def __str__(self):
        digits = "".join(str(int(v)) for v in self.occ)
        return f"...({int(self.left_tail)})|{self.window_lo}:{digits}|({int(self.right_tail)})..."

    __repr__ = __str__


_ORIGIN = re.compile(r"^(?:(-?\d+):)?(.*)$", re.S)
_LINE = re.compile(r"^(?:\.\.\.|…)?\((\d)\)\|(.*)\|\((\d)\)(?:\.\.\.|…)?$", re.S)


def _split_origin(text, default_lo, digits_only=True, alphabet="01"):
    m = _ORIGIN.match(text)
    lo = int(m.group(1)) if m.group(1) is not None else default_lo
    body = m.group(2)
    if digits_only and (not body or any(ch not in alphabet for ch in body)):
        raise ValueError(f"cannot parse configuration {text!r}")
    return lo, body


def _split_line(text, alphabet="01"):
    m = _LINE.match(text.strip())
    if m is None:
        raise ValueError(f"cannot parse line configuration {text!r}")
    left, right = int(m.group(1)), int(m.group(3))
    body = m.group(2)
    if body == "" or body.endswith(":"):
        lo = int(body[:-1]) if body else 1
        return left, lo, "", right
    lo, digits = _split_origin(body, default_lo=1, alphabet=alphabet)
    return left, lo, digits, right


def parse_config(text: str):
    """Parse any of the textual formats into the matching config type."""
    text = text.strip()
    if "|" in text:
        if "2" in text.split("|")[1].rsplit(":", 1)[-1]:
            return TwoSpeciesConfig.from_string(text)
        return LineConfig.from_string(text)
    if " " in text.split(":", 1)[-1]:
        return ColoredConfig.from_string(text)
    return SegmentConfig.from_string(text)


def make_named_config(name: str, N: int, k: int | None = None):
    """Build one of the distinguished configurations of the cutoff problem.

    Parameters
    ----------
    name : {"xi0", "xi1", "zeta0", "zeta1", "step", "step_shifted"}
        ``xi0``/``xi1`` are the minimal/maximal elements of Omega^{N,k} (packed
        left / packed right); ``zeta0``/``zeta1`` are their counterparts on Z
        (holes on the left, particles beyond ``N``); ``step`` has particles on
        every negative site and ``step_shifted`` on every site ``<= k``.
    N, k : int
        Segment length and particle count. ``step`` ignores both.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if name == "step":
        return LineConfig(0, -1, [], PARTICLE, HOLE)
    if k is None:
        raise ValueError(f"{name} needs a particle count k")
    if name == "step_shifted":
        return LineConfig(k + 1, k, [], PARTICLE, HOLE)
    if not 1 <= k <= N:
        raise ValueError(f"k={k} outside [1; {N}]")
    packed_left = np.r_[np.ones(k, np.int8), np.zeros(N - k, np.int8)]
    packed_right = packed_left[::-1]
    if name == "xi0":
        return SegmentConfig(1, N, packed_left)
    if name == "xi1":
        return SegmentConfig(1, N, packed_right)
    if name == "zeta0":
        return LineConfig(1, N, packed_left, HOLE, PARTICLE)
    if name == "zeta1":
        return LineConfig(1, N, packed_right, HOLE, PARTICLE)
    raise ValueError(f"unknown configuration name {name!r}")


def leftmost_particle(c):
    """Leftmost occupied site; ``MINUS_INFINITY`` for a particle left tail."""
    if isinstance(c, LineConfig):
        if c.left_tail == PARTICLE:
            return MINUS_INFINITY
        hits = np.flatnonzero(c.occ == PARTICLE)
        if len(hits):
            return int(c.window_lo + hits[0])
        return c.window_hi + 1 if c.right_tail == PARTICLE else PLUS_INFINITY
    hits = np.flatnonzero(c.occ == PARTICLE)
    return int(c.lo + hits[0]) if len(hits) else PLUS_INFINITY


def rightmost_hole(c):
    """Rightmost empty site; ``PLUS_INFINITY`` for a hole right tail."""
    if isinstance(c, LineConfig):
        if c.right_tail == HOLE:
            return PLUS_INFINITY
        hits = np.flatnonzero(c.occ == HOLE)
        if len(hits):
            return int(c.window_lo + hits[-1])
        return c.window_lo - 1 if c.left_tail == HOLE else MINUS_INFINITY
    hits = np.flatnonzero(c.occ == HOLE)
    return int(c.lo + hits[-1]) if len(hits) else MINUS_INFINITY


def _suffix_holes(occ):
    return np.cumsum((1 - occ.astype(np.int64))[::-1])[::-1]


def partial_order_leq(a, b) -> bool:
    """``a`` precedes ``b``: every suffix of ``b`` has at most as many holes.

    Both arguments are segments on the same interval with the same number of
    particles, or both are line configurations in the same Omega_Z.
    """
    if isinstance(a, SegmentConfig) and isinstance(b, SegmentConfig):
        if (a.lo, a.hi) != (b.lo, b.hi):
            raise ValueError("configurations live on different segments")
        if a.n_particles != b.n_particles:
            raise ValueError("configurations have different particle counts")
        return bool(np.all(_suffix_holes(b.occ) <= _suffix_holes(a.occ)))
    if isinstance(a, LineConfig) and isinstance(b, LineConfig):
        if a.balance_point() != b.balance_point():
            raise ValueError("line configurations lie in different Omega_Z")
        lo = min(a.window_lo, b.window_lo)
        hi = max(a.window_hi, b.window_hi)
        if hi < lo:
            return True
        return bool(np.all(_suffix_holes(b.materialize(lo, hi)) <= _suffix_holes(a.materialize(lo, hi))))
    raise TypeError("partial order compares two segments or two line configurations")


def project_colors(c: ColoredConfig, k: int) -> SegmentConfig:
    """Colors ``<= k`` become particles, the rest holes."""
    return SegmentConfig(c.lo, c.hi, (c.colors <= k).astype(np.int8))


def project_two_species(c: ColoredConfig, k1: int, k2: int) -> TwoSpeciesConfig:
    """Colors ``<= k1`` first class, ``(k1, k2]`` second class, ``> k2`` holes."""
    if k1 >= k2:
        raise ValueError("need k1 < k2")
    occ = np.full(len(c.colors), Species.HOLE, dtype=np.int8)
    occ[c.colors <= k2] = Species.SECOND
    occ[c.colors <= k1] = Species.FIRST
    return TwoSpeciesConfig(c.lo, c.hi, occ)


def merge_second_class(c: TwoSpeciesConfig) -> SegmentConfig:
    """Forget the distinction between first and second class particles."""
    return SegmentConfig(c.window_lo, c.window_hi, (c.occ != Species.HOLE).astype(np.int8))
