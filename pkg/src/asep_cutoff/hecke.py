"""Exact Hecke-algebra computations on small symmetric groups.

A probability element ``sum_w kappa_w T_w`` of the Hecke algebra of
``S_{a;b}`` encodes a random permutation.  Permutations are one-line
tuples: ``w[i]`` is the color at position ``a + i``.  The left action of a
generator ``T_s`` (``s`` the transposition of positions ``z, z+1``) is

* ``T_s T_w = T_{ws}`` when ``w(z) < w(z+1)`` (the length goes up),
* ``T_s T_w = (1-Q) T_w + Q T_{ws}`` otherwise,

where ``ws`` is ``w`` with positions ``z, z+1`` exchanged.  Read
probabilistically, left multiplication by ``T_s`` is one update of colored
ASEP at bond ``z``, so in a product the left factor acts later.

Elements are stored as dense weight vectors over a lexicographic table of
``S_n`` (at most ``7! = 5040`` entries by default).
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from ._util import as_generator
from .stationary import MallowsSpec, normalizer
from .uniformization import transient

__all__ = [
    "DEFAULT_CAP",
    "PermTable",
    "perm_table",
    "HeckeElement",
    "inversions",
    "reduced_word",
    "reduced_words",
    "basis",
    "identity_element",
    "random_probability_element",
    "apply_generator",
    "apply_word",
    "multiply",
    "involution",
    "mallows_element",
    "walk_law",
    "distribution_identity_check",
    "corollary_event_check",
    "verification_record",
]

DEFAULT_CAP = 5040


def inversions(w) -> int:
    """Inversion count ``#{i < j : w(i) > w(j)}``."""
    w = np.asarray(w)
    return int(np.sum(w[:, None] > w[None, :], where=np.triu(np.ones((len(w), len(w)), bool), 1)))


class PermTable:
    """All permutations of ``1..n`` with the index maps used by the engine.

    Attributes
    ----------
    perms : ndarray, shape (n!, n)
        One-line permutations in lexicographic order.
    length : ndarray
        Inversion counts.
    swap : ndarray, shape (n-1, n!)
        ``swap[z, i]`` indexes ``perms[i]`` with positions ``z, z+1`` exchanged.
    descent : ndarray of bool, shape (n-1, n!)
        ``perms[i][z] > perms[i][z+1]``.
    inverse : ndarray
        Index of the inverse permutation.
    """

    def __init__(self, n: int):
        self.n = n
        self.perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64).reshape(-1, n)
        self.size = len(self.perms)
        radix = n + 1
        weights = radix ** np.arange(n - 1, -1, -1, dtype=np.int64)
        codes = self.perms @ weights
        order = np.argsort(codes)
        sorted_codes = codes[order]

        def lookup(arr):
            return order[np.searchsorted(sorted_codes, arr @ weights)]

        self._lookup = lookup
        self.length = np.array([inversions(w) for w in self.perms], dtype=np.int64) if n else np.zeros(1, np.int64)
        self.swap = np.empty((max(n - 1, 0), self.size), dtype=np.int64)
        self.descent = np.empty((max(n - 1, 0), self.size), dtype=bool)
        for z in range(n - 1):
            sw = self.perms.copy()
            sw[:, [z, z + 1]] = sw[:, [z + 1, z]]
            self.swap[z] = lookup(sw)
            self.descent[z] = self.perms[:, z] > self.perms[:, z + 1]
        inv = np.empty_like(self.perms)
        rows = np.arange(self.size)[:, None]
        inv[rows, self.perms - 1] = np.arange(1, n + 1)[None, :]
        self.inverse = lookup(inv)
        self.identity_index = 0
        # spanning tree for reduced-word evaluation: parent removes the first descent
        self.parent = np.full(self.size, -1, dtype=np.int64)
        self.parent_gen = np.full(self.size, -1, dtype=np.int64)
        for i in range(self.size):
            d = np.flatnonzero(self.descent[:, i]) if n > 1 else []
            if len(d):
                self.parent[i] = self.swap[d[0], i]
                self.parent_gen[i] = d[0]
        children = [[] for _ in range(self.size)]
        for i in range(self.size):
            if self.parent[i] >= 0:
                children[self.parent[i]].append(i)
        self.children = children

    def index(self, w) -> int:
        return int(self._lookup(np.asarray(w, dtype=np.int64)[None, :])[0])


@functools.lru_cache(maxsize=None)
def perm_table(n: int) -> PermTable:
    return PermTable(n)


@dataclass(frozen=True, eq=False)
class HeckeElement:
    """``sum_w weights[w] T_w`` over the permutations of ``[a;b]``."""

    a: int
    b: int
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.b - self.a + 1

    @property
    def table(self) -> PermTable:
        return perm_table(self.n)

    def as_dict(self, tol: float = 0.0) -> dict:
        """Sparse view ``{one-line tuple on [a;b]: weight}``."""
        out = {}
        for i in np.flatnonzero(np.abs(self.weights) > tol):
            out[tuple(int(v) + self.a - 1 for v in self.table.perms[i])] = float(self.weights[i])
        return out

    @classmethod
    def from_dict(cls, a: int, b: int, weights: dict) -> "HeckeElement":
        tab = perm_table(b - a + 1)
        vec = np.zeros(tab.size)
        for w, x in weights.items():
            vec[tab.index(np.asarray(w) - a + 1)] += x
        return cls(a, b, vec)

    def weight(self, w) -> float:
        return float(self.weights[self.table.index(np.asarray(w) - self.a + 1)])

    def total(self) -> float:
        return float(self.weights.sum())

    def is_probability(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.weights >= -tol) and abs(self.total() - 1.0) <= tol)

    def distance(self, other: "HeckeElement") -> float:
        """Sup-norm distance between weight vectors."""
        _same_interval(self, other)
        return float(np.max(np.abs(self.weights - other.weights)))

    def l1(self, other: "HeckeElement") -> float:
        _same_interval(self, other)
        return float(np.sum(np.abs(self.weights - other.weights)))


def _same_interval(h1, h2):
    if (h1.a, h1.b) != (h2.a, h2.b):
        raise ValueError(f"interval mismatch: [{h1.a};{h1.b}] vs [{h2.a};{h2.b}]")


def _check_cap(n, cap):
    if math.factorial(n) > cap:
        raise ValueError(f"{n}! = {math.factorial(n)} exceeds the cap {cap}")


def basis(a: int, b: int, w) -> HeckeElement:
    """The basis element ``T_w``."""
    tab = perm_table(b - a + 1)
    vec = np.zeros(tab.size)
    vec[tab.index(np.asarray(w) - a + 1)] = 1.0
    return HeckeElement(a, b, vec)


def identity_element(a: int, b: int) -> HeckeElement:
    return basis(a, b, range(a, b + 1))


def random_probability_element(a: int, b: int, seed=None, support: int | None = None) -> HeckeElement:
    """Random probability weights (Dirichlet) on ``support`` random permutations."""
    rng = as_generator(seed)
    tab = perm_table(b - a + 1)
    m = tab.size if support is None else min(support, tab.size)
    idx = rng.choice(tab.size, size=m, replace=False)
    vec = np.zeros(tab.size)
    vec[idx] = rng.dirichlet(np.ones(m))
    return HeckeElement(a, b, vec)


def _left_gen(vec, z, Q, tab):
    ps = tab.swap[z]
    down = tab.descent[z]
    moved = vec[ps]
    return np.where(down, (1.0 - Q) * vec + moved, Q * moved)


def apply_generator(s: int, h: HeckeElement, Q: float) -> HeckeElement:
    """``T_s h`` for the transposition ``s`` of positions ``s, s+1``."""
    if not h.a <= s < h.b:
        raise ValueError(f"generator {s} outside [{h.a}; {h.b - 1}]")
    return HeckeElement(h.a, h.b, _left_gen(h.weights, s - h.a, Q, h.table))


def apply_word(word, h: HeckeElement, Q: float) -> HeckeElement:
    """``T_{s_1} ... T_{s_r} h`` for ``word = (s_1, ..., s_r)``."""
    vec = h.weights
    for s in reversed(list(word)):
        if not h.a <= s < h.b:
            raise ValueError(f"generator {s} outside [{h.a}; {h.b - 1}]")
        vec = _left_gen(vec, s - h.a, Q, h.table)
    return HeckeElement(h.a, h.b, vec)


def reduced_word(w, a: int = 1) -> tuple:
    """Bubble-sort reduced word ``(s_1, ..., s_r)`` with ``T_w = T_{s_1} ... T_{s_r}``.

    Generators are named by their left position on ``[a;b]``.
    """
    w = list(w)
    word = []
    # peel generators off the left end: find a descent, undo it, recurse
    while True:
        d = next((z for z in range(len(w) - 1) if w[z] > w[z + 1]), None)
        if d is None:
            break
        word.append(d + a)
        w[d], w[d + 1] = w[d + 1], w[d]
    return tuple(word)


def reduced_words(w, a: int = 1, limit: int = 1000) -> list:
    """All reduced words of ``w`` (up to ``limit``), by descent recursion."""
    out = []

    def rec(v, prefix):
        if len(out) >= limit:
            return
        ds = [z for z in range(len(v) - 1) if v[z] > v[z + 1]]
        if not ds:
            out.append(tuple(prefix))
            return
        for d in ds:
            u = list(v)
            u[d], u[d + 1] = u[d + 1], u[d]
            rec(u, prefix + [d + a])

    rec(list(w), [])
    return out


def multiply(h1: HeckeElement, h2: HeckeElement, Q: float) -> HeckeElement:
    """The product ``h1 h2 = sum_w h1_w (T_w h2)``.

    ``T_w h2`` is evaluated along the reduced word obtained by repeatedly
    removing the first descent, walking a spanning tree of ``S_n`` so each
    node costs one generator application.  Subtrees without weight in
    ``h1`` are skipped.
    """
    _same_interval(h1, h2)
    tab = h1.table
    w1 = h1.weights
    need = w1 != 0
    # mark ancestors of every needed node
    alive = need.copy()
    for i in np.argsort(-tab.length):
        if alive[i] and tab.parent[i] >= 0:
            alive[tab.parent[i]] = True
    acc = np.zeros(tab.size)
    stack = [(tab.identity_index, h2.weights)]
    while stack:
        node, vec = stack.pop()
        if w1[node] != 0:
            acc += w1[node] * vec
        for child in tab.children[node]:
            if alive[child]:
                stack.append((child, _left_gen(vec, tab.parent_gen[child], Q, tab)))
    return HeckeElement(h1.a, h1.b, acc)


def involution(h: HeckeElement) -> HeckeElement:
    """The anti-automorphism ``T_w -> T_{w^{-1}}``."""
    out = np.empty_like(h.weights)
    out[h.table.inverse] = h.weights
    return HeckeElement(h.a, h.b, out)


def mallows_element(a: int, b: int, Q: float, ambient=None) -> HeckeElement:
    """Mallows element of ``[a;b]``, optionally embedded in ``ambient = (A, B)``.

    Weights are the Mallows probabilities; embedded permutations fix every
    position outside ``[a;b]``.
    """
    A, B = ambient if ambient is not None else (a, b)
    if not A <= a <= b <= B:
        raise ValueError("[a;b] must lie inside the ambient interval")
    tab = perm_table(B - A + 1)
    spec = MallowsSpec(a, b, Q)
    vec = np.zeros(tab.size)
    Z = normalizer(spec)
    n = b - a + 1
    top = n * (n - 1) // 2
    base = np.arange(1, B - A + 2)
    for w in itertools.permutations(range(a - A + 1, b - A + 2)):
        full = base.copy()
        full[a - A : b - A + 1] = w
        e = top - inversions(w)
        vec[tab.index(full)] = (Q**e if e else 1.0) * Z
    return HeckeElement(A, B, vec)


def walk_law(a: int, b: int, t: float, p: float, Q: float, cap: int = DEFAULT_CAP,
             eps: float = 1e-12) -> HeckeElement:
    """Exact law of ``W_{a;b}(t)``: rate ``p`` clocks on every bond, started at ``T_id``.

    Uniformization at rate ``p (b - a)`` with the kernel
    ``h -> mean_s T_s h``; the Poisson tail beyond the truncation is below
    ``eps``.
    """
    n = b - a + 1
    _check_cap(n, cap)
    if t < 0:
        raise ValueError("t must be nonnegative")
    h0 = identity_element(a, b)
    if n == 1 or t == 0:
        return h0
    tab = perm_table(n)

    def step(vec):
        acc = np.zeros_like(vec)
        for z in range(n - 1):
            acc += _left_gen(vec, z, Q, tab)
        return acc / (n - 1)

    (vec,) = transient(step, h0.weights, p * (n - 1), [t], eps)
    return HeckeElement(a, b, vec)


def _identity_parts(S, R, M, t, p, Q, cap):
    a, b = -S - R, S + M
    _check_cap(b - a + 1, cap)
    W = walk_law(a, b, t, p, Q, cap)
    M1 = mallows_element(-S - R, 0, Q, (a, b))
    M2 = mallows_element(-S, S + M, Q, (a, b))
    lhs = multiply(W, multiply(M1, M2, Q), Q)
    rhs = involution(multiply(M2, multiply(M1, W, Q), Q))
    return lhs, rhs


def distribution_identity_check(S: int, R: int, M: int, t: float, p: float, Q: float,
                                cap: int = DEFAULT_CAP) -> float:
    """Sup-norm gap between ``W M_{-S-R;0} M_{-S;S+M}`` and ``i(M_{-S;S+M} M_{-S-R;0} W)``."""
    lhs, rhs = _identity_parts(S, R, M, t, p, Q, cap)
    return lhs.distance(rhs)


def corollary_event_check(S: int, R: int, M: int, t: float, p: float, Q: float,
                          x: float, y: float, cap: int = DEFAULT_CAP):
    """Both sides of the particle/hole event identity, from the two exact laws.

    Left: every color ``<= 0`` sits at a position ``> x`` and every color
    ``> 0`` at a position ``<= y`` under ``pi = W M_{-S-R;0} M_{-S;S+M}``.
    Right: every position ``<= 0`` carries a color ``> x`` and every
    position ``> 0`` a color ``<= y`` under
    ``pi_hat = M_{-S;S+M} M_{-S-R;0} W``.
    """
    if x > y:
        raise ValueError("need x <= y")
    a, b = -S - R, S + M
    _check_cap(b - a + 1, cap)
    W = walk_law(a, b, t, p, Q, cap)
    M1 = mallows_element(-S - R, 0, Q, (a, b))
    M2 = mallows_element(-S, S + M, Q, (a, b))
    pi = multiply(W, multiply(M1, M2, Q), Q)
    pi_hat = multiply(M2, multiply(M1, W, Q), Q)
    tab = pi.table
    colors = tab.perms + a - 1
    positions = np.arange(a, b + 1)[None, :]
    left_event = np.all(np.where(colors <= 0, positions > x, positions <= y), axis=1)
    right_event = np.all(np.where(positions <= 0, colors > x, colors <= y), axis=1)
    return float(pi.weights[left_event].sum()), float(pi_hat.weights[right_event].sum())


def verification_record(name: str, params: dict, deviation: float, tol: float) -> str:
    """One JSON line describing an identity check."""
    return json.dumps(
        {"identity": name, "params": params, "deviation": deviation, "tolerance": tol,
         "passed": bool(deviation <= tol)},
        sort_keys=True,
    )
