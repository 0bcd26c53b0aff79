"""The GUE Tracy-Widom distribution and the cutoff scaling functions.

``F_GUE(s) = det(I - K_Ai)`` on ``L^2(s, inf)`` with the Airy kernel.  Two
independent evaluations are provided: a Nystrom discretization of the
Fredholm determinant (:func:`f_gue`) and the truncated alternating series of
``n``-fold integrals (:func:`f_gue_series`), which serves as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    "AI0",
    "AIP0",
    "AIRY_RANGE",
    "AIRY_SWITCH",
    "airy",
    "airy_series",
    "airy_asymptotic",
    "airy_kernel",
    "QuadratureSpec",
    "quadrature_nodes",
    "kernel_matrix",
    "f_gue",
    "f_gue_series",
    "series_remainder_bound",
    "f_gue_table",
    "f_alpha",
    "g_time",
    "StepScaling",
    "CorollaryScaling",
    "corollary_rescale",
    "normalization_ratio",
]

_LD = np.longdouble
AI0 = _LD("0.355028053887817239260063186004")
AIP0 = _LD("-0.258819403792806798405183560189")
AIRY_RANGE = 20.0
AIRY_SWITCH = 8.0
_SQRT_PI = _LD("1.77245385090551602729816748334")
_PI_4 = _LD("0.785398163397448309615660845820")


def airy_series(x):
    """``(Ai, Ai')`` from the Maclaurin series, summed in extended precision.

    Accurate to about ``1e-12`` absolute for ``|x| <= 8``; cancellation grows
    like ``exp(2/3 |x|^1.5)`` beyond.
    """
    x = np.asarray(x, dtype=_LD)
    x3 = x**3
    f = np.ones_like(x)
    a = np.ones_like(x)
    g = x.copy()
    b = x.copy()
    fp = x**2 / 2
    c = fp.copy()
    gp = np.ones_like(x)
    d = np.ones_like(x)
    for k in range(1, 120):
        a = a * x3 / ((3 * k - 1) * (3 * k))
        b = b * x3 / ((3 * k) * (3 * k + 1))
        d = d * x3 / ((3 * k - 2) * (3 * k))
        f = f + a
        g = g + b
        gp = gp + d
        if k >= 2:
            c = c * x3 / ((3 * k - 3) * (3 * k - 1))
            fp = fp + c
        if k > 8 and np.all(np.abs(a) + np.abs(b) + np.abs(c) + np.abs(d) < 1e-22):
            break
    ai = AI0 * f + AIP0 * g
    aip = AI0 * fp + AIP0 * gp
    return ai, aip


def _uv(K):
    u = [_LD(1)]
    v = [_LD(1)]
    for k in range(1, K + 1):
        u.append(u[-1] * _LD((6 * k - 5) * (6 * k - 3) * (6 * k - 1)) / _LD(216 * k * (2 * k - 1)))
        v.append(-u[-1] * _LD(6 * k + 1) / _LD(6 * k - 1))
    return np.array(u, dtype=_LD), np.array(v, dtype=_LD)


_U, _V = _uv(40)


def _trunc(coef, zeta, sign_alt):
    # sum_k (+-1)^k coef_k / zeta^k up to the smallest term
    out = np.zeros_like(zeta)
    for i, z in np.ndenumerate(zeta):
        total = _LD(0)
        prev = np.inf
        for k in range(len(coef)):
            term = coef[k] / z**k * (sign_alt**k)
            if abs(term) > prev:
                break
            total += term
            prev = abs(term)
        out[i] = total
    return out


def airy_asymptotic(x):
    """``(Ai, Ai')`` from the large-``|x|`` expansions (optimally truncated)."""
    x = np.asarray(x, dtype=_LD)
    ai = np.empty_like(x)
    aip = np.empty_like(x)
    pos = x > 0
    if np.any(pos):
        xp = x[pos]
        z = _LD(2) / 3 * xp**_LD(1.5)
        e = np.exp(-z) / (2 * _SQRT_PI)
        ai[pos] = e / xp**_LD(0.25) * _trunc(_U, z, -1)
        aip[pos] = -e * xp**_LD(0.25) * _trunc(_V, z, -1)
    neg = ~pos
    if np.any(neg):
        xn = -x[neg]
        z = _LD(2) / 3 * xn**_LD(1.5)
        even_u = _trunc(_U[0::2], z**2, -1)
        odd_u = _trunc(_U[1::2], z**2, -1) / z
        even_v = _trunc(_V[0::2], z**2, -1)
        odd_v = _trunc(_V[1::2], z**2, -1) / z
        ph = z - _PI_4
        ai[neg] = (np.cos(ph) * even_u + np.sin(ph) * odd_u) / (_SQRT_PI * xn**_LD(0.25))
        aip[neg] = xn**_LD(0.25) / _SQRT_PI * (np.sin(ph) * even_v - np.cos(ph) * odd_v)
    return ai, aip


def airy(x, extended: bool = False):
    """Airy function and its derivative for ``|x| <= 20``.

    Maclaurin series for ``|x| <= 8`` and asymptotic expansions beyond.  With
    ``extended`` the results stay in ``np.longdouble``.

    Raises
    ------
    ValueError
        Outside the documented range or for non-finite input.
    """
    xa = np.asarray(x, dtype=_LD)
    if not np.all(np.isfinite(xa)) or np.any(np.abs(xa) > AIRY_RANGE):
        raise ValueError(f"airy is only supported on [-{AIRY_RANGE}, {AIRY_RANGE}]")
    ai = np.empty_like(xa)
    aip = np.empty_like(xa)
    inner = np.abs(xa) <= AIRY_SWITCH
    if np.any(inner):
        ai[inner], aip[inner] = airy_series(xa[inner])
    if np.any(~inner):
        ai[~inner], aip[~inner] = airy_asymptotic(xa[~inner])
    if not extended:
        ai, aip = ai.astype(float), aip.astype(float)
    if np.ndim(x) == 0:
        return ai[()], aip[()]
    return ai, aip


def _kernel_from(x, y, ax, apx, ay, apy):
    diff = x - y
    same = diff == 0
    safe = np.where(same, 1, diff)
    off = (ax * apy - ay * apx) / safe
    diag = apx**2 - x * ax**2
    return np.where(same, diag, off)


def airy_kernel(x, y):
    """``K(x, y) = (Ai(x) Ai'(y) - Ai(y) Ai'(x)) / (x - y)``, diagonal by continuity."""
    ax, apx = airy(x, extended=True)
    ay, apy = airy(y, extended=True)
    xl, yl = np.asarray(x, _LD), np.asarray(y, _LD)
    out = _kernel_from(xl, yl, ax, apx, ay, apy).astype(float)
    return out[()] if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class QuadratureSpec:
    """Nodes for integrals over ``(s, inf)``.

    ``map="exp"`` (default) applies Gauss-Legendre in ``u`` and maps
    ``x = s - scale * log(u)``, which clusters nodes near ``s`` where the
    kernel is largest; ``u`` stops where ``x`` reaches ``max(s, 0) + upper``.
    ``map="truncate"`` uses Gauss-Legendre directly on
    ``[s, max(s, 0) + upper]``, split into ``panels`` equal pieces.  The
    Airy kernel is below ``1e-30`` beyond ``x = 12``.
    """

    m: int = 60
    map: str = "exp"
    upper: float = 14.0
    scale: float = 3.0
    panels: int = 1

    def __post_init__(self):
        if self.m < 4:
            raise ValueError("need at least 4 nodes")
        if self.map not in ("truncate", "exp"):
            raise ValueError(f"unknown map {self.map!r}")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")


def quadrature_nodes(s: float, quad: QuadratureSpec):
    """Nodes and weights (extended precision) approximating ``int_s^inf``."""
    hi = max(s, 0.0) + quad.upper
    t, w = leggauss(quad.m)
    t = t.astype(_LD)
    w = w.astype(_LD)
    if quad.map == "truncate":
        edges = np.linspace(s, hi, quad.panels + 1)
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            half = _LD(b - a) / 2
            xs.append(_LD(a) + half * (t + 1))
            ws.append(half * w)
        return np.concatenate(xs), np.concatenate(ws)
    # x = s - scale * log(u), u in [umin, 1], Gauss-Legendre in u
    umin = _LD(math.exp(-(hi - s) / quad.scale))
    u = umin + (1 - umin) * (t + 1) / 2
    du = (1 - umin) / 2 * w
    x = _LD(s) - _LD(quad.scale) * np.log(u)
    return x, du * _LD(quad.scale) / u


def kernel_matrix(s: float, quad: QuadratureSpec = QuadratureSpec()):
    """Symmetrized Nystrom matrix ``sqrt(w_i w_j) K(x_i, x_j)``."""
    x, w = quadrature_nodes(s, quad)
    ai, aip = airy(x, extended=True)
    K = _kernel_from(x[:, None], x[None, :], ai[:, None], aip[:, None], ai[None, :], aip[None, :])
    sw = np.sqrt(w)
    A = (sw[:, None] * K * sw[None, :]).astype(float)
    if not np.all(np.isfinite(A)):
        raise FloatingPointError("non-finite Nystrom matrix entries")
    return A


def f_gue(s, quad: QuadratureSpec = QuadratureSpec()):
    """``F_GUE(s)`` for ``s >= -10`` by the Nystrom method.

    The determinant comes from an LU factorization with partial pivoting;
    the value is clipped to ``[0, 1]``.
    """
    if np.ndim(s):
        return np.array([f_gue(v, quad) for v in np.ravel(s)]).reshape(np.shape(s))
    if s < -10:
        raise ValueError("f_gue is only supported for s >= -10")
    A = kernel_matrix(float(s), quad)
    val = np.linalg.det(np.eye(len(A)) - A)
    return float(min(1.0, max(0.0, val)))


_SERIES_QUAD = QuadratureSpec(m=12, map="truncate", upper=14.0, panels=4)


def f_gue_series(s: float, max_terms: int = 3, quad: QuadratureSpec = _SERIES_QUAD) -> float:
    """Truncated series ``sum_{n=0}^{max_terms} (-1)^n / n! int det[K(x_i, x_j)]``.

    The ``n``-fold integrals use tensor-product quadrature (``m^n`` points),
    by default a composite Gauss-Legendre rule unrelated to the Nystrom
    nodes.  ``max_terms`` is the highest ``n`` included, at most 4.
    """
    if not 0 <= max_terms <= 4:
        raise ValueError("max_terms must lie in [0, 4]")
    x, w = quadrature_nodes(float(s), quad)
    ai, aip = airy(x, extended=True)
    K = _kernel_from(x[:, None], x[None, :], ai[:, None], aip[:, None], ai[None, :], aip[None, :])
    total = _LD(1)
    m = len(x)
    for n in range(1, max_terms + 1):
        grids = np.meshgrid(*([np.arange(m)] * n), indexing="ij")
        idx = np.stack([g.ravel() for g in grids], axis=1)
        sub = K[idx[:, :, None], idx[:, None, :]]
        dets = np.linalg.det(sub.astype(float)) if n > 1 else sub[:, 0, 0]
        weight = np.prod(w[idx], axis=1)
        total += _LD((-1) ** n) / math.factorial(n) * np.sum(weight * dets)
    return float(total)


def series_remainder_bound(s: float, max_terms: int, quad: QuadratureSpec = _SERIES_QUAD) -> float:
    """Bound ``e^T T^(n+1) / (n+1)!`` on the neglected terms, ``T = int_s^inf K(x,x)``.

    For a positive semidefinite kernel each determinant is at most the
    product of its diagonal entries, so the ``n``-th term is at most ``T^n/n!``.
    """
    x, w = quadrature_nodes(float(s), quad)
    ai, aip = airy(x, extended=True)
    T = float(np.sum(w * (aip**2 - x * ai**2)))
    n = max_terms + 1
    return math.exp(T) * T**n / math.factorial(n)


def f_gue_table(grid, quad: QuadratureSpec = QuadratureSpec(), monotone_tol: float = 1e-8):
    """``F_GUE`` on a grid with a monotonicity post-check.

    Raises
    ------
    ArithmeticError
        If the values decrease anywhere by more than ``monotone_tol``.
    """
    grid = np.asarray(grid, dtype=float)
    vals = np.array([f_gue(s, quad) for s in grid])
    order = np.argsort(grid)
    drops = -np.diff(vals[order])
    if drops.size and drops.max() > monotone_tol:
        raise ArithmeticError(f"F_GUE table not monotone (drop {drops.max():.3e})")
    return vals


def f_alpha(alpha: float) -> float:
    """``(alpha (1-alpha))^(1/6) / (sqrt(alpha) + sqrt(1-alpha))^(4/3)``."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return (alpha * (1 - alpha)) ** (1 / 6) / (math.sqrt(alpha) + math.sqrt(1 - alpha)) ** (4 / 3)


def g_time(N: int, k: int, c: float, p: float, q: float | None = None) -> float:
    """``((sqrt(k) + sqrt(N-k))^2 + c N^(1/3)) / (p - q)``."""
    q = 1.0 - p if q is None else q
    if p <= q:
        raise ValueError("need p > q")
    if not 1 <= k <= N:
        raise ValueError("need 1 <= k <= N")
    return ((math.sqrt(k) + math.sqrt(N - k)) ** 2 + c * N ** (1 / 3)) / (p - q)


@dataclass(frozen=True)
class StepScaling:
    """Centering and scale of the ``m``-th step particle at time ``t / gamma``."""

    gamma: float
    sigma: float

    def __post_init__(self):
        if not 0.0 < self.sigma < 1.0:
            raise ValueError("sigma must lie in (0, 1)")

    @property
    def c1(self) -> float:
        return 1.0 - 2.0 * math.sqrt(self.sigma)

    @property
    def c2(self) -> float:
        return self.sigma ** (-1 / 6) * (1.0 - math.sqrt(self.sigma)) ** (2 / 3)


@dataclass(frozen=True)
class CorollaryScaling:
    particle_index: float
    threshold: float
    predicted: float
    a: float
    D: float
    N_tilde: float
    sigma: float
    c1: float
    c2: float


def normalization_ratio(N: int, k: int, c: float, c_prime: float = 0.0, kappa: float = 0.0) -> float:
    """``((1-2a)/D^(4/3) + sqrt(a)/D^(5/6)) / c2(sigma)``, which tends to ``f(alpha)``."""
    a = k / N
    D = (math.sqrt(a) + math.sqrt(1 - a)) ** 2
    Nt = D * N + c * N ** (1 / 3)
    sigma = (k + c_prime * N**kappa) / Nt
    num = (1 - 2 * a) / D ** (4 / 3) + math.sqrt(a) / D ** (5 / 6)
    return num / StepScaling(1.0, sigma).c2


def corollary_rescale(N, k, c, p, q=None, kappa=0.0, c_prime=0.0, kappa_prime=0.0,
                      c_dprime=0.0, quad: QuadratureSpec = QuadratureSpec()) -> CorollaryScaling:
    """Particle index, position threshold and limit of the step-fluctuation event.

    The event is ``x^step_{k + c' N^kappa}(g(k, c)) <= N - 2k + c'' N^kappa'``
    with limiting probability ``1 - F_GUE(c f(k/N))``.
    """
    q = 1.0 - p if q is None else q
    if not (0 <= kappa < 1 / 3 and 0 <= kappa_prime < 1 / 3):
        raise ValueError("kappa and kappa' must lie in [0, 1/3)")
    if not 0 < k < N:
        raise ValueError("need 0 < k < N")
    a = k / N
    D = (math.sqrt(a) + math.sqrt(1 - a)) ** 2
    Nt = g_time(N, k, c, p, q) * (p - q)
    m = k + c_prime * N**kappa
    sigma = m / Nt
    sc = StepScaling(p - q, sigma)
    return CorollaryScaling(
        particle_index=m,
        threshold=N - 2 * k + c_dprime * N**kappa_prime,
        predicted=1.0 - f_gue(c * f_alpha(a), quad),
        a=a,
        D=D,
        N_tilde=Nt,
        sigma=sigma,
        c1=sc.c1,
        c2=sc.c2,
    )
