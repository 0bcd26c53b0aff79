"""Transient laws of finite continuous-time chains by uniformization.

If every state leaves at total rate at most ``Lambda``, the semigroup is the
Poisson mixture ``exp(tG) = sum_j Pois(Lambda t; j) P^j`` with the
stochastic kernel ``P = I + G / Lambda``.  Truncating the Poisson sum after
the upper tail drops below ``eps`` gives an error of at most ``eps`` in
total variation.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import poisson

__all__ = ["poisson_weights", "transient"]


def poisson_weights(mean: float, eps: float = 1e-12):
    """Poisson pmf on ``0..J`` where ``J`` is the first index with tail ``<= eps``.

    Returns
    -------
    weights : ndarray
        ``weights[j] = P(Pois(mean) = j)``.
    tail : float
        The neglected mass ``P(Pois(mean) > J)``.
    """
    if mean < 0:
        raise ValueError("mean must be nonnegative")
    if mean == 0:
        return np.ones(1), 0.0
    J = int(poisson.isf(eps, mean)) + 1
    while poisson.sf(J, mean) > eps:
        J += 1
    j = np.arange(J + 1)
    return poisson.pmf(j, mean), float(poisson.sf(J, mean))


def transient(step, v0, rate: float, times, eps: float = 1e-12):
    """Laws ``v0 exp(t G)`` at each of ``times`` (any order).

    Parameters
    ----------
    step : callable
        ``step(v)`` applies the uniformized kernel ``P`` to a law.
    v0 : ndarray
        Initial law.
    rate : float
        Uniformization rate ``Lambda``.
    times : sequence of float
        Nonnegative times.  Evaluation proceeds in increasing order, each
        time propagated from the previous one, so the total truncation
        error is at most ``eps`` per distinct time.

    Returns
    -------
    list of ndarray, aligned with ``times``.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    order = np.argsort(times, kind="stable")
    out = [None] * len(times)
    v = np.asarray(v0, dtype=float)
    t_prev = 0.0
    for i in order:
        dt = times[i] - t_prev
        if dt > 0:
            w, _ = poisson_weights(rate * dt, eps)
            acc = w[0] * v
            cur = v
            for wj in w[1:]:
                cur = step(cur)
                acc = acc + wj * cur
            v = acc
            t_prev = times[i]
        out[i] = v.copy()
    return out
