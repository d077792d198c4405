"""Definition-based nabla fractional calculus.

Everything here evaluates the defining convolution sums directly with full
memory. These routines are the reference against which every rational
approximation in the package is checked.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, TraceLengthError
from .system import SystemSpec, affine_split, solve_step
from .trace import SignalTrace

__all__ = ["gl_weights", "frac_sum", "backward_diff", "caputo_diff", "exact_solve"]


def gl_weights(alpha: float, m: int) -> np.ndarray:
    r"""Weights :math:`w_i = (-1)^i \binom{-\alpha}{i}` for ``i = 0..m``.

    Uses the product recursion :math:`w_i = w_{i-1} (\alpha + i - 1) / i`,
    which stays finite long after the Gamma-function form overflows.
    """
    if not alpha > 0:
        raise DomainError(f"order must be positive, got {alpha}")
    if m < 0:
        raise ValueError("m must be non-negative")
    i = np.arange(1, m + 1, dtype=float)
    return np.concatenate(([1.0], np.cumprod((alpha + i - 1.0) / i)))


def _lower_toeplitz(w: np.ndarray) -> np.ndarray:
    return toeplitz(w, np.zeros_like(w))


def frac_sum(f: SignalTrace, alpha: float) -> SignalTrace:
    """Nabla fractional sum of order ``alpha`` with lower limit ``f.a``.

    ``y(k) = sum_{i=0}^{k-a-1} w_i f(k-i)`` for ``k > a``; ``y(a)`` is the
    empty sum and stored as zero. ``f(a)`` itself is never read.
    """
    if f.horizon < 1:
        raise TraceLengthError("fractional sum needs at least one sample after a")
    body = f.window(f.a + 1, f.last)
    w = gl_weights(alpha, f.horizon - 1)
    out = np.zeros_like(f.values)
    out[1:] = _lower_toeplitz(w) @ body
    return SignalTrace(f.a, out)


def backward_diff(f: SignalTrace, n: int = 1) -> SignalTrace:
    """``n``-fold backward difference ``f(k) - f(k-1)``.

    The result keeps the anchor ``a`` but is readable only from
    ``f.valid_from + n`` on.
    """
    if n < 1:
        raise ValueError("difference order must be at least 1")
    start = f.valid_from
    if f.last < start + n:
        raise TraceLengthError(
            f"trace readable on [{start}, {f.last}] is too short for a {n}-th difference"
        )
    vals = f.window(start, f.last)
    d = np.diff(vals, n=n, axis=0)
    pad = np.full((start - f.a + n,) + vals.shape[1:], np.nan)
    return SignalTrace(f.a, np.concatenate((pad, d)), valid_from=start + n)


def caputo_diff(f: SignalTrace, alpha: float) -> SignalTrace:
    """Nabla Caputo difference of order ``0 < alpha < 1`` with lower limit ``f.a``.

    Computed as the order ``1 - alpha`` fractional sum of the first backward
    difference, so ``f(a)`` must be present.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"Caputo order must lie in (0, 1), got {alpha}")
    if f.valid_from != f.a:
        raise TraceLengthError("Caputo difference needs the sample at the initial instant")
    return frac_sum(backward_diff(f, 1), 1.0 - alpha)


def _squeeze(vals: np.ndarray) -> np.ndarray:
    return vals[:, 0] if vals.shape[1] == 1 else vals


def exact_solve(sys: SystemSpec, u: SignalTrace, horizon: int):
    """Step ``sys`` by its definition from ``sys.a`` to ``sys.a + horizon``.

    At every instant the Caputo difference is split into the current
    increment ``x(k) - x(k-1)`` plus the weighted history of earlier
    increments. With ``f`` affine in ``x(k)`` the resulting equation is
    linear in ``x(k)`` and solved exactly.

    Returns
    -------
    x, y : SignalTrace
        Pseudo-state and output on ``sys.a .. sys.a + horizon``. Single
        channel traces are returned 1-D.
    """
    a, n = sys.a, sys.n
    u.window(a + 1, a + horizon)
    weights = [gl_weights(1.0 - al, horizon) for al in sys.alpha]

    x = np.zeros((horizon + 1, n))
    dx = np.zeros((horizon + 1, n))
    x[0] = sys.x_a
    u0 = u(a)
    ys = [sys.output(x[0], u0)]
    eye = np.eye(n)
    for m in range(1, horizon + 1):
        k = a + m
        uk = u(k)
        hist = np.array(
            [weights[j][1:m] @ dx[m - 1 : 0 : -1, j] if m > 1 else 0.0 for j in range(n)]
        )
        c, J = affine_split(sys, x[m - 1], uk, k)
        x[m] = solve_step(eye - J, x[m - 1] - hist + c, k)
        dx[m] = x[m] - x[m - 1]
        ys.append(sys.output(x[m], uk))
    return SignalTrace(a, _squeeze(x)), SignalTrace(a, _squeeze(np.array(ys)))
