"""Fractional-order system descriptions shared by the exact and approximate solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, StepSingularityError, UnsupportedStructureError

__all__ = ["SystemSpec", "affine_split", "solve_step"]


@dataclass
class SystemSpec:
    """Caputo system ``nabla^alpha x(k) = f(x(k), x(k-1), u(k))``, ``y(k) = g(x(k), u(k))``.

    Parameters
    ----------
    alpha : sequence of float
        One order per pseudo-state component, each in ``(0, 1)``.
    f : callable
        ``f(x, x_prev, u) -> array of shape (n,)``. Dependence on the current
        sample ``x`` must be affine; anything nonlinear may only involve
        ``x_prev`` or ``u``.
    a : int
        Initial instant.
    x_a : sequence of float
        Initial pseudo-state ``x(a)``.
    g : callable, optional
        Output map ``g(x, u)``; the pseudo-state itself when omitted.
    """

    alpha: Sequence[float]
    f: Callable
    a: int
    x_a: Sequence[float]
    g: Optional[Callable] = None

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        self.x_a = np.atleast_1d(np.asarray(self.x_a, dtype=float))
        self.a = int(self.a)
        if self.alpha.ndim != 1 or self.x_a.shape != self.alpha.shape:
            raise ValueError("alpha and x_a must be vectors of equal length")
        if np.any(self.alpha <= 0) or np.any(self.alpha >= 1):
            raise DomainError(f"orders must lie in (0, 1), got {self.alpha}")

    @property
    def n(self) -> int:
        return self.alpha.size

    def rhs(self, x, x_prev, u) -> np.ndarray:
        out = np.atleast_1d(np.asarray(self.f(x, x_prev, u), dtype=float))
        if out.shape != (self.n,):
            raise ValueError(f"f returned shape {out.shape}, expected ({self.n},)")
        return out

    def output(self, x, u) -> np.ndarray:
        if self.g is None:
            return np.array(x, dtype=float)
        return np.atleast_1d(np.asarray(self.g(x, u), dtype=float))


def affine_split(sys: SystemSpec, x_prev, u, k=None):
    """Return ``(c, J)`` with ``f(x, x_prev, u) = c + J @ x`` for the current step.

    The decomposition is read off by probing ``f`` at the origin and the unit
    vectors, then confirmed at two further points. A mismatch means ``f`` is
    not affine in the current sample and is refused.
    """
    n = sys.n
    c = sys.rhs(np.zeros(n), x_prev, u)
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        J[:, i] = sys.rhs(e, x_prev, u) - c
    scale = 1.0 + float(np.max(np.abs(x_prev)))
    for probe in (np.full(n, 0.37 * scale), np.linspace(-scale, 2.0 * scale, n)):
        got = sys.rhs(probe, x_prev, u)
        want = c + J @ probe
        if np.max(np.abs(got - want)) > 1e-9 * (1.0 + np.max(np.abs(got))):
            where = "" if k is None else f" at k={k}"
            raise UnsupportedStructureError(
                "f depends non-affinely on the current pseudo-state" + where
                + "; move nonlinear terms onto x_prev"
            )
    return c, J


def solve_step(M: np.ndarray, rhs: np.ndarray, k=None) -> np.ndarray:
    """Solve the per-step linear system ``M x = rhs``, refusing singular ``M``."""
    if np.linalg.cond(M) > 1e12:
        raise StepSingularityError(f"singular implicit step at k={k}", k=k)
    return np.linalg.solve(M, rhs)
