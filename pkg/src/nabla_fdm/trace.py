"""Sequences anchored at an integer initial instant."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import TraceIndexError

__all__ = ["SignalTrace"]


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """A real (or vector) valued sequence on ``k = a, a+1, ..., a+M``.

    ``values[m]`` stores the sample at instant ``a + m``; in particular
    ``values[0]`` is the sample at the initial instant itself. Vector valued
    traces keep one row per instant.

    Samples before ``valid_from`` exist only as placeholders (for instance
    after taking backward differences) and cannot be read.
    """

    a: int
    values: np.ndarray
    valid_from: int = field(default=None)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim == 0 or vals.ndim > 2:
            raise ValueError("trace values must be 1-D or 2-D (instants x channels)")
        if vals.shape[0] < 1:
            raise ValueError("trace must hold at least the sample at a")
        vals.setflags(write=False)
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "values", vals)
        if self.valid_from is None:
            object.__setattr__(self, "valid_from", self.a)
        elif not self.a <= self.valid_from:
            raise ValueError("valid_from must not precede a")

    @classmethod
    def from_function(
        cls, fn: Callable[[int], float], a: int, horizon: int, at_a: float | None = None
    ) -> "SignalTrace":
        """Sample ``fn`` on ``a+1 .. a+horizon``; ``at_a`` overrides ``fn(a)``."""
        ks = range(a, a + horizon + 1)
        vals = [fn(k) for k in ks]
        if at_a is not None:
            vals[0] = at_a
        return cls(a, np.asarray(vals, dtype=float))

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def last(self) -> int:
        """Last stored instant, ``a + M``."""
        return self.a + len(self) - 1

    @property
    def horizon(self) -> int:
        """Number of stored samples after the initial instant."""
        return len(self) - 1

    @property
    def instants(self) -> np.ndarray:
        return np.arange(self.a, self.last + 1)

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def _check(self, k: int) -> None:
        if not self.valid_from <= k <= self.last:
            raise TraceIndexError(
                f"instant {k} outside readable range [{self.valid_from}, {self.last}]"
            )

    def __call__(self, k: int):
        """Sample at instant ``k``."""
        self._check(k)
        return self.values[k - self.a]

    def window(self, k0: int, k1: int) -> np.ndarray:
        """Samples for instants ``k0 .. k1`` inclusive."""
        if k1 < k0:
            return self.values[:0]
        self._check(k0)
        self._check(k1)
        return self.values[k0 - self.a : k1 - self.a + 1]

    def truncate(self, horizon: int) -> "SignalTrace":
        if horizon > self.horizon:
            raise TraceIndexError(f"trace holds only {self.horizon} samples after a")
        return SignalTrace(self.a, self.values[: horizon + 1], self.valid_from)

    def __repr__(self) -> str:
        return f"SignalTrace(a={self.a}, last={self.last}, dim={self.dim})"
