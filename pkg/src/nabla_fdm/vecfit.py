"""Rational approximation of the fractional sum operator ``1/s^alpha`` by vector fitting.

The approximant is a sum of first-order terms ``c_i / (s + w_i)``. Poles are
found iteratively: with trial poles ``-p_i`` fixed, the residues of two
auxiliary functions ``H`` and ``h`` sharing those poles are obtained from one
linear least-squares problem, and the zeros of ``h`` become the next trial
poles. Complex poles always travel in adjacent conjugate pairs, and the
least-squares unknowns for a pair are the real and imaginary parts of the
first member's residue, so every intermediate quantity stays real.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import signal

from .errors import ConditioningError, ConversionError, DomainError, EigenError

logger = logging.getLogger(__name__)

__all__ = [
    "SamplingGrid",
    "PoleSet",
    "AuxSolution",
    "RationalApproximant",
    "target_sum_op",
    "make_grid",
    "initial_poles",
    "assemble_ls",
    "solve_ls",
    "relocate_poles",
    "identify_residues",
    "vector_fit",
    "fit_operator",
    "fit_with_integrator",
    "error_J",
]

REAL, PAIR_FIRST, PAIR_SECOND = 0, 1, 2


# ---------------------------------------------------------------- data types


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Frequencies ``zeta_l`` at which the target is sampled, ``s_l = j zeta_l``."""

    zeta: np.ndarray
    omega_l: float
    omega_h: float

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=float)
        if z.ndim != 1 or z.size < 1:
            raise DomainError("grid needs at least one frequency")
        if np.any(np.diff(z) <= 0):
            raise DomainError("grid frequencies must be strictly increasing")
        if not 0 < self.omega_l < self.omega_h:
            raise DomainError("grid bounds must satisfy 0 < omega_l < omega_h")
        span = (self.omega_h - self.omega_l) * 1e-12
        if z[0] < self.omega_l - span or z[-1] > self.omega_h + span:
            raise DomainError("grid frequencies fall outside [omega_l, omega_h]")
        z.setflags(write=False)
        object.__setattr__(self, "zeta", z)

    @property
    def s(self) -> np.ndarray:
        return 1j * self.zeta

    @property
    def L(self) -> int:
        return self.zeta.size


class PoleSet:
    """Trial poles ``-p_i``, stored as the values ``p_i``.

    Real entries have exactly zero imaginary part. A complex entry is
    immediately followed by its exact conjugate.
    """

    def __init__(self, p: Sequence[complex]):
        p = np.array(p, dtype=complex).ravel()
        kinds = np.zeros(p.size, dtype=int)
        i = 0
        while i < p.size:
            if p[i].imag == 0:
                i += 1
                continue
            if i + 1 >= p.size or p[i + 1] != np.conj(p[i]):
                raise DomainError(
                    f"complex pole {p[i]} is not followed by its conjugate"
                )
            kinds[i], kinds[i + 1] = PAIR_FIRST, PAIR_SECOND
            i += 2
        p.setflags(write=False)
        self.p = p
        self.kinds = kinds

    @classmethod
    def canonical(cls, values: Sequence[complex], rtol: float = 1e-14) -> "PoleSet":
        """Order ``values`` as real poles (ascending) then conjugate pairs.

        Imaginary parts below ``rtol * |p|`` are treated as rounding and
        dropped. Pairs are rebuilt from the upper-half-plane members.
        """
        v = np.asarray(values, dtype=complex).ravel()
        is_real = np.abs(v.imag) <= rtol * np.abs(v)
        reals = np.sort(v[is_real].real)
        upper = v[~is_real & (v.imag > 0)]
        lower = v[~is_real & (v.imag < 0)]
        if upper.size != lower.size:
            raise EigenError("relocated poles are not closed under conjugation")
        upper = upper[np.lexsort((upper.imag, np.abs(upper)))]
        out = list(reals.astype(complex))
        for q in upper:
            out.extend([q, np.conj(q)])
        return cls(out)

    def __len__(self) -> int:
        return self.p.size

    def __repr__(self) -> str:
        return f"PoleSet({self.p!r})"


@dataclass
class AuxSolution:
    """Residues of the auxiliary functions ``H`` (``mu``) and ``h`` (``lam``)."""

    mu: np.ndarray
    lam: np.ndarray
    direct: Optional[float] = None
    rank: Optional[int] = None


@dataclass(eq=False)
class RationalApproximant:
    """``S(s) = sum_i c_i / (s + w_i) [+ d]``.

    ``poles`` holds the ``w_i`` (the pole locations are ``-w_i``). When
    ``has_integrator`` is set, ``poles[0] == 0`` and ``residues[0]`` is the
    integrator weight used to place a nonzero initial state. ``direct`` is a
    feedthrough gain, absent for every approximant of ``1/s^alpha``.
    """

    poles: np.ndarray
    residues: np.ndarray
    direct: Optional[float] = None
    has_integrator: bool = False
    alpha: Optional[float] = None
    J: Optional[float] = None
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=complex).ravel()
        self.residues = np.asarray(self.residues, dtype=complex).ravel()
        if self.poles.shape != self.residues.shape:
            raise ValueError("poles and residues must have equal length")
        if self.has_integrator and self.poles[0] != 0:
            raise ValueError("integrator approximant must list the zero pole first")

    @property
    def N(self) -> int:
        """Degree minus one, matching the indexing ``i = 0..N``."""
        return self.poles.size - 1

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        val = np.sum(self.residues / (s[..., None] + self.poles), axis=-1)
        if self.direct is not None:
            val = val + self.direct
        return val

    def stable(self) -> bool:
        """True when every non-integrator pole has ``Re(w) > 0``."""
        w = self.poles[1:] if self.has_integrator else self.poles
        return bool(np.all(w.real > 0))

    def zpk(self):
        """Zeros ``-wbar_i``, poles ``-w_i`` and gain of the factored form."""
        k = [] if self.direct is None else [self.direct]
        b, a = signal.invres(self.residues, -self.poles, k)
        b = np.trim_zeros(np.real_if_close(b), "f")
        return np.roots(b), -self.poles, b[0] if b.size else 0.0

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "N": self.N,
            "has_integrator": self.has_integrator,
            "direct": self.direct,
            "poles": [[float(w.real), float(w.imag)] for w in self.poles],
            "residues": [[float(c.real), float(c.imag)] for c in self.residues],
            "J": self.J,
            "history": [float(x) for x in self.history],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RationalApproximant":
        poles = [complex(re, im) for re, im in d["poles"]]
        res = [complex(re, im) for re, im in d["residues"]]
        if d.get("N") is not None and d["N"] != len(poles) - 1:
            raise ValueError("N does not match the number of poles")
        return cls(
            poles,
            res,
            direct=d.get("direct"),
            has_integrator=bool(d.get("has_integrator", False)),
            alpha=d.get("alpha"),
            J=d.get("J"),
            history=list(d.get("history", [])),
        )

    def dumps(self) -> str:
        # json writes floats with repr, the shortest string that reads back bit-exact
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def loads(cls, text: str) -> "RationalApproximant":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------- targets and grids


def target_sum_op(alpha: float) -> Callable:
    """Principal branch of ``s -> 1/s^alpha``; the closed negative real axis is refused."""

    def S(s):
        s = np.asarray(s, dtype=complex)
        if np.any((s.imag == 0) & (s.real <= 0)):
            raise DomainError("1/s^alpha is not defined on the non-positive real axis")
        out = s ** (-alpha)
        return out[()] if out.ndim == 0 else out

    return S


def make_grid(omega_l: float = 1e-3, omega_h: float = 1e3, L: int = 100) -> SamplingGrid:
    """``L`` logarithmically spaced frequencies from ``omega_l`` to ``omega_h``."""
    if not 0 < omega_l < omega_h:
        raise DomainError(f"need 0 < omega_l < omega_h, got [{omega_l}, {omega_h}]")
    if L < 2:
        raise DomainError("grid needs L >= 2")
    z = np.logspace(np.log10(omega_l), np.log10(omega_h), L)
    z[0], z[-1] = omega_l, omega_h
    return SamplingGrid(z, omega_l, omega_h)


def initial_poles(grid: SamplingGrid, count: int, spacing: str = "log") -> PoleSet:
    """Real starting poles spread over ``[omega_l, omega_h]``.

    ``spacing`` is ``"log"`` (the default used by the fitting routines) or
    ``"linear"``. Linear spacing crowds the poles at the top of the band, so
    the first cycles spend most of their effort moving them down.
    """
    if spacing == "linear":
        p = np.linspace(grid.omega_l, grid.omega_h, count)
    elif spacing == "log":
        p = np.logspace(np.log10(grid.omega_l), np.log10(grid.omega_h), count)
    else:
        raise ValueError(f"unknown spacing {spacing!r}")
    return PoleSet(p)


# ---------------------------------------------------------------- least squares


def _basis(s: np.ndarray, poles: PoleSet) -> np.ndarray:
    """Partial-fraction columns, with conjugate pairs replaced by sum/difference."""
    B = np.empty((s.size, len(poles)), dtype=complex)
    p, kinds = poles.p, poles.kinds
    for i in range(len(poles)):
        if kinds[i] == REAL:
            B[:, i] = 1.0 / (s + p[i])
        elif kinds[i] == PAIR_FIRST:
            a, b = 1.0 / (s + p[i]), 1.0 / (s + p[i + 1])
            B[:, i] = a + b
            B[:, i + 1] = 1j * a - 1j * b
    return B


def _unrealify(theta: np.ndarray, poles: PoleSet) -> np.ndarray:
    out = theta.astype(complex)
    for i in np.flatnonzero(poles.kinds == PAIR_FIRST):
        z = complex(theta[i], theta[i + 1])
        out[i], out[i + 1] = z, np.conj(z)
    return out


def _stack(A: np.ndarray, y: np.ndarray):
    return np.vstack((A.real, A.imag)), np.concatenate((y.real, y.imag))


def assemble_ls(target, s, poles: PoleSet, with_direct: bool = False):
    """Real regression ``Phi @ theta ~ Y`` for one relocation step.

    Rows are the real parts of all samples followed by the imaginary parts.
    Columns are the ``H`` residues, the direct term of ``H`` when
    ``with_direct`` is set, then the ``h`` residues.
    """
    target = np.asarray(target, dtype=complex).ravel()
    s = np.asarray(s, dtype=complex).ravel()
    if target.shape != s.shape:
        raise ValueError(f"{target.size} target samples for {s.size} frequencies")
    B = _basis(s, poles)
    blocks = [B]
    if with_direct:
        blocks.append(np.ones((s.size, 1), dtype=complex))
    blocks.append(-target[:, None] * B)
    return _stack(np.hstack(blocks), target)


def _check_distinct(poles: PoleSet | None) -> None:
    if poles is None:
        return
    p = poles.p
    gap = np.abs(p[:, None] - p[None, :]) + np.diag(np.full(p.size, np.inf))
    if p.size > 1 and np.min(gap) <= 1e-14 * max(1.0, np.max(np.abs(p))):
        raise ConditioningError("duplicate poles make the basis rank deficient", poles=poles)


def _lstsq(Phi: np.ndarray, Y: np.ndarray, poles=None, strict: bool = True):
    """Least squares by SVD after equilibrating columns to unit norm.

    Returns ``(theta, rank)``. Singular values below the default LAPACK
    cutoff are discarded, giving the minimum-norm solution; with ``strict``
    such numerical rank loss is an error instead.
    """
    _check_distinct(poles)
    norms = np.linalg.norm(Phi, axis=0)
    if np.any(norms == 0):
        raise ConditioningError("regression has an all-zero column", poles=poles)
    theta, _, rank, sv = np.linalg.lstsq(Phi / norms, Y, rcond=None)
    if rank < Phi.shape[1]:
        msg = (
            f"rank-deficient regression (rank {rank} of {Phi.shape[1]}, "
            f"condition {sv[0] / sv[-1]:.2e})"
        )
        if strict:
            raise ConditioningError(msg, poles=poles)
        logger.debug(msg)
    return theta / norms, rank


def solve_ls(
    Phi: np.ndarray,
    Y: np.ndarray,
    poles: PoleSet,
    with_direct: bool = False,
    strict: bool = True,
) -> AuxSolution:
    """Solve the regression of :func:`assemble_ls` and map back to complex residues.

    With ``strict=False`` a numerically rank-deficient ``Phi`` is accepted
    and the minimum-norm solution returned (its rank is kept on the result).
    Exactly repeated poles are refused either way.
    """
    theta, rank = _lstsq(Phi, Y, poles, strict)
    n = len(poles)
    mu = _unrealify(theta[:n], poles)
    direct = float(theta[n]) if with_direct else None
    lam = _unrealify(theta[-n:], poles)
    return AuxSolution(mu, lam, direct, rank)


def relocate_poles(poles: PoleSet, lam: np.ndarray) -> PoleSet:
    """Zeros of ``h(s) = 1 + sum lam_i / (s + p_i)`` as the next trial poles.

    The zeros are the eigenvalues of ``A - b c^T`` for a real realization
    ``(A, b, c)`` of the sum: ``A`` carries ``-p_i`` on the diagonal, or the
    block ``[[x, y], [-y, x]]`` with ``-p_i = x + jy`` for a pair, where ``b``
    has ``(2, 0)`` and ``c`` holds ``(Re lam_i, Im lam_i)``. Zeros in the
    closed right half-plane are mirrored into the left one.
    """
    n = len(poles)
    lam = np.asarray(lam, dtype=complex)
    A = np.zeros((n, n))
    b = np.ones(n)
    c = lam.real.copy()
    for i in range(n):
        q = -poles.p[i]
        if poles.kinds[i] == REAL:
            A[i, i] = q.real
        elif poles.kinds[i] == PAIR_FIRST:
            A[i, i] = A[i + 1, i + 1] = q.real
            A[i, i + 1] = q.imag
            A[i + 1, i] = -q.imag
            b[i], b[i + 1] = 2.0, 0.0
            c[i + 1] = lam[i].imag
    try:
        zeros = np.linalg.eigvals(A - np.outer(b, c))
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigenvalue solver failed: {exc}") from exc
    if not np.all(np.isfinite(zeros)):
        raise EigenError("eigenvalue solver returned non-finite zeros")
    unstable = zeros.real >= 0
    if np.any(unstable):
        logger.debug("mirroring %d right half-plane zeros", int(unstable.sum()))
        zr = np.where(zeros.real > 0, -zeros.real, -np.finfo(float).eps * np.abs(zeros))
        zeros = np.where(unstable, zr + 1j * zeros.imag, zeros)
    return PoleSet.canonical(-zeros)


def _residue_fit(target, s, poles: PoleSet, with_direct: bool):
    B = _basis(s, poles)
    if with_direct:
        B = np.hstack((B, np.ones((s.size, 1))))
    Phi, Y = _stack(B, np.asarray(target, dtype=complex))
    theta, _ = _lstsq(Phi, Y, poles)
    n = len(poles)
    return _unrealify(theta[:n], poles), (float(theta[n]) if with_direct else None)


def _J(target, values) -> float:
    return float(np.sum(np.abs(np.asarray(target) - values) ** 2))


def identify_residues(
    poles: PoleSet,
    grid: SamplingGrid,
    alpha: float | None = None,
    with_direct: bool = False,
    target: Callable | None = None,
) -> RationalApproximant:
    """Least-squares residues (and direct term) for fixed ``poles``.

    The target is ``1/s^alpha`` unless a callable ``target`` is given.
    """
    if target is None:
        target = target_sum_op(alpha)
    f = target(grid.s)
    c, d = _residue_fit(f, grid.s, poles, with_direct)
    approx = RationalApproximant(poles.p.copy(), c, direct=d, alpha=alpha)
    approx.J = _J(f, approx(grid.s))
    return approx


# ---------------------------------------------------------------- iteration


def vector_fit(target_values, grid: SamplingGrid, init: PoleSet, T: int, with_direct=False):
    """Run ``T`` relocation cycles from ``init``.

    Returns
    -------
    poles : PoleSet
        Trial poles after the last cycle.
    history : list of PoleSet
        Poles after each cycle.
    """
    if T < 1:
        raise ValueError("need at least one iteration")
    s = grid.s
    poles, history = init, []
    for t in range(1, T + 1):
        try:
            Phi, Y = assemble_ls(target_values, s, poles, with_direct)
            aux = solve_ls(Phi, Y, poles, with_direct, strict=False)
            poles = relocate_poles(poles, aux.lam)
        except ConditioningError as exc:
            exc.iteration = t
            exc.args = (f"iteration {t}: {exc.args[0]}",)
            raise
        except EigenError as exc:
            exc.iteration = t
            exc.args = (f"iteration {t}: {exc.args[0]}",)
            raise
        history.append(poles)
    return poles, history


def _check_sizes(grid: SamplingGrid, N: int, T: int) -> None:
    if N < 0:
        raise ValueError("N must be non-negative")
    if T < 1:
        raise ValueError("T must be at least 1")
    if not grid.L > 2 * N + 2:
        raise ValueError(f"need L > 2N+2, got L={grid.L} for N={N}")


def fit_operator(
    alpha: float,
    grid: SamplingGrid | None = None,
    N: int = 20,
    T: int = 8,
    init: PoleSet | None = None,
    target: Callable | None = None,
) -> RationalApproximant:
    """Fit ``sum_{i=0}^{N} c_i/(s + w_i)`` to ``1/s^alpha`` on ``grid``.

    Parameters
    ----------
    alpha : float
        Order of the fractional sum.
    grid : SamplingGrid, optional
        Defaults to :func:`make_grid` (100 points on ``[1e-3, 1e3]``).
    N : int
        The model has ``N + 1`` poles.
    T : int
        Number of pole relocation cycles.
    init : PoleSet, optional
        Starting poles; ``N + 1`` log-spaced real poles by default.
    target : callable, optional
        Fit this function of ``s`` instead of ``1/s^alpha``.

    Returns
    -------
    RationalApproximant
        With ``history`` holding the error ``J`` after every cycle.
    """
    grid = make_grid() if grid is None else grid
    _check_sizes(grid, N, T)
    if init is None:
        init = initial_poles(grid, N + 1)
    elif len(init) != N + 1:
        raise ValueError(f"init has {len(init)} poles, expected N+1={N + 1}")
    f = (target or target_sum_op(alpha))(grid.s)
    _, history = vector_fit(f, grid, init, T)
    Js = []
    for poles in history:
        c, _ = _residue_fit(f, grid.s, poles, False)
        Js.append(_J(f, RationalApproximant(poles.p, c)(grid.s)))
    approx = identify_residues(history[-1], grid, alpha, target=target)
    approx.history = Js
    return approx


def _integrator_form(poles: PoleSet, r: np.ndarray, d: float, alpha, grid) -> RationalApproximant:
    w = poles.p
    if np.any(np.abs(w) <= 1e-12 * grid.omega_h):
        raise ConversionError("fitted pole at the origin; cannot split off the integrator")
    c = -r / w
    c0 = d + np.sum(r / w).real
    return RationalApproximant(
        np.concatenate(([0.0], w)),
        np.concatenate(([c0], c)),
        has_integrator=True,
        alpha=alpha,
    )


def fit_with_integrator(
    alpha: float,
    grid: SamplingGrid | None = None,
    N: int = 20,
    T: int = 8,
    init: PoleSet | None = None,
) -> RationalApproximant:
    """Approximant of ``1/s^alpha`` with a forced pole at ``s = 0``.

    ``s^(1-alpha)`` is fitted by ``d + sum_{i=1}^{N} r_i/(s + w_i)`` and the
    result divided by ``s``, giving ``c_0/s + sum c_i/(s + w_i)`` with
    ``c_0 = d + sum r_i/w_i`` and ``c_i = -r_i/w_i``.
    """
    grid = make_grid() if grid is None else grid
    _check_sizes(grid, N, T)
    if not 0 < alpha <= 1:
        raise DomainError(f"integrator variant needs 0 < alpha <= 1, got {alpha}")
    S = target_sum_op(alpha)(grid.s)
    if alpha == 1:
        # s^0 = 1 is met by the direct term alone; relocation would be rank deficient
        approx = RationalApproximant([0.0], [1.0], has_integrator=True, alpha=1.0)
        approx.J = _J(S, approx(grid.s))
        approx.history = [approx.J] * T
        return approx
    if init is None:
        init = initial_poles(grid, N)
    elif len(init) != N:
        raise ValueError(f"init has {len(init)} poles, expected N={N}")
    f = grid.s ** (1.0 - alpha)
    _, history = vector_fit(f, grid, init, T, with_direct=True)
    Js = []
    approx = None
    for poles in history:
        r, d = _residue_fit(f, grid.s, poles, True)
        approx = _integrator_form(poles, r, d, alpha, grid)
        Js.append(_J(S, approx(grid.s)))
    approx.J = Js[-1]
    approx.history = Js
    return approx


def error_J(approx: RationalApproximant, alpha: float, grid: SamplingGrid) -> float:
    """Sum over the grid of ``|1/s^alpha - approx(s)|^2``."""
    return _J(target_sum_op(alpha)(grid.s), approx(grid.s))
