"""Time stepping of finite frequency-distributed models.

Each pole ``-w`` of an approximant carries one auxiliary state obeying the
backward-difference equation ``z(k) - z(k-1) = -w z(k) + v(k)``, whose exact
one-step solution is ``z(k) = (z(k-1) + v(k)) / (1 + w)``. The approximated
fractional sum is ``sum_i c_i z_i(k)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, InstabilityError
from .nabla_calc import backward_diff
from .system import SystemSpec, affine_split, solve_step
from .trace import SignalTrace
from .vecfit import RationalApproximant

__all__ = [
    "FdmState",
    "weight_mu",
    "zero_state",
    "step_operator",
    "simulate_operator",
    "assign_initial_state",
    "simulate_system",
    "caputo_diff_fdm",
]


def weight_mu(alpha: float, omega):
    """Frequency density ``sin(alpha pi) / (omega^alpha pi)`` of ``1/s^alpha``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("weight function is defined for omega > 0 only")
    out = np.sin(alpha * np.pi) / (omega**alpha * np.pi)
    return out[()] if out.ndim == 0 else out


@dataclass
class FdmState:
    """Auxiliary states: ``z[j][i]`` belongs to component ``j`` and pole ``i``."""

    z: list
    k: int

    def copy(self) -> "FdmState":
        return FdmState([zj.copy() for zj in self.z], self.k)


def _check_stable(approx: RationalApproximant) -> None:
    w = approx.poles[1:] if approx.has_integrator else approx.poles
    if np.any(np.abs(1.0 + w) <= 1.0):
        raise InstabilityError(f"pole(s) with |1 + w| <= 1: {w[np.abs(1.0 + w) <= 1.0]}")


def zero_state(approxs: Sequence[RationalApproximant], a: int) -> FdmState:
    return FdmState([np.zeros(ap.poles.size, dtype=complex) for ap in approxs], a)


def step_operator(state: FdmState, approx: RationalApproximant, u_k: float):
    """Advance a single-component state by one instant under input ``u_k``.

    Returns the new state and the approximated sum ``y(k)``.
    """
    _check_stable(approx)
    z = (state.z[0] + u_k) / (1.0 + approx.poles)
    y = np.sum(approx.residues * z).real
    if approx.direct is not None:
        y += approx.direct * u_k
    return FdmState([z], state.k + 1), float(y)


def simulate_operator(approx: RationalApproximant, u: SignalTrace) -> SignalTrace:
    """Approximate fractional sum of ``u`` from rest at ``u.a``.

    ``u`` is read on ``a+1 .. last`` only; the output at ``a`` is zero.
    """
    _check_stable(approx)
    vals = u.window(u.a + 1, u.last)
    div = 1.0 + approx.poles
    z = np.zeros(approx.poles.size, dtype=complex)
    out = np.zeros(len(u))
    d = approx.direct or 0.0
    for m, uk in enumerate(vals, start=1):
        z = (z + uk) / div
        out[m] = np.sum(approx.residues * z).real + d * uk
    return SignalTrace(u.a, out)


def assign_initial_state(x_a, approxs: Sequence[RationalApproximant], a: int = 0) -> FdmState:
    """Place the initial pseudo-state entirely on each integrator column.

    ``z_j(0, a) = x_j(a) / c_{j,0}``; every other auxiliary state starts at
    zero, so ``sum_i c_{j,i} z_j(w_i, a) = x_j(a)``.
    """
    x_a = np.atleast_1d(np.asarray(x_a, dtype=float))
    if x_a.size != len(approxs):
        raise ConfigurationError(f"{x_a.size} initial values for {len(approxs)} approximants")
    state = zero_state(approxs, a)
    for j, (xj, ap) in enumerate(zip(x_a, approxs)):
        if xj == 0:
            continue
        if not ap.has_integrator:
            raise ConfigurationError(
                f"component {j}: nonzero initial state needs an approximant with an "
                "integrator pole (use fit_with_integrator)"
            )
        c0 = ap.residues[0]
        if c0 == 0:
            raise ZeroDivisionError(f"component {j}: integrator residue is zero")
        state.z[j][0] = xj / c0
    return state


def _squeeze(vals: np.ndarray) -> np.ndarray:
    return vals[:, 0] if vals.shape[1] == 1 else vals


def simulate_system(
    sys: SystemSpec,
    u: SignalTrace,
    approxs: Sequence[RationalApproximant],
    horizon: int,
):
    """Simulate ``sys`` with one approximant per pseudo-state component.

    Every step forms the drive ``v = f(x(k), x(k-1), u(k))``, advances all
    auxiliary states with it and rebuilds ``x(k)``. Since ``x(k)`` depends on
    ``v`` through the known gains ``sum_i c_i / (1 + w_i)``, an ``f`` affine in
    ``x(k)`` turns the step into a small linear solve, the same structure
    :func:`~nabla_fdm.nabla_calc.exact_solve` resolves.

    Returns
    -------
    x, y : SignalTrace
        Pseudo-state and output on ``sys.a .. sys.a + horizon``.
    """
    if len(approxs) != sys.n:
        raise ConfigurationError(f"need {sys.n} approximants, got {len(approxs)}")
    for ap in approxs:
        _check_stable(ap)
    a, n = sys.a, sys.n
    u.window(a + 1, a + horizon)
    state = assign_initial_state(sys.x_a, approxs, a)
    divs = [1.0 + ap.poles for ap in approxs]
    gain = np.array(
        [np.sum(ap.residues / dv).real + (ap.direct or 0.0) for ap, dv in zip(approxs, divs)]
    )

    x = np.zeros((horizon + 1, n))
    x[0] = sys.x_a
    ys = [sys.output(x[0], u(a))]
    eye = np.eye(n)
    for m in range(1, horizon + 1):
        k = a + m
        uk = u(k)
        carry = np.array(
            [np.sum(ap.residues * zj / dv).real for ap, zj, dv in zip(approxs, state.z, divs)]
        )
        c, J = affine_split(sys, x[m - 1], uk, k)
        x[m] = solve_step(eye - gain[:, None] * J, carry + gain * c, k)
        v = c + J @ x[m]
        state.z = [(zj + vj) / dv for zj, vj, dv in zip(state.z, v, divs)]
        state.k = k
        ys.append(sys.output(x[m], uk))
    return SignalTrace(a, _squeeze(x)), SignalTrace(a, _squeeze(np.array(ys)))


def caputo_diff_fdm(
    y: SignalTrace, alpha: float, approx_1ma: RationalApproximant
) -> SignalTrace:
    """Caputo difference of a known ``y`` through an order ``1 - alpha`` model.

    The first backward difference of ``y`` drives the model from rest.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"Caputo order must lie in (0, 1), got {alpha}")
    if approx_1ma.alpha is not None and not np.isclose(approx_1ma.alpha, 1.0 - alpha):
        raise ConfigurationError(
            f"approximant has order {approx_1ma.alpha}, expected {1.0 - alpha}"
        )
    return simulate_operator(approx_1ma, backward_diff(y, 1))
