"""Reproducible experiment runs: error tables, the three example systems, inversion."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .fdm_sim import simulate_operator, simulate_system
from .nabla_calc import exact_solve, frac_sum
from .nlt import ContourSpec, TransformFn, inlt_series
from .system import SystemSpec
from .trace import SignalTrace
from .vecfit import (
    RationalApproximant,
    SamplingGrid,
    fit_operator,
    fit_with_integrator,
    initial_poles,
    make_grid,
)

TABLE1_ALPHAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
TABLE_NS = (5, 10, 15, 20)
TABLE2_TS = (3, 6, 9, 11, 12, 15, 16, 18, 21)
# error tables use 6 relocation cycles unless told otherwise
TABLE1_T = 6
# tables start from linearly spaced poles: the slow early cycles this causes
# are what the T sweep is meant to expose (log spacing converges by T = 3)
TABLE_INIT = "linear"


# ---------------------------------------------------------------- inputs


def step_input(a: int, horizon: int, switch: int = 12) -> SignalTrace:
    """0 up to ``a``, then 1 through ``switch``, then -1."""
    return SignalTrace.from_function(
        lambda k: 0.0 if k <= a else (1.0 if k <= switch else -1.0), a, horizon
    )


def sine_input(a: int, horizon: int, amplitude: float = 5.0, c: float = 0.2) -> SignalTrace:
    """``amplitude * sin(c * pi * k)`` on absolute instants ``k``."""
    return SignalTrace.from_function(
        lambda k: amplitude * math.sin(c * math.pi * k), a, horizon
    )


def sawtooth_input(a: int, horizon: int, period: int = 5, amplitude: float = 5.0) -> SignalTrace:
    """Ramp ``amplitude * m / period``, ``m = 0..period-1``, restarting every period.

    The first ramp starts at ``k = a + 1``.
    """
    return SignalTrace.from_function(
        lambda k: amplitude * ((k - a - 1) % period) / period if k > a else 0.0, a, horizon
    )


def csv_input(path, a: int, horizon: int) -> SignalTrace:
    """Read columns ``k, u`` (header row required) covering ``a+1 .. a+horizon``."""
    vals = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vals[int(row["k"])] = float(row["u"])
    missing = [k for k in range(a + 1, a + horizon + 1) if k not in vals]
    if missing:
        raise ConfigurationError(f"{path}: no input sample for k={missing[0]}")
    return SignalTrace.from_function(lambda k: vals.get(k, 0.0), a, horizon)


def parse_input(descriptor: str, a: int, horizon: int) -> SignalTrace:
    """Build an input from ``step[:switch]``, ``sine[:amp[:c]]``,
    ``sawtooth[:period[:amp]]`` or ``csv:PATH``."""
    kind, _, rest = descriptor.partition(":")
    args = [x for x in rest.split(":") if x] if kind != "csv" else [rest]
    try:
        if kind == "step":
            return step_input(a, horizon, *(int(x) for x in args[:1]))
        if kind == "sine":
            return sine_input(a, horizon, *(float(x) for x in args[:2]))
        if kind == "sawtooth":
            nums = [int(x) for x in args[:1]] + [float(x) for x in args[1:2]]
            return sawtooth_input(a, horizon, *nums)
        if kind == "csv" and rest:
            return csv_input(rest, a, horizon)
    except (ValueError, IndexError) as exc:
        raise ConfigurationError(f"bad input descriptor {descriptor!r}: {exc}") from exc
    raise ConfigurationError(
        f"unknown input descriptor {descriptor!r} (step | sine | sawtooth | csv:PATH)"
    )


# ---------------------------------------------------------------- tables


def table1(
    grid: SamplingGrid | None = None,
    alphas: Sequence[float] = TABLE1_ALPHAS,
    Ns: Sequence[int] = TABLE_NS,
    T: int = TABLE1_T,
    init_spacing: str = TABLE_INIT,
    keep: list | None = None,
) -> np.ndarray:
    """Error ``J`` for every (N, alpha); rows follow ``Ns``, columns ``alphas``.

    Every fitted approximant is appended to ``keep`` when a list is given.
    """
    grid = grid or make_grid()
    out = np.empty((len(Ns), len(alphas)))
    for i, N in enumerate(Ns):
        init = initial_poles(grid, N + 1, init_spacing)
        for j, al in enumerate(alphas):
            fit = fit_operator(al, grid, N, T, init=init)
            out[i, j] = fit.J
            if keep is not None:
                keep.append(fit)
    return out


def table2(
    grid: SamplingGrid | None = None,
    Ns: Sequence[int] = TABLE_NS,
    Ts: Sequence[int] = TABLE2_TS,
    alpha: float = 0.5,
    init_spacing: str = TABLE_INIT,
    keep: list | None = None,
) -> np.ndarray:
    """Error ``J`` for every (N, T) at fixed ``alpha``.

    One fit of ``max(Ts)`` cycles per ``N`` suffices: its per-cycle history
    is identical to separate fits stopped at each ``T``.
    """
    grid = grid or make_grid()
    out = np.empty((len(Ns), len(Ts)))
    for i, N in enumerate(Ns):
        fit = fit_operator(alpha, grid, N, max(Ts), init=initial_poles(grid, N + 1, init_spacing))
        out[i] = [fit.history[T - 1] for T in Ts]
        if keep is not None:
            keep.append(fit)
    return out


# ---------------------------------------------------------------- examples


@dataclass
class ExampleResult:
    k: np.ndarray
    u: np.ndarray
    y_exact: np.ndarray
    y_approx: np.ndarray
    approximants: list

    @property
    def eps(self) -> np.ndarray:
        return self.y_exact - self.y_approx

    @property
    def max_abs_error(self) -> float:
        return float(np.max(np.abs(self.eps)))

    @property
    def max_rel_error(self) -> float:
        """Largest error relative to the largest exact magnitude."""
        return self.max_abs_error / float(np.max(np.abs(self.y_exact)))


EXAMPLE_DEFAULTS = {
    1: dict(input="step", horizon=30, x0=0.0),
    2: dict(input="sine:5:0.2", horizon=50, x0=1.0),
    3: dict(input="sawtooth:5:5", horizon=50, x0=1.0),
}


def example_system(n: int, alpha: float, a: int, x0: float) -> SystemSpec:
    """The linear (2) or nonlinear (3) scalar test system."""
    if n == 2:
        return SystemSpec([alpha], lambda x, xp, u: -2.0 * x + u, a, [x0])
    if n == 3:
        return SystemSpec(
            [alpha], lambda x, xp, u: -0.3 * x + 0.5 * np.cos(xp) ** 2 + u, a, [x0]
        )
    raise ValueError(f"no system for example {n}")


def run_example(
    n: int,
    alpha: float = 0.5,
    a: int = 5,
    N: int = 20,
    T: int = 8,
    grid: SamplingGrid | None = None,
    horizon: int | None = None,
    x0: float | None = None,
    input: str | None = None,
) -> ExampleResult:
    """Run example ``n`` with the definition-based and the approximate solver.

    Example 1 is the bare fractional sum from rest. Examples 2 and 3 are
    Caputo systems started from ``x0`` and simulated with an integrator
    approximant.
    """
    if n not in EXAMPLE_DEFAULTS:
        raise ConfigurationError(f"example must be 1, 2 or 3, got {n}")
    dflt = EXAMPLE_DEFAULTS[n]
    horizon = dflt["horizon"] if horizon is None else horizon
    x0 = dflt["x0"] if x0 is None else x0
    u = parse_input(input or dflt["input"], a, horizon)
    grid = grid or make_grid()
    if n == 1:
        if x0 != 0:
            raise ConfigurationError("example 1 is a fractional sum from rest; x0 must be 0")
        approx = fit_operator(alpha, grid, N, T)
        y_exact = frac_sum(u, alpha).values
        y_approx = simulate_operator(approx, u).values
    else:
        sys = example_system(n, alpha, a, x0)
        approx = fit_with_integrator(alpha, grid, N, T)
        y_exact = exact_solve(sys, u, horizon)[1].values
        y_approx = simulate_system(sys, u, [approx], horizon)[1].values
    return ExampleResult(u.instants, u.values, y_exact, y_approx, [approx])


# ---------------------------------------------------------------- inversion


def rational_transform(expr: str) -> TransformFn:
    """Parse a rational expression in ``s``; the region extends to the nearest pole."""
    import sympy as sp

    s = sp.Symbol("s")
    try:
        e = sp.sympify(expr, locals={"s": s, "j": sp.I})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigurationError(f"cannot parse transform {expr!r}: {exc}") from exc
    if not e.free_symbols <= {s}:
        raise ConfigurationError(f"transform may only involve s, got {e.free_symbols}")
    if not e.is_rational_function(s):
        raise ConfigurationError(f"{expr!r} is not rational in s")
    _, den = sp.fraction(sp.together(e))
    roots = np.roots([complex(c) for c in sp.Poly(den, s).all_coeffs()]) if den.has(s) else []
    radius = float(np.min(np.abs(1.0 - np.asarray(roots)))) if len(roots) else math.inf
    f = sp.lambdify(s, e, "numpy")
    return TransformFn(lambda z: np.broadcast_to(f(z), np.shape(z)).astype(complex), radius)


def approximant_transform(approx: RationalApproximant) -> TransformFn:
    radius = float(np.min(np.abs(1.0 + approx.poles)))
    return TransformFn(approx, radius)


def invert(F: TransformFn, ks: Sequence[int], a: int, r: float | None = None, Q: int = 256):
    """Tabulate the inverse transform; returns ``(values, imag, radius_used)``.

    Without an explicit ``r`` the contour radius is 0.5, shrunk to half the
    region of validity when that is smaller.
    """
    if r is None:
        r = min(0.5, 0.5 * F.radius)
    vals, imag = inlt_series(F, ks, a, ContourSpec(r, Q))
    return vals, imag, r


# ---------------------------------------------------------------- output


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(header: Sequence[str], rows, out=None) -> str:
    """RFC 4180 CSV with 17 significant digits; written to ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
