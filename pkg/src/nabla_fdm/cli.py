"""Command-line interface: ``nabla-fdm {fit,simulate,table1,table2,example,invert}``.

Exit status is 0 on success, 2 for configuration errors and 3 for numerical
failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import experiments as ex
from .errors import ConfigurationError, NablaError
from .fdm_sim import simulate_system
from .system import SystemSpec
from .vecfit import RationalApproximant, fit_operator, fit_with_integrator, make_grid

log = logging.getLogger("nabla_fdm")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


@dataclass
class ExperimentConfig:
    """Settings shared by all subcommands; unset fields take per-command defaults."""

    alpha: float = 0.5
    wl: float = 1e-3
    wh: float = 1e3
    L: int = 100
    N: int = 20
    T: Optional[int] = None
    a: int = 5
    horizon: Optional[int] = None
    x0: Optional[float] = None
    input: Optional[str] = None
    out: Optional[str] = None
    integrator: bool = False
    feedback: float = 0.0
    approx: Optional[str] = None
    expr: Optional[str] = None
    radius: Optional[float] = None
    Q: int = 256

    def validate(self, where: str = "") -> "ExperimentConfig":
        pre = f"{where}: " if where else ""

        def bad(msg):
            raise ConfigurationError(pre + msg)

        if not self.alpha > 0:
            bad(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.wl < self.wh:
            bad(f"need 0 < wl < wh, got wl={self.wl}, wh={self.wh}")
        if self.N < 0:
            bad("N must be non-negative")
        if not self.L > 2 * self.N + 2:
            bad(f"L > 2N+2 required (L={self.L}, N={self.N}); raise L or lower N")
        if self.T is not None and self.T < 1:
            bad("T must be at least 1")
        if self.horizon is not None and self.horizon < 1:
            bad("horizon must be at least 1")
        if self.Q < 4:
            bad("Q must be at least 4")
        if self.radius is not None and not self.radius > 0:
            bad("radius must be positive")
        if self.input is not None and not self.input.startswith("csv:"):
            try:
                ex.parse_input(self.input, self.a, 1)
            except ConfigurationError as exc:
                bad(str(exc))
        return self

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is not None:
                lines.append(f"{f.name} = {_render(v)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = (p.strip() for p in line.partition("="))
            where = f"{source}:{lineno}"
            if not sep:
                raise ConfigurationError(f"{where}: expected 'key = value'")
            if key not in kinds:
                raise ConfigurationError(f"{where}: unknown key {key!r}")
            try:
                values[key] = _coerce(kinds[key], val)
            except ValueError as exc:
                raise ConfigurationError(f"{where}: {key}: {exc}") from exc
        cfg = cls(**values)
        try:
            return cfg.validate()
        except ConfigurationError as exc:
            raise ConfigurationError(f"{source}: {exc}") from exc


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(kind: str, text: str):
    base = kind.replace("Optional[", "").rstrip("]")
    if base == "bool":
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if base == "int":
        return int(text)
    if base == "float":
        return float(text)
    return text


# ---------------------------------------------------------------- commands


DEFAULT_T = 8


def _grid(cfg):
    return make_grid(cfg.wl, cfg.wh, cfg.L)


def _emit(text: str, cfg) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_fit(cfg: ExperimentConfig) -> int:
    grid = _grid(cfg)
    if cfg.integrator:
        approx = fit_with_integrator(cfg.alpha, grid, cfg.N, cfg.T or DEFAULT_T)
    else:
        approx = fit_operator(cfg.alpha, grid, cfg.N, cfg.T or DEFAULT_T)
    for t, J in enumerate(approx.history, start=1):
        print(f"iteration {t}: J = {J:.6e}", file=sys.stderr)
    print(f"final J = {approx.J:.6e}", file=sys.stderr)
    _emit(approx.dumps() + "\n", cfg)
    return 0


def _load_or_fit(cfg, integrator: bool) -> RationalApproximant:
    if cfg.approx:
        try:
            return RationalApproximant.loads(Path(cfg.approx).read_text())
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigurationError(f"cannot read approximant {cfg.approx}: {exc}") from exc
    fit = fit_with_integrator if integrator else fit_operator
    return fit(cfg.alpha, _grid(cfg), cfg.N, cfg.T or DEFAULT_T)


def cmd_simulate(cfg: ExperimentConfig) -> int:
    """Simulate ``nabla^alpha x = feedback * x + u`` from ``x(a) = x0``."""
    horizon = cfg.horizon or 50
    x0 = cfg.x0 or 0.0
    if not 0 < cfg.alpha < 1:
        raise ConfigurationError("simulate needs 0 < alpha < 1")
    u = ex.parse_input(cfg.input or "step", cfg.a, horizon)
    approx = _load_or_fit(cfg, integrator=cfg.integrator or x0 != 0)
    fb = cfg.feedback
    spec = SystemSpec([cfg.alpha], lambda x, xp, uk: fb * x + uk, cfg.a, [x0])
    x, y = simulate_system(spec, u, [approx], horizon)
    rows = zip(u.instants, u.values, x.values, y.values)
    _emit(ex.write_csv(["k", "u", "x_1", "y_1"], rows), cfg)
    return 0


def cmd_table1(cfg: ExperimentConfig) -> int:
    J = ex.table1(_grid(cfg), T=cfg.T or ex.TABLE1_T)
    header = ["N"] + [f"alpha={al:g}" for al in ex.TABLE1_ALPHAS]
    _emit(ex.write_csv(header, ([N, *row] for N, row in zip(ex.TABLE_NS, J))), cfg)
    return 0


def cmd_table2(cfg: ExperimentConfig) -> int:
    J = ex.table2(_grid(cfg), alpha=cfg.alpha)
    header = ["N"] + [f"T={T}" for T in ex.TABLE2_TS]
    _emit(ex.write_csv(header, ([N, *row] for N, row in zip(ex.TABLE_NS, J))), cfg)
    return 0


def cmd_example(cfg: ExperimentConfig, n: int) -> int:
    res = ex.run_example(
        n, cfg.alpha, cfg.a, cfg.N, cfg.T or DEFAULT_T, _grid(cfg), cfg.horizon, cfg.x0, cfg.input
    )
    rows = zip(res.k, res.u, res.y_exact, res.y_approx, res.eps)
    _emit(ex.write_csv(["k", "u", "y_exact", "y_approx", "eps"], rows), cfg)
    print(
        f"example {n}: max |eps| = {res.max_abs_error:.3e}, "
        f"max relative = {res.max_rel_error:.3e}",
        file=sys.stderr,
    )
    return 0


def cmd_invert(cfg: ExperimentConfig) -> int:
    if cfg.approx:
        F = ex.approximant_transform(_load_or_fit(cfg, False))
    elif cfg.expr:
        F = ex.rational_transform(cfg.expr)
    else:
        raise ConfigurationError("invert needs --expr or --approx")
    ks = np.arange(cfg.a + 1, cfg.a + (cfg.horizon or 10) + 1)
    vals, imag, r = ex.invert(F, ks, cfg.a, cfg.radius, cfg.Q)
    print(f"contour radius {r:g}, max |imag| = {np.max(np.abs(imag)):.3e}", file=sys.stderr)
    _emit(ex.write_csv(["k", "f", "imag", "radius"], zip(ks, vals, imag, [r] * ks.size)), cfg)
    return 0


# ---------------------------------------------------------------- parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for f in fields(ExperimentConfig):
        flag = f"--{f.name}"
        if f.type == "bool":
            common.add_argument(flag, action="store_const", const=True, default=None)
        else:
            typ = {"int": int, "float": float}.get(f.type.replace("Optional[", "").rstrip("]"), str)
            common.add_argument(flag, type=typ, default=None)
    common.add_argument("--x-a", dest="x0", type=float, default=None, help=argparse.SUPPRESS)
    common.add_argument("--config", type=str, default=None, help="flat 'key = value' file")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="nabla-fdm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("fit", "simulate", "table1", "table2", "invert"):
        sub.add_parser(name, parents=[common])
    e = sub.add_parser("example", parents=[common])
    e.add_argument("n", type=int, choices=(1, 2, 3))
    return p


def config_from_args(args) -> ExperimentConfig:
    base = ExperimentConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from exc
        base = ExperimentConfig.from_text(text, args.config)
    given = {
        f.name: getattr(args, f.name)
        for f in fields(ExperimentConfig)
        if getattr(args, f.name, None) is not None
    }
    return dataclasses.replace(base, **given).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        cfg = config_from_args(args)
        if args.command == "example":
            return cmd_example(cfg, args.n)
        return globals()[f"cmd_{args.command}"](cfg)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NablaError, ArithmeticError, np.linalg.LinAlgError) as exc:
        hint = ""
        if getattr(exc, "iteration", None) is not None:
            hint = " (try fewer iterations T or a smaller N)"
        print(f"numerical error: {exc}{hint}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
