"""Command-line entry points: solve, converge, ode-verify, figure."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .convergence import (MODES, RefinementPlan, SchemeConfig, default_plan,
                          run_solve, run_study, snap_dt)
from .mesh import build_mesh
from .ode_verify import ODE_PRESETS, verify_method
from .problems import PRESETS, get_problem
from .report import emit_csv, emit_loglog_svg, emit_profile_svg
from .spatial_fd import FdRhs
from .steppers import STEPPERS
from .spatial_ppr import FvRhs

SUBCOMMANDS = ("solve", "converge", "ode-verify", "figure")
FIGURES = ("fig2", "fig4", "fig5", "fig6")
STEPPER_ORDER = ("fe1", "rk2", "rk3", "rk4", "ab2", "ab3", "ab4")
LEGEND_NAMES = {"fe1": "FE1", "rk2": "RK2", "rk3": "RK3", "rk4": "RK4",
                "ab2": "AB2", "ab3": "AB3", "ab4": "AB4"}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    problem: str = "linear"
    spatial: str = "fd1"
    stepper: str = "fe1"
    mode: str = "space_time"
    ncells: tuple | None = None
    eta_space: float | None = None
    eta_time: float | None = None
    horizon: float | None = None
    norm: str = "l2"
    out: str = "out"
    prognostic: str | None = None
    strict: bool = False
    method: str | None = None
    ode: str | None = None
    figure_id: str | None = None
    overrides: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


_CONFIG_KEYS = {
    "problem", "spatial", "stepper", "mode", "ncells", "eta-space",
    "eta-time", "horizon", "norm", "out", "prognostic", "strict",
    "method", "ode", "id",
}


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key = key.strip().replace("_", "-")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def _parse_ncells(text: str) -> tuple:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError:
        raise UsageError(f"--ncells expects integers, got {text!r}") from None


def _build_argparser() -> _Parser:
    parser = _Parser(prog="hypconv", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None)
    common.add_argument("--problem", default=None)
    common.add_argument("--spatial", default=None)
    common.add_argument("--stepper", default=None)
    common.add_argument("--mode", default=None)
    common.add_argument("--ncells", default=None)
    common.add_argument("--eta-space", dest="eta_space", default=None)
    common.add_argument("--eta-time", dest="eta_time", default=None)
    common.add_argument("--horizon", default=None)
    common.add_argument("--norm", default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--prognostic", default=None)
    common.add_argument("--strict", action="store_true", default=None)
    sub.add_parser("solve", parents=[common])
    sub.add_parser("converge", parents=[common])
    ode = sub.add_parser("ode-verify", parents=[common])
    ode.add_argument("--method", default=None)
    ode.add_argument("--ode", default=None)
    fig = sub.add_parser("figure", parents=[common])
    fig.add_argument("--id", dest="figure_id", default=None)
    return parser


def parse_config(argv) -> RunConfig:
    """Resolve a RunConfig: CLI flags over config-file values over defaults."""
    ns = _build_argparser().parse_args(argv)
    if ns.subcommand is None:
        raise UsageError(f"hypconv: choose a subcommand from {SUBCOMMANDS}")
    cfg = RunConfig(subcommand=ns.subcommand)
    file_values = _read_config_file(ns.config) if ns.config else {}

    def pick(flag_key: str, ns_key: str):
        cli_value = getattr(ns, ns_key, None)
        if cli_value is not None:
            return cli_value, True
        if flag_key in file_values:
            return file_values[flag_key], True
        return None, False

    text_fields = [
        ("problem", "problem"), ("spatial", "spatial"), ("stepper", "stepper"),
        ("norm", "norm"), ("out", "out"), ("prognostic", "prognostic"),
        ("method", "method"), ("ode", "ode"), ("id", "figure_id"),
    ]
    for flag_key, attr in text_fields:
        value, given = pick(flag_key, attr)
        if given:
            setattr(cfg, attr, value)
            cfg.overrides[attr] = value
    value, given = pick("mode", "mode")
    if given:
        cfg.mode = value.replace("-", "_")
        cfg.overrides["mode"] = cfg.mode
    value, given = pick("ncells", "ncells")
    if given:
        cfg.ncells = _parse_ncells(value) if isinstance(value, str) else value
        cfg.overrides["ncells"] = cfg.ncells
    for flag_key, attr in (("eta-space", "eta_space"), ("eta-time", "eta_time"),
                           ("horizon", "horizon")):
        value, given = pick(flag_key, attr)
        if given:
            try:
                setattr(cfg, attr, float(value))
            except ValueError:
                raise UsageError(f"--{flag_key} expects a number, got {value!r}") from None
            cfg.overrides[attr] = getattr(cfg, attr)
    value, given = pick("strict", "strict")
    if given:
        cfg.strict = value in (True, "true", "1", "yes")

    if cfg.subcommand in ("solve", "converge"):
        if cfg.problem not in PRESETS:
            raise UsageError(f"unknown problem {cfg.problem!r}; choose from {sorted(PRESETS)}")
        try:
            SchemeConfig.from_token(cfg.spatial, cfg.prognostic)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if cfg.stepper not in STEPPERS:
            raise UsageError(f"unknown stepper {cfg.stepper!r}; choose from {sorted(STEPPERS)}")
        if STEPPERS[cfg.stepper].implicit:
            raise UsageError(f"{cfg.stepper} is implicit; PDE runs take explicit steppers")
        if cfg.mode not in MODES:
            raise UsageError(f"unknown mode {cfg.mode!r}; choose from {MODES}")
    elif cfg.subcommand == "ode-verify":
        if cfg.method is None or cfg.method not in STEPPERS:
            raise UsageError(f"--method must be one of {sorted(STEPPERS)}")
        if cfg.ode is None or cfg.ode not in ODE_PRESETS:
            raise UsageError(f"--ode must be one of {sorted(ODE_PRESETS)}")
    elif cfg.subcommand == "figure":
        if cfg.figure_id not in FIGURES:
            raise UsageError(f"--id must be one of {FIGURES}")
    return cfg


def _study_from_config(cfg: RunConfig):
    prob = get_problem(cfg.problem)
    scheme = SchemeConfig.from_token(cfg.spatial, cfg.prognostic)
    plan = default_plan(
        cfg.problem, cfg.spatial, cfg.stepper, cfg.mode,
        n_cells_seq=cfg.ncells, eta_space=cfg.eta_space,
        eta_time=cfg.eta_time, t_horizon=cfg.horizon,
    )
    return prob, scheme, plan


def cmd_solve(cfg: RunConfig) -> int:
    prob, scheme, plan = _study_from_config(cfg)
    n = plan.n_cells_seq[0]
    length = plan.domain[1] - plan.domain[0]
    dt = snap_dt(plan.eta_space * length / n, plan.t_horizon)
    res = run_solve(prob, scheme, cfg.stepper, n, dt, plan.t_horizon)
    print(f"problem={cfg.problem} spatial={cfg.spatial} stepper={cfg.stepper} "
          f"n={n} dt={dt:.8g} T={plan.t_horizon:.8g} "
          f"l2={res.error_l2:.8e} linf={res.error_linf:.8e} "
          f"stable={str(res.stable).lower()}")
    if not res.stable and cfg.strict:
        return 2
    return 0


def cmd_converge(cfg: RunConfig) -> int:
    prob, scheme, plan = _study_from_config(cfg)
    result = run_study(plan, prob, scheme, cfg.stepper, norm=cfg.norm or "l2")
    outdir = Path(cfg.out)
    stem = f"{cfg.problem}_{cfg.spatial}_{cfg.stepper}_{cfg.mode}"
    csv_path = emit_csv(result, outdir / f"{stem}.csv")
    xs, ys = result.fit_points()
    if xs.size:
        name = LEGEND_NAMES.get(cfg.stepper, cfg.stepper)
        emit_loglog_svg([(name, xs, ys)],
                        [result.gamma] if result.gamma else [],
                        outdir / f"{stem}.svg",
                        title=stem,
                        xlabel="dt" if cfg.mode == "time_only" else "dx",
                        ylabel=f"{result.norm} norm")
    slope = "n/a" if result.slope is None else f"{result.slope:.4f}"
    print(f"{stem}: slope={slope} gamma={result.gamma} -> {csv_path}")
    if cfg.strict and any(not lv.stable for lv in result.levels):
        return 2
    return 0


def cmd_ode_verify(cfg: RunConfig) -> int:
    report = verify_method(cfg.method, cfg.ode)
    ok = report["slope_ok"] and report["coefficient_ok"] is not False
    coeff = f"coeff={report['coefficient']:.6g}"
    if report["expected_coefficient"] is not None:
        coeff += f" (expect {report['expected_coefficient']:.6g})"
    print(f"{'PASS' if ok else 'FAIL'} method={report['method']} ode={report['ode']} "
          f"slope={report['slope']:.4f} (expect {report['expected_slope']}) {coeff}")
    return 0 if ok else 1


def _figure_studies(spatial: str, outdir: Path, strict: bool) -> int:
    """Emit the three-mode, two-problem, seven-stepper panel set."""
    status = 0
    for problem in ("linear", "nonlinear"):
        prob = get_problem(problem)
        for mode in MODES:
            series = []
            guides = set()
            for stepper in STEPPER_ORDER:
                scheme = SchemeConfig.from_token(spatial)
                plan = default_plan(problem, spatial, stepper, mode)
                result = run_study(plan, prob, scheme, stepper)
                emit_csv(result, outdir / f"{problem}_{spatial}_{stepper}_{mode}.csv")
                xs, ys = result.fit_points()
                if xs.size:
                    series.append((LEGEND_NAMES[stepper], xs, ys))
                    guides.add(result.gamma)
                if strict and any(not lv.stable for lv in result.levels):
                    status = 2
            if series:
                emit_loglog_svg(
                    series, sorted(g for g in guides if g),
                    outdir / f"{problem}_{spatial}_{mode}.svg",
                    title=f"{problem} / {spatial} / {mode.replace('_', ' ')}",
                    xlabel="dt" if mode == "time_only" else "dx",
                    ylabel="l2 norm")
    return status


def reproduce_figure(figure_id: str, outdir, strict: bool = False) -> int:
    """Re-run the study matrix behind one figure and emit CSV/SVG files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if figure_id == "fig2":
        prob = get_problem("constant-advection")
        scheme = SchemeConfig.from_token("fd1")
        mesh = build_mesh(2**8)
        rows = []
        for dt in (2e-3, 1e-4):
            res = run_solve(prob, scheme, "fe1", 2**8, dt, 1.0)
            exact = prob.exact(mesh.vertices, 1.0)
            emit_profile_svg(
                [(f"numerical dt={dt:g}", mesh.vertices, res.state.data),
                 ("exact", mesh.vertices, exact)],
                outdir / f"fig2_dt{dt:g}.svg",
                title=f"constant advection at T=1, dx=1/256, dt={dt:g}")
            rows.append((dt, res.error_l2, res.error_linf))
        lines = ["dt,error_l2,error_linf"]
        lines += [f"{dt:g},{l2:.17g},{li:.17g}" for dt, l2, li in rows]
        (outdir / "fig2_errors.csv").write_text("\n".join(lines) + "\n", newline="\n")
        print(f"fig2: l2(dt=2e-3)={rows[0][1]:.6e} l2(dt=1e-4)={rows[1][1]:.6e}")
        return 0
    spatial = {"fig4": "fd1", "fig5": "ppr", "fig6": "ppr-mono"}[figure_id]
    return _figure_studies(spatial, outdir, strict)


def cmd_figure(cfg: RunConfig) -> int:
    return reproduce_figure(cfg.figure_id, cfg.out, cfg.strict)


def main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    handlers = {
        "solve": cmd_solve,
        "converge": cmd_converge,
        "ode-verify": cmd_ode_verify,
        "figure": cmd_figure,
    }
    return handlers[cfg.subcommand](cfg)


if __name__ == "__main__":
    sys.exit(main())
