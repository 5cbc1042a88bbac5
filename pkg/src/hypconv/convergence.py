"""Refinement studies: solve ladders, error norms, successive differences,
log-log slope fits, and two-term coefficient fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import StateField, UniformMesh, build_mesh
from .problems import ProblemSpec
from .spatial_fd import FdRhs
from .spatial_ppr import FvRhs, integrate_to_coarse, reconstruct
from .steppers import StepperSpec, advance, bootstrap_history, get_stepper

Array = np.ndarray

SPATIAL_TOKENS = ("fd1", "fd2", "fd3", "ppr", "ppr-mono")
MODES = ("space_time", "space_only", "time_only")


@dataclass(frozen=True)
class SchemeConfig:
    """Spatial method plus the prognostic variable it evolves."""

    kind: str                   # "fd" | "ppr"
    order: int = 1              # fd upwind order (1..3)
    monotone: bool = False      # ppr limiter + monotonicity pipeline
    prognostic: str = "point"   # point | cell_average | cell_integrated

    @staticmethod
    def from_token(token: str, prognostic: str | None = None) -> "SchemeConfig":
        t = token.lower()
        if t in ("fd1", "fd2", "fd3"):
            if prognostic not in (None, "point"):
                raise ValueError("finite differences evolve point values")
            return SchemeConfig("fd", order=int(t[2]), prognostic="point")
        if t in ("ppr", "ppr-mono"):
            return SchemeConfig("ppr", monotone=(t == "ppr-mono"),
                                prognostic=prognostic or "cell_average")
        raise ValueError(
            f"unknown spatial method {token!r}; choose from {SPATIAL_TOKENS}"
        )

    @property
    def token(self) -> str:
        if self.kind == "fd":
            return f"fd{self.order}"
        return "ppr-mono" if self.monotone else "ppr"

    @property
    def state_kind(self) -> str:
        return "point_values" if self.kind == "fd" else "cell_averages"

    @property
    def nominal_spatial_order(self) -> int:
        """Formal order used to pick the two-term fit exponent.

        For the parabolic reconstruction this follows the interpolant-order
        bookkeeping (4 for the cell-integrated prognostic, one less for the
        cell-averaged one, and 3 once the limiter pipeline is active); the
        measured slopes are what the fit itself reports.
        """
        if self.kind == "fd":
            return self.order
        if self.monotone:
            return 3
        return 4 if self.prognostic == "cell_integrated" else 3


# Observed effective temporal orders of the monotone pipeline under pure
# time refinement; fourth-order steppers reduce to second.
_MONOTONE_TIME_ORDER = {1: 1, 2: 2, 3: 3, 4: 2}


def expected_gamma(scheme: SchemeConfig, stepper: StepperSpec, mode: str) -> int:
    alpha = scheme.nominal_spatial_order
    beta = stepper.order
    if scheme.kind == "ppr" and scheme.monotone and mode == "time_only":
        beta = _MONOTONE_TIME_ORDER[beta]
    if mode == "space_time":
        return min(alpha, beta)
    if mode == "space_only":
        return alpha
    return beta


@dataclass(frozen=True)
class RefinementPlan:
    """One refinement ladder.

    space_time keeps dt/dx = eta_space constant; space_only fixes
    dt = eta_space*dx_finest and refines the mesh; time_only fixes the mesh
    at n_cells_seq[0] and halves dt from eta_time*dx, n_time_levels times.
    Every dt is snapped down to t_horizon/ceil(t_horizon/dt) so the horizon
    lands exactly on a time level.
    """

    mode: str
    n_cells_seq: tuple
    eta_space: float = 0.25
    eta_time: float = 0.16
    n_time_levels: int = 6
    t_horizon: float = 0.25
    domain: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown refinement mode {self.mode!r}")
        ns = tuple(int(n) for n in self.n_cells_seq)
        if not ns:
            raise ValueError("empty n_cells_seq")
        if self.mode != "time_only":
            for a, b in zip(ns, ns[1:]):
                if b != 2 * a:
                    raise ValueError(
                        f"n_cells_seq must double between levels, got {a} -> {b}"
                    )
        object.__setattr__(self, "n_cells_seq", ns)


def snap_dt(dt: float, t_horizon: float) -> float:
    """Largest step <= dt for which the horizon is an integral number of steps."""
    return t_horizon / math.ceil(t_horizon / dt - 1e-12)


@dataclass
class SolveResult:
    state: StateField
    error_l2: float
    error_linf: float
    stable: bool


def _build_rhs(prob: ProblemSpec, mesh: UniformMesh, scheme: SchemeConfig):
    if scheme.kind == "fd":
        return FdRhs(prob, mesh, scheme.order)
    return FvRhs(prob, mesh, scheme.monotone)


def run_solve(prob: ProblemSpec, scheme: SchemeConfig, stepper: StepperSpec | str,
              n_cells: int, dt: float, t_horizon: float,
              bootstrap: str = "rk_startup",
              domain: tuple = (0.0, 1.0)) -> SolveResult:
    """March one configuration to the horizon and measure errors.

    The initial condition is the exact point values (FD) or exact cell
    averages (FV) at t = 0; errors compare against the same quantity at the
    horizon.  A non-finite state flags the result unstable instead of
    raising.  The cell_integrated prognostic evolves the identical
    normalized trajectory (the steppers are linear in the state, so the
    cell-width scaling commutes) and reports integral-scaled errors.
    """
    spec = stepper if isinstance(stepper, StepperSpec) else get_stepper(stepper)
    if spec.implicit:
        raise ValueError("implicit steppers are not available for PDE runs")
    n_steps = round(t_horizon / dt)
    if abs(n_steps * dt - t_horizon) > 1e-9 * t_horizon:
        raise ValueError(
            f"horizon {t_horizon} is not an integral number of steps of {dt}"
        )
    mesh = build_mesh(n_cells, domain)
    rhs = _build_rhs(prob, mesh, scheme)
    u = np.asarray(rhs.exact_state(0.0), dtype=float)
    cfl = dt * float(np.max(np.abs(prob.dflux_du(u, mesh.centers)))) / mesh.dx
    if cfl >= 1.0:
        raise ValueError(f"CFL number {cfl:.3f} is not < 1")
    hist = None
    if spec.history_depth:
        hist = bootstrap_history(rhs, spec, u, 0.0, dt, bootstrap, rhs.exact_state)
    stable = True
    for i in range(n_steps):
        u = advance(u, i * dt, dt, rhs, spec, hist)
        if not np.all(np.isfinite(u)):
            stable = False
            break
    state = StateField(scheme.state_kind, np.where(np.isfinite(u), u, 0.0),
                       mesh, t_horizon)
    if not stable:
        return SolveResult(state, math.inf, math.inf, False)
    err = u - np.asarray(rhs.exact_state(t_horizon), dtype=float)
    scale = mesh.dx if scheme.prognostic == "cell_integrated" else 1.0
    l2 = scale * math.sqrt(mesh.dx * float(np.sum(err * err)))
    linf = scale * float(np.max(np.abs(err)))
    return SolveResult(state, l2, linf, True)


def _norm(e: Array, dx: float, norm: str) -> float:
    if norm == "l2":
        return math.sqrt(dx * float(np.sum(e * e)))
    if norm == "linf":
        return float(np.max(np.abs(e)))
    raise ValueError(f"unknown norm {norm!r}")


def _restrict_points(u: Array, fine: UniformMesh, coarse: UniformMesh) -> Array:
    if fine.n_cells % coarse.n_cells != 0:
        raise ValueError(
            f"point restriction needs nested meshes; {fine.n_cells} is not a "
            f"multiple of {coarse.n_cells}"
        )
    return u[:: fine.n_cells // coarse.n_cells]


def _restrict_averages(u_bar: Array, fine: UniformMesh, coarse: UniformMesh,
                       monotone: bool) -> Array:
    recon = reconstruct(u_bar, monotone)
    return integrate_to_coarse(recon, fine, coarse) / coarse.dx


def successive_differences(solutions, mode: str, meshes,
                           kind: str = "point_values", monotone: bool = False,
                           norm: str = "l2") -> Array:
    """Norms of differences between consecutive-level solutions.

    time_only levels share one mesh and are differenced pointwise; under
    space_only refinement every level is first restricted to the coarsest
    mesh (nested-point sampling for point values, parabola integration for
    cell averages).
    """
    if len(solutions) < 2:
        raise ValueError("need at least two levels to difference")
    if mode == "time_only":
        mesh = meshes[0]
        restricted = [np.asarray(u, dtype=float) for u in solutions]
    else:
        mesh = meshes[0]
        if kind == "point_values":
            restricted = [_restrict_points(np.asarray(u, dtype=float), m, mesh)
                          for u, m in zip(solutions, meshes)]
        else:
            restricted = [_restrict_averages(np.asarray(u, dtype=float), m, mesh,
                                             monotone)
                          for u, m in zip(solutions, meshes)]
    return np.array([
        _norm(b - a, mesh.dx, norm) for a, b in zip(restricted, restricted[1:])
    ])


def fit_loglog_slope(xs, ys) -> tuple[float, float]:
    """Ordinary least squares of log y against log x."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3:
        raise ValueError(f"need at least 3 points for a slope fit, got {xs.size}")
    if np.any(ys <= 0.0) or np.any(xs <= 0.0):
        raise ValueError("log-log fit requires strictly positive data")
    slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
    return float(slope), float(intercept)


def fit_two_term(xs, ys, gamma: float):
    """Least-squares coefficients [zeta_g, zeta_g1] of z_g*x^g + z_g1*x^(g+1).

    Returns (coefficients, residual) where residual is the l2 norm of the
    misfit; a rank-deficient design (duplicated xs) is rejected.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise ValueError("need at least 2 points for the two-term fit")
    design = np.column_stack([xs**gamma, xs ** (gamma + 1)])
    coeffs, _, rank, _ = np.linalg.lstsq(design, ys, rcond=None)
    if rank < 2:
        raise ValueError("rank-deficient two-term design (duplicate abscissae?)")
    residual = float(np.linalg.norm(design @ coeffs - ys))
    return coeffs, residual


@dataclass
class LevelResult:
    n_cells: int
    dx: float
    dt: float
    error_l2: float
    error_linf: float
    stable: bool
    succ_diff: float | None = None


@dataclass
class StudyResult:
    problem: str
    spatial: str
    stepper: str
    mode: str
    prognostic: str
    norm: str
    eta_space: float
    eta_time: float
    t_horizon: float
    levels: list = field(default_factory=list)
    slope: float | None = None
    intercept: float | None = None
    gamma: int | None = None
    zeta_g: float | None = None
    zeta_g1: float | None = None
    fit_residual: float | None = None

    def fit_points(self):
        """(x, y) pairs actually used for the slope and coefficient fits."""
        xs, ys = [], []
        for lv in self.levels:
            if not lv.stable:
                continue
            if self.mode == "space_time":
                y = lv.error_l2 if self.norm == "l2" else lv.error_linf
                xs.append(lv.dx)
                ys.append(y)
            elif lv.succ_diff is not None:
                xs.append(lv.dx if self.mode == "space_only" else lv.dt)
                ys.append(lv.succ_diff)
        return np.array(xs), np.array(ys)


def run_study(plan: RefinementPlan, prob: ProblemSpec, scheme: SchemeConfig,
              stepper: StepperSpec | str, norm: str = "l2") -> StudyResult:
    """Execute a refinement ladder and fit its convergence behavior.

    space_time fits the error norms themselves (finite-difference errors are
    first sampled onto the coarsest mesh; finite-volume errors are normed on
    their native meshes); space_only and time_only fit the successive
    differences of the numerical solutions against the finer parameter of
    each pair.  Unstable levels are flagged and excluded from all fits.
    """
    spec = stepper if isinstance(stepper, StepperSpec) else get_stepper(stepper)
    T = plan.t_horizon

    runs: list[tuple[UniformMesh, SolveResult, float]] = []
    if plan.mode == "time_only":
        n = plan.n_cells_seq[0]
        dt0 = snap_dt(plan.eta_time / n * (plan.domain[1] - plan.domain[0]), T)
        dts = [dt0 / 2**j for j in range(plan.n_time_levels)]
        for dt in dts:
            res = run_solve(prob, scheme, spec, n, dt, T, domain=plan.domain)
            runs.append((res.state.mesh, res, dt))
    else:
        length = plan.domain[1] - plan.domain[0]
        if plan.mode == "space_time":
            dts = [snap_dt(plan.eta_space * length / n, T) for n in plan.n_cells_seq]
        else:
            dt_fixed = snap_dt(plan.eta_space * length / plan.n_cells_seq[-1], T)
            dts = [dt_fixed] * len(plan.n_cells_seq)
        for n, dt in zip(plan.n_cells_seq, dts):
            res = run_solve(prob, scheme, spec, n, dt, T, domain=plan.domain)
            runs.append((res.state.mesh, res, dt))

    result = StudyResult(
        problem=prob.id, spatial=scheme.token, stepper=spec.method,
        mode=plan.mode, prognostic=scheme.prognostic, norm=norm,
        eta_space=plan.eta_space, eta_time=plan.eta_time, t_horizon=T,
    )
    for mesh, res, dt in runs:
        result.levels.append(LevelResult(
            n_cells=mesh.n_cells, dx=mesh.dx, dt=dt,
            error_l2=res.error_l2, error_linf=res.error_linf, stable=res.stable,
        ))

    if plan.mode == "space_time" and scheme.kind == "fd":
        # Sample each error field onto the coarsest mesh before norming.
        coarsest = runs[0][0]
        for lv, (mesh, res, _) in zip(result.levels, runs):
            if not res.stable:
                continue
            e = res.state.data - np.asarray(prob.exact(mesh.vertices, T), dtype=float)
            ec = _restrict_points(e, mesh, coarsest)
            lv.error_l2 = _norm(ec, coarsest.dx, "l2")
            lv.error_linf = _norm(ec, coarsest.dx, "linf")

    if plan.mode in ("space_only", "time_only"):
        scale = runs[0][0].dx if scheme.prognostic == "cell_integrated" else 1.0
        for (m0, r0, _), (m1, r1, _), lv in zip(runs, runs[1:], result.levels[1:]):
            if not (r0.stable and r1.stable):
                continue
            d = successive_differences(
                [r0.state.data, r1.state.data], plan.mode, [m0, m1],
                kind=scheme.state_kind, monotone=scheme.monotone, norm=norm,
            )
            lv.succ_diff = scale * float(d[0])

    result.gamma = expected_gamma(scheme, spec, plan.mode)
    xs, ys = result.fit_points()
    if xs.size >= 3 and np.all(ys > 0.0):
        result.slope, result.intercept = fit_loglog_slope(xs, ys)
    if xs.size >= 2 and np.all(ys > 0.0):
        coeffs, resid = fit_two_term(xs, ys, result.gamma)
        result.zeta_g, result.zeta_g1 = float(coeffs[0]), float(coeffs[1])
        result.fit_residual = resid


    return result


# Study parameter defaults keyed by (problem family, spatial method, stepper,
# refinement mode); values follow the published parameter table for the two
# manufactured problems, with sensible extensions for constant advection.

def _eta_space_default(problem: str, spatial: str, stepper: str, mode: str) -> float:
    if spatial.startswith("fd"):
        return 0.125 if stepper == "ab4" else 0.25
    if spatial == "ppr-mono":
        if stepper == "fe1":
            return 0.2
        return {"rk2": 0.2, "rk3": 0.25, "rk4": 0.25}.get(stepper, 0.15)
    # non-monotone ppr
    if stepper == "fe1":
        if mode == "space_only":
            return 0.0125 if problem == "linear" else 0.1
        return 0.15 if problem == "linear" else 0.2
    return {"rk2": 0.2, "rk3": 0.25, "rk4": 0.25}.get(stepper, 0.15)


def _eta_time_default(spatial: str, stepper: str) -> float:
    if spatial.startswith("fd") and stepper == "rk4":
        return 0.32
    return 0.16


def _ncells_default(problem: str, spatial: str, mode: str) -> tuple:
    if mode == "time_only":
        if spatial == "ppr":
            return (2**7,)
        return (2**7,) if problem != "nonlinear" else (2**6,)
    if spatial == "ppr":
        return tuple(2**p for p in range(5, 11))
    return tuple(2**p for p in range(6, 13))


def _horizon_default(problem: str, spatial: str, stepper: str, mode: str) -> float:
    if problem == "constant_advection":
        return 1.0
    if spatial != "ppr":
        return 0.25
    if problem == "linear" and mode == "space_only" and stepper == "fe1":
        return 0.03125
    return 0.125


def default_plan(problem: str, spatial: str, stepper: str, mode: str,
                 **overrides) -> RefinementPlan:
    """Table-driven default RefinementPlan; keyword overrides win."""
    problem = problem.replace("-", "_")
    params = dict(
        mode=mode,
        n_cells_seq=_ncells_default(problem, spatial, mode),
        eta_space=_eta_space_default(problem, spatial, stepper, mode),
        eta_time=_eta_time_default(spatial, stepper),
        t_horizon=_horizon_default(problem, spatial, stepper, mode),
        n_time_levels=6,
    )
    params.update({k: v for k, v in overrides.items() if v is not None})
    return RefinementPlan(**params)
