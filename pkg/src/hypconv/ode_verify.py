"""Empirical one-step order and leading-coefficient checks for scalar ODEs.

For a stepper of order beta started from exact data, the one-step residual
behaves like (c/(beta+1)!)*dt^(beta+1); the slope of that residual and the
Richardson-extrapolated coefficient are the two measured quantities.  For
the linear decay family the coefficient has closed-form ratios to the
chain-rule derivatives F^(k), which make sharp verification targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .convergence import fit_loglog_slope
from .steppers import (History, StepperSpec, advance, get_stepper,
                       step_implicit_scalar_linear)

UNDERFLOW = 1e-14


@dataclass(frozen=True)
class ScalarODE:
    """u' = F(u, t) with an optional exact solution.

    lam/forcing describe the linear form u' = -lam*u + f(t) when it exists;
    the implicit steppers and the analytic F^(k) recurrence need them.
    forcing holds (f, f', f'', f''').
    """

    F: Callable
    exact: Callable | None = None
    lam: float | None = None
    forcing: tuple | None = None

    @property
    def is_linear(self) -> bool:
        return self.lam is not None and self.forcing is not None


def _zero(t):
    return 0.0


def decay_ode(lam: float = 1.0) -> ScalarODE:
    """u' = -lam*u with u(0) = 1."""
    return ScalarODE(
        F=lambda u, t: -lam * u,
        exact=lambda t: math.exp(-lam * t),
        lam=lam,
        forcing=(_zero, _zero, _zero, _zero),
    )


def forced_decay_ode() -> ScalarODE:
    """u' = -u + sin t with u(0) = 1."""
    part = lambda t: 0.5 * (math.sin(t) - math.cos(t))
    return ScalarODE(
        F=lambda u, t: -u + math.sin(t),
        exact=lambda t: 1.5 * math.exp(-t) + part(t),
        lam=1.0,
        forcing=(math.sin, math.cos, lambda t: -math.sin(t), lambda t: -math.cos(t)),
    )


def constant_ode(c: float = 3.0) -> ScalarODE:
    """u' = c with u(0) = 1; every F^(k>=2) vanishes."""
    return ScalarODE(
        F=lambda u, t: c,
        exact=lambda t: 1.0 + c * t,
        lam=0.0,
        forcing=(lambda t: c, _zero, _zero, _zero),
    )


ODE_PRESETS = {
    "decay": decay_ode,
    "forced": forced_decay_ode,
    "constant": constant_ode,
}


def get_ode(name: str) -> ScalarODE:
    try:
        return ODE_PRESETS[name]()
    except KeyError:
        raise ValueError(
            f"unknown ODE preset {name!r}; choose from {sorted(ODE_PRESETS)}"
        ) from None


def validate_ode(ode: ScalarODE, ts=(0.0, 0.3, 0.7, 1.0), h: float = 1e-6,
                 tol: float = 1e-8) -> None:
    """Check d(exact)/dt = F(exact, t) by central differences."""
    if ode.exact is None:
        return
    for t in ts:
        lhs = (ode.exact(t + h) - ode.exact(t - h)) / (2 * h)
        rhs = ode.F(ode.exact(t), t)
        if abs(lhs - rhs) > tol * max(1.0, abs(rhs)):
            raise ValueError(f"exact solution does not satisfy the ODE at t={t}")


def _reference_solution(ode: ScalarODE, u0: float, t0: float, dt: float) -> float:
    """RK4 at dt/100 when no closed-form solution is available."""
    spec = get_stepper("rk4")
    u, h = u0, dt / 100.0
    for i in range(100):
        u = float(advance(u, t0 + i * h, h, ode.F, spec))
    return u


def one_step_error(ode: ScalarODE, spec: StepperSpec | str, u0: float,
                   t0: float, dt: float) -> float:
    """Exact-start one-step residual u_exact(t0+dt) - u_num(t0+dt).

    Multistep history is evaluated on the exact solution (for a scalar ODE
    that IS the trajectory the recursion expects); implicit methods use
    their closed-form linear solve.
    """
    spec = spec if isinstance(spec, StepperSpec) else get_stepper(spec)
    if ode.exact is not None:
        start = ode.exact(t0)
        target = ode.exact(t0 + dt)
    else:
        start = u0
        target = _reference_solution(ode, u0, t0, dt)
    if spec.implicit:
        if not ode.is_linear:
            raise ValueError("implicit steppers need the linear (lam, forcing) form")
        u1 = step_implicit_scalar_linear(start, t0, dt, ode.lam, ode.forcing[0],
                                         spec.method)
        return target - u1
    hist = None
    if spec.history_depth:
        if ode.exact is None:
            raise ValueError("multistep one-step errors need an exact solution")
        hist = History(spec.history_depth)
        for m in range(spec.history_depth, 0, -1):
            tm = t0 - m * dt
            hist.push(ode.F(ode.exact(tm), tm), tm)
    u1 = float(advance(start, t0, dt, ode.F, spec, hist))
    return target - u1


def default_dt_seq(dt_max: float = 1e-2, dt_min: float = 1e-3, n: int = 4):
    """Geometric ladder from dt_max down to dt_min (ratio <= 1/2 for n >= 4)."""
    ratio = (dt_min / dt_max) ** (1.0 / (n - 1))
    return tuple(dt_max * ratio**k for k in range(n))


def estimate_local_order(ode: ScalarODE, spec: StepperSpec | str, u0: float,
                         t0: float, dt_seq=None) -> float:
    """Least-squares slope of log|one-step error| against log dt.

    Errors below the round-off floor are excluded; fewer than three usable
    points is an error.
    """
    spec = spec if isinstance(spec, StepperSpec) else get_stepper(spec)
    dts = default_dt_seq() if dt_seq is None else tuple(dt_seq)
    pts = [(dt, abs(one_step_error(ode, spec, u0, t0, dt))) for dt in dts]
    usable = [(dt, e) for dt, e in pts if e > UNDERFLOW]
    if len(usable) < 3:
        raise ValueError(
            f"only {len(usable)} one-step errors above {UNDERFLOW:g}; "
            "cannot fit an order"
        )
    slope, _ = fit_loglog_slope([p[0] for p in usable], [p[1] for p in usable])
    return slope


def estimate_lte_coefficient(ode: ScalarODE, spec: StepperSpec | str, u0: float,
                             t0: float, dt_seq=None) -> float:
    """Richardson-extrapolated limit of error/dt^(beta+1).

    Two-point elimination removes the next-order dt contamination; the
    result approximates c_(beta+1)/(beta+1)!.
    """
    spec = spec if isinstance(spec, StepperSpec) else get_stepper(spec)
    dts = sorted(default_dt_seq() if dt_seq is None else dt_seq, reverse=True)
    p = spec.order + 1
    errs = [one_step_error(ode, spec, u0, t0, dt) for dt in dts]
    if all(abs(e) <= UNDERFLOW for e in errs):
        return 0.0
    dt1, dt2 = dts[-2], dts[-1]
    r1 = errs[-2] / dt1**p
    r2 = errs[-1] / dt2**p
    return (r2 * dt1 - r1 * dt2) / (dt1 - dt2)


def analytic_Fk_linear(lam: float, forcing: tuple, u: float, t: float,
                       k: int) -> float:
    """k-th total time derivative of u for u' = -lam*u + f(t), k = 1..4.

    Uses the chain-rule recurrence F^(k+1) = f^(k-1)(t) - lam*F^(k).
    """
    if not 1 <= k <= 4:
        raise ValueError(f"k must be in 1..4, got {k}")
    if forcing is None or len(forcing) < k:
        raise ValueError("forcing derivatives f..f''' are required")
    value = -lam * u + forcing[0](t)
    for j in range(1, k):
        value = forcing[j](t) - lam * value
    return value


# Closed-form coefficient relations for the linear family: the measured
# Richardson limit should equal ratio * F^(k)/(k!) with k = beta + 1.
COEFFICIENT_RELATIONS = {
    "ab2": (5.0 / 2.0, 3),
    "ab3": (9.0, 4),
    "be1": (-1.0, 2),
    "trap": (-0.5, 3),
}


def verify_method(method: str, ode_name: str, u0: float = 1.0,
                  t0: float = 0.0) -> dict:
    """Slope plus (when known) coefficient check; returns a report dict."""
    spec = get_stepper(method)
    ode = get_ode(ode_name)
    slope = estimate_local_order(ode, spec, u0, t0)
    expected = spec.order + 1
    ok = abs(slope - expected) <= 0.1
    report = {
        "method": spec.method, "ode": ode_name, "slope": slope,
        "expected_slope": expected, "slope_ok": ok,
        "coefficient": estimate_lte_coefficient(ode, spec, u0, t0),
        "coefficient_ok": None, "expected_coefficient": None,
    }
    if ode_name == "decay" and method in COEFFICIENT_RELATIONS:
        ratio, k = COEFFICIENT_RELATIONS[method]
        fk = analytic_Fk_linear(ode.lam, ode.forcing, ode.exact(t0), t0, k)
        expected_c = ratio * fk / math.factorial(k)
        report["expected_coefficient"] = expected_c
        report["coefficient_ok"] = (
            abs(report["coefficient"] - expected_c) <= 0.05 * abs(expected_c)
        )
    return report
