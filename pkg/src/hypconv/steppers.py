"""Time integrators: explicit MOL steppers over arbitrary tendencies, plus
closed-form implicit one-step methods for scalar linear ODEs."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

# Explicit midpoint predictor fraction.
_RK2_C = 0.5

# Williamson's two-register third-order scheme.
_RK3_A = (0.0, -5.0 / 9.0, -153.0 / 128.0)
_RK3_B = (1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0)
_RK3_C = (0.0, 1.0 / 3.0, 3.0 / 4.0)

# Carpenter & Kennedy five-stage fourth-order two-register scheme.
_RK4_A = (
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
)
_RK4_B = (
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
)
_RK4_C = (
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
)

AB_WEIGHTS = {
    2: (3.0 / 2.0, -1.0 / 2.0),
    3: (23.0 / 12.0, -16.0 / 12.0, 5.0 / 12.0),
    4: (55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0),
}


@dataclass(frozen=True)
class StepperSpec:
    method: str
    order: int          # formal order beta
    history_depth: int  # prior tendencies required (m-1 for AB-m)
    implicit: bool = False


STEPPERS = {
    "fe1": StepperSpec("fe1", 1, 0),
    "rk2": StepperSpec("rk2", 2, 0),
    "rk3": StepperSpec("rk3", 3, 0),
    "rk4": StepperSpec("rk4", 4, 0),
    "ab2": StepperSpec("ab2", 2, 1),
    "ab3": StepperSpec("ab3", 3, 2),
    "ab4": StepperSpec("ab4", 4, 3),
    "be1": StepperSpec("be1", 1, 0, implicit=True),
    "imid": StepperSpec("imid", 2, 0, implicit=True),
    "trap": StepperSpec("trap", 2, 0, implicit=True),
}

EXPLICIT_METHODS = ("fe1", "rk2", "rk3", "rk4", "ab2", "ab3", "ab4")
IMPLICIT_METHODS = ("be1", "imid", "trap")


def get_stepper(method: str) -> StepperSpec:
    try:
        return STEPPERS[method.lower()]
    except KeyError:
        raise ValueError(
            f"unknown time stepper {method!r}; choose from {sorted(STEPPERS)}"
        ) from None


@dataclass
class History:
    """Ring of prior tendency evaluations, newest first, spaced by dt."""

    depth: int
    entries: list = field(default_factory=list)  # [(tendency, time), ...]

    def push(self, tendency, t: float):
        self.entries.insert(0, (tendency, float(t)))
        del self.entries[self.depth:]

    def require(self, t: float, dt: float):
        if len(self.entries) < self.depth:
            raise ValueError(
                f"multistep method needs {self.depth} history entries, "
                f"have {len(self.entries)}; bootstrap first"
            )
        tol = 1e-9 * max(abs(dt), 1.0)
        for m, (_, tm) in enumerate(self.entries[: self.depth], start=1):
            if abs(tm - (t - m * dt)) > tol:
                raise ValueError(
                    f"history entry {m} at t={tm} is not spaced {m}*dt "
                    f"behind t={t}"
                )


def _two_register_step(u, t, dt, tendency, a, b, c, acc=None):
    """Low-storage RK loop; persists only the state and one accumulator."""
    y = np.array(u, dtype=float, copy=True)
    q = np.zeros_like(y) if acc is None else acc
    q[...] = 0.0
    for ai, bi, ci in zip(a, b, c):
        q *= ai
        q += dt * tendency(y, t + ci * dt)
        y += bi * q
    return y


def advance(u, t: float, dt: float, tendency, spec: StepperSpec,
            history: History | None = None, acc=None):
    """One explicit step u(t) -> u(t+dt); AB methods consume/update history."""
    if spec.implicit:
        raise ValueError(f"{spec.method} is implicit; use step_implicit_scalar_linear")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u = np.asarray(u, dtype=float)
    m = spec.method
    if m == "fe1":
        return u + dt * tendency(u, t)
    if m == "rk2":
        mid = u + (_RK2_C * dt) * tendency(u, t)
        return u + dt * tendency(mid, t + _RK2_C * dt)
    if m == "rk3":
        return _two_register_step(u, t, dt, tendency, _RK3_A, _RK3_B, _RK3_C, acc)
    if m == "rk4":
        return _two_register_step(u, t, dt, tendency, _RK4_A, _RK4_B, _RK4_C, acc)
    if m in ("ab2", "ab3", "ab4"):
        if history is None:
            raise ValueError(f"{m} requires a History")
        history.require(t, dt)
        w = AB_WEIGHTS[spec.order]
        f_now = tendency(u, t)
        du = w[0] * f_now
        for wm, (fm, _) in zip(w[1:], history.entries):
            du = du + wm * fm
        history.push(f_now, t)
        return u + dt * du
    raise ValueError(f"unknown method {m!r}")


def step_explicit(state, t: float, dt: float, tendency, spec: StepperSpec,
                  hist: History | None = None):
    """StateField-level wrapper around advance(); returns (state, history)."""
    new = advance(state.data, t, dt, lambda u, tt: tendency(state.with_data(u, tt), tt),
                  spec, history=hist)
    return state.with_data(new, t + dt), hist


def step_implicit_scalar_linear(u: float, t: float, dt: float, lam: float,
                                f, method: str) -> float:
    """Closed-form implicit step for u' = -lam*u + f(t)."""
    m = method.lower()
    if m == "be1":
        den = 1.0 + lam * dt
        if den == 0.0:
            raise ZeroDivisionError("backward Euler denominator 1 + lam*dt is zero")
        return (u + dt * f(t + dt)) / den
    den = 1.0 + 0.5 * lam * dt
    if den == 0.0:
        raise ZeroDivisionError(f"{m} denominator 1 + lam*dt/2 is zero")
    if m == "imid":
        return ((1.0 - 0.5 * lam * dt) * u + dt * f(t + 0.5 * dt)) / den
    if m == "trap":
        return ((1.0 - 0.5 * lam * dt) * u + 0.5 * dt * (f(t) + f(t + dt))) / den
    raise ValueError(f"unknown implicit method {method!r}")


def bootstrap_history(tendency, spec: StepperSpec, u0, t0: float, dt: float,
                      mode: str = "exact_solution", exact_state=None) -> History:
    """Build the AB startup history.

    exact_solution mode evaluates the tendency on exact states at
    t0 - m*dt; rk_startup integrates backward to t0 - depth*dt with RK4
    and then steps forward, recording tendencies along the way.
    """
    depth = spec.history_depth
    if depth < 1:
        raise ValueError(f"{spec.method} keeps no history")
    hist = History(depth)
    if mode == "exact_solution":
        if exact_state is None:
            raise ValueError("exact_solution bootstrap needs an exact_state(t) callable")
        for m in range(depth, 0, -1):
            tm = t0 - m * dt
            hist.push(tendency(np.asarray(exact_state(tm), dtype=float), tm), tm)
        return hist
    if mode == "rk_startup":
        rk4 = STEPPERS["rk4"]
        y = np.array(u0, dtype=float, copy=True)
        for k in range(depth):
            # Integrate backward one step via the time-reversed tendency:
            # in tau = -t the state at time t0-k*dt sits at tau = -(t0-k*dt).
            y = advance(y, -(t0 - k * dt), dt, lambda u, tau: -tendency(u, -tau), rk4)
        # y now approximates the state at t0 - depth*dt; walk forward.
        t = t0 - depth * dt
        for _ in range(depth):
            hist.push(tendency(y, t), t)
            y = advance(y, t, dt, tendency, rk4)
            t += dt
        return hist
    raise ValueError(f"unknown bootstrap mode {mode!r}")
