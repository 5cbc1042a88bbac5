"""Test problems: advection operators, manufactured solutions, source terms.

Three presets are shipped:

* ``linear``    -- u_t + (q(x) u)_x + p(x) u = s with p(x) = 1, q(x) = x,
* ``nonlinear`` -- u_t + (u_mean*u + u^2/2)_x + p0*(u_mean + u) = s with
  u_mean = p0 = 1 (conservative form of a mean-plus-perturbation advection
  equation; reduces to inviscid Burgers when u_mean = p0 = s = 0),
* ``constant-advection`` -- u_t + a u_x = 0 with a translated initial profile.

The manufactured exact solution of the first two presets is a superposition
of two sinusoidal modes

    u(x, t) = u_hat*sin(k x - omega t) + 2*u_hat*cos(2 k x - omega t),

whose substitution into the operator defines the source term in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Array = np.ndarray

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TwoModeWave:
    """Two sinusoidal modes sharing one angular frequency.

    The second mode has twice the amplitude and wavenumber of the first,
    so both travel with frequency ``omega`` (phase speeds c and c/2).
    """

    u_hat: float
    k: float = TWO_PI
    omega: float = TWO_PI

    def value(self, x, t):
        a, k, w = self.u_hat, self.k, self.omega
        return a * np.sin(k * x - w * t) + 2 * a * np.cos(2 * k * x - w * t)

    def d_dt(self, x, t):
        a, k, w = self.u_hat, self.k, self.omega
        return -a * w * np.cos(k * x - w * t) + 2 * a * w * np.sin(2 * k * x - w * t)

    def d_dx(self, x, t):
        a, k, w = self.u_hat, self.k, self.omega
        return a * k * np.cos(k * x - w * t) - 4 * a * k * np.sin(2 * k * x - w * t)

    def antiderivative_x(self, x, t):
        """Exact x-antiderivative of value(); basis of cell averaging."""
        a, k, w = self.u_hat, self.k, self.omega
        return -(a / k) * np.cos(k * x - w * t) + (a / k) * np.sin(2 * k * x - w * t)


class WaveTables:
    """Precomputed mode phases of a TwoModeWave on a fixed point set.

    Splitting sin(kx - wt) with the angle-addition identities leaves only
    two scalar trig evaluations per time query, which keeps the inner
    solver loops cheap on fine meshes.
    """

    def __init__(self, wave: TwoModeWave, x: Array):
        self.wave = wave
        self.x = np.asarray(x, dtype=float)
        self.s1 = np.sin(wave.k * self.x)
        self.c1 = np.cos(wave.k * self.x)
        self.s2 = np.sin(2 * wave.k * self.x)
        self.c2 = np.cos(2 * wave.k * self.x)

    def fields(self, t: float):
        """Return (u, u_t, u_x) at time t on the stored points."""
        a, k, w = self.wave.u_hat, self.wave.k, self.wave.omega
        ct, st = math.cos(w * t), math.sin(w * t)
        sin1 = self.s1 * ct - self.c1 * st
        cos1 = self.c1 * ct + self.s1 * st
        sin2 = self.s2 * ct - self.c2 * st
        cos2 = self.c2 * ct + self.s2 * st
        u = a * sin1 + 2 * a * cos2
        u_t = -a * w * cos1 + 2 * a * w * sin2
        u_x = a * k * cos1 - 4 * a * k * sin2
        return u, u_t, u_x


@dataclass(frozen=True)
class ProblemSpec:
    """One advection problem: operator pieces plus its exact solution.

    flux/dflux_du take (u, x).  The damping/reaction term is affine,
    r(u, x) = reaction_0(x) + reaction_1(x)*u, so its cell average is exact
    when the coefficients are constant.  For the variable-coefficient linear
    flux the FD path differences q*u_x + q_x*u instead of the raw flux
    (q(x) = x is not periodic across the wrap, u is), so the preset carries
    q and q_x explicitly.
    """

    id: str
    flux: Callable
    dflux_du: Callable
    reaction_0: Callable
    reaction_1: Callable
    wave: TwoModeWave | None = None
    q: Callable | None = None            # linear preset: flux coefficient q(x)
    q_x: Callable | None = None
    u_mean: float = 0.0                  # nonlinear preset mean state
    p0: float = 0.0
    a: float = 0.0                       # constant-advection speed
    profile: Callable | None = None      # constant-advection initial profile
    profile_antideriv: Callable | None = None

    @property
    def has_exact(self) -> bool:
        return self.wave is not None or self.profile is not None

    def exact(self, x, t):
        if self.wave is not None:
            return self.wave.value(x, t)
        if self.profile is not None:
            return self.profile(np.asarray(x) - self.a * t)
        raise ValueError(f"problem {self.id!r} has no exact solution")

    def exact_time_derivative(self, x, t):
        if self.wave is not None:
            return self.wave.d_dt(x, t)
        if self.profile is not None:
            # d/dt u0(x - a t) = -a u0'(x - a t) = -a u_x
            eps = 1e-7
            xs = np.asarray(x) - self.a * t
            return -self.a * (self.profile(xs + eps) - self.profile(xs - eps)) / (2 * eps)
        raise ValueError(f"problem {self.id!r} has no exact solution")

    def antiderivative(self, x, t):
        if self.wave is not None:
            return self.wave.antiderivative_x(x, t)
        if self.profile_antideriv is not None:
            return self.profile_antideriv(np.asarray(x) - self.a * t)
        raise ValueError(f"problem {self.id!r} has no closed-form antiderivative")

    def reaction(self, u, x):
        return self.reaction_0(x) + self.reaction_1(x) * u

    def source_from_fields(self, x, u, u_t, u_x):
        """Apply the operator to given solution fields; defines the source."""
        if self.id == "linear":
            return u_t + self.q(x) * u_x + self.q_x(x) * u + self.reaction(u, x)
        if self.id == "nonlinear":
            return u_t + (self.u_mean + u) * u_x + self.reaction(u, x)
        return np.zeros_like(np.asarray(u, dtype=float))


def exact_solution(prob: ProblemSpec, x, t):
    """Exact solution u(x, t) of a preset with a manufactured/translated one."""
    return prob.exact(x, t)


def exact_cell_average(prob: ProblemSpec, cell: tuple, t: float):
    """Mean of the exact solution over cell = (x_left, x_right).

    Evaluated from the closed-form antiderivative of the sinusoids, not
    quadrature; both arguments may be arrays of matching shape.
    """
    x_l = np.asarray(cell[0], dtype=float)
    x_r = np.asarray(cell[1], dtype=float)
    width = x_r - x_l
    return (prob.antiderivative(x_r, t) - prob.antiderivative(x_l, t)) / width


def source_term(prob: ProblemSpec, x, t):
    """Manufactured source: the operator applied to the exact solution."""
    if prob.wave is None:
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
    u = prob.wave.value(x, t)
    u_t = prob.wave.d_dt(x, t)
    u_x = prob.wave.d_dx(x, t)
    return prob.source_from_fields(x, u, u_t, u_x)


def flux(prob: ProblemSpec, u, x):
    return prob.flux(u, x)


def wave_speed(prob: ProblemSpec, u, x):
    """|dF/du|: the local characteristic speed magnitude."""
    return np.abs(prob.dflux_du(u, x))


def _const(value: float) -> Callable:
    def f(x):
        return np.full_like(np.asarray(x, dtype=float), value) if np.ndim(x) else value

    return f


def linear_problem(u_hat: float = 1.0, k: float = TWO_PI, c: float = 1.0) -> ProblemSpec:
    """u_t + (x u)_x + u = s on [0, 1], equivalently u_t + x u_x + 2 u = s."""
    return ProblemSpec(
        id="linear",
        flux=lambda u, x: x * u,
        dflux_du=lambda u, x: x if np.ndim(x) else float(x),
        reaction_0=_const(0.0),
        reaction_1=_const(1.0),
        wave=TwoModeWave(u_hat=u_hat, k=k, omega=c * k),
        q=lambda x: x,
        q_x=_const(1.0),
    )


def nonlinear_problem(u_hat: float = 0.01, k: float = TWO_PI, c: float = 1.0,
                      u_mean: float = 1.0, p0: float = 1.0) -> ProblemSpec:
    """u_t + (u_mean*u + u^2/2)_x + p0*(u_mean + u) = s on [0, 1]."""
    return ProblemSpec(
        id="nonlinear",
        flux=lambda u, x: u_mean * u + 0.5 * u * u,
        dflux_du=lambda u, x: u_mean + u,
        reaction_0=_const(p0 * u_mean),
        reaction_1=_const(p0),
        wave=TwoModeWave(u_hat=u_hat, k=k, omega=c * k),
        u_mean=u_mean,
        p0=p0,
    )


def burgers_problem() -> ProblemSpec:
    """Source-free inviscid Burgers flux (conservation checks)."""
    return ProblemSpec(
        id="nonlinear",
        flux=lambda u, x: 0.5 * u * u,
        dflux_du=lambda u, x: u,
        reaction_0=_const(0.0),
        reaction_1=_const(0.0),
        wave=None,
        u_mean=0.0,
        p0=0.0,
    )


def constant_advection_problem(a: float = 1.0, u_hat: float = 1.0,
                               k: float = TWO_PI) -> ProblemSpec:
    """u_t + a u_x = 0 with initial profile u_hat*sin(k x)."""
    return ProblemSpec(
        id="constant_advection",
        flux=lambda u, x: a * u,
        dflux_du=lambda u, x: np.full_like(np.asarray(u, dtype=float), a) if np.ndim(u) else a,
        reaction_0=_const(0.0),
        reaction_1=_const(0.0),
        a=a,
        profile=lambda x: u_hat * np.sin(k * x),
        profile_antideriv=lambda x: -(u_hat / k) * np.cos(k * x),
    )


PRESETS = {
    "linear": linear_problem,
    "nonlinear": nonlinear_problem,
    "constant-advection": constant_advection_problem,
}


def get_problem(name: str, **kwargs) -> ProblemSpec:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown problem preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    return factory(**kwargs)
