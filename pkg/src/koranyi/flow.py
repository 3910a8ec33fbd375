"""Integral curves of grad_h u0 and the modulus-side checks.

Each curve solves gamma' = (X u0) X + (Y u0) Y in a free parameter tau,
starting on the inner boundary r = B and stopped exactly on r = A. Along
such a curve du0/dtau = |grad_h u0|^2, so the extremal density
rho0 = |grad_h u0| has line integral u0(end) - u0(start) = 1.

The integrator is classical RK4 with step-doubling error control and local
extrapolation. Horizontal length is carried as a fourth ODE component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from .capacity import QuadratureSpec, angular_rules, closed_form_modulus, radial_rule
from .coords import EllipsoidalCoords, RingSpec, chart_differential, from_cartesian, to_cartesian
from .core import DegenerateInputError, Point, TangentVector, contact_form
from .fields import u0_gradient, u0_gradient_norm, u0_value

DUMP_COLUMNS = ("tau", "x", "y", "t", "r", "phi", "theta", "u", "speed_h", "rr_residual", "eq8_residual")


class IntegrationError(RuntimeError):
    """The flow integrator failed (step budget, chart escape, stalled step)."""


@dataclass(frozen=True)
class StepControl:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_steps: int = 20000


@dataclass(frozen=True)
class FlowState:
    point: Point
    coords: EllipsoidalCoords
    tau: float
    u_value: float
    velocity: TangentVector
    length: float = 0.0


@dataclass
class Trajectory:
    seed: tuple[float, float]
    states: list[FlowState]
    horizontal_length: float
    max_rr_residual: float
    max_eq8_residual: float
    max_horizontality: float
    max_speed_residual: float
    rows: list[tuple] = field(default_factory=list, repr=False)
    # midpoints[i] lies halfway (in tau) between states[i] and states[i + 1]
    midpoints: list[FlowState] = field(default_factory=list, repr=False)

    @property
    def end(self) -> FlowState:
        return self.states[-1]


@dataclass(frozen=True)
class Density:
    """Nonnegative Borel density on the ring, vectorized in chart coordinates."""

    fn: Callable

    def __call__(self, r, phi, theta):
        return self.fn(r, phi, theta)

    def at(self, c: EllipsoidalCoords):
        return self.fn(c.r, c.phi, c.theta)

    def scaled(self, c: float) -> "Density":
        return Density(lambda r, phi, theta: c * self.fn(r, phi, theta))


# right-hand side --------------------------------------------------------------


def flow_rhs(spec: RingSpec, p: Point) -> TangentVector:
    g = u0_gradient(spec, p)
    return TangentVector(g.cx, g.cy, 2.0 * (p.y * g.cx - p.x * g.cy))


def _rhs(spec: RingSpec, y: np.ndarray) -> np.ndarray:
    # same field as flow_rhs, in scalar math for speed; 4th slot is |gamma'|_h
    x, yy, t = y[0], y[1], y[2]
    a, b = spec.a, spec.b
    u, v = x / a, yy / b
    s = u * u + v * v
    if s <= 0.0:
        raise DegenerateInputError("flow reached the t-axis")
    w = t / (a * b)
    r2 = math.hypot(s, w)
    r = math.sqrt(r2)
    phi = math.atan2(s, w)
    theta = math.atan2(v, u)
    k = math.sqrt(math.sin(phi)) / (r * spec.log_ratio)
    cx = k * math.sin(phi + theta) / a
    cy = -k * math.cos(phi + theta) / b
    return np.array([cx, cy, 2.0 * (yy * cx - x * cy), math.hypot(cx, cy)])


def _rk4(spec, y, h):
    k1 = _rhs(spec, y)
    k2 = _rhs(spec, y + 0.5 * h * k1)
    k3 = _rhs(spec, y + 0.5 * h * k2)
    k4 = _rhs(spec, y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _doubled_step(spec, y, h):
    """Two half steps with Richardson extrapolation.

    Returns (y_new, error estimate, midpoint state).
    """
    full = _rk4(spec, y, h)
    mid = _rk4(spec, y, 0.5 * h)
    half = _rk4(spec, mid, 0.5 * h)
    err = (half - full) / 15.0
    return half + err, err, mid


def _radius(spec, y) -> float:
    u, v, w = y[0] / spec.a, y[1] / spec.b, y[2] / (spec.a * spec.b)
    return (u * u + v * v) ** 2 + w * w


# residuals --------------------------------------------------------------------


def _rr_from_velocity(spec: RingSpec, p: Point, v: TangentVector) -> float:
    # r^4 = q(p), so r r' = <grad q, v> / (4 r^2)
    a2, b2 = spec.a ** 2, spec.b ** 2
    s = p.x ** 2 / a2 + p.y ** 2 / b2
    dq = 4 * s * (p.x * v.dx / a2 + p.y * v.dy / b2) + 2 * p.t * v.dt / (a2 * b2)
    r2 = math.sqrt(s * s + p.t ** 2 / (a2 * b2))
    return dq / (4.0 * r2)


def rr_residual(spec: RingSpec, s: FlowState, velocity: TangentVector) -> float:
    """r r' minus sin(phi) (sin^2(phi+theta)/a^2 + cos^2(phi+theta)/b^2) / log(A/B)."""
    c = s.coords
    ang = c.phi + c.theta
    expected = math.sin(c.phi) * (math.sin(ang) ** 2 / spec.a ** 2 + math.cos(ang) ** 2 / spec.b ** 2) / spec.log_ratio
    return _rr_from_velocity(spec, s.point, velocity) - expected


def chart_velocity(spec: RingSpec, c: EllipsoidalCoords, velocity: TangentVector) -> np.ndarray:
    """(r', phi', theta') from a Cartesian velocity via the inverse chart differential."""
    if math.sin(c.phi) <= 0.0:
        raise DegenerateInputError("chart differential is singular on the t-axis")
    D = chart_differential(c, spec.a, spec.b)
    return np.linalg.solve(D, np.array([velocity.dx, velocity.dy, velocity.dt]))


def eq8_residual(spec: RingSpec, s: FlowState, velocity: TangentVector) -> float:
    """cos(phi) r r' - sin(phi) r^2 phi' / 2 + sin(phi) r^2 theta' (zero for horizontal motion)."""
    c = s.coords
    dr, dphi, dtheta = chart_velocity(spec, c, velocity)
    sp = math.sin(c.phi)
    return math.cos(c.phi) * c.r * dr - 0.5 * sp * c.r ** 2 * dphi + sp * c.r ** 2 * dtheta


def speed_residual(spec: RingSpec, s: FlowState, velocity: TangentVector) -> float:
    """|gamma'|_h minus sqrt(r' / (r log(A/B)))."""
    speed = math.hypot(velocity.dx, velocity.dy)
    rdot_over_r = _rr_from_velocity(spec, s.point, velocity) / s.coords.r ** 2
    return speed - math.sqrt(max(rdot_over_r, 0.0) / spec.log_ratio)


# integration ------------------------------------------------------------------


def _make_state(spec: RingSpec, y: np.ndarray, tau: float) -> FlowState:
    p = Point(float(y[0]), float(y[1]), float(y[2]))
    c = from_cartesian(p, spec.a, spec.b)
    if not 0.0 < c.phi < math.pi:
        raise IntegrationError(f"trajectory left the open chart: phi = {c.phi} at tau = {tau}")
    return FlowState(p, c, tau, float(u0_value(spec, p)), flow_rhs(spec, p), float(y[3]))


def integrate_trajectory(
    spec: RingSpec,
    phi0: float,
    theta0: float,
    step_control: Optional[StepControl] = None,
) -> Trajectory:
    """Integrate the flow from the inner boundary point (B, phi0, theta0) to r = A."""
    if not 0.0 < phi0 < math.pi:
        raise ValueError(f"phi0 must lie in the open interval (0, pi), got {phi0}")
    ctl = step_control or StepControl()
    theta0 = theta0 % (2 * math.pi)
    start = to_cartesian(EllipsoidalCoords(spec.B, phi0, theta0), spec.a, spec.b)
    y = np.array([start.x, start.y, start.t, 0.0])
    target = spec.A ** 4
    tau = 0.0
    # du0/dtau = |grad u0|^2 ~ (r log(A/B))^-2, so this is a natural time scale
    h = 1e-2 * (spec.B * spec.log_ratio) ** 2
    states = [_make_state(spec, y, tau)]
    midpoints: list[FlowState] = []

    for _ in range(ctl.max_steps):
        y_new, err, y_mid = _doubled_step(spec, y, h)
        scale = ctl.abs_tol + ctl.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.max(np.abs(err) / scale))
        if err_norm > 1.0 or not np.all(np.isfinite(y_new)):
            h *= max(0.2, 0.9 * err_norm ** -0.2) if np.isfinite(err_norm) else 0.2
            if tau + h == tau:
                raise IntegrationError(f"step size underflow at tau = {tau}")
            continue
        if _radius(spec, y_new) >= target:
            h_end = brentq(lambda hh: _radius(spec, _doubled_step(spec, y, hh)[0]) - target, 0.0, h, xtol=1e-15, rtol=1e-15)
            y_end, _, y_mid = _doubled_step(spec, y, h_end)
            midpoints.append(_make_state(spec, y_mid, tau + 0.5 * h_end))
            states.append(_make_state(spec, y_end, tau + h_end))
            return _finish(spec, (phi0, theta0), states, midpoints)
        midpoints.append(_make_state(spec, y_mid, tau + 0.5 * h))
        y, tau = y_new, tau + h
        states.append(_make_state(spec, y, tau))
        h *= min(5.0, 0.9 * err_norm ** -0.2) if err_norm > 0 else 5.0
    raise IntegrationError(f"max_steps={ctl.max_steps} exceeded before reaching r = A")


def _finish(spec: RingSpec, seed, states: list[FlowState], midpoints: list[FlowState]) -> Trajectory:
    rows = []
    max_rr = max_eq8 = max_h = max_speed = 0.0
    for s in states:
        v = s.velocity
        rr = rr_residual(spec, s, v)
        e8 = eq8_residual(spec, s, v)
        hz = contact_form(s.point, v)
        sp = speed_residual(spec, s, v)
        max_rr, max_eq8 = max(max_rr, abs(rr)), max(max_eq8, abs(e8))
        max_h, max_speed = max(max_h, abs(hz)), max(max_speed, abs(sp))
        p, c = s.point, s.coords
        rows.append((s.tau, p.x, p.y, p.t, c.r, c.phi, c.theta, s.u_value, math.hypot(v.dx, v.dy), rr, e8))
    return Trajectory(seed, states, states[-1].length, max_rr, max_eq8, max_h, max_speed, rows, midpoints)


def seed_grid(n_phi: int, n_theta: int) -> list[tuple[float, float]]:
    """Cell-centred polar angles (poles excluded) times equispaced azimuths."""
    return [
        ((i + 0.5) * math.pi / n_phi, 2 * math.pi * j / n_theta)
        for i in range(n_phi)
        for j in range(n_theta)
    ]


def integrate_family(spec: RingSpec, seeds: Iterable[tuple[float, float]], step_control: Optional[StepControl] = None):
    return [integrate_trajectory(spec, phi0, theta0, step_control) for phi0, theta0 in seeds]


# densities and line integrals ---------------------------------------------------


def extremal_density(spec: RingSpec) -> Density:
    return Density(lambda r, phi, theta: u0_gradient_norm(spec, r, phi, theta))


def _integrand(rho: Density, states: list[FlowState]) -> np.ndarray:
    r = np.array([s.coords.r for s in states])
    phi = np.array([s.coords.phi for s in states])
    theta = np.array([s.coords.theta for s in states])
    speed = np.array([math.hypot(s.velocity.dx, s.velocity.dy) for s in states])
    return np.asarray(rho(r, phi, theta), dtype=float) * speed


def line_integral(traj: Trajectory, rho: Density) -> float:
    """int rho(gamma) |gamma'|_h dtau by composite Simpson.

    With recorded step midpoints every step is one Simpson panel on two equal
    halves; without them falls back to uneven-spacing Simpson on the states.
    """
    if len(traj.midpoints) != len(traj.states) - 1:
        tau = np.array([s.tau for s in traj.states])
        return float(simpson(_integrand(rho, traj.states), x=tau))
    f = _integrand(rho, traj.states)
    fm = _integrand(rho, traj.midpoints)
    h = np.diff([s.tau for s in traj.states])
    return float(np.sum(h / 6.0 * (f[:-1] + 4.0 * fm + f[1:])))


def admissibility_sample(spec: RingSpec, rho: Density, seeds, step_control: Optional[StepControl] = None) -> float:
    """Smallest line integral of rho over the sampled curves.

    A value >= 1 is necessary, not sufficient, for rho to be admissible for
    the whole family: only finitely many curves are inspected.
    """
    return min(line_integral(t, rho) for t in integrate_family(spec, seeds, step_control))


@dataclass
class HolderBound:
    lower: float  # closed-form modulus
    energy: float  # iiint rho^4 dL^3
    violations: list[tuple[float, float]]
    checked: int

    @property
    def n_violations(self) -> int:
        return len(self.violations)

    def holds(self, rtol: float = 1e-6) -> bool:
        return not self.violations and self.energy >= self.lower * (1 - rtol)

    def __iter__(self):
        return iter((self.lower, self.energy))


def holder_lower_bound(spec: RingSpec, rho: Density, grid: Optional[QuadratureSpec] = None, rtol: float = 1e-9) -> HolderBound:
    """Closed-form modulus against the energy of rho, plus a pointwise check.

    For every angular node (phi, theta) the radial energy
    int_B^A rho^4 a^2 b^2 r^3 dr is compared with the minimal value
    sin^2(phi) (sin^2(phi+theta)/a^2 + cos^2(phi+theta)/b^2)^2 a^2 b^2 / log(A/B)^3
    that an admissible density must reach along the ray. Nodes failing by
    more than ``rtol`` (relative) are reported in ``violations``.
    """
    q = grid or QuadratureSpec()
    r, wr = radial_rule(spec, q)
    (phi, wp), (theta, wt) = angular_rules(q)
    R, P, T = np.meshgrid(r, phi, theta, indexing="ij")
    a2b2 = (spec.a * spec.b) ** 2
    integrand = np.asarray(rho(R, P, T), dtype=float) ** 4 * a2b2 * R ** 3
    radial = np.tensordot(wr, integrand, axes=(0, 0))  # shape (n_phi nodes, n_theta nodes)
    Pa, Ta = np.meshgrid(phi, theta, indexing="ij")
    ang = Pa + Ta
    minimal = np.sin(Pa) ** 2 * (np.sin(ang) ** 2 / spec.a ** 2 + np.cos(ang) ** 2 / spec.b ** 2) ** 2 * a2b2 / spec.log_ratio ** 3
    bad = radial < minimal * (1 - rtol)
    violations = [(float(Pa[i, j]), float(Ta[i, j])) for i, j in np.argwhere(bad)]
    energy = float(np.sum(np.outer(wp, wt) * radial))
    return HolderBound(closed_form_modulus(spec), energy, violations, radial.size)
