"""Scalar fields on the Heisenberg group and their horizontal gradients.

The main inhabitant is the potential u0 = log(r / B) / log(A / B) of an
ellipsoidal ring, which is 0 on the inner and 1 on the outer boundary. Its
horizontal gradient is known in closed form in ellipsoidal coordinates:

    X u0 =  sqrt(sin phi) sin(phi + theta) / (a r log(A/B))
    Y u0 = -sqrt(sin phi) cos(phi + theta) / (b r log(A/B))

``horizontal_fd_gradient`` differentiates any field numerically along
left-translated horizontal lines and serves as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .coords import RingSpec, ellipsoid_quadratic, from_cartesian, to_cartesian, EllipsoidalCoords
from .core import HorizontalVector, Point, group_multiply

DEFAULT_FD_STEP = 1e-4

ChartGradient = Callable[[np.ndarray, np.ndarray, np.ndarray], tuple]


class DomainError(ValueError):
    """A field was evaluated outside the set where it is defined."""


@dataclass(frozen=True)
class ScalarField:
    """A real function on H^1 bundled with its horizontal gradient.

    ``chart_gradient(r, phi, theta) -> (Xf, Yf)`` is an optional vectorized
    shortcut used by the quadrature; ``domain`` an optional membership test.
    """

    value: Callable[[Point], float]
    horizontal_gradient: Callable[[Point], HorizontalVector]
    chart_gradient: Optional[ChartGradient] = None
    domain: Optional[Callable[[Point], bool]] = None

    def __call__(self, p: Point) -> float:
        return self.value(p)

    def contains(self, p: Point) -> bool:
        return True if self.domain is None else bool(self.domain(p))

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return combine(1.0, self, 1.0, other)

    def scaled(self, c: float) -> "ScalarField":
        return combine(c, self, 0.0, None)


def combine(c1: float, f1: ScalarField, c2: float, f2: Optional[ScalarField]) -> ScalarField:
    """The field c1*f1 + c2*f2 (f2 may be None)."""
    if f2 is None:
        f2, c2 = f1, 0.0

    def value(p):
        return c1 * f1.value(p) + c2 * f2.value(p)

    def grad(p):
        g1, g2 = f1.horizontal_gradient(p), f2.horizontal_gradient(p)
        return HorizontalVector(c1 * g1.cx + c2 * g2.cx, c1 * g1.cy + c2 * g2.cy)

    chart = None
    if f1.chart_gradient is not None and f2.chart_gradient is not None:

        def chart(r, phi, theta):
            x1, y1 = f1.chart_gradient(r, phi, theta)
            x2, y2 = f2.chart_gradient(r, phi, theta)
            return c1 * x1 + c2 * x2, c1 * y1 + c2 * y2

    def domain(p):
        return f1.contains(p) and f2.contains(p)

    return ScalarField(value, grad, chart, domain)


def horizontal_norm(v: HorizontalVector):
    return np.hypot(v.cx, v.cy)


def _ring_domain(spec: RingSpec, slack: float = 1e-9):
    lo, hi = (spec.B ** 4) * (1 - slack), (spec.A ** 4) * (1 + slack)

    def contains(p: Point) -> bool:
        q = ellipsoid_quadratic(p, spec.a, spec.b)
        return bool(np.all((q >= lo) & (q <= hi)))

    return contains


def field_from_chart(spec: RingSpec, value_rpt, gradient_rpt) -> ScalarField:
    """Build a ring field from vectorized chart-coordinate formulas."""

    def value(p):
        return value_rpt(*_chart(p, spec))

    def grad(p):
        cx, cy = gradient_rpt(*_chart(p, spec))
        return HorizontalVector(cx, cy)

    return ScalarField(value, grad, gradient_rpt, _ring_domain(spec))


def _chart(p: Point, spec: RingSpec):
    c = from_cartesian(p, spec.a, spec.b)
    return c.r, c.phi, c.theta


# the extremal potential ------------------------------------------------------


def u0_chart_gradient(spec: RingSpec, r, phi, theta):
    """Closed-form (X u0, Y u0) in chart coordinates; broadcasts over arrays."""
    scale = np.sqrt(np.sin(phi)) / (r * spec.log_ratio)
    return scale * np.sin(phi + theta) / spec.a, -scale * np.cos(phi + theta) / spec.b


def u0_value(spec: RingSpec, p: Point):
    q = ellipsoid_quadratic(p, spec.a, spec.b)
    if np.any(q == 0):
        raise DomainError("u0 is undefined at the group origin")
    return (0.25 * np.log(q) - np.log(spec.B)) / spec.log_ratio


def u0_gradient(spec: RingSpec, p: Point) -> HorizontalVector:
    c = from_cartesian(p, spec.a, spec.b)
    cx, cy = u0_chart_gradient(spec, c.r, c.phi, c.theta)
    return HorizontalVector(cx, cy)


def u0_field(spec: RingSpec) -> ScalarField:
    return ScalarField(
        value=lambda p: u0_value(spec, p),
        horizontal_gradient=lambda p: u0_gradient(spec, p),
        chart_gradient=lambda r, phi, theta: u0_chart_gradient(spec, r, phi, theta),
        domain=_ring_domain(spec),
    )


def u0_gradient_norm(spec: RingSpec, r, phi, theta):
    """|grad_h u0| in chart coordinates."""
    s = phi + theta
    return (
        np.sqrt(np.sin(phi))
        * np.sqrt(np.sin(s) ** 2 / spec.a ** 2 + np.cos(s) ** 2 / spec.b ** 2)
        / (r * spec.log_ratio)
    )


# boundary-vanishing perturbations ---------------------------------------------

# monomials of degree <= 2 in the unit-sphere coordinates (xi, eta, zeta)
_MONOMIALS = ((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (0, 2, 0), (0, 0, 2), (1, 1, 0), (1, 0, 1), (0, 1, 1))


def bump_field(spec: RingSpec, seed: int) -> ScalarField:
    """A smooth field vanishing on both boundary components of the ring.

    v = sin(pi s) g(xi, eta, zeta) with s = log(r/B)/log(A/B) and g a random
    quadratic polynomial in xi = x/(a r), eta = y/(b r), zeta = t/(a b r^2).
    The coefficients are normalized so that |v| <= 1 on the ring. The
    functions xi, eta, zeta are smooth off the origin, so v is smooth across
    the t-axis even though the chart is not.
    """
    rng = np.random.default_rng(seed)
    coef = rng.normal(size=len(_MONOMIALS))
    coef /= np.abs(coef).sum()
    a, b, L = spec.a, spec.b, spec.log_ratio

    def parts(r, phi, theta):
        P = np.sqrt(np.sin(phi))
        xi, eta, zeta = P * np.cos(theta), P * np.sin(theta), np.cos(phi)
        # horizontal derivatives of r, then of the sphere coordinates
        Xr, Yr = P * np.sin(phi + theta) / a, -P * np.cos(phi + theta) / b
        dxi = (1 / (a * r) - xi * Xr / r, -xi * Yr / r)
        deta = (-eta * Xr / r, 1 / (b * r) - eta * Yr / r)
        dzeta = (2 * eta / (a * r) - 2 * zeta * Xr / r, -2 * xi / (b * r) - 2 * zeta * Yr / r)
        return (xi, eta, zeta), (dxi, deta, dzeta), (Xr, Yr)

    def g_and_grad(r, phi, theta):
        (xi, eta, zeta), (dxi, deta, dzeta), _ = parts(r, phi, theta)
        g = 0.0
        gx = gy = 0.0
        for c, (i, j, k) in zip(coef, _MONOMIALS):
            g = g + c * xi ** i * eta ** j * zeta ** k
            # d(monomial) = i xi^(i-1) eta^j zeta^k dxi + ...
            di = i * xi ** max(i - 1, 0) * eta ** j * zeta ** k if i else 0.0
            dj = j * xi ** i * eta ** max(j - 1, 0) * zeta ** k if j else 0.0
            dk = k * xi ** i * eta ** j * zeta ** max(k - 1, 0) if k else 0.0
            gx = gx + c * (di * dxi[0] + dj * deta[0] + dk * dzeta[0])
            gy = gy + c * (di * dxi[1] + dj * deta[1] + dk * dzeta[1])
        return g, gx, gy

    def value_rpt(r, phi, theta):
        g, _, _ = g_and_grad(r, phi, theta)
        return np.sin(np.pi * np.log(r / spec.B) / L) * g

    def gradient_rpt(r, phi, theta):
        g, gx, gy = g_and_grad(r, phi, theta)
        _, _, (Xr, Yr) = parts(r, phi, theta)
        arg = np.pi * np.log(r / spec.B) / L
        h, dh = np.sin(arg), np.pi * np.cos(arg) / (r * L)
        return dh * Xr * g + h * gx, dh * Yr * g + h * gy

    return field_from_chart(spec, value_rpt, gradient_rpt)


# numerical differentiation -----------------------------------------------------


def horizontal_fd_gradient(f: ScalarField, p: Point, h: float = DEFAULT_FD_STEP) -> HorizontalVector:
    """Central differences along p * (+-h, 0, 0) and p * (0, +-h, 0)."""
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    probes = [group_multiply(p, Point(dx, dy, 0.0)) for dx, dy in ((h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h))]
    for q in probes:
        if not f.contains(q):
            raise DomainError(f"finite-difference probe {q} leaves the field domain")
    fx_p, fx_m, fy_p, fy_m = (f.value(q) for q in probes)
    return HorizontalVector((fx_p - fx_m) / (2 * h), (fy_p - fy_m) / (2 * h))


def coordinate_field(index: int) -> ScalarField:
    """The coordinate function x, y or t (index 0, 1, 2) with its exact gradient."""
    if index == 0:
        return ScalarField(lambda p: p.x, lambda p: HorizontalVector(1.0, 0.0))
    if index == 1:
        return ScalarField(lambda p: p.y, lambda p: HorizontalVector(0.0, 1.0))
    if index == 2:
        return ScalarField(lambda p: p.t, lambda p: HorizontalVector(2 * p.y, -2 * p.x))
    raise ValueError(f"coordinate index must be 0, 1 or 2, got {index}")


def sample_ring_points(spec: RingSpec, n: int, rng: np.random.Generator, margin: float = 0.05, pole_margin: float = 0.05):
    """Random points strictly inside the ring, away from the t-axis."""
    L = spec.log_ratio
    s = rng.uniform(margin, 1 - margin, n)
    r = spec.B * np.exp(s * L)
    phi = rng.uniform(pole_margin, np.pi - pole_margin, n)
    theta = rng.uniform(0, 2 * np.pi, n)
    out = []
    for i in range(n):
        out.append(to_cartesian(EllipsoidalCoords(r[i], phi[i], theta[i]), spec.a, spec.b))
    return out
