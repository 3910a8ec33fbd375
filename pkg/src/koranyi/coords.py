"""Korányi ellipsoidal coordinates and ring geometry.

The chart is

    x = a r sqrt(sin phi) cos theta
    y = b r sqrt(sin phi) sin theta
    t = a b r^2 cos phi

so that (x^2/a^2 + y^2/b^2)^2 + t^2/(a^2 b^2) = r^4, and the volume element is
a^2 b^2 r^3 dr dphi dtheta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import ContactLinearMap, DegenerateInputError, Point, linear_distortion

BOUNDARY_RTOL = 1e-9


@dataclass(frozen=True)
class EllipsoidalCoords:
    r: float
    phi: float
    theta: float

    def __post_init__(self):
        if np.any(np.asarray(self.r) < 0):
            raise ValueError(f"r must be nonnegative, got {self.r}")
        if np.any((np.asarray(self.phi) < 0) | (np.asarray(self.phi) > math.pi)):
            raise ValueError(f"phi must lie in [0, pi], got {self.phi}")
        if np.any((np.asarray(self.theta) < 0) | (np.asarray(self.theta) >= 2 * math.pi)):
            raise ValueError(f"theta must lie in [0, 2pi), got {self.theta}")


@dataclass(frozen=True)
class RingSpec:
    """Korányi ellipsoidal ring B^4 <= q(p) <= A^4 with semi-axes (a, b)."""

    B: float
    A: float
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        for name in ("B", "A", "a", "b"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if not 0 < self.B < self.A:
            raise ValueError(f"need 0 < B < A, got B={self.B}, A={self.A}")
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"need a, b > 0, got a={self.a}, b={self.b}")

    @classmethod
    def from_ratio(cls, ratio: float, K: float = 1.0) -> "RingSpec":
        """Canonical ring with B = 1, b = 1, A = ratio, a = K."""
        if K < 1:
            raise ValueError(f"K must be >= 1, got {K}")
        return cls(B=1.0, A=ratio, a=K, b=1.0)

    @property
    def K(self) -> float:
        return linear_distortion(ContactLinearMap(self.a, self.b))

    @property
    def log_ratio(self) -> float:
        return math.log(self.A / self.B)


class Region(str, Enum):
    INSIDE = "inside"  # open ring B^4 < q < A^4
    INNER_BOUNDARY = "inner_boundary"
    OUTER_BOUNDARY = "outer_boundary"
    INTERIOR = "interior"  # the hole q < B^4
    EXTERIOR = "exterior"  # q > A^4


def ellipsoid_quadratic(p: Point, a: float, b: float):
    """q(p) = (x^2/a^2 + y^2/b^2)^2 + t^2/(a^2 b^2)."""
    s = p.x * p.x / (a * a) + p.y * p.y / (b * b)
    return s * s + p.t * p.t / (a * a * b * b)


def to_cartesian(c: EllipsoidalCoords, a: float, b: float) -> Point:
    rs = c.r * np.sqrt(np.sin(c.phi))
    return Point(a * rs * np.cos(c.theta), b * rs * np.sin(c.theta), a * b * c.r * c.r * np.cos(c.phi))


def from_cartesian(p: Point, a: float, b: float) -> EllipsoidalCoords:
    u, v = p.x / a, p.y / b
    s = u * u + v * v
    if np.any(s == 0):
        raise DegenerateInputError(f"point on the t-axis has no azimuth: {p}")
    w = p.t / (a * b)
    r2 = np.hypot(s, w)
    phi = np.arctan2(s, w)  # cos phi = w / r^2, sin phi = s / r^2
    theta = np.mod(np.arctan2(v, u), 2.0 * np.pi)
    # mod can return exactly 2pi for tiny negative angles
    theta = np.where(theta >= 2.0 * np.pi, 0.0, theta)
    if np.ndim(theta) == 0:
        theta = float(theta)
    return EllipsoidalCoords(np.sqrt(r2), phi, theta)


def chart_differential(c: EllipsoidalCoords, a: float, b: float) -> np.ndarray:
    """Matrix d(x, y, t)/d(r, phi, theta); rows x, y, t. Singular on the axis."""
    r, phi, th = c.r, c.phi, c.theta
    sp, cp = math.sin(phi), math.cos(phi)
    rt = math.sqrt(sp)
    ct, st = math.cos(th), math.sin(th)
    return np.array(
        [
            [a * rt * ct, a * r * cp * ct / (2 * rt), -a * r * rt * st],
            [b * rt * st, b * r * cp * st / (2 * rt), b * r * rt * ct],
            [2 * a * b * r * cp, -a * b * r * r * sp, 0.0],
        ]
    )


def jacobian(c: EllipsoidalCoords, a: float, b: float):
    return a * a * b * b * c.r ** 3


def ring_classify(spec: RingSpec, p: Point) -> Region:
    q = ellipsoid_quadratic(p, spec.a, spec.b)
    inner, outer = spec.B ** 4, spec.A ** 4
    if abs(q - inner) <= BOUNDARY_RTOL * inner:
        return Region.INNER_BOUNDARY
    if abs(q - outer) <= BOUNDARY_RTOL * outer:
        return Region.OUTER_BOUNDARY
    if q < inner:
        return Region.INTERIOR
    if q > outer:
        return Region.EXTERIOR
    return Region.INSIDE
