"""Heisenberg group arithmetic, Korányi gauge, contact form and linear contact maps.

Points are stored as (x, y, t) with z = x + iy. The group law is

    (z, t) * (w, s) = (z + w, t + s + 2 Im(z conj(w)))

which is the convention compatible with the contact form
omega = dt + 2(x dy - y dx) and the left-invariant frame
X = d/dx + 2y d/dt, Y = d/dy - 2x d/dt, T = d/dt.

All functions accept plain floats; most also broadcast over numpy arrays
stored in the coordinate slots, which the quadrature code relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

import numpy as np


class DegenerateInputError(ValueError):
    """Raised when an input sits on a singular set (the t-axis, ker omega, ...)."""


def _check_finite(name, *values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ValueError(f"{name} components must be finite, got {values}")


@dataclass(frozen=True)
class Point:
    x: float
    y: float
    t: float

    def __post_init__(self):
        _check_finite("Point", self.x, self.y, self.t)

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.t))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.t], dtype=float)


@dataclass(frozen=True)
class TangentVector:
    dx: float
    dy: float
    dt: float

    def __post_init__(self):
        _check_finite("TangentVector", self.dx, self.dy, self.dt)

    def __iter__(self) -> Iterator[float]:
        return iter((self.dx, self.dy, self.dt))

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.dx + other.dx, self.dy + other.dy, self.dt + other.dt)

    def __rmul__(self, c: float) -> "TangentVector":
        return TangentVector(c * self.dx, c * self.dy, c * self.dt)


@dataclass(frozen=True)
class HorizontalVector:
    """Coefficients (cx, cy) of a horizontal vector cx*X + cy*Y."""

    cx: float
    cy: float

    def __post_init__(self):
        _check_finite("HorizontalVector", self.cx, self.cy)

    def __iter__(self) -> Iterator[float]:
        return iter((self.cx, self.cy))

    def at(self, p: Point) -> TangentVector:
        """Coordinate components of cx*X_p + cy*Y_p."""
        return TangentVector(self.cx, self.cy, 2.0 * (p.y * self.cx - p.x * self.cy))


@dataclass(frozen=True)
class ContactLinearMap:
    """The map (x, y, t) -> (a x, b y, a b t)."""

    a: float
    b: float

    def __post_init__(self):
        _check_finite("ContactLinearMap", self.a, self.b)
        if self.a == 0 or self.b == 0:
            raise ValueError("ContactLinearMap needs a != 0 and b != 0")


ORIGIN = Point(0.0, 0.0, 0.0)


def group_multiply(p: Point, q: Point) -> Point:
    return Point(p.x + q.x, p.y + q.y, p.t + q.t + 2.0 * (p.y * q.x - p.x * q.y))


def group_inverse(p: Point) -> Point:
    return Point(-p.x, -p.y, -p.t)


def koranyi_gauge(p: Point) -> float:
    """|(z, t)| = ||z|^2 - i t|^(1/2)."""
    rho2 = p.x * p.x + p.y * p.y
    return np.sqrt(np.hypot(rho2, p.t))


def koranyi_distance(p: Point, q: Point) -> float:
    return koranyi_gauge(group_multiply(group_inverse(p), q))


# conformal maps -------------------------------------------------------------


class ConformalKind(str, Enum):
    TRANSLATION = "translation"
    ROTATION = "rotation"
    DILATION = "dilation"
    CONJUGATION = "conjugation"


def translate(p: Point, q: Point) -> Point:
    """Left translation by p."""
    return group_multiply(p, q)


def rotate(theta: float, q: Point) -> Point:
    c, s = np.cos(theta), np.sin(theta)
    return Point(c * q.x - s * q.y, s * q.x + c * q.y, q.t)


def dilate(delta: float, q: Point) -> Point:
    if not delta > 0:
        raise ValueError(f"dilation factor must be positive, got {delta}")
    return Point(delta * q.x, delta * q.y, delta * delta * q.t)


def conjugate(q: Point) -> Point:
    return Point(q.x, -q.y, -q.t)


def conformal_apply(kind: Union[ConformalKind, str], q: Point, param=None) -> Point:
    """Apply one of the conformal generators to q.

    ``param`` is the translating point, the rotation angle or the dilation
    factor depending on ``kind``; conjugation takes none.
    """
    kind = ConformalKind(kind)
    if kind is ConformalKind.TRANSLATION:
        return translate(param, q)
    if kind is ConformalKind.ROTATION:
        return rotate(param, q)
    if kind is ConformalKind.DILATION:
        return dilate(param, q)
    return conjugate(q)


# contact structure ----------------------------------------------------------


def contact_form(p: Point, v: TangentVector) -> float:
    return v.dt + 2.0 * (p.x * v.dy - p.y * v.dx)


def frame_vectors(p: Point) -> tuple[TangentVector, TangentVector, TangentVector]:
    """The left-invariant frame (X_p, Y_p, T) in coordinate components."""
    return (
        TangentVector(1.0, 0.0, 2.0 * p.y),
        TangentVector(0.0, 1.0, -2.0 * p.x),
        TangentVector(0.0, 0.0, 1.0),
    )


def linear_apply(L: ContactLinearMap, p: Point) -> Point:
    return Point(L.a * p.x, L.b * p.y, L.a * L.b * p.t)


def linear_differential(L: ContactLinearMap, v: TangentVector) -> TangentVector:
    return TangentVector(L.a * v.dx, L.b * v.dy, L.a * L.b * v.dt)


def linear_distortion(L: ContactLinearMap) -> float:
    """Maximal distortion (|a+b| + |a-b|) / (|a+b| - |a-b|) = max(a/b, b/a)."""
    a, b = L.a, L.b
    if a <= 0 or b <= 0:
        raise ValueError(f"distortion is only defined here for a, b > 0, got a={a}, b={b}")
    return max(a / b, b / a)


def contact_pullback_factor(L: ContactLinearMap, p: Point, v: TangentVector) -> float:
    """Ratio (L^* omega)_p(v) / omega_p(v); equals a*b for every (p, v)."""
    base = contact_form(p, v)
    if base == 0:
        raise DegenerateInputError("omega(p, v) = 0: v is horizontal, ratio undefined")
    return contact_form(linear_apply(L, p), linear_differential(L, v)) / base
