"""Numerical modulus and capacity of Korányi ellipsoidal rings in the Heisenberg group."""

from .capacity import (
    EnergyReport,
    QuadratureError,
    QuadratureSpec,
    assemble_modulus_from_j,
    closed_form_modulus,
    energy_quadrature,
    j_integrals,
    perturbation_extremality,
)
from .coords import EllipsoidalCoords, Region, RingSpec, from_cartesian, jacobian, ring_classify, to_cartesian
from .core import (
    ContactLinearMap,
    DegenerateInputError,
    HorizontalVector,
    Point,
    TangentVector,
    conformal_apply,
    contact_form,
    contact_pullback_factor,
    frame_vectors,
    group_inverse,
    group_multiply,
    koranyi_distance,
    koranyi_gauge,
    linear_apply,
    linear_distortion,
)
from .fields import ScalarField, horizontal_fd_gradient, horizontal_norm, u0_field, u0_gradient
from .flow import (
    Density,
    StepControl,
    Trajectory,
    extremal_density,
    flow_rhs,
    holder_lower_bound,
    integrate_trajectory,
    line_integral,
    seed_grid,
)

__version__ = "0.1.0"
