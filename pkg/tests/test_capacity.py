import math
import time

import numpy as np
import pytest
from scipy import integrate

from koranyi.capacity import (
    J1_EXACT,
    J2_EXACT,
    J3_EXACT,
    QuadratureError,
    QuadratureSpec,
    assemble_modulus_from_j,
    closed_form_modulus,
    energy_quadrature,
    j_integrals,
    perturbation_extremality,
)
from koranyi.coords import RingSpec
from koranyi.fields import ScalarField, bump_field, combine, field_from_chart, u0_field

PI2 = math.pi ** 2


def test_closed_form_examples():
    assert closed_form_modulus(RingSpec(1, math.e)) == pytest.approx(PI2, rel=1e-15)
    assert closed_form_modulus(RingSpec(1, math.e, 2, 1)) == pytest.approx(59 / 32 * PI2, rel=1e-15)
    assert closed_form_modulus(RingSpec(2, 2 * math.e, 2, 1)) == pytest.approx(59 / 32 * PI2, rel=1e-15)


def test_closed_form_value_for_K2():
    # (3/8 (4 + 1/4) + 1/4) = 59/32
    assert 59 / 32 * PI2 == pytest.approx(18.1970831, abs=1e-7)


def test_scale_invariance(rng):
    for lam, B, ratio, a, b in rng.uniform(0.1, 5, size=(20, 5)):
        A = B * (1 + ratio)
        assert closed_form_modulus(RingSpec(lam * B, lam * A, a, b)) == pytest.approx(
            closed_form_modulus(RingSpec(B, A, a, b)), rel=1e-14
        )


def test_axis_swap_symmetry(rng):
    for a, b in rng.uniform(0.1, 5, size=(20, 2)):
        assert closed_form_modulus(RingSpec(1, 3, a, b)) == closed_form_modulus(RingSpec(1, 3, b, a))


def test_monotone_in_K():
    vals = [closed_form_modulus(RingSpec.from_ratio(3.0, K)) for K in np.linspace(1, 6, 40)]
    assert np.all(np.diff(vals) > 0)


def test_j_integrals_against_scipy():
    # independent adaptive route
    f1 = lambda th, ph: math.sin(ph) ** 2 * math.sin(ph + th) ** 4
    f2 = lambda th, ph: math.sin(ph) ** 2 * math.cos(ph + th) ** 4
    f3 = lambda th, ph: 2 * math.sin(ph) ** 2 * (math.sin(ph + th) * math.cos(ph + th)) ** 2
    oracle = [integrate.dblquad(f, 0, math.pi, 0, 2 * math.pi, epsabs=1e-13)[0] for f in (f1, f2, f3)]
    assert oracle == pytest.approx([J1_EXACT, J2_EXACT, J3_EXACT], abs=1e-10)
    assert j_integrals() == pytest.approx(oracle, abs=1e-10)


def test_assembly():
    assert assemble_modulus_from_j(1, 1, J1_EXACT, J2_EXACT, J3_EXACT) == pytest.approx(PI2, rel=1e-15)
    assert assemble_modulus_from_j(2, 1, J1_EXACT, J2_EXACT, J3_EXACT) == pytest.approx(59 / 32 * PI2, rel=1e-15)
    for K in (1, 1.3, 2, 5):
        for ratio in (1.5, math.e, 10):
            spec = RingSpec.from_ratio(ratio, K)
            got = assemble_modulus_from_j(K, spec.log_ratio, J1_EXACT, J2_EXACT, J3_EXACT)
            assert got == pytest.approx(closed_form_modulus(spec), rel=1e-14)
    with pytest.raises(ValueError):
        assemble_modulus_from_j(0.5, 1, 1, 1, 1)


def test_quadrature_spec_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(0, 1, 1, 2)
    with pytest.raises(ValueError):
        QuadratureSpec(1, 1, 1, 1)


def test_energy_examples():
    rep = energy_quadrature(RingSpec(1, math.e), q=QuadratureSpec(8, 8, 8, 4))
    assert rep.relative_error <= 1e-6
    assert rep.node_count == 8 * 8 * 8 * 64
    rep = energy_quadrature(RingSpec(1, math.e, 2, 1), q=QuadratureSpec(16, 16, 16, 6))
    assert rep.value == pytest.approx(59 / 32 * PI2, rel=1e-6)


@pytest.mark.parametrize("spec", [RingSpec(1, math.e, 2, 1), RingSpec(1, 10, 3, 1)])
def test_refinement_does_not_increase_error(spec):
    q = QuadratureSpec(2, 2, 2, 4)
    errs = []
    for _ in range(4):
        errs.append(energy_quadrature(spec, q=q).relative_error)
        q = q.refined()
    # once at round-off the error just jitters, so allow a few ulps of slack
    assert all(e2 <= e1 + 1e-14 for e1, e2 in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-9


def test_quadrature_deterministic():
    spec = RingSpec(1, 4, 1.5, 1)
    assert energy_quadrature(spec).value == energy_quadrature(spec).value


def test_generic_field_path_matches_chart_path(ellipse_ring):
    u = u0_field(ellipse_ring)
    generic = ScalarField(u.value, u.horizontal_gradient)
    a = energy_quadrature(ellipse_ring, generic, QuadratureSpec(4, 4, 4, 4)).value
    b = energy_quadrature(ellipse_ring, u, QuadratureSpec(4, 4, 4, 4)).value
    assert a == pytest.approx(b, rel=1e-13)


def test_energy_against_cylindrical_chart(ellipse_ring):
    """Integrate |grad u0|^4 in scaled cylindrical coordinates with Cartesian derivatives."""
    spec = ellipse_ring
    a, b, L = spec.a, spec.b, spec.log_ratio

    def integrand(rho, tau):
        # x = a rho cos al, y = b rho sin al, t = a b tau; q = rho^4 + tau^2
        q = rho ** 4 + tau ** 2

        def grad_sq(al):
            x, y, t = a * rho * math.cos(al), b * rho * math.sin(al), a * b * tau
            s = rho * rho
            Xq = 4 * x * s / a ** 2 + 4 * y * t / (a * b) ** 2
            Yq = 4 * y * s / b ** 2 - 4 * x * t / (a * b) ** 2
            return ((Xq ** 2 + Yq ** 2) / (4 * q * L) ** 2) ** 2

        ang = integrate.quad(grad_sq, 0, 2 * math.pi, epsabs=1e-13, limit=200)[0]
        return ang * a * a * b * b * rho

    B4, A4 = spec.B ** 4, spec.A ** 4
    # split tau so the rho limits stay smooth on each piece
    total = 0.0
    for lo, hi in ((-spec.A ** 2, -spec.B ** 2), (-spec.B ** 2, spec.B ** 2), (spec.B ** 2, spec.A ** 2)):
        total += integrate.dblquad(
            lambda rho, tau: integrand(rho, tau),
            lo, hi,
            lambda tau: max(B4 - tau * tau, 0.0) ** 0.25,
            lambda tau: max(A4 - tau * tau, 0.0) ** 0.25,
            epsrel=1e-7,
        )[0]
    assert total == pytest.approx(energy_quadrature(spec).value, rel=1e-5)


def test_nonfinite_integrand_reports_location(unit_ring):
    bad = field_from_chart(unit_ring, lambda r, p, t: r, lambda r, p, t: (np.where(r > 2, np.nan, 1.0), 0.0 * r))
    with pytest.raises(QuadratureError, match="r, phi, theta"):
        energy_quadrature(unit_ring, bad)


def test_jacobian_hook_changes_result(unit_ring):
    wrong = lambda c, a, b: a * a * b * b * c.r ** 2
    rep = energy_quadrature(unit_ring, jacobian_fn=wrong)
    assert rep.relative_error > 1e-2


def test_extremality_zero_amplitude(ellipse_ring):
    base, pert = perturbation_extremality(ellipse_ring, 3, 0.0)
    assert base == pert


def test_extremality_spherical(unit_ring):
    closed = closed_form_modulus(unit_ring)
    for seed in range(20):
        base, pert = perturbation_extremality(unit_ring, seed, 0.05)
        assert base == pytest.approx(closed, rel=1e-12)
        assert pert >= closed - 1e-8


def test_extremality_other_spherical_ring():
    spec = RingSpec(0.5, 4.0)
    for seed in range(5):
        assert perturbation_extremality(spec, seed, 0.1)[1] >= closed_form_modulus(spec) - 1e-8


def test_u0_not_critical_when_anisotropic(ellipse_ring):
    """For a != b the energy has a nonzero first variation at u0.

    A symmetric difference in the bump amplitude exposes a slope of order
    one, so u0 cannot minimise the energy among admissible potentials.
    """
    u, v = u0_field(ellipse_ring), bump_field(ellipse_ring, 12)
    q = QuadratureSpec(16, 16, 16, 8)
    E = lambda eps: energy_quadrature(ellipse_ring, combine(1, u, eps, v), q).value
    slope = (E(1e-4) - E(-1e-4)) / 2e-4
    assert abs(slope) > 1.0
    # same construction on the spherical ring has zero slope
    us, vs = u0_field(RingSpec(1, math.e)), bump_field(RingSpec(1, math.e), 12)
    Es = lambda eps: energy_quadrature(RingSpec(1, math.e), combine(1, us, eps, vs), q).value
    assert abs((Es(1e-4) - Es(-1e-4)) / 2e-4) < 1e-6


def test_user_bump_must_vanish_on_boundary(unit_ring):
    u = u0_field(unit_ring)
    with pytest.raises(ValueError, match="vanish"):
        perturbation_extremality(unit_ring, 0, 0.05, bump=u)
    ok = bump_field(unit_ring, 7)
    base, pert = perturbation_extremality(unit_ring, 0, 0.05, bump=ok)
    assert pert >= base
