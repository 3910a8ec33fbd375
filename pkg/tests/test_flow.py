import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from koranyi.capacity import QuadratureSpec, closed_form_modulus
from koranyi.coords import EllipsoidalCoords, RingSpec, from_cartesian, to_cartesian
from koranyi.core import DegenerateInputError, Point, TangentVector, contact_form
from koranyi.fields import horizontal_norm, sample_ring_points, u0_field, u0_gradient
from koranyi.flow import (
    Density,
    FlowState,
    IntegrationError,
    StepControl,
    admissibility_sample,
    eq8_residual,
    extremal_density,
    flow_rhs,
    holder_lower_bound,
    integrate_trajectory,
    line_integral,
    rr_residual,
    seed_grid,
)

SPECS = [RingSpec(1, math.e, 1, 1), RingSpec(1, math.e, 2, 1), RingSpec(0.5, 2.0, 0.8, 1.7)]


def _state(spec, p):
    return FlowState(p, from_cartesian(p, spec.a, spec.b), 0.0, 0.0, flow_rhs(spec, p))


@pytest.mark.parametrize("spec", SPECS)
def test_rhs_horizontal(spec, rng):
    for p in sample_ring_points(spec, 50, rng):
        assert abs(contact_form(p, flow_rhs(spec, p))) <= 1e-12


def test_rhs_example(unit_ring):
    assert tuple(flow_rhs(unit_ring, Point(1, 0, 0))) == pytest.approx((1, 0, 0), abs=1e-15)


def test_rhs_rejects_axis(unit_ring):
    with pytest.raises(DegenerateInputError):
        flow_rhs(unit_ring, Point(0, 0, 1.5))


@pytest.mark.parametrize("spec", SPECS)
def test_u0_increases_at_rate_grad_squared(spec, rng):
    u = u0_field(spec)
    h = 1e-6
    for p in sample_ring_points(spec, 100, rng):
        v = flow_rhs(spec, p)
        fwd = Point(p.x + h * v.dx, p.y + h * v.dy, p.t + h * v.dt)
        bwd = Point(p.x - h * v.dx, p.y - h * v.dy, p.t - h * v.dt)
        deriv = (u(fwd) - u(bwd)) / (2 * h)
        assert deriv == pytest.approx(horizontal_norm(u0_gradient(spec, p)) ** 2, rel=1e-6)


def _oracle_endpoint(spec, phi0, theta0):
    """Independent DOP853 integration with an event on r = A."""

    def rhs(_, y):
        v = flow_rhs(spec, Point(*y))
        return [v.dx, v.dy, v.dt]

    def hit(_, y):
        p = Point(*y)
        return (p.x ** 2 / spec.a ** 2 + p.y ** 2 / spec.b ** 2) ** 2 + p.t ** 2 / (spec.a * spec.b) ** 2 - spec.A ** 4

    hit.terminal = True
    start = to_cartesian(EllipsoidalCoords(spec.B, phi0, theta0), spec.a, spec.b)
    sol = solve_ivp(rhs, (0, 1e3), list(start), method="DOP853", rtol=1e-12, atol=1e-13, events=hit)
    return sol.t_events[0][0], sol.y_events[0][0]


def test_spherical_planar_trajectory(unit_ring):
    tr = integrate_trajectory(unit_ring, math.pi / 2, 0.0)
    for s in tr.states:
        assert abs(s.point.t) <= 1e-14 and abs(s.point.y) <= 1e-14
        assert s.coords.theta == 0.0
    assert tuple(tr.end.point) == pytest.approx((math.e, 0, 0), abs=1e-10)
    tau_end, y_end = _oracle_endpoint(unit_ring, math.pi / 2, 0.0)
    assert tr.end.tau == pytest.approx(tau_end, rel=1e-8)
    # exact solution: x' = 1/x, so x^2 = 1 + 2 tau and the exit time is (e^2 - 1) / 2
    assert tr.end.tau == pytest.approx((math.e ** 2 - 1) / 2, rel=1e-10)


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("seed", [(0.3, 0.0), (1.2, 2.0), (2.9, 5.5)])
def test_trajectory_matches_oracle(spec, seed):
    tr = integrate_trajectory(spec, *seed)
    tau_end, y_end = _oracle_endpoint(spec, *seed)
    assert tr.end.tau == pytest.approx(tau_end, rel=1e-7)
    assert tuple(tr.end.point) == pytest.approx(tuple(y_end), abs=1e-7)


@pytest.mark.parametrize("spec", SPECS)
def test_trajectory_invariants(spec):
    for seed in seed_grid(4, 3):
        tr = integrate_trajectory(spec, *seed)
        u = [s.u_value for s in tr.states]
        assert np.all(np.diff(u) > 0)
        assert abs(u[0]) <= 1e-12 and abs(u[-1] - 1) <= 1e-8
        assert abs(tr.states[0].coords.r - spec.B) <= 1e-12
        assert abs(tr.end.coords.r - spec.A) <= 1e-6
        assert tr.max_rr_residual <= 1e-8 and tr.max_eq8_residual <= 1e-8
        assert tr.max_horizontality <= 1e-10 and tr.max_speed_residual <= 1e-8
        assert tr.horizontal_length > 0
        # carried length agrees with Simpson on rho = 1
        assert line_integral(tr, Density(lambda r, p, t: np.ones_like(r))) == pytest.approx(tr.horizontal_length, rel=1e-7)
        assert len(tr.rows) == len(tr.states) and len(tr.rows[0]) == 11


def test_trajectory_rejects_pole_seed(unit_ring):
    for phi0 in (0.0, math.pi):
        with pytest.raises(ValueError):
            integrate_trajectory(unit_ring, phi0, 0.0)


def test_step_budget(unit_ring):
    with pytest.raises(IntegrationError, match="max_steps"):
        integrate_trajectory(unit_ring, 1.0, 1.0, StepControl(max_steps=3))


def test_tighter_tolerance_improves_line_integral(ellipse_ring):
    rho = extremal_density(ellipse_ring)
    loose = integrate_trajectory(ellipse_ring, 0.7, 1.1, StepControl(rel_tol=1e-6, abs_tol=1e-8))
    tight = integrate_trajectory(ellipse_ring, 0.7, 1.1, StepControl(rel_tol=1e-11, abs_tol=1e-13))
    assert abs(line_integral(tight, rho) - 1) < abs(line_integral(loose, rho) - 1)
    assert len(tight.states) > len(loose.states)


def test_rr_residual_examples(unit_ring):
    p = Point(1, 0, 0)
    s = _state(unit_ring, p)
    assert rr_residual(unit_ring, s, flow_rhs(unit_ring, p)) == pytest.approx(0, abs=1e-15)
    # zero velocity leaves -sin(phi)(...)/log(A/B) = -1 here
    assert rr_residual(unit_ring, s, TangentVector(0, 0, 0)) == pytest.approx(-1.0)


def test_eq8_residual_examples(unit_ring, ellipse_ring, rng):
    p = Point(1.3, 0, 0)
    assert eq8_residual(unit_ring, _state(unit_ring, p), flow_rhs(unit_ring, p)) == pytest.approx(0, abs=1e-15)
    for q in sample_ring_points(ellipse_ring, 20, rng):
        s = _state(ellipse_ring, q)
        assert abs(eq8_residual(ellipse_ring, s, flow_rhs(ellipse_ring, q))) <= 1e-13
        assert abs(eq8_residual(ellipse_ring, s, TangentVector(*rng.normal(size=3)))) > 1e-6


def test_eq8_rejects_axis(unit_ring):
    s = FlowState(Point(0, 0, 1.5), EllipsoidalCoords(1.2, 0.0, 0.0), 0, 0, TangentVector(0, 0, 0))
    with pytest.raises(DegenerateInputError):
        eq8_residual(unit_ring, s, TangentVector(1, 0, 0))


def test_line_integral_linearity(ellipse_ring):
    tr = integrate_trajectory(ellipse_ring, 1.0, 0.4)
    rho = extremal_density(ellipse_ring)
    assert line_integral(tr, Density(lambda r, p, t: 0 * r)) == 0
    assert line_integral(tr, rho) == pytest.approx(1, abs=1e-6)
    assert line_integral(tr, rho.scaled(2)) == pytest.approx(2, abs=2e-6)


def test_line_integral_falls_back_without_midpoints(ellipse_ring):
    tr = integrate_trajectory(ellipse_ring, 1.0, 0.4, StepControl(rel_tol=1e-12, abs_tol=1e-14))
    tr.midpoints = []
    assert line_integral(tr, extremal_density(ellipse_ring)) == pytest.approx(1, abs=1e-5)


def test_extremal_density_spherical(unit_ring):
    rho = extremal_density(unit_ring)
    for r in (1.0, 1.5, 2.5):
        assert rho(r, math.pi / 2, 0.7) == pytest.approx(1 / r, rel=1e-14)
    assert rho.at(EllipsoidalCoords(2.0, 1.0, 0.2)) == pytest.approx(math.sqrt(math.sin(1.0)) / 2.0)


@pytest.mark.parametrize("spec", SPECS)
def test_holder_equality_case(spec):
    res = holder_lower_bound(spec, extremal_density(spec))
    lower, energy = res
    assert energy == pytest.approx(lower, rel=1e-6)
    assert res.n_violations == 0 and res.holds()


def test_holder_dominating_density(ellipse_ring):
    base = extremal_density(ellipse_ring)
    bigger = Density(lambda r, p, t: base(r, p, t) * (1 + 0.3 * np.sin(t) ** 2))
    res = holder_lower_bound(ellipse_ring, bigger)
    assert res.energy > res.lower * (1 + 1e-3)
    assert res.n_violations == 0


def test_holder_zero_density_flagged(ellipse_ring):
    q = QuadratureSpec(4, 4, 4, 4)
    res = holder_lower_bound(ellipse_ring, Density(lambda r, p, t: 0 * r), q)
    assert res.n_violations == res.checked == 16 * 16
    assert not res.holds()


def test_admissibility_sample(ellipse_ring):
    seeds = seed_grid(3, 3)
    rho = extremal_density(ellipse_ring)
    assert admissibility_sample(ellipse_ring, rho, seeds) == pytest.approx(1, abs=1e-6)
    assert admissibility_sample(ellipse_ring, rho.scaled(0.5), seeds) < 1


def test_seed_grid_excludes_poles():
    seeds = seed_grid(10, 10)
    assert len(seeds) == 100
    assert all(0 < phi < math.pi and 0 <= th < 2 * math.pi for phi, th in seeds)
