"""End-to-end numerical verification of the ring modulus from both sides."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

from .capacity import (
    J1_EXACT,
    J2_EXACT,
    J3_EXACT,
    QuadratureSpec,
    assemble_modulus_from_j,
    closed_form_modulus,
    energy_quadrature,
    j_integrals,
    perturbation_extremality,
)
from .coords import RingSpec, jacobian
from .flow import (
    IntegrationError,
    StepControl,
    extremal_density,
    holder_lower_bound,
    integrate_trajectory,
    line_integral,
    seed_grid,
)


@dataclass
class Check:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"


@dataclass
class VerifyReport:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, measured, expected, tolerance, passed=None):
        if passed is None:
            passed = abs(measured - expected) <= tolerance
        self.checks.append(Check(name, bool(passed), float(measured), float(expected), float(tolerance)))

    def rows(self) -> list[dict]:
        return [dict(asdict(c), status=c.status) for c in self.checks]


def run_verification(
    spec: RingSpec,
    quadrature: Optional[QuadratureSpec] = None,
    seeds: tuple[int, int] = (10, 10),
    control: Optional[StepControl] = None,
    n_bumps: int = 20,
    amplitude: float = 0.05,
    jacobian_fn: Callable = jacobian,
) -> VerifyReport:
    """Run every check on ``spec``.

    ``jacobian_fn`` replaces the volume element in the energy check only;
    pass a wrong one to confirm the suite detects it.
    """
    q = quadrature or QuadratureSpec()
    report = VerifyReport()
    closed = closed_form_modulus(spec)

    for name, got, exact in zip(("j1", "j2", "j3"), j_integrals(q), (J1_EXACT, J2_EXACT, J3_EXACT)):
        report.add(f"j_integral_{name}", got, exact, 1e-10)

    report.add(
        "assembly_identity",
        assemble_modulus_from_j(spec.K, spec.log_ratio, J1_EXACT, J2_EXACT, J3_EXACT),
        closed,
        1e-14 * closed,
    )

    energy = energy_quadrature(spec, q=q, jacobian_fn=jacobian_fn)
    report.add("energy_vs_closed_form", energy.value, closed, 1e-6 * closed)

    sphere = RingSpec(spec.B, spec.A)
    sphere_energy = energy_quadrature(sphere, q=q, jacobian_fn=jacobian_fn).value
    report.add("spherical_value", sphere_energy, math.pi ** 2 / spec.log_ratio ** 3, 1e-6 * sphere_energy)

    lam = 3.7
    scaled = RingSpec(lam * spec.B, lam * spec.A, spec.a, spec.b)
    report.add("scale_invariance_closed_form", closed_form_modulus(scaled), closed, 1e-14 * closed)
    report.add("scale_invariance_quadrature", energy_quadrature(scaled, q=q).value, closed, 1e-6 * closed)

    if n_bumps > 0:
        perturbed = min(perturbation_extremality(spec, seed, amplitude, q)[1] for seed in range(n_bumps))
        report.add("extremality_perturbations", perturbed, closed, 1e-8, passed=perturbed >= closed - 1e-8)

    rho0 = extremal_density(spec)
    worst = {"rr": 0.0, "eq8": 0.0, "horizontality": 0.0, "speed": 0.0, "line": 0.0}
    failures = 0
    for phi0, theta0 in seed_grid(*seeds):
        try:
            tr = integrate_trajectory(spec, phi0, theta0, control)
        except IntegrationError:
            failures += 1
            continue
        worst["rr"] = max(worst["rr"], tr.max_rr_residual)
        worst["eq8"] = max(worst["eq8"], tr.max_eq8_residual)
        worst["horizontality"] = max(worst["horizontality"], tr.max_horizontality)
        worst["speed"] = max(worst["speed"], tr.max_speed_residual)
        worst["line"] = max(worst["line"], abs(line_integral(tr, rho0) - 1.0))
    report.add("flow_failures", failures, 0, 0)
    report.add("flow_rr_residual", worst["rr"], 0.0, 1e-8)
    report.add("flow_eq8_residual", worst["eq8"], 0.0, 1e-8)
    report.add("flow_horizontality", worst["horizontality"], 0.0, 1e-10)
    report.add("flow_speed_law", worst["speed"], 0.0, 1e-8)
    report.add("unit_line_integral", worst["line"], 0.0, 1e-6)

    holder = holder_lower_bound(spec, rho0, q)
    report.add("holder_energy", holder.energy, closed, 1e-6 * closed)
    report.add("holder_pointwise_violations", holder.n_violations, 0, 0)
    return report
