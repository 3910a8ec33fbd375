"""Command-line interface.

    koranyi modulus --B 1 --A 2.718281828 --a 2 --b 1
    koranyi sweep --K 1 2 4 --ratio 2.718281828 10 --with-quadrature
    koranyi flow --K 2 --seeds-phi 4 --seeds-theta 4 --out runs/
    koranyi verify --K 1
    koranyi field-eval --K 2 --x 1.2 --y 0.3 --t 0.5

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from .capacity import QuadratureError, QuadratureSpec, closed_form_modulus, energy_quadrature
from .coords import EllipsoidalCoords, RingSpec, from_cartesian, ring_classify
from .core import DegenerateInputError, Point
from .fields import DomainError, horizontal_norm, u0_field
from .flow import DUMP_COLUMNS, IntegrationError, StepControl, extremal_density, integrate_trajectory, line_integral, seed_grid
from .verify import run_verification

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# formatting -------------------------------------------------------------------


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.16e}"
    return str(v)


def format_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(row.get(k, "")) for k in header])
    return buf.getvalue()


def format_json(config: dict, results) -> str:
    return json.dumps({"config": config, "results": results}, indent=2) + "\n"


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text, newline="\n")
    else:
        sys.stdout.write(text)


def _render(args, config: dict, rows: list[dict]) -> str:
    return format_json(config, rows) if args.format == "json" else format_csv(rows)


# argument handling ------------------------------------------------------------


def _add_ring(p, multi=False):
    g = p.add_argument_group("ring")
    g.add_argument("--B", type=float, default=1.0, help="inner radius")
    g.add_argument("--A", type=float, default=math.e, help="outer radius")
    g.add_argument("--a", type=float, default=1.0, help="first semi-axis")
    g.add_argument("--b", type=float, default=1.0, help="second semi-axis")
    nargs = "+" if multi else None
    g.add_argument("--ratio", type=float, nargs=nargs, help="A/B (sets B=1)")
    g.add_argument("--K", type=float, nargs=nargs, help="distortion (sets a=K, b=1)")


def _add_quadrature(p):
    g = p.add_argument_group("quadrature")
    d = QuadratureSpec()
    g.add_argument("--nr", type=int, default=d.n_r)
    g.add_argument("--nphi", type=int, default=d.n_phi)
    g.add_argument("--ntheta", type=int, default=d.n_theta)
    g.add_argument("--nodes", type=int, default=d.nodes_per_panel)


def _add_flow(p):
    g = p.add_argument_group("flow")
    d = StepControl()
    g.add_argument("--seeds-phi", type=int, default=10)
    g.add_argument("--seeds-theta", type=int, default=10)
    g.add_argument("--rel-tol", type=float, default=d.rel_tol)
    g.add_argument("--abs-tol", type=float, default=d.abs_tol)


def _add_output(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="koranyi", description="Modulus of Korányi ellipsoidal rings.", allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("modulus", help="closed form and quadrature for one ring", allow_abbrev=False)
    _add_ring(p)
    _add_quadrature(p)
    _add_output(p)

    p = sub.add_parser("sweep", help="closed form over a grid of (K, A/B)", allow_abbrev=False)
    _add_ring(p, multi=True)
    _add_quadrature(p)
    _add_output(p)
    p.add_argument("--with-quadrature", action="store_true")

    p = sub.add_parser("flow", help="integrate extremal flow curves", allow_abbrev=False)
    _add_ring(p)
    _add_flow(p)
    _add_output(p)

    p = sub.add_parser("verify", help="run the full verification suite", allow_abbrev=False)
    _add_ring(p)
    _add_quadrature(p)
    _add_flow(p)
    _add_output(p)
    p.add_argument("--bumps", type=int, default=20, help="number of random extremality perturbations")

    p = sub.add_parser("field-eval", help="evaluate u0 and its horizontal gradient at a point", allow_abbrev=False)
    _add_ring(p)
    _add_output(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    return parser


def ring_from_args(args, ratio=None, K=None) -> RingSpec:
    ratio = args.ratio if ratio is None else ratio
    K = args.K if K is None else K
    B, A, a, b = args.B, args.A, args.a, args.b
    if ratio is not None:
        B, A = 1.0, ratio
    if K is not None:
        if K < 1:
            raise UsageError(f"K must be >= 1, got {K}")
        a, b = K, 1.0
    try:
        return RingSpec(B, A, a, b)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def quadrature_from_args(args) -> QuadratureSpec:
    try:
        return QuadratureSpec(args.nr, args.nphi, args.ntheta, args.nodes)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _ring_config(spec: RingSpec) -> dict:
    return {"B": spec.B, "A": spec.A, "a": spec.a, "b": spec.b, "K": spec.K}


def _quad_config(q: QuadratureSpec) -> dict:
    return {"n_r": q.n_r, "n_phi": q.n_phi, "n_theta": q.n_theta, "nodes_per_panel": q.nodes_per_panel}


# commands ---------------------------------------------------------------------


def cmd_modulus(args) -> int:
    spec, q = ring_from_args(args), quadrature_from_args(args)
    rep = energy_quadrature(spec, q=q)
    row = dict(_ring_config(spec), closed_form=rep.closed_form, quadrature_value=rep.value,
               relative_error=rep.relative_error, node_count=rep.node_count)
    _emit(_render(args, {"command": "modulus", "ring": _ring_config(spec), "quadrature": _quad_config(q)}, [row]), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    Ks = args.K or [1.0]
    ratios = args.ratio or [args.A / args.B]
    q = quadrature_from_args(args)
    rows = []
    for K in Ks:
        for ratio in ratios:
            if ratio <= 1:
                raise UsageError(f"A/B must exceed 1, got {ratio}")
            spec = ring_from_args(args, ratio=ratio, K=K)
            row = {"K": spec.K, "ratio": ratio, "closed_form": closed_form_modulus(spec)}
            if args.with_quadrature:
                rep = energy_quadrature(spec, q=q)
                row.update(quadrature_value=rep.value, relative_error=rep.relative_error)
            rows.append(row)
    config = {"command": "sweep", "K": Ks, "ratio": ratios, "with_quadrature": args.with_quadrature}
    if args.with_quadrature:
        config["quadrature"] = _quad_config(q)
    _emit(_render(args, config, rows), args.out)
    return EXIT_OK


def _trajectory_rows(traj) -> list[dict]:
    return [dict(zip(DUMP_COLUMNS, row)) for row in traj.rows]


def cmd_flow(args) -> int:
    spec = ring_from_args(args)
    control = StepControl(args.rel_tol, args.abs_tol)
    rho0 = extremal_density(spec)
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    summary, failed = [], 0
    config = {"command": "flow", "ring": _ring_config(spec), "rel_tol": control.rel_tol, "abs_tol": control.abs_tol}
    for k, (phi0, theta0) in enumerate(seed_grid(args.seeds_phi, args.seeds_theta)):
        row = {"seed": k, "phi0": phi0, "theta0": theta0}
        try:
            traj = integrate_trajectory(spec, phi0, theta0, control)
        except (IntegrationError, DegenerateInputError) as exc:
            failed += 1
            summary.append(dict(row, status="failed", message=str(exc)))
            continue
        end = traj.end.point
        summary.append(dict(
            row, status="ok", message="", steps=len(traj.states), x_end=end.x, y_end=end.y, t_end=end.t,
            horizontal_length=traj.horizontal_length, line_integral=line_integral(traj, rho0),
            max_rr_residual=traj.max_rr_residual, max_eq8_residual=traj.max_eq8_residual,
            max_horizontality=traj.max_horizontality, max_speed_residual=traj.max_speed_residual,
        ))
        if out_dir:
            text = _render(args, dict(config, seed=row), _trajectory_rows(traj))
            (out_dir / f"trajectory_{k:04d}.{args.format}").write_text(text, newline="\n")
    # failed rows lack numeric columns; normalise keys so CSV columns line up
    keys = max(summary, key=len).keys() if summary else []
    summary = [{k: r.get(k, "") for k in keys} for r in summary]
    text = _render(args, config, summary)
    if out_dir:
        (out_dir / f"summary.{args.format}").write_text(text, newline="\n")
    else:
        sys.stdout.write(text)
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_verify(args, jacobian_fn=None) -> int:
    spec, q = ring_from_args(args), quadrature_from_args(args)
    kwargs = {} if jacobian_fn is None else {"jacobian_fn": jacobian_fn}
    report = run_verification(spec, q, (args.seeds_phi, args.seeds_theta), StepControl(args.rel_tol, args.abs_tol),
                              n_bumps=args.bumps, **kwargs)
    config = {"command": "verify", "ring": _ring_config(spec), "quadrature": _quad_config(q)}
    rows = [{k: r[k] for k in ("name", "status", "measured", "expected", "tolerance")} for r in report.rows()]
    if args.format == "json":
        text = json.dumps({"config": config, "results": rows, "passed": report.passed}, indent=2) + "\n"
    else:
        text = format_csv(rows)
    _emit(text, args.out)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_field_eval(args) -> int:
    spec = ring_from_args(args)
    p = Point(args.x, args.y, args.t)
    u = u0_field(spec)
    g = u.horizontal_gradient(p)
    c: EllipsoidalCoords = from_cartesian(p, spec.a, spec.b)
    row = {"x": p.x, "y": p.y, "t": p.t, "r": float(c.r), "phi": float(c.phi), "theta": float(c.theta),
           "region": ring_classify(spec, p).value, "u": float(u.value(p)), "Xu": float(g.cx), "Yu": float(g.cy),
           "grad_norm": float(horizontal_norm(g))}
    _emit(_render(args, {"command": "field-eval", "ring": _ring_config(spec)}, [row]), args.out)
    return EXIT_OK


COMMANDS = {"modulus": cmd_modulus, "sweep": cmd_sweep, "flow": cmd_flow, "verify": cmd_verify, "field-eval": cmd_field_eval}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, IntegrationError, DegenerateInputError, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
