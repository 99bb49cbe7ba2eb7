"""Command-line interface: convergence studies, single solves, inf-sup sweeps.

Exit codes are a stable scripting contract: 0 success, 2 numerical failure,
3 configuration error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from .analysis import ConvergenceRecord, convergence_rates, error_norms, estimate_infsup
from .assembly import apply_constraints, build_saddle_system
from .errors import (
    EigenNonConvergenceError,
    IterationDivergenceError,
    NotPositiveDefiniteError,
    SingularSystemError,
)
from .femspace import SpaceKind
from .mesh import build_structured_mesh, read_mesh
from .pairs import PairId, parse_pair
from .problems import make_problem
from .solver import solve_saddle

EXIT_OK = 0
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3
EXIT_IO = 4


class _CliError(Exception):
    """Configuration problem reported on stderr with exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


@dataclass
class RunConfig:
    """Resolved options for one command invocation."""

    pair: PairId
    problem: str = "mms1"
    levels: list = field(default_factory=list)
    nu: float = 1.0
    out: str = ""
    solver: str = "direct"
    mesh_path: str = ""
    n: int = 16


def _parse_levels(text):
    if not text or not text.strip():
        raise _CliError("levels must be a nonempty comma-separated list")
    try:
        levels = [int(tok) for tok in text.split(",")]
    except ValueError:
        raise _CliError(f"levels must be integers, got '{text}'") from None
    if any(n < 1 for n in levels):
        raise _CliError("levels must be positive")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise _CliError("levels must be strictly increasing")
    return levels


def _resolve_pair(name, stab):
    try:
        pair = parse_pair(name)
    except ValueError as exc:
        raise _CliError(str(exc)) from None
    if stab is None:
        return pair
    want = stab == "on"
    if pair.stabilized == want:
        return pair
    swap = {PairId.NCP1_P1: PairId.NCP1_P1_STAB, PairId.NCP1_P1_STAB: PairId.NCP1_P1}
    if pair in swap:
        return swap[pair]
    raise _CliError(f"pair '{name}' has no --stab {stab} variant")


def solve_on_mesh(mesh, pair, problem, method="direct"):
    """Assemble, constrain, and solve one problem on one mesh."""
    system, bc = build_saddle_system(mesh, pair, problem)
    reduced = apply_constraints(system, bc)
    solution = solve_saddle(reduced, method=method)
    return system, solution


def run_convergence_study(pair, problem, levels, method="direct"):
    """Solve at every level and return records with rate columns filled."""
    if not problem.has_exact_solution:
        raise ValueError(f"problem '{problem.name}' has no exact solution")
    records = []
    for n in levels:
        mesh = build_structured_mesh(n)
        _, solution = solve_on_mesh(mesh, pair, problem, method=method)
        records.append(
            ConvergenceRecord(n=n, h=mesh.h, errors=error_norms(mesh, solution, problem))
        )
    return convergence_rates(records)


def _fmt_err(x):
    return f"{x:.6g}"


def _fmt_rate(x):
    return "" if x is None else f"{x:.4f}"


def write_convergence_csv(path, records):
    lines = ["n,h,rel_l2_u,rel_h1_u,rel_l2_p,rate_l2,rate_h1,rate_p\n"]
    for r in records:
        e = r.errors
        lines.append(
            f"{r.n},{_fmt_err(r.h)},{_fmt_err(e.rel_l2_u)},{_fmt_err(e.rel_h1_u)},"
            f"{_fmt_err(e.rel_l2_p)},{_fmt_rate(r.rate_l2)},{_fmt_rate(r.rate_h1)},"
            f"{_fmt_rate(r.rate_p)}\n"
        )
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


def write_infsup_csv(path, estimates):
    lines = ["n,h,beta_h\n"]
    for est in estimates:
        lines.append(f"{est.n},{_fmt_err(est.h)},{est.beta_h:.8g}\n")
    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


def write_vtk(path, mesh, solution, title="ncstokes solution"):
    """Write the solution as a legacy ASCII VTK unstructured grid.

    The velocity is exported as per-cell vectors (element averages, since the
    midpoint-continuous field is discontinuous at vertices); a continuous
    linear pressure is written as point data, a piecewise constant one as
    cell data.
    """
    lines = [
        "# vtk DataFile Version 2.0\n",
        f"{title}\n",
        "ASCII\n",
        "DATASET UNSTRUCTURED_GRID\n",
        f"POINTS {mesh.n_vertices} double\n",
    ]
    for x, y in mesh.vertices:
        lines.append(f"{x:.12g} {y:.12g} 0.0\n")
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}\n")
    for i, j, k in mesh.triangles:
        lines.append(f"3 {i} {j} {k}\n")
    lines.append(f"CELL_TYPES {mesh.n_triangles}\n")
    lines.extend("5\n" for _ in range(mesh.n_triangles))

    vel_dm = solution.u.dofmap
    cell_avg = solution.u.values[vel_dm.cell_dofs].reshape(mesh.n_triangles, 3, 2).mean(axis=1)
    lines.append(f"CELL_DATA {mesh.n_triangles}\n")
    lines.append("VECTORS velocity double\n")
    for ux, uy in cell_avg:
        lines.append(f"{ux:.12g} {uy:.12g} 0.0\n")

    if solution.p.space is SpaceKind.P0_SCALAR:
        lines.append("SCALARS pressure double 1\n")
        lines.append("LOOKUP_TABLE default\n")
        lines.extend(f"{v:.12g}\n" for v in solution.p.values)
    else:
        lines.append(f"POINT_DATA {mesh.n_vertices}\n")
        lines.append("SCALARS pressure double 1\n")
        lines.append("LOOKUP_TABLE default\n")
        lines.extend(f"{v:.12g}\n" for v in solution.p.values)

    with open(path, "w", encoding="ascii") as fh:
        fh.writelines(lines)


def cmd_convergence(config):
    """Run a convergence study and write its CSV table."""
    problem = _make_problem_checked(config.problem, config.nu)
    if not problem.has_exact_solution:
        raise _CliError(f"problem '{problem.name}' has no exact solution")
    records = run_convergence_study(config.pair, problem, config.levels,
                                    method=config.solver)
    write_convergence_csv(config.out, records)
    return EXIT_OK


def cmd_solve(config):
    """Solve one problem and write the fields as legacy VTK."""
    problem = _make_problem_checked(config.problem, config.nu)
    mesh = read_mesh(config.mesh_path) if config.mesh_path else build_structured_mesh(config.n)
    _, solution = solve_on_mesh(mesh, config.pair, problem, method=config.solver)
    write_vtk(config.out, mesh, solution, title=f"{problem.name} {config.pair.value}")
    return EXIT_OK


def cmd_infsup(config):
    """Estimate the inf-sup constant per level and write the CSV table."""
    estimates = [
        estimate_infsup(build_structured_mesh(n), config.pair, n=n)
        for n in config.levels
    ]
    write_infsup_csv(config.out, estimates)
    return EXIT_OK


def _make_problem_checked(name, nu):
    try:
        return make_problem(name, nu=nu)
    except ValueError as exc:
        raise _CliError(str(exc)) from None


def _config_from_args(args):
    return RunConfig(
        pair=_resolve_pair(args.pair, args.stab),
        problem=getattr(args, "problem", "mms1"),
        levels=_parse_levels(args.levels) if hasattr(args, "levels") else [],
        nu=args.nu,
        out=args.out,
        solver=args.solver,
        mesh_path=getattr(args, "mesh", ""),
        n=getattr(args, "n", 16),
    )


def _build_parser():
    parser = _Parser(prog="ncstokes", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--pair", default="ncp1-p1", help="discretization pair")
        p.add_argument("--nu", type=float, default=1.0, help="viscosity (default 1)")
        p.add_argument("--solver", choices=("direct", "uzawa"), default="direct")
        p.add_argument("--stab", choices=("on", "off"), default=None,
                       help="override the pair's stabilization")

    p = sub.add_parser("convergence", help="manufactured-solution convergence table")
    common(p)
    p.add_argument("--problem", default="mms1")
    p.add_argument("--levels", required=True, help="comma-separated subdivisions")
    p.add_argument("--out", default="convergence.csv")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("solve", help="single solve written as legacy VTK")
    common(p)
    p.add_argument("--problem", default="cavity")
    p.add_argument("--n", type=int, default=16, help="structured mesh subdivisions")
    p.add_argument("--mesh", default="", help="path of an imported mesh file")
    p.add_argument("--out", default="solution.vtk")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("infsup", help="discrete inf-sup constant sweep")
    common(p)
    p.add_argument("--levels", required=True, help="comma-separated subdivisions")
    p.add_argument("--out", default="infsup.csv")
    p.set_defaults(func=cmd_infsup)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(_config_from_args(args))
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (
        SingularSystemError,
        IterationDivergenceError,
        NotPositiveDefiniteError,
        EigenNonConvergenceError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry():
    sys.exit(main())
