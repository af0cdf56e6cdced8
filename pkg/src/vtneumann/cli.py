"""Command-line front end.

Exit codes: 0 success, 1 invalid input or size cap, 2 incompatible data,
3 a verified identity failed.  Errors go to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CapExceededError, IncompatibleProblemError, VTNeumannError
from .lcfun import LCFunction, WeightFunction
from .localfield import Grid, effective_params
from .operators import lambda_n, resolvent_radial
from .solvers import (
    Gauge,
    NeumannProblem,
    Solution,
    Tolerances,
    solve_strong,
    solve_strong_inhomogeneous,
    solve_weak,
    spectrum,
)
from .verify import all_passed, projection_inequality_check, random_lcfunction, random_zero_mean, residual_report, run_identity_suite

logger = logging.getLogger("vtneumann")

EXIT_OK, EXIT_INVALID, EXIT_INCOMPATIBLE, EXIT_IDENTITY = 0, 1, 2, 3

SOLVERS = {
    "galerkin": solve_weak,
    "fredholm": solve_strong,
    "fredholm_inhomogeneous": solve_strong_inhomogeneous,
}


class SpecError(VTNeumannError, ValueError):
    """The problem document is malformed."""


def _check_keys(obj, allowed: set[str], required: set[str], where: str) -> dict:
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SpecError(f"{where}: missing keys {sorted(missing)}")
    return obj


def _int(x, where: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SpecError(f"{where}: expected an integer, got {x!r}")
    return x


def _num(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SpecError(f"{where}: expected a number, got {x!r}")
    return float(x)


def _floats(xs, where: str) -> tuple[float, ...]:
    if not isinstance(xs, list):
        raise SpecError(f"{where}: expected an array")
    return tuple(_num(x, f"{where}[{i}]") for i, x in enumerate(xs))


@dataclass(frozen=True)
class ProblemSpec:
    q: int
    n: int
    alpha: float
    N: int
    M: int
    nu: int
    f_kind: str
    f_values: tuple[float, ...] | None = None
    f_seed: int | None = None
    g_kind: str = "zero"
    g_values: tuple[float, ...] | None = None
    solver: str = "galerkin"
    gauge: Gauge = field(default_factory=Gauge)
    tolerances: Tolerances = field(default_factory=Tolerances)

    @classmethod
    def from_dict(cls, d) -> ProblemSpec:
        _check_keys(d, {"field", "grid", "f", "g", "solver", "gauge", "tolerances"},
                    {"field", "grid", "f", "solver"}, "spec")
        fld = _check_keys(d["field"], {"q", "n", "alpha"}, {"q", "n", "alpha"}, "field")
        grd = _check_keys(d["grid"], {"N", "M", "nu"}, {"N", "M", "nu"}, "grid")
        f = _check_keys(d["f"], {"kind", "values", "seed"}, {"kind"}, "f")
        kw: dict = {}
        if f["kind"] == "values":
            _check_keys(f, {"kind", "values"}, {"kind", "values"}, "f")
            kw["f_values"] = _floats(f["values"], "f.values")
        elif f["kind"] == "zero_mean_random":
            _check_keys(f, {"kind", "seed"}, {"kind", "seed"}, "f")
            kw["f_seed"] = _int(f["seed"], "f.seed")
        else:
            raise SpecError(f"f.kind must be 'values' or 'zero_mean_random', got {f['kind']!r}")
        g = _check_keys(d.get("g", {"kind": "zero"}), {"kind", "values"}, {"kind"}, "g")
        if g["kind"] == "values":
            _check_keys(g, {"kind", "values"}, {"kind", "values"}, "g")
            kw["g_values"] = _floats(g["values"], "g.values")
        elif g["kind"] == "zero":
            _check_keys(g, {"kind"}, {"kind"}, "g")
        else:
            raise SpecError(f"g.kind must be 'zero' or 'values', got {g['kind']!r}")
        if d["solver"] not in SOLVERS:
            raise SpecError(f"solver must be one of {sorted(SOLVERS)}, got {d['solver']!r}")
        ga = _check_keys(d.get("gauge", {"kind": "zero_mean"}), {"kind", "h"}, {"kind"}, "gauge")
        if ga["kind"] == "zero_mean":
            _check_keys(ga, {"kind"}, {"kind"}, "gauge")
            gauge = Gauge.zero_mean()
        elif ga["kind"] == "fix_outer":
            _check_keys(ga, {"kind", "h"}, {"kind", "h"}, "gauge")
            gauge = Gauge.fix_outer(_num(ga["h"], "gauge.h"))
        else:
            raise SpecError(f"gauge.kind must be 'zero_mean' or 'fix_outer', got {ga['kind']!r}")
        tol = _check_keys(d.get("tolerances", {}), {"compat", "residual"}, set(), "tolerances")
        tolerances = Tolerances(
            _num(tol.get("compat", 1e-10), "tolerances.compat"),
            _num(tol.get("residual", 1e-9), "tolerances.residual"),
        )
        spec = cls(
            q=_int(fld["q"], "field.q"),
            n=_int(fld["n"], "field.n"),
            alpha=_num(fld["alpha"], "field.alpha"),
            N=_int(grd["N"], "grid.N"),
            M=_int(grd["M"], "grid.M"),
            nu=_int(grd["nu"], "grid.nu"),
            f_kind=f["kind"],
            g_kind=g["kind"],
            solver=d["solver"],
            gauge=gauge,
            tolerances=tolerances,
            **kw,
        )
        spec.grid()  # validates parameters and, below, array lengths
        spec.problem()
        return spec

    def to_dict(self) -> dict:
        f: dict = {"kind": self.f_kind}
        if self.f_kind == "values":
            f["values"] = list(self.f_values)
        else:
            f["seed"] = self.f_seed
        g: dict = {"kind": self.g_kind}
        if self.g_kind == "values":
            g["values"] = list(self.g_values)
        gauge: dict = {"kind": self.gauge.kind}
        if self.gauge.kind == "fix_outer":
            gauge["h"] = self.gauge.h
        return {
            "field": {"q": self.q, "n": self.n, "alpha": self.alpha},
            "grid": {"N": self.N, "M": self.M, "nu": self.nu},
            "f": f,
            "g": g,
            "solver": self.solver,
            "gauge": gauge,
            "tolerances": {"compat": self.tolerances.compat, "residual": self.tolerances.residual},
        }

    def grid(self) -> Grid:
        return Grid(effective_params(self.q, self.n, self.alpha), self.N, self.M, self.nu)

    def problem(self) -> NeumannProblem:
        grid = self.grid()
        if self.f_kind == "values":
            f_omega = np.array(self.f_values)
        else:
            f_omega = random_zero_mean(grid, np.random.default_rng(self.f_seed))
        try:
            f = LCFunction.from_omega(grid, f_omega)
            g = WeightFunction(grid, self.g_values) if self.g_kind == "values" else WeightFunction.zero(grid)
        except VTNeumannError as exc:
            raise SpecError(str(exc)) from exc
        return NeumannProblem(grid, f, g, self.gauge, self.tolerances)


def load_spec(path: str | Path) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON: {exc}") from exc
    return ProblemSpec.from_dict(data)


def _py(x):
    if isinstance(x, dict):
        return {k: _py(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_py(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_py(v) for v in x.tolist()]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def solution_report(spec: ProblemSpec, sol: Solution, reports) -> dict:
    grid = spec.grid()
    return _py({
        "spec": spec.to_dict(),
        "effective": {"Q": grid.Q, "gamma": grid.gamma},
        "method": sol.method,
        "u": sol.u.values,
        "outer": sol.u.outer,
        "h": sol.h,
        "residuals": sol.residuals,
        "checks": [r.to_dict() for r in reports],
    })


def solution_csv(grid: Grid, sol: Solution, reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["coset_id", "level_region", "value"])
    levels = grid.shell_levels
    for i, value in enumerate(sol.u.values.tolist()):
        region = "omega" if i < grid.omega_count else f"shell{int(levels[i - grid.omega_count])}"
        w.writerow([str(grid.coset(i)), region, repr(float(value))])
    w.writerow(["outer", repr(float(sol.u.outer))])
    for key, val in sol.residuals.items():
        buf.write(f"# {key},{float(val)!r}\n")
    for r in reports:
        buf.write(f"# {r.name},{float(r.lhs)!r},{'pass' if r.passed else 'FAIL'}\n")
    return buf.getvalue()


def _error(kind: str, message: str, **extra) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **_py(extra)}) + "\n")


def _warn_gamma(grid: Grid) -> None:
    if grid.gamma <= 1.0:
        logger.warning("effective exponent gamma = %r <= 1: outside the range assumed by the L^1 theory", grid.gamma)


def cmd_solve(args) -> int:
    spec = load_spec(args.spec)
    problem = spec.problem()
    _warn_gamma(problem.grid)
    sol = SOLVERS[spec.solver](problem)
    reports = residual_report(sol, problem)
    if args.format == "csv":
        text = solution_csv(problem.grid, sol, reports)
    else:
        text = json.dumps(solution_report(spec, sol, reports), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _grid_from_args(args, M=None) -> Grid:
    return Grid(effective_params(args.q, args.n, args.alpha), args.N, args.N if M is None else M, args.nu)


def cmd_verify(args) -> int:
    if args.trials < 1:
        raise SpecError(f"--trials must be >= 1, got {args.trials}")
    grid = _grid_from_args(args, args.M)
    _warn_gamma(grid)
    reports = run_identity_suite(grid, args.trials, args.seed, perturb=args.perturb)
    rng = np.random.default_rng(args.seed)
    for nu in range(-grid.N, grid.nu + 1):
        reports.append(projection_inequality_check(random_lcfunction(grid, rng), nu))
    if args.format == "json":
        sys.stdout.write(json.dumps(_py([r.to_dict() for r in reports]), indent=2) + "\n")
    else:
        sys.stdout.write(f"{'identity':<24}{'trial':>6}  {'abs_defect':>24}  {'rel_defect':>24}  status\n")
        for r in reports:
            trial = "-" if r.trial is None else str(r.trial)
            sys.stdout.write(f"{r.name:<24}{trial:>6}  {r.abs_defect!r:>24}  {r.rel_defect!r:>24}  "
                             f"{'pass' if r.passed else 'FAIL'}\n")
        failed = sum(not r.passed for r in reports)
        sys.stdout.write(f"# {len(reports) - failed}/{len(reports)} passed\n")
    return EXIT_OK if all_passed(reports) else EXIT_IDENTITY


def cmd_spectrum(args) -> int:
    grid = _grid_from_args(args)
    _warn_gamma(grid)
    eig = spectrum(grid, cap=args.cap)
    lam = lambda_n(grid.field, grid.N)
    sys.stdout.write("eigenvalue,multiplicity\n")
    for value, mult in eig:
        sys.stdout.write(f"{value!r},{mult}\n")
    if abs(eig[0][0] - lam) > 1e-9 * lam or eig[0][1] != 1:
        _error("identity", "minimum eigenvalue differs from lambda_N", minimum=eig[0][0], lambda_N=lam)
        return EXIT_IDENTITY
    return EXIT_OK


def cmd_kernel(args) -> int:
    field_ = effective_params(args.q, args.n, args.alpha)
    mu = lambda_n(field_, args.N) if args.mu is None else args.mu
    if args.s_max > args.N:
        raise SpecError(f"--s-max must be <= N = {args.N}")
    sys.stdout.write("s,r_mu\n")
    for s in range(args.s_max, args.s_min - 1, -1):
        sys.stdout.write(f"{s},{resolvent_radial(field_, args.N, mu, s)!r}\n")
    return EXIT_OK


def _field_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=int, default=2, help="residue cardinality (default 2)")
    p.add_argument("--n", type=int, default=1, help="dimension (default 1)")
    p.add_argument("--alpha", type=float, default=2.0, help="order alpha > 0 (default 2)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors share exit code 1 with other invalid input
        self.print_usage(sys.stderr)
        _error("usage", message)
        raise SystemExit(EXIT_INVALID)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vtneumann", description="Nonlocal Neumann problem over local fields.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a problem given as a JSON document")
    p.add_argument("spec", help="path to the problem JSON")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run the identity suite")
    _field_args(p)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spectrum", help="eigenvalues of the operator restricted to Omega")
    _field_args(p)
    p.add_argument("--N", type=int, default=0)
    p.add_argument("--nu", type=int, default=1)
    p.add_argument("--cap", type=int, default=4096)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("kernel", help="radial table of the resolvent kernel")
    _field_args(p)
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--mu", type=float, default=None, help="default lambda_N")
    p.add_argument("--s-min", type=int, default=-3)
    p.add_argument("--s-max", type=int, default=None, help="default N")
    p.set_defaults(func=cmd_kernel)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="warning: %(message)s", stream=sys.stderr)
    args = build_parser().parse_args(argv)
    if getattr(args, "s_max", 0) is None:
        args.s_max = args.N
    try:
        return args.func(args)
    except IncompatibleProblemError as exc:
        _error("incompatible", f"compatibility condition int_Omega f = -int_Omega^c g fails; defect {exc.defect!r}",
               defect=exc.defect)
        return EXIT_INCOMPATIBLE
    except CapExceededError as exc:
        _error("cap_exceeded", str(exc))
        return EXIT_INVALID
    except VTNeumannError as exc:
        _error("validation", str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
