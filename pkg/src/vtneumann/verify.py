"""Independent oracles and the identity suite.

Nothing here trusts the assembled matrices it checks: the pointwise oracle
walks explicit coset digits pair by pair, the Dirichlet-form side of the
Green identity is summed level by level, and Neumann fluxes use the closed
form of the exterior kernel.

Random test functions come from :func:`numpy.random.default_rng` (PCG64)
seeded with the caller's integer seed; values are i.i.d. uniform on
``[-1, 1]``, the tail constant included.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CapExceededError, ParameterError
from .lcfun import (
    LCFunction,
    integrate,
    omega_pair_integral,
    project_average,
    refine,
    sobolev_norm,
)
from .localfield import CosetId, Grid, coset_distance, tail_kernel_integral
from .operators import (
    assemble_regional,
    assemble_vt,
    bilinear_form,
    coefficient_c,
    exterior_interaction,
    lambda_n,
    neumann_pairing,
    neumann_shell_values,
    neumann_trace,
    resolvent_matrix,
)
from .solvers import NeumannProblem, Solution

IDENTITY_RTOL = 1e-10
ORACLE_RTOL = 1e-12
RESIDUAL_RTOL = 1e-9
ORACLE_CAP = 1 << 16


@dataclass
class IdentityReport:
    name: str
    lhs: float
    rhs: float
    abs_defect: float
    rel_defect: float
    passed: bool
    tolerance: float
    kind: str = "equality"
    trial: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _equality(name, lhs, rhs, tol, scale=0.0, trial=None, abs_defect=None) -> IdentityReport:
    lhs, rhs = float(lhs), float(rhs)
    ad = abs(lhs - rhs) if abs_defect is None else float(abs_defect)
    denom = max(abs(lhs), abs(rhs), float(scale), np.finfo(float).tiny)
    rd = ad / denom
    return IdentityReport(name, lhs, rhs, ad, rd, bool(rd <= tol), tol, "equality", trial)


def random_lcfunction(grid: Grid, rng: np.random.Generator) -> LCFunction:
    values = rng.uniform(-1.0, 1.0, grid.coset_count)
    return LCFunction(grid, values, rng.uniform(-1.0, 1.0))


def random_zero_mean(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    """Uniform values on the Omega cosets with their mean removed."""
    f = rng.uniform(-1.0, 1.0, grid.omega_count)
    return f - f.mean()


def _tail_series(grid: Grid, M: int) -> float:
    """``int_{|y| > Q**M} |y|**(-1-gamma) dy`` by summing shells until negligible."""
    f = grid.field
    total, j = 0.0, M + 1
    while True:
        term = f.qpow(-j * (1.0 + f.gamma)) * f.qpow(j) * (1.0 - 1.0 / f.Q)
        total += term
        if term <= 1e-18 * total:
            return total
        j += 1


def oracle_apply_vt(u: LCFunction, coset: CosetId, refine_nu: int | None = None, truncate_M: int | None = None) -> float:
    """The operator at one coset by naive pair summation on a refined grid."""
    g = u.grid
    refine_nu = g.nu if refine_nu is None else refine_nu
    truncate_M = g.M if truncate_M is None else truncate_M
    if coset.grid != g:
        raise ParameterError("coset does not belong to the function's grid")
    fine = refine(u, refine_nu, truncate_M)
    fg = fine.grid
    if fg.coset_count > ORACLE_CAP:
        raise CapExceededError(f"oracle grid has {fg.coset_count} cosets (cap {ORACLE_CAP})")
    x = CosetId.from_index(fg, coset.index * g.Q ** (refine_nu - g.nu))
    ux = fine.values[x.index]
    vol = fg.coset_volume
    total = 0.0
    for y in fg.cosets():
        d = coset_distance(x, y)
        if d is None:
            continue
        total += (ux - fine.values[y.index]) * vol * fg.field.qpow(-d * (1.0 + fg.gamma))
    total += (ux - fine.outer) * _tail_series(fg, truncate_M)
    return coefficient_c(g.field) * total


def projection_inequality_check(f: LCFunction, coarse_nu: int, trial: int | None = None) -> IdentityReport:
    """Averaging over balls of radius ``r = Q**-coarse_nu`` loses at most ``r**gamma`` times the Omega seminorm."""
    g = f.grid
    diff = (f - project_average(f, coarse_nu)).omega_values
    lhs = float(diff @ diff) * g.coset_volume
    rhs = g.field.qpow(-coarse_nu * g.gamma) * omega_pair_integral(f, f)
    slack = rhs - lhs
    tol = 1e-12
    scale = max(abs(rhs), 1.0)
    return IdentityReport(
        "projection_inequality",
        lhs,
        rhs,
        max(-slack, 0.0),
        max(-slack, 0.0) / scale,
        bool(slack >= -tol * scale),
        tol,
        "inequality",
        trial,
    )


def run_identity_suite(grid: Grid, trials: int, seed: int, perturb: float = 0.0) -> list[IdentityReport]:
    """Check the integration-by-parts and spectral identities on random functions.

    ``perturb`` shifts one entry of the assembled operator; it exists so that
    the suite can be shown to fail when the assembly is wrong.
    """
    if trials < 1:
        raise ParameterError(f"trials must be >= 1, got {trials}")
    field = grid.field
    rng = np.random.default_rng(seed)
    vt = assemble_vt(grid)
    if perturb:
        vt = vt.perturbed(perturb)
    reg = assemble_regional(grid)
    c = coefficient_c(field)
    lam = lambda_n(field, grid.N)
    vol = grid.coset_volume
    k = grid.omega_count

    reports: dict[str, list[IdentityReport]] = {}

    def add(rep: IdentityReport) -> None:
        reports.setdefault(rep.name, []).append(rep)

    add(_equality("tail_mass", c * tail_kernel_integral(field, grid.N), lam, IDENTITY_RTOL))

    R = resolvent_matrix(grid).entries
    row = R @ np.ones(k)
    add(_equality("resolvent_nullity", float(np.max(np.abs(row))), 0.0, IDENTITY_RTOL,
                  scale=float(np.max(np.sum(np.abs(R), axis=1)))))

    a = reg.interaction + lam * np.eye(k)
    ev = np.linalg.eigvalsh(0.5 * (a + a.T))
    const_defect = float(np.max(np.abs(a @ np.ones(k) - lam)))
    rep = _equality("spectral_minimum", ev[0], lam, IDENTITY_RTOL,
                    abs_defect=max(abs(ev[0] - lam), const_defect))
    add(rep)

    for t in range(trials):
        u = random_lcfunction(grid, rng)
        v = random_lcfunction(grid, rng)
        coarse = int(rng.integers(-grid.N, grid.nu + 1))

        ru = reg.apply(LCFunction(reg.grid, u.omega_values, 0.0))
        add(_equality("antisymmetry", float(np.sum(ru)) * vol, 0.0, IDENTITY_RTOL,
                      scale=float(np.sum(np.abs(reg.interaction) @ np.abs(u.omega_values))) * vol, trial=t))

        du = vt.apply(u)[:k]
        nsh = neumann_shell_values(u)
        far = c * (grid.Q**grid.N * u.outer - integrate(u, "omega")) * tail_kernel_integral(field, grid.M)
        flux = float(np.sum(nsh)) * vol + far
        add(_equality("flux_balance", float(np.sum(du)) * vol, -flux, IDENTITY_RTOL,
                      scale=(float(np.sum(np.abs(du))) + float(np.sum(np.abs(nsh)))) * vol + abs(far), trial=t))

        lhs = bilinear_form(u, v)
        inner = float(v.omega_values @ du) * vol
        outer = neumann_pairing(u, v)
        add(_equality("green_identity", lhs, inner + outer, IDENTITY_RTOL,
                      scale=float(np.abs(v.omega_values) @ np.abs(du)) * vol + abs(outer), trial=t))

        decomp = reg.apply(LCFunction(reg.grid, u.omega_values, 0.0)) + lam * u.omega_values - exterior_interaction(u)
        add(_equality("regional_decomposition", float(np.max(np.abs(du))), float(np.max(np.abs(decomp))), IDENTITY_RTOL,
                      scale=float(np.max(np.abs(du))) + float(np.max(np.abs(decomp))),
                      abs_defect=float(np.max(np.abs(du - decomp))), trial=t))

        add(projection_inequality_check(u, coarse, trial=t))

    return [r for name in reports for r in reports[name]]


def residual_report(
    sol: Solution,
    problem: NeumannProblem,
    extra_shells: int = 3,
    directions: int = 5,
    seed: int = 0,
    spot_cap: int = 64,
) -> list[IdentityReport]:
    """Recompute every defect of a solution without reusing solver internals."""
    grid = problem.grid
    u = sol.u
    f_inf = float(np.max(np.abs(problem.f.omega_values))) if grid.omega_count else 0.0
    g_inf = float(np.max(np.abs(problem.g.values))) if grid.shell_count else 0.0
    scale = max(f_inf, g_inf) or 1.0
    out: list[IdentityReport] = []

    k = grid.omega_count
    idx = np.unique(np.linspace(0, k - 1, min(k, spot_cap)).round().astype(int))
    pde = max(abs(oracle_apply_vt(u, grid.coset(int(i))) - problem.f.values[i]) for i in idx)
    out.append(_equality("pde_residual", pde, 0.0, RESIDUAL_RTOL, scale=scale))

    neu = 0.0
    for s in range(grid.N + 1, grid.M + extra_shells + 1):
        tr = neumann_trace(u, s)
        if s <= grid.M:
            lo = grid.Q ** (grid.nu + s - 1) - k
            target = problem.g.values[lo : lo + tr.shape[0]]
        else:
            target = 0.0
        neu = max(neu, float(np.max(np.abs(tr - target))))
    out.append(_equality("neumann_residual", neu, 0.0, RESIDUAL_RTOL, scale=scale))

    f_int = integrate(problem.f, "omega")
    f_l1 = float(np.sum(np.abs(problem.f.omega_values))) * grid.coset_volume
    out.append(_equality("compatibility", f_int, -problem.g.integral(), problem.tolerances.compat,
                         scale=f_l1 + problem.g.l1_norm()))

    # the fixed-point form u + lambda_N R u = R f; a diagnostic only
    R = resolvent_matrix(grid).entries
    lam = lambda_n(grid.field, grid.N)
    uo = u.omega_values
    printed = float(np.max(np.abs(uo + lam * (R @ uo) - R @ problem.f.omega_values)))
    out.append(IdentityReport("printed_fredholm_form", printed, 0.0, printed, printed / scale, True, math.inf, "diagnostic"))

    rng = np.random.default_rng(seed)
    worst = 0.0
    vol = grid.coset_volume
    for _ in range(directions):
        v = random_lcfunction(grid, rng)
        load = float(problem.f.omega_values @ v.omega_values) * vol + float(problem.g.values @ v.shell_values) * vol
        worst = max(worst, float(abs(bilinear_form(u, v) - load) / sobolev_norm(v, problem.g)))
    out.append(IdentityReport("critical_point", worst, 0.0, worst, worst, bool(worst <= RESIDUAL_RTOL),
                              RESIDUAL_RTOL, "equality"))
    return out


def all_passed(reports: list[IdentityReport]) -> bool:
    return all(r.passed for r in reports)
