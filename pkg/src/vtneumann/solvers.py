"""Weak (Galerkin) and strong (resolvent) solvers for the nonlocal Neumann problem.

Both solvers return the representative selected by a :class:`Gauge`, since
solutions are unique only up to an additive constant.  Residuals stored in a
:class:`Solution` are always recomputed from the assembled operator and the
closed-form Neumann trace after solving.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import CapExceededError, IncompatibleProblemError, ParameterError, VTNeumannError
from .lcfun import LCFunction, WeightFunction, _same_grid, integrate, mean_over_domain, shell_kernel
from .localfield import Grid, ball_volume, tail_kernel_integral
from .operators import (
    assemble_regional,
    assemble_vt,
    coefficient_c,
    lambda_n,
    neumann_shell_values,
    neumann_trace,
    resolvent_matrix,
)

logger = logging.getLogger(__name__)

DEFAULT_SPECTRUM_CAP = 4096


@dataclass(frozen=True)
class Gauge:
    """``zero_mean``: mean over Omega is 0; ``fix_outer``: the tail constant is ``h``."""

    kind: str = "zero_mean"
    h: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero_mean", "fix_outer"):
            raise ParameterError(f"unknown gauge {self.kind!r}")

    @classmethod
    def zero_mean(cls) -> Gauge:
        return cls("zero_mean")

    @classmethod
    def fix_outer(cls, h: float) -> Gauge:
        return cls("fix_outer", float(h))


@dataclass(frozen=True)
class Tolerances:
    compat: float = 1e-10
    residual: float = 1e-9

    def __post_init__(self):
        if not (self.compat > 0 and self.residual > 0):
            raise ParameterError("tolerances must be positive")


@dataclass(frozen=True, eq=False)
class NeumannProblem:
    grid: Grid
    f: LCFunction
    g: WeightFunction
    gauge: Gauge = field(default_factory=Gauge)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        _same_grid(self, self.f, self.g)

    @classmethod
    def homogeneous(cls, grid: Grid, f_omega, **kw) -> NeumannProblem:
        return cls(grid, LCFunction.from_omega(grid, f_omega), WeightFunction.zero(grid), **kw)


@dataclass(frozen=True)
class Compatibility:
    ok: bool
    defect: float


@dataclass(eq=False)
class Solution:
    u: LCFunction
    h: float
    method: str
    residuals: dict[str, float]


def check_compatibility(problem: NeumannProblem) -> Compatibility:
    """Defect ``int_Omega f + int_{Omega^c} g`` and whether it is negligible."""
    f_int = integrate(problem.f, "omega")
    g_int = problem.g.integral()
    defect = f_int + g_int
    vol = problem.grid.coset_volume
    scale = float(np.sum(np.abs(problem.f.omega_values))) * vol + problem.g.l1_norm() + np.finfo(float).tiny
    return Compatibility(abs(defect) <= problem.tolerances.compat * scale, defect)


def _require_compatible(problem: NeumannProblem) -> None:
    comp = check_compatibility(problem)
    if not comp.ok:
        raise IncompatibleProblemError(comp.defect)


def strong_residuals(u: LCFunction, problem: NeumannProblem, extra_shells: int = 3) -> dict[str, float]:
    """Max-norm defects of ``D u = f`` on Omega and ``N u = g`` on shells ``N+1 .. M+extra_shells``."""
    grid = problem.grid
    du = assemble_vt(grid).apply(u)[: grid.omega_count]
    pde = float(np.max(np.abs(du - problem.f.omega_values)))
    neu = 0.0
    if grid.shell_count:
        neu = float(np.max(np.abs(neumann_shell_values(u) - problem.g.values)))
    for s in range(grid.M + 1, grid.M + extra_shells + 1):
        neu = max(neu, float(np.max(np.abs(neumann_trace(u, s)))))
    return {"pde_max": pde, "neumann_max": neu, "compat": check_compatibility(problem).defect}


def _galerkin_stiffness(grid: Grid) -> np.ndarray:
    """Matrix of the bilinear form on V = {level-nu cosets of B_M} + {tail constant}.

    Unknowns are ordered as the cosets in tree order followed by the tail.
    Edges join Omega cosets to every other coset and to the tail; the
    exterior-exterior block carries no interaction.
    """
    n, k = grid.coset_count, grid.omega_count
    c = coefficient_c(grid.field)
    vol = grid.coset_volume
    w = np.zeros((n + 1, n + 1))
    w[:n, :n] = vol * grid.pair_weights()
    w[k:n, k:n] = 0.0
    w[:k, n] = w[n, :k] = vol * tail_kernel_integral(grid.field, grid.M)
    lap = -w
    lap[np.diag_indices_from(lap)] = w.sum(axis=1)
    return c * lap


def solve_weak(problem: NeumannProblem) -> Solution:
    """Galerkin solution of the weak formulation, exact for data constant on cosets."""
    _require_compatible(problem)
    grid = problem.grid
    n, k = grid.coset_count, grid.omega_count
    vol = grid.coset_volume

    stiff = _galerkin_stiffness(grid)
    rhs = np.zeros(n + 1)
    rhs[:k] = problem.f.omega_values * vol
    rhs[k:n] = problem.g.values * vol

    # border with the gauge row; the kernel of the form is the constants only
    gauge_row = np.zeros(n + 1)
    if problem.gauge.kind == "zero_mean":
        gauge_row[:k] = 1.0 / k
        gauge_value = 0.0
    else:
        gauge_row[n] = 1.0
        gauge_value = problem.gauge.h
    big = np.zeros((n + 2, n + 2))
    big[: n + 1, : n + 1] = stiff
    big[: n + 1, n + 1] = gauge_row
    big[n + 1, : n + 1] = gauge_row
    b = np.append(rhs, gauge_value)
    try:
        lu = scipy.linalg.lu_factor(big, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise VTNeumannError(f"Galerkin system singular beyond the constants: {exc}") from exc
    if np.min(np.abs(np.diag(lu[0]))) <= 1e-14 * np.max(np.abs(np.diag(lu[0]))):
        raise VTNeumannError("Galerkin system singular beyond the constants")
    x = scipy.linalg.lu_solve(lu, b)

    u = LCFunction(grid, x[:n], x[n])
    h = mean_over_domain(u)
    return Solution(u, h, "galerkin", strong_residuals(u, problem))


def _gauge_constant(problem: NeumannProblem) -> float:
    return 0.0 if problem.gauge.kind == "zero_mean" else problem.gauge.h


def solve_strong(problem: NeumannProblem) -> Solution:
    """Resolvent construction ``u = h + R f`` on Omega, ``u = h`` outside."""
    if np.any(problem.g.values != 0.0):
        raise ParameterError("solve_strong handles g = 0 only; use solve_strong_inhomogeneous")
    return _solve_resolvent(problem, "fredholm")


def solve_strong_inhomogeneous(problem: NeumannProblem) -> Solution:
    """Resolvent construction with Neumann datum ``g`` on ``B_M`` minus ``B_N``.

    Outside Omega, ``u(x) = h + |x|**(1+gamma) g(x) / (c Q**N)``.  On Omega the
    extra source ``Q**-N int g`` is constant and is annihilated by the
    resolvent together with the mean of ``f`` (they cancel by compatibility).
    """
    return _solve_resolvent(problem, "fredholm_inhomogeneous")


def _solve_resolvent(problem: NeumannProblem, method: str) -> Solution:
    _require_compatible(problem)
    grid = problem.grid
    h = _gauge_constant(problem)
    R = resolvent_matrix(grid)
    interior = h + R.apply(problem.f.omega_values)
    c = coefficient_c(grid.field)
    shells = h + problem.g.values / (shell_kernel(grid) * c * ball_volume(grid.field, grid.N))
    u = LCFunction.from_omega(grid, interior, shells, h)
    return Solution(u, h, method, strong_residuals(u, problem))


def spectrum(grid: Grid, cap: int = DEFAULT_SPECTRUM_CAP, rtol: float = 1e-9) -> list[tuple[float, int]]:
    """Eigenvalues of the operator restricted to Omega, grouped with multiplicities."""
    k = grid.omega_count
    if k > cap:
        raise CapExceededError(f"dense eigensolve of size {k} exceeds cap {cap}")
    a = assemble_regional(grid).interaction + lambda_n(grid.field, grid.N) * np.eye(k)
    ev = np.linalg.eigvalsh(0.5 * (a + a.T))
    return group_eigenvalues(ev, rtol)


def group_eigenvalues(ev, rtol: float = 1e-9) -> list[tuple[float, int]]:
    out: list[tuple[float, int]] = []
    members: list[float] = []
    for x in np.sort(np.asarray(ev, dtype=float)):
        if members and abs(x - members[0]) <= rtol * max(abs(members[0]), 1.0):
            members.append(x)
        else:
            if members:
                out.append((float(np.mean(members)), len(members)))
            members = [x]
    if members:
        out.append((float(np.mean(members)), len(members)))
    return out


def analytic_spectrum(grid: Grid) -> list[tuple[float, int]]:
    """``lambda_N`` once, then ``Q**(gamma m)`` with multiplicity ``Q**(N+m-1) (Q-1)``."""
    f = grid.field
    out = [(lambda_n(f, grid.N), 1)]
    for m in range(1 - grid.N, grid.nu + 1):
        out.append((f.qpow(f.gamma * m), f.Q ** (grid.N + m - 1) * (f.Q - 1)))
    return out
