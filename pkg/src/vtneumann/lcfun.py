"""Locally constant functions with a constant tail, and the fractional Sobolev norm.

An :class:`LCFunction` holds one value per coset of ``B_M`` (tree order) plus
the constant it takes on ``K`` minus ``B_M``.  All double integrals over
``(K x K)`` minus ``(Omega^c x Omega^c)`` are evaluated exactly: pairs in the
same coset contribute nothing, pairs of distinct cosets are grouped by their
distance level, and pairs reaching beyond ``B_M`` are summed in closed form.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DivergentIntegralError, GridMismatchError, ParameterError
from .localfield import Grid, ball_volume, tail_kernel_integral


class Region(enum.Enum):
    OMEGA = "omega"
    OUTER_DETAIL = "outer_detail"
    TAIL = "tail"
    ALL = "all"


def _frozen(values, n: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    if arr.shape[0] != n:
        raise ParameterError(f"{what}: expected {n} values, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{what}: values must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LCFunction:
    grid: Grid
    values: np.ndarray
    outer: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.coset_count, "LCFunction"))
        object.__setattr__(self, "outer", float(self.outer))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> LCFunction:
        return cls(grid, np.full(grid.coset_count, float(c)), c)

    @classmethod
    def from_omega(cls, grid: Grid, omega_values, shell_values=None, outer: float = 0.0) -> LCFunction:
        """Assemble from values on ``Omega`` and (optionally) on ``B_M`` minus ``B_N``."""
        vals = np.zeros(grid.coset_count)
        vals[: grid.omega_count] = _frozen(omega_values, grid.omega_count, "omega values")
        if shell_values is not None:
            vals[grid.omega_count :] = _frozen(shell_values, grid.shell_count, "shell values")
        return cls(grid, vals, outer)

    @property
    def omega_values(self) -> np.ndarray:
        return self.values[: self.grid.omega_count]

    @property
    def shell_values(self) -> np.ndarray:
        return self.values[self.grid.omega_count :]

    def shifted(self, c: float) -> LCFunction:
        return LCFunction(self.grid, self.values + c, self.outer + c)

    def __add__(self, other: LCFunction) -> LCFunction:
        _same_grid(self, other)
        return LCFunction(self.grid, self.values + other.values, self.outer + other.outer)

    def __sub__(self, other: LCFunction) -> LCFunction:
        _same_grid(self, other)
        return LCFunction(self.grid, self.values - other.values, self.outer - other.outer)

    def __mul__(self, a: float) -> LCFunction:
        return LCFunction(self.grid, a * self.values, a * self.outer)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"LCFunction(grid={self.grid!r}, values={self.values.tolist()!r}, outer={self.outer!r})"


@dataclass(frozen=True, eq=False)
class WeightFunction:
    """Function on the cosets of ``B_M`` minus ``B_N``; zero on ``Omega`` and beyond ``B_M``.

    Used both for the weight ``rho`` of the Sobolev norm and for the Neumann
    datum ``g``.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, self.grid.shell_count, "WeightFunction"))

    @classmethod
    def zero(cls, grid: Grid) -> WeightFunction:
        return cls(grid, np.zeros(grid.shell_count))

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values))) * self.grid.coset_volume

    def integral(self) -> float:
        return float(np.sum(self.values)) * self.grid.coset_volume

    def as_lcfunction(self) -> LCFunction:
        return LCFunction.from_omega(self.grid, np.zeros(self.grid.omega_count), self.values, 0.0)


def _same_grid(*objs) -> None:
    g = objs[0].grid
    for o in objs[1:]:
        if o.grid != g:
            raise GridMismatchError(f"grid mismatch: {g!r} vs {o.grid!r}")


def integrate(u: LCFunction, region: Region | str = Region.OMEGA) -> float:
    """Exact integral of ``u`` over a region; nonzero tails diverge."""
    region = Region(region)
    g = u.grid
    vol = g.coset_volume
    if region is Region.OMEGA:
        return float(np.sum(u.omega_values)) * vol
    if region is Region.OUTER_DETAIL:
        return float(np.sum(u.shell_values)) * vol
    if u.outer != 0.0:
        raise DivergentIntegralError(f"integral of a nonzero constant tail ({u.outer!r}) over an unbounded region")
    if region is Region.TAIL:
        return 0.0
    return float(np.sum(u.values)) * vol


def mean_over_domain(u: LCFunction) -> float:
    return integrate(u, Region.OMEGA) / ball_volume(u.grid.field, u.grid.N)


def project_average(f: LCFunction, coarse_nu: int) -> LCFunction:
    """Replace ``f`` on every ball of radius ``Q**-coarse_nu`` by its average there."""
    g = f.grid
    if not -g.N <= coarse_nu <= g.nu:
        raise ParameterError(f"coarse_nu must lie in [{-g.N}, {g.nu}], got {coarse_nu}")
    block = g.Q ** (g.nu - coarse_nu)
    means = f.values.reshape(-1, block).mean(axis=1)
    return LCFunction(g, np.repeat(means, block), f.outer)


def refine(u: LCFunction, finer_nu: int, larger_M: int) -> LCFunction:
    """The same function on the grid of resolution ``finer_nu`` over ``B_{larger_M}``."""
    g = u.grid
    if finer_nu < g.nu or larger_M < g.M:
        raise ParameterError(f"refine needs finer_nu >= {g.nu} and larger_M >= {g.M}")
    fine = g.with_resolution(nu=finer_nu, M=larger_M)
    children = np.repeat(u.values, g.Q ** (finer_nu - g.nu))
    vals = np.full(fine.coset_count, u.outer)
    vals[: children.shape[0]] = children
    return LCFunction(fine, vals, u.outer)


def restrict_to_omega(u: LCFunction) -> LCFunction:
    """Values on ``Omega`` as a function on the ``M = N`` grid (tail set to zero)."""
    return LCFunction(u.grid.omega, u.omega_values, 0.0)


def _blockwise_pair_sums(u: np.ndarray, v: np.ndarray, Q: int) -> np.ndarray:
    """``S[t] = sum over blocks of size Q**t of sum_{i,k in block} (u_i-u_k)(v_i-v_k)``."""
    n = u.shape[0]
    out = [0.0]
    size = 1
    while size < n:
        size *= Q
        ub = u.reshape(-1, size)
        vb = v.reshape(-1, size)
        out.append(float(np.sum(2.0 * size * np.sum(ub * vb, axis=1) - 2.0 * ub.sum(axis=1) * vb.sum(axis=1))))
    return np.array(out)


def omega_pair_integral(u: LCFunction, v: LCFunction) -> float:
    """``int_{Omega x Omega} (u(x)-u(y))(v(x)-v(y)) / |x-y|**(1+gamma)``."""
    _same_grid(u, v)
    g = u.grid
    S = _blockwise_pair_sums(u.omega_values, v.omega_values, g.Q)
    total = 0.0
    for t in range(1, S.shape[0]):
        # pairs in a common block of size Q**t but different sub-blocks: |x - y| = Q**(t - nu)
        total += (S[t] - S[t - 1]) * g.field.qpow(-(t - g.nu) * (1.0 + g.gamma))
    return total * g.coset_volume**2


def shell_kernel(g: Grid) -> np.ndarray:
    """``|y|**(-1-gamma)`` on each coset of ``B_M`` minus ``B_N``."""
    table = {s: g.field.qpow(-s * (1.0 + g.gamma)) for s in range(g.N + 1, g.M + 1)}
    return np.array([table[s] for s in g.shell_levels.tolist()], dtype=float)


def gagliardo_pairing(u: LCFunction, v: LCFunction) -> float:
    """``int_{(K x K) minus (Omega^c x Omega^c)} (u(x)-u(y))(v(x)-v(y)) / |x-y|**(1+gamma)``."""
    _same_grid(u, v)
    g = u.grid
    vol = g.coset_volume
    total = omega_pair_integral(u, v)

    uo, vo = u.omega_values, v.omega_values
    n_om = g.omega_count
    su, sv, suv = float(uo.sum()), float(vo.sum()), float(uo @ vo)
    us, vs = u.shell_values, v.shell_values
    # every point of Omega is at distance |y| = Q**s from y in the level-s shell
    pair = suv - us * sv - vs * su + n_om * us * vs
    cross = float(pair @ shell_kernel(g)) * vol**2
    beyond = float(np.sum((uo - u.outer) * (vo - v.outer))) * vol * tail_kernel_integral(g.field, g.M)
    return total + 2.0 * (cross + beyond)


def sobolev_inner(u: LCFunction, v: LCFunction, rho: WeightFunction | None = None) -> float:
    _same_grid(u, v)
    g = u.grid
    vol = g.coset_volume
    l2 = float(u.omega_values @ v.omega_values) * vol
    weighted = 0.0
    if rho is not None:
        _same_grid(u, rho)
        weighted = float(np.sum(np.abs(rho.values) * u.shell_values * v.shell_values)) * vol
    return l2 + weighted + gagliardo_pairing(u, v)


def sobolev_norm(u: LCFunction, rho: WeightFunction | None = None) -> float:
    return float(np.sqrt(max(sobolev_inner(u, u, rho), 0.0)))
