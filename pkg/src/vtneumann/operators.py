"""Exact discrete Vladimirov-Taibleson operators on locally constant functions.

For ``x`` in a coset ``C`` of ``B_M`` the operator splits into a finite sum
over the other cosets (all points of ``C'`` are at the same distance from
every point of ``C``) plus the closed-form contribution of ``K`` minus
``B_M``, where ``|x - y| = |y|`` and ``u`` equals its tail constant.  Nothing
is approximated beyond floating-point rounding.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GridMismatchError, ParameterError, SingularResolventError
from .lcfun import LCFunction, WeightFunction, _same_grid, gagliardo_pairing, integrate, shell_kernel
from .localfield import FieldModel, Grid, ball_volume, shell_character_integral, tail_kernel_integral


class OperatorKind(enum.Enum):
    FULL_VT = "full_vt"
    REGIONAL = "regional"


def coefficient_c(field: FieldModel) -> float:
    """Normalising constant ``(q**alpha - 1) / (1 - q**(-alpha-n))``."""
    q, n, a = field.q, field.n, field.alpha
    return (q**a - 1.0) / (1.0 - q ** (-a - n))


def lambda_n(field: FieldModel, N: int) -> float:
    """Smallest eigenvalue of the operator restricted to ``B_N``.

    ``(Q - 1) / (Q (1 - Q**(-gamma-1))) * Q**(-gamma N)``; it equals
    ``coefficient_c * tail_kernel_integral(N)``.
    """
    g = field.gamma
    if not g > 0:
        raise ParameterError(f"gamma must be positive, got {g!r}")
    Q = field.Q
    return (Q - 1) / (Q * (1.0 - field.qpow(-g - 1.0))) * field.qpow(-g * N)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """``(A u)_C = sum_k interaction[C, k] u_k + tail_coeff[C] * u.outer``."""

    grid: Grid
    interaction: np.ndarray
    tail_coeff: np.ndarray
    kind: OperatorKind

    def apply(self, u: LCFunction) -> np.ndarray:
        if u.grid != self.grid:
            raise GridMismatchError(f"operator grid {self.grid!r} does not match function grid {u.grid!r}")
        return self.interaction @ u.values + self.tail_coeff * u.outer

    def perturbed(self, eps: float, row: int = 0, col: int = 1) -> OperatorMatrix:
        """Copy with one off-diagonal entry shifted by ``eps`` (negative controls only)."""
        a = self.interaction.copy()
        a[row, col] += eps
        a.setflags(write=False)
        return OperatorMatrix(self.grid, a, self.tail_coeff, self.kind)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _interaction(grid: Grid, tail: float) -> np.ndarray:
    c = coefficient_c(grid.field)
    w = grid.pair_weights()
    a = -c * w
    # diagonal completion so that constants (with matching tail) are annihilated
    a[np.diag_indices_from(a)] = c * (w.sum(axis=1) + tail)
    return a


@lru_cache(maxsize=16)
def assemble_vt(grid: Grid) -> OperatorMatrix:
    """The full-space operator evaluated on the cosets of ``B_M``."""
    c = coefficient_c(grid.field)
    tail = tail_kernel_integral(grid.field, grid.M)
    a = _interaction(grid, tail)
    t = np.full(grid.coset_count, -c * tail)
    return OperatorMatrix(grid, _readonly(a), _readonly(t), OperatorKind.FULL_VT)


@lru_cache(maxsize=16)
def assemble_regional(grid: Grid) -> OperatorMatrix:
    """The regional operator: the same kernel integrated over ``Omega`` only.

    ``grid`` may be a full grid; the result always lives on ``grid.omega``.
    """
    og = grid.omega
    a = _interaction(og, 0.0)
    return OperatorMatrix(og, _readonly(a), _readonly(np.zeros(og.coset_count)), OperatorKind.REGIONAL)


def exterior_interaction(u: LCFunction) -> float:
    """``c * int_{|y| > Q**N} u(y) |y|**(-1-gamma) dy`` in closed form."""
    g = u.grid
    c = coefficient_c(g.field)
    shells = float(u.shell_values @ shell_kernel(g)) * g.coset_volume
    return c * (shells + u.outer * tail_kernel_integral(g.field, g.M))


def neumann_trace(u: LCFunction, s: int) -> np.ndarray:
    """Nonlocal Neumann operator on the shell ``|x| = Q**s`` (``s > N``).

    ``c (Q**N u(x) - int_Omega u) / |x|**(1+gamma)``.  For ``s <= M`` one value
    per coset of the shell (tree order); beyond ``B_M`` the function is the
    tail constant and a single value is returned.
    """
    g = u.grid
    if s <= g.N:
        raise ParameterError(f"Neumann trace needs a shell outside Omega (s > {g.N}), got s={s}")
    c = coefficient_c(g.field)
    mass = integrate(u, "omega")
    if s <= g.M:
        lo, hi = g.Q ** (g.nu + s - 1), g.Q ** (g.nu + s)
        ux = u.values[lo:hi]
    else:
        ux = np.array([u.outer])
    return c * (ball_volume(g.field, g.N) * ux - mass) * g.field.qpow(-s * (1.0 + g.gamma))


def neumann_shell_values(u: LCFunction) -> np.ndarray:
    """Neumann operator on every coset of ``B_M`` minus ``B_N`` (tree order)."""
    g = u.grid
    c = coefficient_c(g.field)
    mass = integrate(u, "omega")
    return c * (ball_volume(g.field, g.N) * u.shell_values - mass) * shell_kernel(g)


def neumann_pairing(u: LCFunction, v: LCFunction) -> float:
    """``int_{Omega^c} v(y) (N u)(y) dy``, the part beyond ``B_M`` in closed form."""
    _same_grid(u, v)
    g = u.grid
    c = coefficient_c(g.field)
    detail = float(v.shell_values @ neumann_shell_values(u)) * g.coset_volume
    far = v.outer * c * (ball_volume(g.field, g.N) * u.outer - integrate(u, "omega"))
    return detail + far * tail_kernel_integral(g.field, g.M)


def bilinear_form(u: LCFunction, v: LCFunction) -> float:
    """``(c/2)`` times the Gagliardo pairing over ``(K x K)`` minus ``(Omega^c x Omega^c)``."""
    return 0.5 * coefficient_c(u.grid.field) * gagliardo_pairing(u, v)


def energy_functional(u: LCFunction, f: LCFunction, g: WeightFunction) -> float:
    _same_grid(u, f, g)
    c = coefficient_c(u.grid.field)
    vol = u.grid.coset_volume
    source = float(f.omega_values @ u.omega_values) * vol + float(g.values @ u.shell_values) * vol
    return 0.25 * c * gagliardo_pairing(u, u) - source


def resolvent_radial(field: FieldModel, N: int, mu: float, s: int) -> float:
    """Resolvent kernel ``r_mu`` at a point with ``|x| = Q**s`` (``s <= N``).

    Finite sum over the character shells ``m = 1-N .. 1-s`` of
    ``I_m(x) / (Q**(m gamma) - lambda_N + mu)``.
    """
    if s > N:
        raise ParameterError(f"resolvent kernel is evaluated on B_N only (s <= {N}), got s={s}")
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu!r}")
    lam = lambda_n(field, N)
    total = 0.0
    for m in range(1 - N, 2 - s):
        total += shell_character_integral(field, m, s) / _resolvent_denominator(field, m, lam, mu)
    return total


def _resolvent_denominator(field: FieldModel, m: int, lam: float, mu: float) -> float:
    if mu == lam:
        return field.qpow(m * field.gamma)
    d = field.qpow(m * field.gamma) - lam + mu
    if not d > 0:
        raise SingularResolventError(f"resolvent denominator {d!r} <= 0 at shell m={m}; mu={mu!r} too small")
    return d


@dataclass(frozen=True, eq=False)
class ResolventMatrix:
    """``entries[C, C'] = int_{C'} r_mu(x - xi) d xi`` for ``x`` in ``C``."""

    grid: Grid
    entries: np.ndarray
    mu: float

    def apply(self, values) -> np.ndarray:
        return self.entries @ np.asarray(values, dtype=float)


@lru_cache(maxsize=16)
def _resolvent_cached(grid: Grid, mu: float) -> ResolventMatrix:
    f, N, nu = grid.field, grid.N, grid.nu
    lam = lambda_n(f, N)
    vol = grid.coset_volume
    radial = {s: resolvent_radial(f, N, mu, s) for s in range(1 - nu, N + 1)}
    diag = vol * sum(
        f.qpow(m) * (1.0 - 1.0 / f.Q) / _resolvent_denominator(f, m, lam, mu) for m in range(1 - N, nu + 1)
    )
    levels = grid.level_matrix()
    table = np.array([radial[s] for s in range(1 - nu, N + 1)])
    r = vol * table[np.clip(levels - (1 - nu), 0, None)]
    r[np.diag_indices_from(r)] = diag
    return ResolventMatrix(grid, _readonly(r), mu)


def resolvent_matrix(grid: Grid, mu: float | None = None) -> ResolventMatrix:
    """Coset-averaged resolvent kernel on ``Omega``; ``mu`` defaults to ``lambda_N``."""
    og = grid.omega
    if mu is None:
        mu = lambda_n(og.field, og.N)
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu!r}")
    return _resolvent_cached(og, float(mu))
