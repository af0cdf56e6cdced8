"""Ultrametric geometry of balls in a non-Archimedean local field.

Everything downstream works with the *effective* one-dimensional field: an
``n``-dimensional problem over ``K^n`` with residue cardinality ``q`` and
order ``alpha`` is handled as a problem over an unramified degree-``n``
extension with branching ``Q = q**n`` and exponent ``gamma = alpha / n``.

Points of the ball ``B_M = {|x| <= Q**M}`` are resolved up to cosets of the
small ball ``B_{-nu}``.  A coset is identified by its ``M + nu`` base-``Q``
digits ``a_j`` (``j = -M, ..., nu - 1``) of the representative
``sum_j a_j beta**j``; the digit at ``j = -M`` is the most significant, so the
integer index of a coset in tree order is just its digit string read in
base ``Q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DivergentIntegralError, GridMismatchError, ParameterError

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


class _NegInfLevel:
    """Level token of the point ``a = 0`` (``|0| = Q**-inf``)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NEG_INF"

    def __reduce__(self):
        return (_NegInfLevel, ())


NEG_INF = _NegInfLevel()


@dataclass(frozen=True)
class FieldModel:
    """Base field data ``(q, n, alpha)`` and the derived effective ``(Q, gamma)``."""

    q: int
    n: int
    alpha: float

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 2:
            raise ParameterError(f"residue cardinality q must be an integer >= 2, got {self.q!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"dimension n must be an integer >= 1, got {self.n!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ParameterError(f"alpha must be a finite positive real, got {self.alpha!r}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def Q(self) -> int:
        return self.q**self.n

    @property
    def gamma(self) -> float:
        return self.alpha / self.n

    def qpow(self, e: float) -> float:
        """``Q**e`` with an exact path for integer exponents."""
        if float(e).is_integer():
            k = int(e)
            return float(self.Q**k) if k >= 0 else 1.0 / float(self.Q ** (-k))
        return math.exp(e * math.log(self.Q))


def effective_params(q: int, n: int, alpha: float) -> FieldModel:
    """Build the field model for ``K^n``; ``Q = q**n`` and ``gamma = alpha/n``.

    >>> f = effective_params(3, 2, 1.5)
    >>> (f.Q, f.gamma)
    (9, 0.75)
    """
    return FieldModel(q, n, alpha)


def ball_volume(field: FieldModel, level: int) -> float:
    """Haar measure ``Q**N`` of the ball ``{|x| <= Q**N}``."""
    return field.qpow(level)


def tail_kernel_integral(field: FieldModel, N: int) -> float:
    """Closed form of ``int_{|y| > Q**N} |y|**(-gamma-1) dy``.

    Equals ``(Q - 1) / (Q (Q**gamma - 1)) * Q**(-N gamma)``.
    """
    g = field.gamma
    if not g > 0:
        raise DivergentIntegralError(f"tail integral diverges for gamma = {g!r}")
    Q = field.Q
    return (Q - 1) / (Q * (field.qpow(g) - 1.0)) * field.qpow(-N * g)


def ball_character_integral(field: FieldModel, N: int, a_level) -> float:
    """``int_{|x| <= Q**N} chi(a x) dx`` for ``|a| = Q**a_level``.

    ``a_level`` is an integer or :data:`NEG_INF` for ``a = 0``.  The integral
    is the ball volume when ``|a| <= Q**-N`` and vanishes otherwise.
    """
    if a_level is NEG_INF or a_level <= -N:
        return ball_volume(field, N)
    return 0.0


def shell_character_integral(field: FieldModel, m: int, s: int) -> float:
    """``int_{|eta| = Q**m} chi(eta x) d eta`` for ``|x| = Q**s``.

    The shell is ``B_m`` minus ``B_{m-1}``, so this is the difference of two
    ball integrals: ``Q**m (1 - 1/Q)`` for ``m <= -s``, ``-Q**(m-1)`` for
    ``m = 1 - s`` and zero beyond.
    """
    if m <= -s:
        return field.qpow(m) * (1.0 - 1.0 / field.Q)
    if m == 1 - s:
        return -field.qpow(m - 1)
    return 0.0


@dataclass(frozen=True)
class Grid:
    """Cosets of ``B_{-nu}`` partitioning ``B_M``; the domain is ``Omega = B_N``."""

    field: FieldModel
    N: int
    M: int
    nu: int

    def __post_init__(self):
        for name in ("N", "M", "nu"):
            v = getattr(self, name)
            if int(v) != v:
                raise ParameterError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.M < self.N:
            raise ParameterError(f"need M >= N, got M={self.M}, N={self.N}")
        if self.nu < -self.N:
            raise ParameterError(f"need nu >= -N so cosets fit in B_N, got nu={self.nu}, N={self.N}")

    @property
    def Q(self) -> int:
        return self.field.Q

    @property
    def gamma(self) -> float:
        return self.field.gamma

    @property
    def depth(self) -> int:
        """Number of digits ``M + nu`` of a coset id."""
        return self.M + self.nu

    @property
    def coset_count(self) -> int:
        return self.Q**self.depth

    @property
    def omega_count(self) -> int:
        """Cosets inside ``B_N``; they are the first ``Q**(N+nu)`` in tree order."""
        return self.Q ** (self.N + self.nu)

    @property
    def shell_count(self) -> int:
        return self.coset_count - self.omega_count

    @property
    def coset_volume(self) -> float:
        return self.field.qpow(-self.nu)

    @property
    def omega(self) -> Grid:
        """The same resolution restricted to ``Omega`` (outer detail exponent ``M = N``)."""
        return Grid(self.field, self.N, self.N, self.nu)

    def with_resolution(self, nu: int | None = None, M: int | None = None) -> Grid:
        return Grid(self.field, self.N, self.M if M is None else M, self.nu if nu is None else nu)

    def coset(self, index: int) -> CosetId:
        return CosetId.from_index(self, index)

    def cosets(self):
        for i in range(self.coset_count):
            yield CosetId.from_index(self, i)

    def index_levels(self, indices) -> np.ndarray:
        """Level ``s`` with ``|x| = Q**s`` for points of the given cosets.

        Only meaningful for cosets other than the one containing 0 (index 0),
        for which ``-nu`` (the coset radius level) is returned.
        """
        idx = np.asarray(indices, dtype=np.int64)
        lv = np.full(idx.shape, -self.nu, dtype=np.int64)
        for t in range(self.depth):
            lv[idx >= self.Q**t] = t + 1 - self.nu
        return lv

    @cached_property
    def shell_levels(self) -> np.ndarray:
        """``|x|`` levels of the cosets of ``B_M`` minus ``B_N`` (values in ``N+1 .. M``)."""
        lv = self.index_levels(np.arange(self.omega_count, self.coset_count))
        lv.setflags(write=False)
        return lv

    def level_matrix(self, size: int | None = None) -> np.ndarray:
        """Distance levels ``d`` (``|x - y| = Q**d``) between the first ``size`` cosets.

        The diagonal holds ``-nu``: points of one coset are at most
        ``Q**-nu`` apart, and callers mask it out.
        """
        n = self.coset_count if size is None else size
        idx = np.arange(n, dtype=np.int64)
        lv = np.full((n, n), -self.nu, dtype=np.int64)
        for t in range(self.depth):
            b = idx // self.Q**t
            lv[b[:, None] != b[None, :]] = t + 1 - self.nu
        return lv

    def pair_weights(self, size: int | None = None) -> np.ndarray:
        """``vol(C') * |x - y|**(-1-gamma)`` for distinct cosets, zero on the diagonal."""
        n = self.coset_count if size is None else size
        d = self.level_matrix(n)
        powers = np.array(
            [self.field.qpow(-(k - self.nu + 1) * (1.0 + self.gamma)) for k in range(self.depth)]
            + [0.0]
        )
        # level d maps to table slot d + nu - 1; the diagonal (-nu) maps to the trailing zero
        slot = d + self.nu - 1
        w = powers[np.where(slot < 0, self.depth, slot)]
        return self.coset_volume * w


@dataclass(frozen=True)
class CosetId:
    """A coset of ``B_{-nu}`` in ``B_M`` given by its digits, most significant first."""

    grid: Grid
    digits: tuple[int, ...]

    def __post_init__(self):
        if len(self.digits) != self.grid.depth:
            raise ParameterError(f"expected {self.grid.depth} digits, got {len(self.digits)}")
        if any(not 0 <= a < self.grid.Q for a in self.digits):
            raise ParameterError(f"digits must lie in 0..{self.grid.Q - 1}")

    @classmethod
    def from_index(cls, grid: Grid, index: int) -> CosetId:
        if not 0 <= index < grid.coset_count:
            raise ParameterError(f"coset index {index} outside 0..{grid.coset_count - 1}")
        digits = []
        for _ in range(grid.depth):
            index, a = divmod(index, grid.Q)
            digits.append(a)
        return cls(grid, tuple(reversed(digits)))

    @property
    def index(self) -> int:
        i = 0
        for a in self.digits:
            i = i * self.grid.Q + a
        return i

    def digit(self, j: int) -> int:
        """Digit ``a_j`` for ``j`` in ``-M .. nu-1``."""
        return self.digits[j + self.grid.M]

    def in_omega(self) -> bool:
        return all(a == 0 for a in self.digits[: self.grid.M - self.grid.N])

    def __str__(self) -> str:
        if self.grid.Q <= len(_DIGITS):
            return "".join(_DIGITS[a] for a in self.digits)
        return ".".join(str(a) for a in self.digits)


def coset_distance(a: CosetId, b: CosetId) -> int | None:
    """Level ``d`` of ``|x - y| = Q**d`` for ``x`` in ``a`` and ``y`` in ``b``.

    ``d = -j*`` where ``j*`` is the least index of a differing digit; ``None``
    when the cosets coincide.
    """
    if a.grid != b.grid:
        raise GridMismatchError("cosets belong to different grids")
    for pos, (x, y) in enumerate(zip(a.digits, b.digits)):
        if x != y:
            return -(pos - a.grid.M)
    return None
