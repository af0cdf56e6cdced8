import cmath
import itertools
import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtneumann import (
    NEG_INF,
    CosetId,
    FieldModel,
    GridMismatchError,
    Grid,
    ParameterError,
    ball_character_integral,
    ball_volume,
    coset_distance,
    effective_params,
    shell_character_integral,
    tail_kernel_integral,
)


def field(Q, gamma):
    return FieldModel(Q, 1, gamma)


def tail_series(Q, gamma, N):
    """Truncated shell sum; stops once the geometric remainder is below 1e-16 relative."""
    total, j = 0.0, N + 1
    ratio = Q ** (-gamma)
    while True:
        term = Q ** (-j * (gamma + 1)) * Q**j * (1 - 1 / Q)
        total += term
        if term * ratio / (1 - ratio) < 1e-16 * total:
            return total
        j += 1


@pytest.mark.parametrize(
    "q,n,alpha,Q,gamma",
    [(2, 1, 2, 2, 2.0), (2, 3, 6, 8, 2.0), (3, 2, 1.5, 9, 0.75)],
)
def test_effective_params(q, n, alpha, Q, gamma):
    f = effective_params(q, n, alpha)
    assert f.Q == Q
    assert f.gamma == pytest.approx(gamma, rel=1e-15)
    assert f.gamma * n == pytest.approx(alpha, rel=1e-15)


@pytest.mark.parametrize("q,n,alpha", [(1, 1, 1.0), (2, 0, 1.0), (2, 1, 0.0), (2, 1, -1.0), (2, 1, float("nan"))])
def test_effective_params_rejects(q, n, alpha):
    with pytest.raises(ParameterError):
        effective_params(q, n, alpha)


def test_ball_volume():
    assert ball_volume(field(2, 1), 0) == 1
    assert ball_volume(field(3, 1), 2) == 9
    assert ball_volume(field(2, 1), -1) == 0.5


def test_ball_volume_counts_cosets():
    # B_2 over Q=3 holds Q**2 cosets of B_0, each of unit measure
    g = Grid(field(3, 1), 0, 2, 0)
    assert g.coset_count * g.coset_volume == ball_volume(g.field, 2) == 9


@pytest.mark.parametrize("N,expected", [(0, Fraction(1, 6)), (1, Fraction(1, 24))])
def test_tail_kernel_examples(N, expected):
    f = field(2, 2)
    assert tail_kernel_integral(f, N) == pytest.approx(float(expected), rel=1e-14)
    assert tail_series(2, 2.0, N) == pytest.approx(float(expected), rel=1e-12)


@pytest.mark.parametrize("Q,gamma", [(2, 2.0), (2, 1.5), (3, 1.2), (4, 0.5)])
@pytest.mark.parametrize("N", [-2, -1, 0, 1, 2])
def test_tail_kernel_matches_series_and_ratio(Q, gamma, N):
    f = field(Q, gamma)
    assert tail_kernel_integral(f, N) == pytest.approx(tail_series(Q, gamma, N), rel=1e-12)
    assert tail_kernel_integral(f, N + 1) / tail_kernel_integral(f, N) == pytest.approx(Q ** (-gamma), rel=1e-13)


def test_ball_character_examples():
    f = field(2, 2)
    assert ball_character_integral(f, 0, NEG_INF) == 1
    assert ball_character_integral(f, 2, -2) == 4
    assert ball_character_integral(f, 2, -1) == 0


def test_shell_character_examples():
    f = field(2, 2)
    assert shell_character_integral(f, 0, 0) == 0.5
    assert shell_character_integral(f, 1, 0) == -1
    assert shell_character_integral(f, 2, 0) == 0


@pytest.mark.parametrize("Q", [2, 3, 5])
@pytest.mark.parametrize("s", [-2, -1, 0, 1, 2])
@pytest.mark.parametrize("m0", [-2, -1, 0, 1, 2, 3])
def test_shell_sums_telescope_to_ball(Q, s, m0):
    f = field(Q, 1.0)
    # I_m for m far below m0 is a geometric tail of total mass Q**m_lo
    m_lo = m0 - 60
    total = sum(shell_character_integral(f, m, s) for m in range(m_lo + 1, m0 + 1))
    total += ball_character_integral(f, m_lo, s)
    assert total == pytest.approx(ball_character_integral(f, m0, s), abs=1e-14)
    assert shell_character_integral(f, m0, s) == pytest.approx(
        ball_character_integral(f, m0, s) - ball_character_integral(f, m0 - 1, s), abs=1e-15
    )


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("N", [0, 1])
@pytest.mark.parametrize("s", [-2, -1, 0, 1, 2])
def test_ball_character_against_explicit_padic_character(p, N, s):
    # chi(x) = exp(2 pi i {x}_p) on Q_p; a = p**-s has |a| = p**s.  Cosets of
    # B_{-K} in B_N have representatives k p**-N, k < p**(N+K); K = 3 makes
    # chi(a x) constant on cosets for every s tested here.
    K = 3
    e = N + s
    acc = 0j
    for k in range(p ** (N + K)):
        frac = Fraction(k % p**e, p**e) if e > 0 else Fraction(0)
        acc += cmath.exp(2j * math.pi * float(frac))
    brute = acc.real * p ** (-K)
    assert abs(acc.imag) < 1e-9
    assert brute == pytest.approx(ball_character_integral(field(p, 1.0), N, s), abs=1e-9)


def test_grid_validation():
    f = field(2, 2)
    with pytest.raises(ParameterError):
        Grid(f, 1, 0, 1)
    with pytest.raises(ParameterError):
        Grid(f, 1, 2, -2)


@pytest.mark.parametrize("Q,N,M,nu", [(2, 0, 2, 1), (3, 1, 2, 0), (2, -1, 1, 2), (4, 0, 1, 1)])
def test_partition_counts(Q, N, M, nu):
    g = Grid(field(Q, 1.0), N, M, nu)
    assert g.coset_count == Q ** (M + nu)
    assert g.coset_count * g.coset_volume == pytest.approx(ball_volume(g.field, M))
    inside = [c for c in g.cosets() if all(a == 0 for a in c.digits[: M - N])]
    assert len(inside) == Q ** (N + nu) == g.omega_count
    assert all(c.index < g.omega_count for c in inside)
    assert all(c.in_omega() == (c.index < g.omega_count) for c in g.cosets())


@pytest.mark.parametrize("Q,M,nu", [(2, 2, 2), (3, 1, 2), (4, 2, 1), (2, 3, 3)])
def test_shell_bookkeeping(Q, M, nu):
    g = Grid(field(Q, 1.0), 0, M, nu)
    assert g.coset_count <= 4096
    cosets = list(g.cosets())
    for c in cosets[:: max(1, len(cosets) // 7)]:
        counts = {}
        for other in cosets:
            d = coset_distance(c, other)
            if d is not None:
                counts[d] = counts.get(d, 0) + 1
        assert counts == {d: Q ** (nu + d - 1) * (Q - 1) for d in range(1 - nu, M + 1)}


def test_coset_distance_example():
    g = Grid(field(2, 1.0), 0, 1, 1)
    a = CosetId(g, (0, 1))
    b = CosetId(g, (1, 1))
    d = coset_distance(a, b)
    assert g.field.qpow(d) == 2
    # representative difference sum_j (a_j - b_j) beta**j first differs at j = -1
    assert coset_distance(a, a) is None


def test_coset_distance_grid_mismatch():
    g1 = Grid(field(2, 1.0), 0, 1, 1)
    g2 = Grid(field(2, 1.0), 0, 1, 2)
    with pytest.raises(GridMismatchError):
        coset_distance(g1.coset(0), g2.coset(0))


def test_coset_id_roundtrip_and_serialisation():
    g = Grid(field(3, 1.0), 0, 2, 1)
    for i in range(g.coset_count):
        c = g.coset(i)
        assert c.index == i
        assert int(str(c), 3) == i
        assert c.digit(-2) == c.digits[0]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2), st.integers(0, 2), st.data())
def test_distance_ultrametric_and_symmetric(Q, M, nu, data):
    g = Grid(field(Q, 1.0), 0, M, nu)
    pick = st.integers(0, g.coset_count - 1)
    a, b, c = (g.coset(data.draw(pick)) for _ in range(3))

    def level(x, y):
        d = coset_distance(x, y)
        return -math.inf if d is None else d

    assert level(a, b) == level(b, a)
    assert level(a, c) <= max(level(a, b), level(b, c))


@pytest.mark.parametrize("Q,M,nu", [(2, 2, 2), (3, 1, 1)])
def test_level_matrix_matches_digit_distance(Q, M, nu):
    g = Grid(field(Q, 1.0), 0, M, nu)
    lv = g.level_matrix()
    for a, b in itertools.product(range(g.coset_count), repeat=2):
        d = coset_distance(g.coset(a), g.coset(b))
        if d is not None:
            assert lv[a, b] == d
    rng = random.Random(0)
    for _ in range(20):
        i = rng.randrange(1, g.coset_count)
        assert g.index_levels([i])[0] == coset_distance(g.coset(i), g.coset(0))


def test_qpow_integer_fast_path_is_exact():
    f = field(3, 2.0)
    assert f.qpow(5) == 243.0
    assert f.qpow(-2) == 1 / 9
    assert f.qpow(0.5) == pytest.approx(math.sqrt(3), rel=1e-15)
    assert np.isfinite(f.qpow(-40))
