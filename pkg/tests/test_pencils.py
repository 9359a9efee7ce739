from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import randgen
from riccati.connections import RiccatiForm, distribution_curvature, frobenius_residual
from riccati.forms import DX, DY, ONE, ZERO, X, Y, OneForm, TwoForm, d_scalar, exp_atom, parameter, wedge
from riccati.monodromy import generator_monodromy
from riccati.pencils import (
    INFINITY,
    DegenerateWeb,
    FoliationSlope,
    NotNormalized,
    Pencil,
    cross_ratio,
    is_constant_cross_ratio,
    member_parameter,
    normal_pencil,
    pencil_curvature,
    pencil_member,
    pencil_to_riccati,
    same_pencil,
    slope_of,
    web_to_pencil,
)
from riccati.surfaces import build_surface

T = parameter("t")


# --------------------------------------------------------------------------
# members and the induced Riccati foliation


def test_pencil_member_examples():
    p = Pencil(DX, DY)
    assert pencil_member(p, 0) == DX
    assert pencil_member(p, INFINITY) == DY
    assert pencil_member(p, 1) == DX + DY


def test_unit_pencil_gives_dz():
    assert pencil_to_riccati(normal_pencil(1)) == RiccatiForm()


def test_exp_atom_pencil():
    u = exp_atom("u", X * Y)
    p = normal_pencil(u)
    assert pencil_to_riccati(p).delta == OneForm(Y, X)
    assert pencil_curvature(p) == TwoForm(-ONE)


def test_sections_are_leaves():
    u = 1 / (1 + X * X + Y)
    delta = pencil_to_riccati(normal_pencil(u)).delta
    for t in (1, -2, parameter("t")):
        z = -ONE / (t * u)
        assert (d_scalar(z) + delta * z).is_zero()


def test_pencil_curvature_examples():
    assert pencil_curvature(normal_pencil(1)).is_zero()
    assert pencil_curvature(normal_pencil(1 / (1 - X * Y))) == TwoForm(-ONE / (1 - X * Y) ** 2)


def test_not_normalized():
    with pytest.raises(NotNormalized):
        pencil_to_riccati(Pencil(DY, DX))
    with pytest.raises(NotNormalized):
        pencil_curvature(Pencil(DX, DX + DY))
    with pytest.raises(DegenerateWeb):
        normal_pencil(0)


# --------------------------------------------------------------------------
# cross-ratio and webs


def test_cross_ratio_arithmetic():
    assert cross_ratio(0, 1, 2, 3) == ONE * 4 / 3


def test_cross_ratio_degenerate():
    with pytest.raises(DegenerateWeb):
        cross_ratio(X, 1, X, 3)


def test_cross_ratio_of_pencil_members():
    p = Pencil(DX, DY)
    f = {k: slope_of(pencil_member(p, k)) for k in (0, 1, INFINITY)}
    ft = slope_of(pencil_member(p, T))
    # with the displayed formula, the order (F_t, F_1, F_0, F_inf) gives t
    assert cross_ratio(ft, f[1], f[0], f[INFINITY]) == T
    assert cross_ratio(ft, f[0], f[1], f[INFINITY]) == 1 - T


def test_is_constant_examples():
    p = Pencil(DX, DY)
    slopes = [slope_of(pencil_member(p, t)) for t in (1, 2, 3, INFINITY)]
    assert is_constant_cross_ratio(*slopes)[0]
    assert is_constant_cross_ratio(0, 1, 2, X) == (False, None)
    assert is_constant_cross_ratio(0, 1, 2, 3) == (True, ONE * 4 / 3)


def test_web_to_pencil_normal_form():
    p = web_to_pencil(0, 1, INFINITY)
    assert same_pencil(p, Pencil(DX, DY))


def test_web_to_pencil_roundtrip_and_relation():
    u = 1 + X * Y
    e0, e1, ei = FoliationSlope.of(X), FoliationSlope.of(u), FoliationSlope.of(Y * Y - 3)
    p = web_to_pencil(e0, e1, ei)
    assert slope_of(pencil_member(p, 0)) == e0
    assert slope_of(pencil_member(p, 1)) == e1
    assert slope_of(pencil_member(p, INFINITY)) == ei
    assert cross_ratio(slope_of(pencil_member(p, T)), e1, e0, ei) == T


def test_web_to_pencil_with_u_slope():
    u = 1 / (1 - X * Y)
    p = web_to_pencil(0, u, INFINITY)
    # member slopes s(t) = t u, solved from the cross-ratio relation
    assert slope_of(pencil_member(p, T)) == FoliationSlope.of(T * u)
    with pytest.raises(DegenerateWeb):
        web_to_pencil(X, X, 1)


def test_member_parameter():
    p = Pencil(DX, DY * (1 + X))
    assert member_parameter(p, pencil_member(p, 3) * Y) == 3 * ONE
    assert member_parameter(p, DY) is INFINITY
    assert member_parameter(p, DX + DY) is None


# --------------------------------------------------------------------------
# properties


seeds = st.integers(0, 10_000)


def _random_u(rng):
    u = randgen.rational(rng)
    while u.is_zero():
        u = randgen.rational(rng)
    return u


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_curvature_consistency(seed):
    p = normal_pencil(_random_u(random.Random(seed)))
    assert pencil_curvature(p) == distribution_curvature(pencil_to_riccati(p))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_pencil_foliations_are_integrable(seed):
    r = pencil_to_riccati(normal_pencil(_random_u(random.Random(seed))))
    assert all(c.is_zero() for c in frobenius_residual(r))


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_mobius_reparameterization_same_members(seed):
    rng = random.Random(seed)
    p = normal_pencil(_random_u(rng))
    a, b, c, d = (rng.randint(-3, 3) for _ in range(4))
    if a * d - b * c == 0:
        a, d = 1, 1 + abs(b * c)
    q = Pencil(p.omega0 * a + p.omegaInf * b, p.omega0 * c + p.omegaInf * d)
    for _ in range(3):
        t = rng.randint(-5, 5)
        assert member_parameter(p, pencil_member(q, t)) is not None
    assert same_pencil(p, q)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_member_cross_ratio_equals_parameter_cross_ratio(seed):
    rng = random.Random(seed)
    w0, wi = randgen.one_form(rng, 1), randgen.one_form(rng, 1)
    while wedge(w0, wi).is_zero():
        wi = randgen.one_form(rng, 1)
    p = Pencil(w0, wi)
    ts = rng.sample(range(-6, 7), 4)
    slopes = [slope_of(pencil_member(p, t)) for t in ts]
    assert cross_ratio(*slopes) == cross_ratio(*ts)


def test_constant_u_has_trivial_monodromy():
    for u in (ONE, 3 * ONE):
        p = normal_pencil(u)
        assert pencil_curvature(p).is_zero()
        r = pencil_to_riccati(p)
        for fam in ("torus", "kodaira", "hopf-primary", "hopf-secondary", "inoue-sm", "inoue-splus"):
            s = build_surface(fam)
            for g in s.generators:
                assert generator_monodromy(s, g, omega=r).transport.is_identity(1e-12)


def test_pencil_json_roundtrip():
    p = normal_pencil(1 / (1 - X * Y))
    q = Pencil.from_json(p.to_json())
    assert q.omega0 == p.omega0 and q.omegaInf == p.omegaInf
    assert ZERO.is_zero()
