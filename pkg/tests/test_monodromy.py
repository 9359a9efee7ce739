from __future__ import annotations

import cmath
import random

import numpy as np
import pytest

from riccati.connections import RiccatiForm, cocycle_transform, riccati_form_from_theta
from riccati.forms import ONE, ZERO, X, Y, MatrixOneForm, NumericBinding, OneForm, PolyMap, parameter
from riccati.monodromy import (
    CONJUGACY,
    EXACT,
    INVERSE,
    Inconclusive,
    Mobius,
    NoConvergence,
    PoleOnPath,
    compare_generators,
    generator_monodromy,
    group_classify,
    holonomy_transport,
    mobius_classify,
    mobius_compose,
    projective_distance,
    surface_monodromy,
    verify_tables,
)
from riccati.surfaces import Path, build_surface, random_params

T1 = Mobius.translation(1)


# --------------------------------------------------------------------------
# Möbius algebra


def test_compose_examples():
    f = Mobius([[2, 1], [1, 1]])
    assert mobius_compose(f, f.inverse()).is_identity()
    assert mobius_compose(T1, T1).close_to(Mobius.translation(2))
    assert mobius_compose(Mobius.scaling(2), T1).close_to(Mobius([[2, 2], [0, 1]]))


def test_mobius_action_and_normalization():
    f = Mobius([[2, 1], [1, 1]])
    assert f(1) == pytest.approx(1.5)
    assert abs(np.linalg.det(f.m) - 1) < 1e-12
    assert Mobius([[3, 0], [0, 3]]).is_identity()
    assert projective_distance(Mobius([[1, 2], [0, 1]]), Mobius([[-1, -2], [0, -1]])) < 1e-15


def test_classify_examples():
    assert mobius_classify(Mobius.identity()).kind == "identity"
    assert mobius_classify(T1).kind == "parabolic"
    c = mobius_classify(Mobius.scaling(1j))
    assert (c.kind, c.order) == ("elliptic", 4)
    assert mobius_classify(Mobius.scaling(2)).kind == "loxodromic"
    assert mobius_classify(Mobius.scaling(cmath.exp(2j))).order is None


# --------------------------------------------------------------------------
# transport


def _path(*pts):
    return Path(tuple((complex(a), complex(b)) for a, b in pts))


def test_transport_trivial_form():
    tr = holonomy_transport(RiccatiForm(), _path((0, 0), (1, 2), (3, -1)))
    assert tr.transport.is_identity(1e-14)


def test_transport_torus_type_1_scalar_oracle():
    # dz = -δz with δ = dx: z(1) = z0 exp(-1)
    s = build_surface("torus", {"a": 1, "b": 0})
    tr = holonomy_transport(s.omega, _path((0, 0), (1, 0)), s.binding)
    assert tr.transport.close_to(Mobius.scaling(cmath.exp(-1)), 1e-10)


def test_transport_kodaira_translation_oracle():
    # dz = -c dx along a segment with x-displacement 1
    s = build_surface("kodaira", {"c": 0.7 - 0.2j})
    tr = holonomy_transport(s.omega, _path((0, 0), (1, 1)), s.binding)
    assert tr.transport.close_to(Mobius.translation(-(0.7 - 0.2j)), 1e-10)


def test_transport_riccati_scalar_oracle():
    # dz = -z² dx: z(1) = z0 / (1 + z0)
    r = RiccatiForm(eta=OneForm(ONE, ZERO))
    tr = holonomy_transport(r, _path((0, 0), (1, 0)))
    assert tr.transport.close_to(Mobius([[1, 0], [1, 1]]), 1e-10)


def test_transport_nonconstant_coefficients():
    # dz = -x z dx from x = 0 to 2: z(2) = z0 exp(-2)
    r = RiccatiForm(delta=OneForm(X, ZERO))
    tr = holonomy_transport(r, _path((0, 0), (2, 0)))
    assert tr.transport.close_to(Mobius.scaling(cmath.exp(-2)), 1e-10)
    assert tr.error_estimate < 1e-10


def test_pole_on_path():
    r = RiccatiForm(gamma=OneForm(ONE / X, ZERO))
    with pytest.raises(PoleOnPath):
        holonomy_transport(r, _path((-1, 0), (1, 0)))


def test_no_convergence():
    r = RiccatiForm(delta=OneForm(30 * X * X, ZERO))
    with pytest.raises(NoConvergence):
        holonomy_transport(r, _path((0, 0), (1, 0)), tol=1e-14, max_halvings=2)


# --------------------------------------------------------------------------
# generator monodromy against the tables


def test_torus_type_1_exact():
    s = build_surface("torus", {"a": 1, "b": 2})
    res = generator_monodromy(s, "t1")
    assert res.monodromy.close_to(Mobius.scaling(cmath.e), 1e-8)
    assert res.match_report == EXACT
    for r in surface_monodromy(s):
        assert r.match_report == EXACT
        assert abs(np.linalg.det(r.monodromy.m) - 1) <= 1e-10


def test_torus_type_3_matches_up_to_conjugacy():
    s = build_surface("torus", {"type": 3})
    res = generator_monodromy(s, "t3")
    # literal table entry z - l with l = 1; computed value is conjugate by z -> -1/z
    table = Mobius.translation(-1)
    assert not res.monodromy.close_to(table)
    h = Mobius([[0, -1], [1, 0]])
    assert res.monodromy.conjugate_by(h).close_to(table)
    assert res.match_report == CONJUGACY


def test_hopf_primary_generic_exact():
    s = build_surface("hopf-primary", {"a": 0.3, "b": 0.6})
    res = generator_monodromy(s, "g")
    assert res.monodromy.close_to(Mobius.scaling(0.6 / 0.3))
    assert res.match_report == EXACT


def test_kodaira_inverse():
    s = build_surface("kodaira", {"c": 0.5})
    results = {r.generator: r for r in surface_monodromy(s)}
    a, b = s.params["a"], s.params["b"]
    assert results["g3"].monodromy.close_to(Mobius.translation(a + 0.5))
    assert results["g4"].monodromy.close_to(Mobius.translation(b + 0.5 * s.params["tau2"]))
    assert results["g3"].match_report == INVERSE


def test_hopf_lambda_row_conjugate():
    s = build_surface("hopf-primary", {"a": 0.5, "b": 0.5, "lam": 0.3})
    res = generator_monodromy(s, "g")
    assert res.match_report == CONJUGACY
    assert res.monodromy.close_to(Mobius([[0.5, 0], [0.3, 0.5]]))


def test_inoue_sm_exact():
    s = build_surface("inoue-sm")
    res = generator_monodromy(s, "gamma0")
    beta, alpha = s.params["beta"], s.params["alpha"]
    assert res.monodromy.close_to(Mobius.scaling(beta / alpha))
    assert res.match_report == EXACT


def test_inoue_splus_concrete():
    s = build_surface("inoue-splus", {"N": [[2, 1], [1, 1]], "r": 1, "p": 0, "q": 0, "t": 1})
    rep = verify_tables(s)
    assert rep.ok and rep.match.kind in (INVERSE, CONJUGACY)
    # ω = dz: transport is trivial, so monodromy is the pure Jacobian action
    for r in rep.results:
        assert r.transport.is_identity(1e-12)


def test_compare_generators_mismatch():
    match = compare_generators([Mobius.scaling(2)], [Mobius.translation(1)])
    assert match.kind == "mismatch" and not match.ok


def test_compare_generators_shared_conjugator():
    h = Mobius([[1, 2], [3, 7]])
    table = [Mobius.scaling(3), Mobius([[1, 1], [0, 1]]).conjugate_by(Mobius([[2, 1], [1, 1]]))]
    computed = [t.conjugate_by(h.inverse()) for t in table]
    match = compare_generators(computed, table)
    assert match.kind == CONJUGACY
    assert all(c.conjugate_by(match.conjugator).close_to(t) for c, t in zip(computed, table))


@pytest.mark.parametrize("family,variant", [
    ("torus", "1"), ("torus", "2"), ("torus", "3"), ("kodaira", None),
    ("hopf-primary", "lambda"), ("hopf-primary", "generic"), ("hopf-primary", "resonant"),
    ("hopf-secondary", "lambda"), ("hopf-secondary", "generic"), ("hopf-secondary", "resonant"),
    ("inoue-splus", None),
])
def test_random_table_rows_match(family, variant):
    rng = np.random.default_rng(11)
    for _ in range(3):
        rep = verify_tables(build_surface(family, random_params(family, rng, variant)))
        assert rep.ok, rep.match
        assert rep.match.max_error < 1e-8


# --------------------------------------------------------------------------
# group classification


def test_group_examples():
    assert group_classify([Mobius.identity()]).classification == "trivial"
    rep = group_classify([Mobius.scaling(1j)])
    assert (rep.classification, rep.order, rep.cyclic) == ("finite-cyclic", 4, True)
    s = build_surface("inoue-sm")
    rep = group_classify([r.monodromy for r in surface_monodromy(s)])
    assert rep.classification == "infinite" and rep.cyclic
    assert mobius_classify(rep.witness).kind == "loxodromic"


def test_group_finite_noncyclic():
    # Klein four-group: z -> -z and z -> 1/z
    rep = group_classify([Mobius.scaling(-1), Mobius([[0, 1], [1, 0]])])
    assert (rep.classification, rep.order, rep.cyclic) == ("finite-noncyclic", 4, False)


def test_group_word_witness():
    # two elliptic elements of order 2 whose product is parabolic
    rep = group_classify([Mobius([[0, 1], [-1, 0]]), Mobius([[0, 1], [-1, 1]]).inverse() @ Mobius([[0, -1], [1, 0]])
                          @ Mobius([[0, 1], [-1, 1]])])
    assert rep.classification == "infinite"


def test_group_inconclusive():
    rot = Mobius.scaling(cmath.exp(2j))  # irrational rotation: no closure, no witness
    with pytest.raises(Inconclusive):
        group_classify([rot], word_bound=4)


def test_group_never_finite_with_loxodromic():
    rng = random.Random(5)
    for _ in range(20):
        g = Mobius([[rng.uniform(-2, 2), rng.uniform(-2, 2)], [rng.uniform(-2, 2), rng.uniform(-2, 2)]])
        if mobius_classify(g).kind == "loxodromic":
            assert group_classify([g, Mobius.scaling(1j)]).classification == "infinite"


def test_word_bound_limit():
    with pytest.raises(ValueError):
        group_classify([T1], word_bound=13)


# --------------------------------------------------------------------------
# robustness


def _flat_instances():
    # gauge transforms of constant commuting connections by mild shears
    rng = random.Random(2)
    out = []
    for _ in range(3):
        m1 = [[rng.choice((-1, 0, 1)), rng.choice((0, 1))], [rng.choice((-1, 0, 1)), 0]]
        m1[1][1] = -m1[0][0]
        k = rng.choice((-1, 1))
        theta = MatrixOneForm.from_matrices(m1, [[k * v for v in row] for row in m1])
        phi = PolyMap(X, Y + rng.choice((-1, 1)) * X**2 / 2).then(PolyMap(X + Y / 2, Y))
        out.append((riccati_form_from_theta(cocycle_transform(theta, phi)), NumericBinding()))
    s = build_surface("torus", random_params("torus", np.random.default_rng(4), "2"))
    out.append((s.omega, s.binding))
    return out


@pytest.mark.parametrize("tol", [1e-10, 1e-6])
def test_transport_concatenation(tol):
    for r, b in _flat_instances():
        p, q, w = (0.1, 0.2), (0.4 + 0.3j, -0.1), (0.2j, 0.5)
        whole = holonomy_transport(r, _path(p, q, w), b, tol).transport
        first = holonomy_transport(r, _path(p, q), b, tol).transport
        second = holonomy_transport(r, _path(q, w), b, tol).transport
        assert projective_distance(whole, second @ first) <= 2 * tol


@pytest.mark.parametrize("tol", [1e-10, 1e-6])
def test_transport_homotopy_invariance(tol):
    for r, b in _flat_instances():
        a = holonomy_transport(r, _path((0, 0), (0.5, 0.1j), (0.3, 0.6)), b, tol).transport
        c = holonomy_transport(r, _path((0, 0), (-0.2j, 0.4), (0.3, 0.6)), b, tol).transport
        assert projective_distance(a, c) <= 2 * tol


def test_torus_monodromies_commute():
    s = build_surface("torus", random_params("torus", np.random.default_rng(9), "2"))
    monos = [r.monodromy for r in surface_monodromy(s)]
    for f in monos:
        for g in monos:
            assert projective_distance(f @ g, g @ f) < 1e-9


def test_holonomy_json():
    s = build_surface("torus")
    doc = generator_monodromy(s, "t1").to_json()
    assert doc["match_report"] == EXACT
    assert len(doc["monodromy"]) == 2 and len(doc["monodromy"][0][0]) == 2


def test_flat_pencil_normal_form_has_trivial_transport():
    # ω = dz: transport along every catalog generator path is the identity
    for fam in ("torus", "kodaira", "hopf-primary", "inoue-sm"):
        s = build_surface(fam)
        for g in s.generators:
            assert generator_monodromy(s, g, omega=RiccatiForm()).transport.is_identity(1e-14)


def test_parameters_in_transport():
    r = RiccatiForm(delta=OneForm(parameter("k"), ZERO))
    tr = holonomy_transport(r, _path((0, 0), (1, 0)), NumericBinding({"k": 2j}))
    assert tr.transport.close_to(Mobius.scaling(cmath.exp(-2j)), 1e-10)
    assert Y is not None
