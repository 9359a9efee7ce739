from __future__ import annotations

import cmath

import numpy as np
import pytest

from riccati.connections import RiccatiConnection, RiccatiForm, trace
from riccati.forms import DX, ONE, ZERO, ZERO1, MatrixOneForm, OneForm, parameter, substitute
from riccati.surfaces import (
    CoverDomain,
    Family,
    InvalidParameters,
    build_surface,
    check_surface,
    connection_family,
    descends,
    generator_path,
    random_params,
    structure_check,
    surface_from_descriptor,
)

ALL_DEFAULTS = [
    ("torus", {"type": 1}),
    ("torus", {"type": 2}),
    ("torus", {"type": 3}),
    ("kodaira", {}),
    ("hopf-primary", {}),
    ("hopf-primary", {"a": 0.25, "b": 0.5, "c": 2}),
    ("hopf-primary", {"a": 0.5, "b": 0.5, "lam": 1}),
    ("hopf-secondary", {}),
    ("hopf-secondary", {"a": 0.25, "b": 0.5, "l": 3, "k1": 2, "k2": 1}),
    ("inoue-sm", {}),
    ("inoue-splus", {}),
    ("elliptic", {}),
]


@pytest.mark.parametrize("family,params", ALL_DEFAULTS)
def test_catalog_instances_pass_all_checks(family, params):
    report = check_surface(build_surface(family, params))
    assert report.ok, report.failures()


def test_torus_generators_are_translations():
    s = build_surface("torus")
    assert len(s.generators) == 4
    for g in s.generators:
        assert np.allclose(g.numeric_jacobian(s.basepoint), np.eye(2))
    shifts = [np.subtract(g.numeric_map((0, 0)), (0, 0)) for g in s.generators]
    assert np.allclose(shifts, [(1, 0), (1j, 0), (0, 1), (0, 1j)])


def test_hopf_primary_generator():
    s = build_surface("hopf-primary", {"a": 0.5, "b": 0.5, "lam": 0, "m": 1})
    assert len(s.generators) == 1
    assert np.allclose(s.generators[0].numeric_jacobian(s.basepoint), np.diag([0.5, 0.5]))


def test_inoue_sm_plastic_eigendata():
    s = build_surface("inoue-sm")
    alpha, beta = s.params["alpha"], s.params["beta"]
    # the plastic number is the real root of t^3 = t + 1
    assert alpha == pytest.approx(1.324717957244746)
    assert alpha * abs(beta) ** 2 == pytest.approx(1.0)
    assert beta.imag != 0
    assert [g.label for g in s.generators] == ["gamma0", "gamma1", "gamma2", "gamma3"]


def test_inoue_splus_lattice_equation_is_solved():
    s = build_surface("inoue-splus", {"p": 1, "q": -1, "r": 2})
    assert check_surface(s).ok
    assert s.generator("gamma3").numeric_map((1j, 0))[1] == pytest.approx(s.params["s3"])


def test_connection_family_examples():
    # type 3 with C = I: only the z² term of the conjugated row survives
    _, omega = connection_family(build_surface("torus", {"type": 3}))
    identity = {"e": 1, "f": 0, "g": 0, "h": 1}
    assert RiccatiForm(*(substitute(w, identity) for w in (omega.gamma, omega.delta, omega.eta))) == RiccatiForm(
        eta=OneForm(ZERO, -ONE))
    _, omega = connection_family(build_surface("kodaira"))
    assert omega == RiccatiForm(OneForm(parameter("c"), ZERO), ZERO1, ZERO1)
    _, omega = connection_family(build_surface("inoue-sm"))
    assert omega.is_trivial()


def test_torus_conjugated_table_type_3():
    # type 3 conjugated by C: dz + (g - e z)(-g + e z)/det C dy
    s = build_surface("torus", {"type": 3})
    e, f, g, h = (parameter(n) for n in "efgh")
    det = e * h - f * g
    expected = RiccatiForm(OneForm(ZERO, -g * g / det), OneForm(ZERO, 2 * e * g / det), OneForm(ZERO, -e * e / det))
    assert s.omega == expected


def test_kodaira_display_trace():
    s = build_surface("kodaira", {"e": 1, "h": 2})
    assert trace(s.display_theta) == DX * (parameter("e") + parameter("h"))


def test_kodaira_e_ne_h_fails_flatness_not_descent():
    s = build_surface("kodaira", {"e": 1, "h": 2})
    report = check_surface(s)
    failed = {e.name for e in report.failures()}
    assert failed == {"curvature", "frobenius"}


def test_descends_examples():
    s = build_surface("torus")
    constant = RiccatiConnection(MatrixOneForm.from_matrices([[1, 2], [3, -1]], [[0, 1], [0, 0]]))
    assert all(descends(constant, g).holds for g in s.generators)
    k = build_surface("kodaira")
    assert descends(k.theta, k.generator("g3")).holds
    bad = RiccatiConnection(MatrixOneForm.from_matrices([[0, 1], [0, 0]], [[0, 0], [0, 0]]))
    res = descends(bad, k.generator("g3"))
    assert not res.holds and res.residual is not None


def test_structure_check_torus_commutation():
    for kind in (1, 2):
        names = {e.name for e in structure_check(build_surface("torus", {"type": kind})).entries}
        assert "commutation A1 A2 = A2 A1" in names


def test_invalid_parameters():
    with pytest.raises(InvalidParameters):
        build_surface("hopf-primary", {"a": 0.9, "b": 0.5})
    with pytest.raises(InvalidParameters):
        build_surface("hopf-primary", {"a": 0.25, "b": 0.5, "lam": 1})
    with pytest.raises(InvalidParameters):
        build_surface("torus", {"e": 0, "f": 0})
    with pytest.raises(InvalidParameters):
        build_surface("kodaira", {"b": 7})
    with pytest.raises(InvalidParameters):
        build_surface("inoue-sm", {"M": [[1, 0, 0], [0, 1, 0], [0, 0, 1]]})
    with pytest.raises(InvalidParameters):
        surface_from_descriptor({"family": "klein-bottle"})


def test_descriptor_roundtrip():
    s = build_surface("hopf-primary", {"a": 0.25, "b": 0.5, "c": 1 + 2j})
    t = surface_from_descriptor(s.descriptor())
    assert t.descriptor() == s.descriptor()
    assert t.omega == s.omega


def test_generator_paths():
    s = build_surface("torus")
    path = generator_path(s, s.generator("t1"))
    assert path.waypoints == ((0j, 0j), (1 + 0j, 0j))
    for fam in ("hopf-primary", "inoue-sm", "inoue-splus", "kodaira"):
        s = build_surface(fam)
        for g in s.generators:
            path = generator_path(s, g)
            assert np.allclose(path.start, s.basepoint, atol=1e-14)
            assert np.allclose(path.end, g.numeric_map(s.basepoint), atol=1e-14)
            for a, b in path.segments():
                for t in np.linspace(0, 1, 50):
                    p = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
                    assert s.cover_domain.contains(p)


def test_hopf_path_avoids_origin():
    s = build_surface("hopf-primary", {"a": 0.5, "b": 0.5})
    path = generator_path(s, s.generators[0])
    assert np.allclose(path.end, (0.5, 0.5))
    assert s.cover_domain is CoverDomain.C2_MINUS_ORIGIN


def test_random_draws_satisfy_checks():
    rng = np.random.default_rng(7)
    for fam in Family:
        for _ in range(2):
            s = build_surface(fam, random_params(fam, rng))
            assert check_surface(s).ok, (fam, s.variant)


def test_hopf_rows_by_variant():
    rng = np.random.default_rng(3)
    rows = {build_surface("hopf-primary", random_params("hopf-primary", rng, v)).variant
            for v in ("lambda", "generic", "resonant")}
    assert rows == {"lambda != 0, m = 1", "lambda = 0, a != b^2", "lambda = 0, a = b^2"}
    rows = {build_surface("hopf-secondary", random_params("hopf-secondary", rng, v)).variant
            for v in ("lambda", "generic", "resonant")}
    assert rows == {"lambda != 0, m = 1", "lambda = 0, eps1 != eps2^2", "lambda = 0, eps1 = eps2^2"}


def test_elliptic_descent_is_numeric():
    s = build_surface("elliptic")
    res = descends(s.theta, s.generators[0], s.binding, s.sample_points)
    assert res.numeric_only and res.holds
    assert cmath.isclose(s.generators[0].numeric_map((0, 1j))[1], 1j / (1j + 1))
