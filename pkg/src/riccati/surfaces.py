"""Catalog of compact complex surfaces with affine structure.

Each model records the universal cover domain, the deck generators as
polynomial maps with symbolic parameter atoms (so descent is checked for all
parameter values at once), a numeric binding of those atoms for the monodromy
computations, the admissible Riccati connection and the closed-form monodromy
of every generator as tabulated for the family.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .connections import (
    AffineConnection,
    RiccatiConnection,
    RiccatiForm,
    affine_to_riccati,
    cocycle_transform,
    curvature,
    distribution_curvature,
    frobenius_residual,
    reduce,
    riccati_form_from_theta,
    torsion,
    trace,
)
from .forms import (
    DX,
    DY,
    ONE,
    X,
    Y,
    ZERO,
    FormError,
    MatrixOneForm,
    NonRepresentableComposition,
    NumericBinding,
    OneForm,
    PolyMap,
    RationalExpr,
    as_expr,
    compile_expr,
    evaluate,
    function_of_y,
    parameter,
)

__all__ = [
    "Family",
    "CoverDomain",
    "DeckGenerator",
    "SurfaceModel",
    "Path",
    "InvalidParameters",
    "PathNotFound",
    "DescentResult",
    "CheckEntry",
    "StructureReport",
    "build_surface",
    "connection_family",
    "descends",
    "structure_check",
    "check_surface",
    "generator_path",
    "random_params",
    "surface_from_descriptor",
    "FAMILY_INFO",
]


class InvalidParameters(ValueError):
    pass


class PathNotFound(RuntimeError):
    pass


class Family(str, enum.Enum):
    TORUS = "torus"
    KODAIRA = "kodaira"
    HOPF_PRIMARY = "hopf-primary"
    HOPF_SECONDARY = "hopf-secondary"
    INOUE_SM = "inoue-sm"
    INOUE_SPLUS = "inoue-splus"
    ELLIPTIC = "elliptic"


class CoverDomain(str, enum.Enum):
    C2 = "C2"
    C2_MINUS_ORIGIN = "C2-minus-origin"
    H_X_C = "HxC"
    C_X_H = "CxH"

    def contains(self, p) -> bool:
        x, y = complex(p[0]), complex(p[1])
        if self is CoverDomain.C2:
            return True
        if self is CoverDomain.C2_MINUS_ORIGIN:
            return abs(x) + abs(y) > 0
        if self is CoverDomain.H_X_C:
            return x.imag > 0
        return y.imag > 0


# --------------------------------------------------------------------------
# model types


@dataclass(frozen=True, eq=False)
class DeckGenerator:
    """A deck transformation.

    ``closed_form`` is the tabulated monodromy of the generator as a 2x2
    matrix acting on the fiber coordinate by z -> (m00 z + m01)/(m10 z + m11),
    and ``formula`` its text.  Either may be ``None`` when the family has no
    table.
    """

    label: str
    map: PolyMap | None
    numeric_map: Callable
    numeric_jacobian: Callable
    closed_form: np.ndarray | None = None
    formula: str | None = None

    def __call__(self, p):
        return self.numeric_map(p)


@dataclass(frozen=True, eq=False)
class SurfaceModel:
    family: Family
    variant: str
    cover_domain: CoverDomain
    generators: tuple[DeckGenerator, ...]
    params: dict
    binding: NumericBinding
    theta: RiccatiConnection
    display_theta: MatrixOneForm
    omega: RiccatiForm
    free_parameters: tuple[str, ...]
    constraints: tuple[str, ...]
    basepoint: tuple[complex, complex]
    affine: AffineConnection | None = None
    sample_points: tuple = ()

    def generator(self, label: str) -> DeckGenerator:
        for g in self.generators:
            if g.label == label:
                return g
        raise KeyError(label)

    def descriptor(self) -> dict:
        return {
            "family": self.family.value,
            "params": {k: _json_value(v) for k, v in self.params.items()},
            "basepoint": [self.basepoint[0].real, self.basepoint[0].imag, self.basepoint[1].real, self.basepoint[1].imag],
        }


@dataclass(frozen=True)
class Path:
    waypoints: tuple[tuple[complex, complex], ...]

    def __post_init__(self):
        if len(self.waypoints) < 2:
            raise ValueError("a path needs at least two waypoints")
        for p, q in zip(self.waypoints, self.waypoints[1:]):
            if p == q:
                raise ValueError("consecutive waypoints must differ")

    @property
    def start(self):
        return self.waypoints[0]

    @property
    def end(self):
        return self.waypoints[-1]

    def segments(self):
        return list(zip(self.waypoints, self.waypoints[1:]))

    def reversed(self) -> "Path":
        return Path(tuple(reversed(self.waypoints)))

    def then(self, other: "Path") -> "Path":
        if max(abs(a - b) for a, b in zip(self.end, other.start)) > 1e-14:
            raise ValueError("paths do not meet")
        return Path(self.waypoints + other.waypoints[1:])


def _json_value(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (list, tuple)):
        return [_json_value(u) for u in v]
    return v


# --------------------------------------------------------------------------
# parameter helpers


def _c(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def _int(v, name) -> int:
    z = _c(v)
    if z.imag != 0 or z.real != int(z.real):
        raise InvalidParameters(f"{name} must be an integer")
    return int(z.real)


def _near(a, b, tol=1e-12) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def _mat(rows) -> np.ndarray:
    return np.array([[complex(v) for v in row] for row in rows], dtype=complex)


def _poly_generator(label, phi: PolyMap, binding: NumericBinding, closed=None, formula=None) -> DeckGenerator:
    fx, fy = compile_expr(phi.fx, binding), compile_expr(phi.fy, binding)
    jac = [[compile_expr(e, binding) for e in row] for row in phi.jacobian()]

    def numeric_map(p):
        return (fx(p[0], p[1]), fy(p[0], p[1]))

    def numeric_jacobian(p):
        return np.array([[f(p[0], p[1]) for f in row] for row in jac], dtype=complex)

    return DeckGenerator(label, phi, numeric_map, numeric_jacobian, None if closed is None else _mat(closed), formula)


def _translation_matrix(s) -> list:
    return [[1, s], [0, 1]]


def _reduced(theta: MatrixOneForm) -> RiccatiConnection:
    return reduce(theta) if not theta.trace().is_zero() else RiccatiConnection(theta)


def _model(family, variant, domain, gens, params, binding, display, free, constraints, basepoint, **kw):
    theta = _reduced(display)
    return SurfaceModel(
        family=family,
        variant=variant,
        cover_domain=domain,
        generators=tuple(gens),
        params=params,
        binding=binding,
        theta=theta,
        display_theta=display,
        omega=riccati_form_from_theta(theta),
        free_parameters=tuple(free),
        constraints=tuple(constraints),
        basepoint=basepoint,
        **kw,
    )


# --------------------------------------------------------------------------
# families

_DEFAULT_LATTICE = ((1, 0), (1j, 0), (0, 1), (0, 1j))


def _torus(params: Mapping) -> SurfaceModel:
    kind = _int(params.get("type", 1), "type")
    if kind not in (1, 2, 3):
        raise InvalidParameters("torus type must be 1, 2 or 3")
    vals = {"type": kind}
    for name, default in (("a", 1), ("b", 0), ("c", 0), ("e", 1), ("f", 0), ("g", 0), ("h", 1)):
        vals[name] = _c(params.get(name, default))
    for i, (k, l) in enumerate(_DEFAULT_LATTICE, start=1):
        vals[f"k{i}"] = _c(params.get(f"k{i}", k))
        vals[f"l{i}"] = _c(params.get(f"l{i}", l))
    det_c = vals["e"] * vals["h"] - vals["f"] * vals["g"]
    if abs(det_c) < 1e-12:
        raise InvalidParameters("conjugator C must be invertible (det C != 0)")
    periods = np.array([[vals[f"k{i}"].real, vals[f"k{i}"].imag, vals[f"l{i}"].real, vals[f"l{i}"].imag] for i in range(1, 5)])
    if abs(np.linalg.det(periods)) < 1e-9:
        raise InvalidParameters("lattice vectors (k_i, l_i) must be R-linearly independent")

    a, b, c = parameter("a"), parameter("b"), parameter("c")
    e, f, g, h = (parameter(n) for n in "efgh")
    if kind == 1:
        b1 = [[-a / 2, ZERO], [ZERO, a / 2]]
        b2 = [[-b / 2, ZERO], [ZERO, b / 2]]
        free = ("a", "b")
    elif kind == 2:
        b1 = [[ZERO, ONE], [ZERO, ZERO]]
        b2 = [[ZERO, c], [ZERO, ZERO]]
        free = ("c",)
    else:
        b1 = [[ZERO, ZERO], [ZERO, ZERO]]
        b2 = [[ZERO, ONE], [ZERO, ZERO]]
        free = ()
    cm = [[e, f], [g, h]]
    det = e * h - f * g
    cinv = [[h / det, -f / det], [-g / det, e / det]]
    a1, a2 = _conj(cm, b1, cinv), _conj(cm, b2, cinv)
    display = MatrixOneForm.from_matrices(a1, a2)

    binding = NumericBinding({k: v for k, v in vals.items() if k != "type"})
    gens = []
    ev, gv = vals["e"], vals["g"]
    fv = vals["f"]
    for i in range(1, 5):
        k, l = vals[f"k{i}"], vals[f"l{i}"]
        phi = PolyMap(X + parameter(f"k{i}"), Y + parameter(f"l{i}"))
        if kind == 1:
            closed = [[cmath.exp(vals["a"] * k + vals["b"] * l), 0], [0, 1]]
            formula = f"z*exp(a*k{i} + b*l{i})"
        else:
            s = k + vals["c"] * l if kind == 2 else l
            sym = f"(k{i} + c*l{i})" if kind == 2 else f"l{i}"
            if abs(ev) > 1e-14:
                closed, formula = _translation_matrix(-ev * s), f"z - e*{sym}"
            else:
                closed, formula = _translation_matrix(-(gv / fv) * s), f"z - (g/f)*{sym}"
        gens.append(_poly_generator(f"t{i}", phi, binding, closed, formula))
    return _model(
        Family.TORUS, f"type {kind}", CoverDomain.C2, gens, vals, binding, display,
        free + ("e", "f", "g", "h"), ("det C != 0", "(k_i, l_i) span a lattice"), (0j, 0j),
    )


def _conj(cm, bm, cinv):
    tmp = [[sum((cm[i][k] * bm[k][j] for k in range(2)), ZERO) for j in range(2)] for i in range(2)]
    return [[sum((tmp[i][k] * cinv[k][j] for k in range(2)), ZERO) for j in range(2)] for i in range(2)]


def _kodaira(params: Mapping) -> SurfaceModel:
    vals = {
        "a": _c(params.get("a", 1)),
        "tau1": _c(params.get("tau1", 1j)),
        "tau2": _c(params.get("tau2", 0.5 + 1j)),
        "m": _int(params.get("m", 1), "m"),
        "c": _c(params.get("c", 0)),
        "e": _c(params.get("e", 0)),
    }
    vals["h"] = _c(params.get("h", vals["e"]))
    if vals["m"] < 1:
        raise InvalidParameters("m must be a positive integer")
    for t in ("tau1", "tau2"):
        if abs(vals[t].imag) < 1e-12:
            raise InvalidParameters(f"{t} must not be real")
    expected_b = vals["a"] * vals["tau2"] - vals["m"] * vals["tau1"]
    vals["b"] = _c(params.get("b", expected_b))
    if not _near(vals["b"], expected_b, 1e-10):
        raise InvalidParameters("a*tau2 - b = m*tau1 violated")

    a, b, t1, t2, c, e = (parameter(n) for n in ("a", "b", "tau1", "tau2", "c", "e"))
    # the displayed family is flat only on e = h; a distinct h is kept symbolic
    h = e if vals["h"] == vals["e"] else parameter("h")
    display = MatrixOneForm.from_matrices([[e, ZERO], [c, h]], [[ZERO, ZERO], [e - h, ZERO]])
    binding = NumericBinding({k: v for k, v in vals.items() if k != "m"})
    av, bv, cv, t2v = vals["a"], vals["b"], vals["c"], vals["tau2"]
    gens = [
        _poly_generator("g1", PolyMap(X, Y + 1), binding, np.eye(2), "z"),
        _poly_generator("g2", PolyMap(X, Y + t1), binding, np.eye(2), "z"),
        _poly_generator("g3", PolyMap(X + 1, a * X + Y), binding, _translation_matrix(-av - cv), "z - a - c"),
        _poly_generator("g4", PolyMap(X + t2, b * X + Y), binding, _translation_matrix(-bv - cv * t2v), "z - b - c*tau2"),
    ]
    variant = "e = h" if h is e else "e != h"
    return _model(
        Family.KODAIRA, variant, CoverDomain.C2, gens, vals, binding, display, ("c", "e") + (() if h is e else ("h",)),
        ("a*tau2 - b = m*tau1", "tau1, tau2 not real"), (0j, 0j),
    )


def _hopf_contraction(vals) -> tuple[str, PolyMap, list, str]:
    a, b, lam = vals["a"], vals["b"], vals["lam"]
    if not (0 < abs(a) <= abs(b) < 1):
        raise InvalidParameters("need 0 < |a| <= |b| < 1")
    m = vals["m"]
    if m < 1:
        raise InvalidParameters("m must be a positive integer")
    if abs(lam) > 0:
        if m != 1:
            raise InvalidParameters("lambda != 0 is tabulated only for m = 1")
        if not _near(a, b ** m, 1e-10):
            raise InvalidParameters("(a - b^m)*lambda = 0 violated")
        phi = PolyMap(parameter("b") * X + parameter("lam") * Y, parameter("b") * Y)
        return "lambda != 0, m = 1", phi, [[b, lam], [0, a]], "(z*b + lambda)/a"
    if _near(a, b * b, 1e-12):
        phi = PolyMap(parameter("b") ** 2 * X, parameter("b") * Y)
        return "lambda = 0, a = b^2", phi, [[1, 0], [0, b]], "z/b"
    phi = PolyMap(parameter("a") * X, parameter("b") * Y)
    return "lambda = 0, a != b^2", phi, [[b, 0], [0, a]], "z*b/a"


def _hopf_values(params) -> dict:
    return {
        "a": _c(params.get("a", 0.5)),
        "b": _c(params.get("b", 0.5)),
        "lam": _c(params.get("lam", 0)),
        "m": _int(params.get("m", 1), "m"),
        "c": _c(params.get("c", 0)),
    }


def _eta_c_dy() -> MatrixOneForm:
    # dz - c z^2 dy
    return MatrixOneForm(((OneForm(), OneForm(ZERO, parameter("c"))), (OneForm(), OneForm())))


def _hopf_primary(params: Mapping) -> SurfaceModel:
    vals = _hopf_values(params)
    row, phi, closed, formula = _hopf_contraction(vals)
    binding = NumericBinding({k: v for k, v in vals.items() if k != "m"})
    display = _eta_c_dy() if row == "lambda = 0, a = b^2" else MatrixOneForm.zero()
    free = ("c",) if row == "lambda = 0, a = b^2" else ()
    gens = [_poly_generator("g", phi, binding, closed, formula)]
    return _model(
        Family.HOPF_PRIMARY, row, CoverDomain.C2_MINUS_ORIGIN, gens, vals, binding, display, free,
        ("0 < |a| <= |b| < 1", "(a - b^m)*lambda = 0"), (1 + 0j, 1 + 0j),
    )


def _hopf_secondary(params: Mapping) -> SurfaceModel:
    vals = _hopf_values(params)
    l = _int(params.get("l", 2), "l")
    k1 = _int(params.get("k1", 1), "k1")
    k2 = _int(params.get("k2", 1), "k2")
    if l < 1:
        raise InvalidParameters("l must be a positive integer")
    for k in (k1, k2):
        if math.gcd(k, l) != 1:
            raise InvalidParameters("eps1, eps2 must be primitive l-th roots of unity (gcd(k, l) = 1)")
    eps1, eps2 = cmath.exp(2j * math.pi * k1 / l), cmath.exp(2j * math.pi * k2 / l)
    vals.update(l=l, k1=k1, k2=k2)
    row_g, phi_g, closed_g, formula_g = _hopf_contraction(vals)
    if abs(vals["lam"]) > 0 and (k1 - k2 * vals["m"]) % l:
        raise InvalidParameters("(eps1 - eps2^m)*lambda = 0 violated")
    binding = NumericBinding({"a": vals["a"], "b": vals["b"], "lam": vals["lam"], "c": vals["c"], "eps1": eps1, "eps2": eps2})
    e1, e2 = parameter("eps1"), parameter("eps2")
    if abs(vals["lam"]) > 0:
        row = "lambda != 0, m = 1"
        phi_e, closed_e, formula_e = PolyMap(e2 * X, e2 * Y), [[eps2, 0], [0, eps1]], "z*eps2/eps1"
    elif (k1 - 2 * k2) % l == 0:
        row = "lambda = 0, eps1 = eps2^2"
        phi_e, closed_e, formula_e = PolyMap(e2**2 * X, e2 * Y), [[1, 0], [0, eps2]], "z/eps2"
    else:
        row = "lambda = 0, eps1 != eps2^2"
        phi_e, closed_e, formula_e = PolyMap(e1 * X, e2 * Y), [[eps2, 0], [0, eps1]], "z*eps2/eps1"
    # the c-term survives only when both generators admit it
    with_c = row == "lambda = 0, eps1 = eps2^2" and row_g == "lambda = 0, a = b^2"
    display = _eta_c_dy() if with_c else MatrixOneForm.zero()
    gens = [
        _poly_generator("g", phi_g, binding, closed_g, formula_g),
        _poly_generator("e", phi_e, binding, closed_e, formula_e),
    ]
    return _model(
        Family.HOPF_SECONDARY, row, CoverDomain.C2_MINUS_ORIGIN, gens, vals, binding, display, ("c",) if with_c else (),
        ("0 < |a| <= |b| < 1", "(a - b^m)*lambda = 0", "eps_j primitive l-th roots of unity",
         "(eps1 - eps2^m)*lambda = 0", "free action of the group (not verified)"),
        (1 + 0j, 1 + 0j),
    )


PLASTIC_MATRIX = ((0, 0, 1), (1, 0, 1), (0, 1, 0))


def _integer_matrix(v, n, name) -> np.ndarray:
    m = np.array(v)
    if m.shape != (n, n) or not np.all(np.equal(np.mod(m, 1), 0)):
        raise InvalidParameters(f"{name} must be an integer {n}x{n} matrix")
    m = m.astype(int)
    if round(np.linalg.det(m)) != 1:
        raise InvalidParameters(f"{name} must have determinant 1")
    return m


def _inoue_sm(params: Mapping) -> SurfaceModel:
    mat = _integer_matrix(params.get("M", PLASTIC_MATRIX), 3, "M")
    w, v = np.linalg.eig(mat.astype(float))
    real = [i for i in range(3) if abs(w[i].imag) < 1e-12]
    if len(real) != 1 or w[real[0]].real <= 1:
        raise InvalidParameters("M needs one real eigenvalue alpha > 1 and a non-real pair")
    ia = real[0]
    ib = next(i for i in range(3) if w[i].imag > 1e-12)
    alpha, beta = float(w[ia].real), complex(w[ib])
    avec = np.real(v[:, ia])
    avec = avec / np.linalg.norm(avec) * (1 if avec[np.argmax(np.abs(avec))] > 0 else -1)
    bvec = v[:, ib] / v[np.argmax(np.abs(v[:, ib])), ib]
    vals = {"M": mat.tolist(), "alpha": alpha, "beta": beta}
    for i in range(3):
        vals[f"a{i + 1}"] = float(avec[i])
        vals[f"b{i + 1}"] = complex(bvec[i])
    binding = NumericBinding({k: v for k, v in vals.items() if k != "M"})
    gens = [
        _poly_generator(
            "gamma0", PolyMap(parameter("alpha") * X, parameter("beta") * Y), binding,
            [[beta, 0], [0, alpha]], "beta*z/alpha",
        )
    ]
    for i in range(1, 4):
        phi = PolyMap(X + parameter(f"a{i}"), Y + parameter(f"b{i}"))
        gens.append(_poly_generator(f"gamma{i}", phi, binding, np.eye(2), "z"))
    return _model(
        Family.INOUE_SM, "S_M", CoverDomain.H_X_C, gens, vals, binding, MatrixOneForm.zero(), (),
        ("M in SL(3, Z)", "eigenvalues alpha > 1, beta != conj(beta)"), (1j, 0j),
    )


def _inoue_splus(params: Mapping) -> SurfaceModel:
    n = _integer_matrix(params.get("N", ((2, 1), (1, 1))), 2, "N")
    w, v = np.linalg.eig(n.astype(float))
    if np.any(np.abs(w.imag) > 1e-12) or max(w.real) <= 1:
        raise InvalidParameters("N must be diagonalizable over R with eigenvalues alpha > 1, 1/alpha")
    ia, ib = (0, 1) if w[0].real > w[1].real else (1, 0)
    alpha = float(w[ia].real)
    a = np.real(v[:, ia])
    b = np.real(v[:, ib])
    a = a * (1 if a[0] >= 0 else -1)
    b = b * (1 if b[0] >= 0 else -1)
    r = _int(params.get("r", 1), "r")
    if r == 0:
        raise InvalidParameters("r must be a nonzero integer")
    p, q = _int(params.get("p", 0), "p"), _int(params.get("q", 0), "q")
    t = _c(params.get("t", 1))
    cross = b[0] * a[1] - b[1] * a[0]
    e = np.array([
        0.5 * n[i, 0] * (n[i, 0] - 1) * a[0] * b[0] + 0.5 * n[i, 1] * (n[i, 1] - 1) * a[1] * b[1] + n[i, 0] * n[i, 1] * b[0] * a[1]
        for i in range(2)
    ])
    rhs = e + cross / r * np.array([p, q])
    # (c1, c2) = (c1, c2) N^t + rhs  <=>  (I - N) c^t = rhs^t
    cvec = np.linalg.solve(np.eye(2) - n, rhs)
    vals = {"N": n.tolist(), "p": p, "q": q, "r": r, "t": t, "alpha": alpha,
            "a1": float(a[0]), "a2": float(a[1]), "b1": float(b[0]), "b2": float(b[1]),
            "c1": float(cvec[0]), "c2": float(cvec[1]), "s3": float(cross / r)}
    binding = NumericBinding({k: v for k, v in vals.items() if k not in ("N", "p", "q", "r")})
    P = parameter
    gens = [
        _poly_generator("gamma0", PolyMap(P("alpha") * X, Y + P("t")), binding, [[1, 0], [0, alpha]], "z/alpha"),
        _poly_generator("gamma1", PolyMap(X + P("a1"), Y + P("b1") * X + P("c1")), binding,
                        [[1, 0], [b[0], 1]], "z/(1 + b1*z)"),
        _poly_generator("gamma2", PolyMap(X + P("a2"), Y + P("b2") * X + P("c2")), binding,
                        [[1, 0], [b[1], 1]], "z/(1 + b2*z)"),
        _poly_generator("gamma3", PolyMap(X, Y + P("s3")), binding, np.eye(2), "z"),
    ]
    return _model(
        Family.INOUE_SPLUS, "S+", CoverDomain.H_X_C, gens, vals, binding, MatrixOneForm.zero(), (),
        ("N in SL(2, Z) with real eigenvalues alpha > 1, 1/alpha", "r != 0", "c solves the lattice equation"),
        (1j, 0j),
    )


def _elliptic(params: Mapping) -> SurfaceModel:
    gm = np.array(params.get("gamma", ((1, 0), (1, 1))), dtype=float)
    if gm.shape != (2, 2) or abs(np.linalg.det(gm) - 1) > 1e-12:
        raise InvalidParameters("gamma must be a real 2x2 matrix of determinant 1")
    alpha = _c(params.get("alpha", 1))
    (ga, gb), (gc, gd) = gm
    f, h = function_of_y("f"), function_of_y("h")
    display = MatrixOneForm(((DX, DY * f), (DY, DX + DY * h)))
    # automorphic data for gamma = [[1, 0], [1, 1]]; other matrices need their own f, h
    binding = NumericBinding({
        "h": params.get("h_func", lambda y: 1 / y**2),
        "f": params.get("f_func", lambda y: alpha / y**4 - 1 / y**3),
    })

    def numeric_map(p):
        x, y = complex(p[0]), complex(p[1])
        return (x + cmath.log(gc * y + gd), (ga * y + gb) / (gc * y + gd))

    def numeric_jacobian(p):
        y = complex(p[1])
        s = gc * y + gd
        return np.array([[1, gc / s], [0, 1 / s**2]], dtype=complex)

    gens = [DeckGenerator("gamma", None, numeric_map, numeric_jacobian)]
    vals = {"gamma": gm.tolist(), "alpha": alpha}
    samples = ((0j, 1j), (0.3 + 0.1j, 0.5 + 2j), (-1 + 0j, -0.7 + 1.3j))
    return _model(
        Family.ELLIPTIC, "genus >= 2", CoverDomain.C_X_H, gens, vals, binding, display, ("f", "h"),
        ("h(gamma y) = h(y)(cy+d)^2", "f(gamma y) = f(y)(cy+d)^4 + c h(y)(cy+d)^3"), (0j, 1j),
        affine=AffineConnection(display), sample_points=samples,
    )


_BUILDERS = {
    Family.TORUS: _torus,
    Family.KODAIRA: _kodaira,
    Family.HOPF_PRIMARY: _hopf_primary,
    Family.HOPF_SECONDARY: _hopf_secondary,
    Family.INOUE_SM: _inoue_sm,
    Family.INOUE_SPLUS: _inoue_splus,
    Family.ELLIPTIC: _elliptic,
}


FAMILY_INFO = {
    Family.TORUS: {
        "cover": "C2",
        "params": {"type": "1 | 2 | 3", "a": "complex", "b": "complex", "c": "complex",
                   "e, f, g, h": "conjugator C entries, det C != 0", "k1..k4, l1..l4": "lattice periods"},
        "connection_parameters": ["a", "b", "c", "e", "f", "g", "h"],
        "tables": ["type 1", "type 2", "type 3"],
    },
    Family.KODAIRA: {
        "cover": "C2",
        "params": {"a": "complex", "b": "complex (a*tau2 - b = m*tau1)", "tau1": "complex", "tau2": "complex",
                   "m": "positive integer", "c": "complex", "e": "complex", "h": "complex (flat iff h = e)"},
        "connection_parameters": ["c", "e", "h"],
        "tables": ["g3: z - a - c", "g4: z - b - c*tau2"],
    },
    Family.HOPF_PRIMARY: {
        "cover": "C2-minus-origin",
        "params": {"a": "0 < |a| <= |b|", "b": "|b| < 1", "lam": "complex", "m": "positive integer", "c": "complex"},
        "connection_parameters": ["c"],
        "tables": ["lambda != 0, m = 1", "lambda = 0, a != b^2", "lambda = 0, a = b^2"],
    },
    Family.HOPF_SECONDARY: {
        "cover": "C2-minus-origin",
        "params": {"a": "0 < |a| <= |b|", "b": "|b| < 1", "lam": "complex", "m": "positive integer", "c": "complex",
                   "l": "positive integer", "k1": "eps1 = exp(2 pi i k1/l)", "k2": "eps2 = exp(2 pi i k2/l)"},
        "connection_parameters": ["c"],
        "tables": ["lambda != 0, m = 1", "lambda = 0, eps1 != eps2^2", "lambda = 0, eps1 = eps2^2"],
    },
    Family.INOUE_SM: {
        "cover": "HxC",
        "params": {"M": "SL(3, Z) matrix, one real eigenvalue > 1"},
        "connection_parameters": [],
        "tables": ["gamma0: beta*z/alpha"],
    },
    Family.INOUE_SPLUS: {
        "cover": "HxC",
        "params": {"N": "SL(2, Z) matrix with real eigenvalues", "p": "integer", "q": "integer",
                   "r": "nonzero integer", "t": "complex"},
        "connection_parameters": [],
        "tables": ["gamma0: z/alpha", "gamma_i: z/(1 + b_i z)"],
    },
    Family.ELLIPTIC: {
        "cover": "CxH",
        "params": {"gamma": "SL(2, R) matrix", "alpha": "constant in the sample automorphic f"},
        "connection_parameters": ["f", "h"],
        "tables": [],
    },
}


def build_surface(family, params: Mapping | None = None) -> SurfaceModel:
    """Build a catalog model; ``params`` override the family defaults."""
    family = Family(family)
    return _BUILDERS[family](dict(params or {}))


def surface_from_descriptor(obj: Mapping) -> SurfaceModel:
    if not isinstance(obj, Mapping) or "family" not in obj:
        raise InvalidParameters("descriptor needs a 'family' field")
    try:
        family = Family(obj["family"])
    except ValueError:
        raise InvalidParameters(f"unknown family {obj['family']!r}") from None
    s = build_surface(family, obj.get("params", {}))
    bp = obj.get("basepoint")
    if bp is not None and len(bp) == 4:
        p = (complex(bp[0], bp[1]), complex(bp[2], bp[3]))
        if not s.cover_domain.contains(p):
            raise InvalidParameters("basepoint outside the cover domain")
        s = SurfaceModel(**{**s.__dict__, "basepoint": p})
    return s


def connection_family(s: SurfaceModel) -> tuple[RiccatiConnection, RiccatiForm]:
    return s.theta, s.omega


# --------------------------------------------------------------------------
# checks


@dataclass(frozen=True)
class DescentResult:
    holds: bool
    residual: MatrixOneForm | None
    numeric_only: bool = False
    max_error: float | None = None

    def __bool__(self):
        return self.holds


def descends(theta, g: DeckGenerator, binding: NumericBinding | None = None, points: Sequence = ()) -> DescentResult:
    """Whether θ is invariant under the deck transformation ``g``.

    Exact when ``g`` is a polynomial map; otherwise, or when the composition
    leaves the coefficient field, the cocycle is compared numerically at
    ``points`` using ``binding``.
    """
    theta = theta.theta if isinstance(theta, (RiccatiConnection, AffineConnection)) else theta
    if g.map is not None:
        try:
            residual = cocycle_transform(theta, g.map).theta - theta
            return DescentResult(residual.is_zero(), residual)
        except NonRepresentableComposition:
            pass
    if binding is None or not points:
        raise NonRepresentableComposition(f"{g.label} needs a numeric binding and sample points")
    err = max(_numeric_cocycle_error(theta, g, binding, p) for p in points)
    return DescentResult(err < 1e-6, None, numeric_only=True, max_error=err)


def _theta_at(theta: MatrixOneForm, p, binding) -> np.ndarray:
    """Array [k, i, j]: k = 0 for dx, 1 for dy."""
    vals = evaluate(theta, p, binding)
    return np.array([[[vals[i][j][k] for j in range(2)] for i in range(2)] for k in range(2)], dtype=complex)


def _numeric_cocycle_error(theta: MatrixOneForm, g: DeckGenerator, binding, p, step=1e-5) -> float:
    q = g(p)
    jac = g.numeric_jacobian(p)
    at_q = _theta_at(theta, q, binding)
    pulled = np.einsum("kij,kl->lij", at_q, jac)
    ginv = np.linalg.inv(jac)
    out = np.empty_like(pulled)
    for k in range(2):
        dp = [0j, 0j]
        dp[k] = step
        plus = g.numeric_jacobian((p[0] + dp[0], p[1] + dp[1]))
        minus = g.numeric_jacobian((p[0] - dp[0], p[1] - dp[1]))
        dg = (plus - minus) / (2 * step)
        mc = ginv @ dg
        out[k] = ginv @ pulled[k] @ jac + mc - 0.5 * np.trace(mc) * np.eye(2)
    here = _theta_at(theta, p, binding)
    return float(np.max(np.abs(out - here)))


@dataclass(frozen=True)
class CheckEntry:
    name: str
    ok: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


@dataclass(frozen=True)
class StructureReport:
    family: str
    variant: str
    entries: tuple[CheckEntry, ...]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> list[CheckEntry]:
        return [e for e in self.entries if not e.ok]

    def to_json(self) -> dict:
        return {"family": self.family, "variant": self.variant, "ok": self.ok, "checks": [e.to_json() for e in self.entries]}


def _grid_str(grid) -> str:
    return "[" + ", ".join("[" + ", ".join(str(e.cxy) for e in row) + "]" for row in grid) + "]"


def _grid_zero(grid) -> bool:
    return all(e.is_zero() for row in grid for e in row)


def structure_check(s: SurfaceModel) -> StructureReport:
    """Zero trace, zero curvature and integrability of the catalog connection,
    symbolically in all its free parameters."""
    entries = []
    tr = trace(s.theta)
    entries.append(CheckEntry("trace", tr.is_zero(), str(tr)))
    k = curvature(s.theta)
    entries.append(CheckEntry("curvature", _grid_zero(k), _grid_str(k)))
    fr = frobenius_residual(s.omega)
    entries.append(CheckEntry("frobenius", all(t.is_zero() for t in fr), ", ".join(str(t.cxy) for t in fr)))
    kh = distribution_curvature(s.omega)
    entries.append(CheckEntry("parallelizable", kh.is_zero(), str(kh.cxy)))
    if s.family is Family.TORUS:
        a1, a2 = s.display_theta.dx_part(), s.display_theta.dy_part()
        comm = [
            [sum((a1[i][m] * a2[m][j] - a2[i][m] * a1[m][j] for m in range(2)), ZERO) for j in range(2)]
            for i in range(2)
        ]
        ok = all(v.is_zero() for row in comm for v in row)
        entries.append(CheckEntry("commutation A1 A2 = A2 A1", ok, str([[str(v) for v in row] for row in comm])))
    if s.affine is not None:
        t = torsion(s.affine)
        entries.append(CheckEntry("affine torsion", all(v.is_zero() for v in t), str(tuple(str(v) for v in t))))
        ka = curvature(s.affine)
        entries.append(CheckEntry("affine curvature", _grid_zero(ka), _grid_str(ka)))
        induced = affine_to_riccati(s.affine)
        entries.append(CheckEntry("induced foliation", induced == s.omega, str(induced)))
    return StructureReport(s.family.value, s.variant, tuple(entries))


def check_surface(s: SurfaceModel) -> StructureReport:
    """:func:`structure_check` plus descent under every generator."""
    report = structure_check(s)
    entries = list(report.entries)
    for g in s.generators:
        res = descends(s.theta, g, s.binding, s.sample_points or (s.basepoint,))
        if res.numeric_only:
            detail = f"numeric spot-check, max error {res.max_error:.2e}"
        else:
            detail = "" if res.holds else str(res.residual)
        entries.append(CheckEntry(f"descends under {g.label}", res.holds, detail))
    return StructureReport(report.family, report.variant, tuple(entries))


# --------------------------------------------------------------------------
# paths


def _dist_to_origin(p, q) -> float:
    a = np.array([p[0].real, p[0].imag, p[1].real, p[1].imag])
    b = np.array([q[0].real, q[0].imag, q[1].real, q[1].imag])
    d = b - a
    t = 0.0 if not d.any() else min(1.0, max(0.0, -float(a @ d) / float(d @ d)))
    return float(np.linalg.norm(a + t * d))


def _orthogonal(p, q, scale) -> tuple[complex, complex]:
    a = np.array([p[0].real, p[0].imag, p[1].real, p[1].imag])
    b = np.array([q[0].real, q[0].imag, q[1].real, q[1].imag])
    basis = np.linalg.svd(np.vstack([a, b]))[2]
    w = basis[-1] * scale
    return (complex(w[0], w[1]), complex(w[2], w[3]))


def _segment_ok(domain: CoverDomain, p, q, depth: int, threshold: float) -> bool:
    if domain is CoverDomain.C2_MINUS_ORIGIN:
        return _dist_to_origin(p, q) >= threshold
    # the other domains are convex; sampling confirms the endpoints and interior
    for k in range(depth + 1):
        t = k / depth
        pt = (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))
        if not domain.contains(pt):
            return False
    return True


def generator_path(s: SurfaceModel, g: DeckGenerator, max_depth: int = 20) -> Path:
    """Piecewise-linear path from the basepoint to its image under ``g``."""
    p = tuple(complex(v) for v in s.basepoint)
    q = tuple(complex(v) for v in g(p))
    if not (s.cover_domain.contains(p) and s.cover_domain.contains(q)):
        raise PathNotFound(f"endpoints of {g.label} are not in {s.cover_domain.value}")
    if max(abs(a - b) for a, b in zip(p, q)) == 0:
        # the generator fixes the basepoint: use a contractible out-and-back loop
        return Path((p, (p[0] + 0.5, p[1]), p))
    threshold = 1e-6 * max(float(np.linalg.norm(np.abs(p))), 1e-300)
    waypoints = [p, q]
    for _ in range(max_depth):
        bad = [i for i in range(len(waypoints) - 1)
               if not _segment_ok(s.cover_domain, waypoints[i], waypoints[i + 1], 16, threshold)]
        if not bad:
            return Path(tuple(waypoints))
        if s.cover_domain is not CoverDomain.C2_MINUS_ORIGIN:
            break
        i = bad[0]
        a, b = waypoints[i], waypoints[i + 1]
        scale = max(float(np.linalg.norm(np.abs(a))), float(np.linalg.norm(np.abs(b))))
        waypoints.insert(i + 1, _orthogonal(a, b, scale))
    raise PathNotFound(f"no admissible path for {g.label} within depth {max_depth}")


# --------------------------------------------------------------------------
# random parameter draws


def _polar(rng, rmin, rmax):
    return rng.uniform(rmin, rmax) * cmath.exp(2j * math.pi * rng.uniform())


def random_params(family, rng: np.random.Generator, variant: str | None = None) -> dict:
    """Parameters drawn from the admissible region of ``family``.

    ``variant`` selects a table row: torus "1", "2", "3"; Hopf rows
    "lambda", "generic", "resonant".
    """
    family = Family(family)
    r = lambda: complex(round(rng.uniform(-1, 1), 3), round(rng.uniform(-1, 1), 3))  # noqa: E731
    if family is Family.TORUS:
        kind = int(variant or rng.integers(1, 4))
        e, f, g, h = r(), r(), r(), r()
        while abs(e * h - f * g) < 0.1:
            e, f, g, h = r(), r(), r(), r()
        return {"type": kind, "a": r(), "b": r(), "c": r(), "e": e, "f": f, "g": g, "h": h}
    if family is Family.KODAIRA:
        return {"a": r(), "tau1": complex(r().real, rng.uniform(0.5, 1.5)), "tau2": complex(r().real, rng.uniform(0.5, 1.5)),
                "m": int(rng.integers(1, 4)), "c": r()}
    if family in (Family.HOPF_PRIMARY, Family.HOPF_SECONDARY):
        b = _polar(rng, 0.3, 0.9)
        row = variant or ["lambda", "generic", "resonant"][int(rng.integers(0, 3))]
        if row == "lambda":
            out = {"a": b, "b": b, "lam": r(), "m": 1}
        elif row == "resonant":
            out = {"a": b * b, "b": b, "lam": 0, "c": r()}
        else:
            a = _polar(rng, 0.3, abs(b))
            while abs(a - b * b) < 1e-3:
                a = _polar(rng, 0.3, abs(b))
            out = {"a": a, "b": b, "lam": 0}
        if family is Family.HOPF_SECONDARY:
            l = int(rng.choice([3, 5])) if row == "resonant" else int(rng.integers(2, 7))
            units = [k for k in range(1, l) if math.gcd(k, l) == 1]
            k2 = int(rng.choice(units))
            if row == "lambda":
                k1 = k2
            elif row == "resonant":
                k1 = (2 * k2) % l
            else:
                k1 = int(rng.choice([k for k in units if (k - 2 * k2) % l]))
            out.update(l=l, k1=k1, k2=k2)
        return out
    if family is Family.INOUE_SPLUS:
        return {"p": int(rng.integers(-2, 3)), "q": int(rng.integers(-2, 3)), "r": int(rng.choice([-2, -1, 1, 2])), "t": r()}
    return {}
