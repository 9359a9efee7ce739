"""Riccati and affine connections on a chart of a complex surface.

A Riccati connection is a 2x2 matrix of 1-forms θ.  Its reduced part is
trace-free and corresponds to the Riccati distribution

    ω = dz + γ + δ z + η z²,      θ = [[-δ/2, -η], [γ, δ/2]],

on the projectivized tangent bundle, with fiber coordinate z = z₂/z₁.  An
affine connection ∇Z = dZ + θ̃Z induces ω by the equation ∇ = 0 read in that
fiber coordinate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Mapping

from sympy import QQ
from sympy.polys.rings import ring as _make_ring

from .forms import (
    ZERO1,
    FormError,
    MatrixOneForm,
    OneForm,
    PolyMap,
    RationalExpr,
    TwoForm,
    d_oneform,
    d_scalar,
    mat_d,
    mat_wedge,
    pullback,
    wedge,
)

__all__ = [
    "RiccatiConnection",
    "AffineConnection",
    "RiccatiForm",
    "CoordinateChange",
    "NotReduced",
    "HasTorsion",
    "trace",
    "reduce",
    "curvature",
    "is_flat",
    "cocycle_transform",
    "riccati_form_from_theta",
    "theta_from_riccati_form",
    "frobenius_residual",
    "is_foliation",
    "connection_form",
    "distribution_curvature",
    "is_parallelizable",
    "torsion",
    "affine_to_riccati",
    "riccati_to_affine",
    "curvature_identities",
    "CurvatureIdentityReport",
    "FormalChernCheck",
    "chern_identity_check",
]


class NotReduced(FormError):
    """A trace-free matrix was required."""


class HasTorsion(FormError):
    pass


TwoFormGrid = list[list[TwoForm]]


@dataclass(frozen=True, eq=False)
class RiccatiConnection:
    theta: MatrixOneForm

    def __eq__(self, other):
        if not isinstance(other, RiccatiConnection):
            return NotImplemented
        return self.theta == other.theta

    __hash__ = None

    @property
    def is_reduced(self) -> bool:
        return trace(self).is_zero()

    def to_json(self) -> dict:
        return {"theta": self.theta.to_json()}

    @classmethod
    def from_json(cls, obj, atoms: Mapping | None = None) -> "RiccatiConnection":
        return cls(MatrixOneForm.from_json(obj["theta"], atoms))


@dataclass(frozen=True, eq=False)
class AffineConnection:
    theta: MatrixOneForm

    def __eq__(self, other):
        if not isinstance(other, AffineConnection):
            return NotImplemented
        return self.theta == other.theta

    __hash__ = None

    def to_json(self) -> dict:
        return {"theta": self.theta.to_json()}

    @classmethod
    def from_json(cls, obj, atoms: Mapping | None = None) -> "AffineConnection":
        return cls(MatrixOneForm.from_json(obj["theta"], atoms))


@dataclass(frozen=True, eq=False)
class RiccatiForm:
    """The distribution ``dz + gamma + delta z + eta z^2``."""

    gamma: OneForm = ZERO1
    delta: OneForm = ZERO1
    eta: OneForm = ZERO1

    def __eq__(self, other):
        if not isinstance(other, RiccatiForm):
            return NotImplemented
        return self.gamma == other.gamma and self.delta == other.delta and self.eta == other.eta

    __hash__ = None

    def is_trivial(self) -> bool:
        """True for ``ω = dz``."""
        return self.gamma.is_zero() and self.delta.is_zero() and self.eta.is_zero()

    def __str__(self):
        parts = ["dz"]
        for form, suffix in ((self.gamma, ""), (self.delta, "*z"), (self.eta, "*z^2")):
            for coeff, base in ((form.cx, "dx"), (form.cy, "dy")):
                if not coeff.is_zero():
                    parts.append(f"({coeff}){suffix}*{base}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {"gamma": self.gamma.to_json(), "delta": self.delta.to_json(), "eta": self.eta.to_json()}

    @classmethod
    def from_json(cls, obj, atoms: Mapping | None = None) -> "RiccatiForm":
        return cls(*(OneForm.from_json(obj[k], atoms) for k in ("gamma", "delta", "eta")))


@dataclass(frozen=True, eq=False)
class CoordinateChange:
    """A polynomial change of coordinates with its Jacobian matrix g."""

    phi: PolyMap
    jacobian: list[list[RationalExpr]] = field(init=False)
    jac_det: RationalExpr = field(init=False)

    def __post_init__(self):
        jac = self.phi.jacobian()
        det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0]
        if det.is_zero():
            raise FormError(f"degenerate coordinate change {self.phi}")
        object.__setattr__(self, "jacobian", jac)
        object.__setattr__(self, "jac_det", det)

    def inverse_jacobian(self) -> list[list[RationalExpr]]:
        (a, b), (c, d) = self.jacobian
        k = self.jac_det.inverse()
        return [[d * k, -b * k], [-c * k, a * k]]


def _theta(c) -> MatrixOneForm:
    if isinstance(c, (RiccatiConnection, AffineConnection)):
        return c.theta
    if isinstance(c, MatrixOneForm):
        return c
    raise TypeError(f"expected a connection, got {type(c).__name__}")


def _change(g) -> CoordinateChange:
    if isinstance(g, CoordinateChange):
        return g
    if isinstance(g, PolyMap):
        return CoordinateChange(g)
    raise TypeError(f"expected a coordinate change, got {type(g).__name__}")


# --------------------------------------------------------------------------
# basic operations


def trace(c) -> OneForm:
    return _theta(c).trace()


def reduce(c) -> RiccatiConnection:
    """``θ - (tr θ / 2) I``."""
    theta = _theta(c)
    return RiccatiConnection(theta - MatrixOneForm.scalar(theta.trace() / 2))


def curvature(c) -> TwoFormGrid:
    """``dθ + θ∧θ`` entry-wise."""
    theta = _theta(c)
    d, w = mat_d(theta), mat_wedge(theta, theta)
    return [[d[i][j] + w[i][j] for j in range(2)] for i in range(2)]


def is_flat(c) -> bool:
    return all(e.is_zero() for row in curvature(c) for e in row)


def _dmatrix(g) -> MatrixOneForm:
    return MatrixOneForm(tuple(tuple(d_scalar(v) for v in row) for row in g))


def cocycle_transform(c, g) -> RiccatiConnection:
    """Change charts along ``g``.

    ``c`` is the connection in the target chart α and ``g`` the change φ from
    the source chart β to α with Jacobian g.  Returns the connection in the
    source chart,

        θ_β = g⁻¹ (φ*θ_α) g + g⁻¹ dg - ½ tr(g⁻¹ dg) I,

    which is the rule θ_α = g θ_β g⁻¹ - dg g⁻¹ + ½ tr(dg g⁻¹) I solved for θ_β.
    Transforming by φ and then by φ⁻¹ returns the original matrix.
    """
    g = _change(g)
    ginv = g.inverse_jacobian()
    pulled = pullback(_theta(c), g.phi)
    conj = pulled.right(g.jacobian).left(ginv)
    maurer = _dmatrix(g.jacobian).left(ginv)
    # tr(g⁻¹dg) = d(det g)/det g
    log_det = d_scalar(g.jac_det) / g.jac_det
    return RiccatiConnection(conj + maurer - MatrixOneForm.scalar(log_det / 2))


# --------------------------------------------------------------------------
# Riccati distributions


def riccati_form_from_theta(c) -> RiccatiForm:
    """Read ``(γ, δ, η) = (θ₂₁, 2θ₂₂, -θ₁₂)`` off a trace-free matrix."""
    theta = _theta(c)
    if not theta.trace().is_zero():
        raise NotReduced(f"trace {theta.trace()} is not zero")
    return RiccatiForm(theta[1, 0], theta[1, 1] * 2, -theta[0, 1])


def theta_from_riccati_form(r: RiccatiForm) -> RiccatiConnection:
    half = r.delta / 2
    return RiccatiConnection(MatrixOneForm(((-half, -r.eta), (r.gamma, half))))


def frobenius_residual(r: RiccatiForm) -> tuple[TwoForm, TwoForm, TwoForm]:
    """Coefficients of z⁰, z¹, z² in dω restricted to ω = 0.

    Substituting dz = -(γ + δz + ηz²) into dω gives

        (dγ - γ∧δ) + (dδ - 2γ∧η) z + (dη - δ∧η) z²,

    and ω∧dω = dz∧(this), so ω is integrable iff all three vanish.
    """
    g, d, e = r.gamma, r.delta, r.eta
    return (
        d_oneform(g) - wedge(g, d),
        d_oneform(d) - wedge(g, e) * 2,
        d_oneform(e) - wedge(d, e),
    )


def is_foliation(r: RiccatiForm) -> bool:
    return all(t.is_zero() for t in frobenius_residual(r))


def connection_form(r: RiccatiForm) -> OneForm:
    """``κ = (δ₁/2 - γ₂) dx + (η₁ - δ₂/2) dy``."""
    return OneForm(r.delta.cx / 2 - r.gamma.cy, r.eta.cx - r.delta.cy / 2)


def distribution_curvature(r: RiccatiForm) -> TwoForm:
    return d_oneform(connection_form(r))


def is_parallelizable(r: RiccatiForm) -> bool:
    return distribution_curvature(r).is_zero()


# --------------------------------------------------------------------------
# affine connections


def torsion(a) -> tuple[RationalExpr, RationalExpr]:
    """Components of T(∂x, ∂y) = ∇_∂x ∂y - ∇_∂y ∂x in the basis (∂x, ∂y)."""
    t = _theta(a)
    return (t[0, 1].cx - t[0, 0].cy, t[1, 1].cx - t[1, 0].cy)


def affine_to_riccati(a) -> RiccatiForm:
    """``ω = dz + θ₂₁ + (θ₂₂ - θ₁₁) z - θ₁₂ z²``."""
    t = _theta(a)
    return RiccatiForm(t[1, 0], t[1, 1] - t[0, 0], -t[0, 1])


def riccati_to_affine(r: RiccatiForm) -> AffineConnection:
    """The torsion-free lift ``θ(r) - κ I``."""
    theta = theta_from_riccati_form(r).theta
    return AffineConnection(theta - MatrixOneForm.scalar(connection_form(r)))


@dataclass(frozen=True)
class CurvatureIdentityReport:
    trace_curvature: TwoForm
    distribution_curvature: TwoForm
    affine_curvature: TwoFormGrid
    riccati_curvature: TwoFormGrid
    trace_residual: TwoForm
    curvature_residual: TwoFormGrid

    @property
    def holds(self) -> bool:
        return self.trace_residual.is_zero() and all(e.is_zero() for row in self.curvature_residual for e in row)


def curvature_identities(a) -> CurvatureIdentityReport:
    """Check ``d tr θ̃ = -2 K(H)`` and ``K_∇ = W - K(H) I`` for a torsion-free
    affine connection, W being the curvature of the induced reduced Riccati
    connection."""
    if not all(t.is_zero() for t in torsion(a)):
        raise HasTorsion(f"torsion {tuple(str(t) for t in torsion(a))}")
    t = _theta(a)
    r = affine_to_riccati(a)
    k_tr = d_oneform(t.trace())
    k_h = distribution_curvature(r)
    k_nabla = curvature(t)
    w = curvature(theta_from_riccati_form(r))
    residual = [
        [k_nabla[i][j] - w[i][j] + (k_h if i == j else TwoForm()) for j in range(2)]
        for i in range(2)
    ]
    return CurvatureIdentityReport(k_tr, k_h, k_nabla, w, k_tr + k_h * 2, residual)


# --------------------------------------------------------------------------
# the Chern-form identity, as a polynomial identity


@dataclass(frozen=True)
class FormalChernCheck:
    """Per-k residuals of C_k(B + (η/n) I) = Σ_j C(n-j, k-j) C_j(B) (η/n)^(k-j),
    plus the closed form of R₂ for a trace-free B."""

    n: int
    k_max: int
    residuals: dict[int, str]
    r2_residual: str

    @property
    def holds(self) -> bool:
        return all(r == "0" for r in self.residuals.values()) and self.r2_residual == "0"

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k_max": self.k_max,
            "identities": [{"k": k, "residual": r, "ok": r == "0"} for k, r in sorted(self.residuals.items())],
            "r2_residual": self.r2_residual,
            "ok": self.holds,
        }


def _elementary(matrix, n, ring, t) -> list:
    """C_0..C_n with det(tI + M) = Σ C_k t^(n-k), by Leibniz expansion."""
    total = ring.zero
    for perm in itertools.permutations(range(n)):
        sign = 1
        for i in range(n):
            for j in range(i + 1, n):
                if perm[i] > perm[j]:
                    sign = -sign
        term = ring.one * sign
        for i in range(n):
            term *= matrix[i][perm[i]] + (t if perm[i] == i else 0)
        total += term
    idx = ring.gens.index(t)
    coeffs = [ring.zero] * (n + 1)
    for monom, c in total.terms():
        k = n - monom[idx]
        coeffs[k] += ring({monom[:idx] + (0,) + monom[idx + 1 :]: c})
    return coeffs


def chern_identity_check(n: int, k_max: int | None = None) -> FormalChernCheck:
    if not 2 <= n <= 4:
        raise ValueError("n must satisfy 2 <= n <= 4")
    k_max = n if k_max is None else k_max
    if not 0 <= k_max <= n:
        raise ValueError("k_max must satisfy 0 <= k_max <= n")
    names = [f"b{i}{j}" for i in range(n) for j in range(n)] + ["eta", "t"]
    ring, *gens = _make_ring(names, QQ)
    b = [gens[i * n : (i + 1) * n] for i in range(n)]
    eta, t = gens[-2], gens[-1]
    shift = eta * QQ(1, n)
    a = [[b[i][j] + (shift if i == j else 0) for j in range(n)] for i in range(n)]
    c_a = _elementary(a, n, ring, t)
    c_b = _elementary(b, n, ring, t)
    residuals = {}
    for k in range(k_max + 1):
        rhs = sum((c_b[j] * comb(n - j, k - j) * shift ** (k - j) for j in range(k + 1)), ring.zero)
        residuals[k] = str(c_a[k] - rhs)
    # trace-free B: R_2 = c_2 - (n-1)/(2n) c_1^2 with c_k = C_k(A), R_k = C_k(B)
    last = b[n - 1][n - 1]
    tf = -sum((b[i][i] for i in range(n - 1)), ring.zero)
    c1 = c_a[1].compose(last, tf)
    c2 = c_a[2].compose(last, tf)
    r2 = c_b[2].compose(last, tf)
    r2_residual = c2 - c1**2 * QQ(n - 1, 2 * n) - r2
    return FormalChernCheck(n, k_max, residuals, str(r2_residual))
