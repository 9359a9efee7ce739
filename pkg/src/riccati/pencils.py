"""Pencils of foliations, their curvature, cross-ratios and 3-webs.

A foliation is stored through a slope: the leaf direction q ∂x + p ∂y is the
homogeneous pair (p, q), so the affine slope is e = p/q and the vertical
direction is (1, 0).  Its defining form is p dx - q dy, which for finite e is
the presentation e dx - dy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .connections import RiccatiForm
from .forms import (
    DX,
    DY,
    ONE,
    ZERO,
    ZERO1,
    FormError,
    OneForm,
    RationalExpr,
    TwoForm,
    as_expr,
    d_scalar,
    partial,
    wedge,
)

__all__ = [
    "Pencil",
    "FoliationSlope",
    "DegenerateWeb",
    "NotNormalized",
    "INFINITY",
    "pencil_member",
    "pencil_to_riccati",
    "pencil_curvature",
    "normal_pencil",
    "slope_of",
    "form_of",
    "cross_ratio",
    "is_constant_cross_ratio",
    "web_to_pencil",
    "member_parameter",
    "same_pencil",
]

INFINITY = math.inf


class DegenerateWeb(FormError):
    pass


class NotNormalized(FormError):
    pass


def _is_inf(t) -> bool:
    return isinstance(t, float) and math.isinf(t)


@dataclass(frozen=True, eq=False)
class FoliationSlope:
    """Slope e = p/q of the leaves; q = 0 is the vertical direction."""

    p: RationalExpr
    q: RationalExpr = ONE

    def __post_init__(self):
        object.__setattr__(self, "p", as_expr(self.p))
        object.__setattr__(self, "q", as_expr(self.q))
        if self.p.is_zero() and self.q.is_zero():
            raise DegenerateWeb("slope (0 : 0) is undefined")

    @classmethod
    def of(cls, e) -> "FoliationSlope":
        """Slope from an expression, or ``INFINITY`` for vertical leaves."""
        if _is_inf(e):
            return cls(ONE, ZERO)
        return cls(as_expr(e), ONE)

    @property
    def is_vertical(self) -> bool:
        return self.q.is_zero()

    @property
    def e(self) -> RationalExpr:
        if self.is_vertical:
            raise ZeroDivisionError("vertical slope has no affine value")
        return self.p / self.q

    def __eq__(self, other):
        if not isinstance(other, FoliationSlope):
            return NotImplemented
        return (self.p * other.q - self.q * other.p).is_zero()

    __hash__ = None

    def __str__(self):
        return "inf" if self.is_vertical else str(self.e)


def form_of(s: FoliationSlope) -> OneForm:
    """``p dx - q dy``, which annihilates q ∂x + p ∂y."""
    return OneForm(s.p, -s.q)


def slope_of(w: OneForm) -> FoliationSlope:
    """Slope of the foliation ``[w = 0]``; w = A dx + B dy has leaves B ∂x - A ∂y."""
    if w.is_zero():
        raise DegenerateWeb("the zero form defines no foliation")
    return FoliationSlope(-w.cx, w.cy)


@dataclass(frozen=True, eq=False)
class Pencil:
    """The family ``ω_t = ω₀ + t ω∞``, t in ℙ¹."""

    omega0: OneForm
    omegaInf: OneForm

    def __post_init__(self):
        if wedge(self.omega0, self.omegaInf).is_zero():
            raise DegenerateWeb("omega0 and omegaInf are not transverse")

    @property
    def transversality(self) -> TwoForm:
        return wedge(self.omega0, self.omegaInf)

    def to_json(self) -> dict:
        return {"omega0": self.omega0.to_json(), "omegaInf": self.omegaInf.to_json()}

    @classmethod
    def from_json(cls, obj, atoms=None) -> "Pencil":
        return cls(OneForm.from_json(obj["omega0"], atoms), OneForm.from_json(obj["omegaInf"], atoms))


def normal_pencil(u) -> Pencil:
    """The pencil generated by ``dx`` and ``u dy``."""
    u = as_expr(u)
    if u.is_zero():
        raise DegenerateWeb("u must be nonzero (dx and u dy must be transverse)")
    return Pencil(DX, DY * u)


def pencil_member(p: Pencil, t) -> OneForm:
    if _is_inf(t):
        return p.omegaInf
    return p.omega0 + p.omegaInf * as_expr(t)


def _normal_u(p: Pencil) -> RationalExpr:
    if not (p.omega0 == DX and p.omegaInf.cx.is_zero()):
        raise NotNormalized("expected omega0 = dx and omegaInf = u dy")
    return p.omegaInf.cy


def pencil_to_riccati(p: Pencil) -> RiccatiForm:
    """``dz + (du/u) z``, whose leaves include the sections z = -1/(t u)."""
    u = _normal_u(p)
    return RiccatiForm(ZERO1, d_scalar(u) / u, ZERO1)


def pencil_curvature(p: Pencil) -> TwoForm:
    """``-(ln u)_xy dx∧dy``."""
    u = _normal_u(p)
    ux, uy = partial(u, "x"), partial(u, "y")
    return TwoForm(-(partial(ux, "y") * u - ux * uy) / (u * u))


def _det(a: FoliationSlope, b: FoliationSlope) -> RationalExpr:
    # homogeneous form of e_a - e_b
    return a.p * b.q - b.p * a.q


def cross_ratio(e1, e2, e3, e4) -> RationalExpr:
    """``(e1 - e3)(e2 - e4) / ((e2 - e3)(e1 - e4))`` on homogeneous slopes."""
    s = [e if isinstance(e, FoliationSlope) else FoliationSlope.of(e) for e in (e1, e2, e3, e4)]
    for i in range(4):
        for j in range(i + 1, 4):
            if _det(s[i], s[j]).is_zero():
                raise DegenerateWeb(f"slopes {i + 1} and {j + 1} coincide")
    return (_det(s[0], s[2]) * _det(s[1], s[3])) / (_det(s[1], s[2]) * _det(s[0], s[3]))


def is_constant_cross_ratio(e1, e2, e3, e4) -> tuple[bool, RationalExpr | None]:
    cr = cross_ratio(e1, e2, e3, e4)
    if d_scalar(cr).is_zero():
        return True, cr
    return False, None


def web_to_pencil(e0, e1, eInf) -> Pencil:
    """The unique pencil whose members at t = 0, 1, ∞ have the given slopes.

    With F_e the form of slope e, write F_1 = λ₀ F_0 + λ∞ F_∞ (Cramer's rule)
    and take ω₀ = λ₀ F_0, ω∞ = λ∞ F_∞.
    """
    s0, s1, si = (e if isinstance(e, FoliationSlope) else FoliationSlope.of(e) for e in (e0, e1, eInf))
    for a, b in ((s0, s1), (s0, si), (s1, si)):
        if _det(a, b).is_zero():
            raise DegenerateWeb("the three slopes must be pairwise distinct")
    f0, f1, fi = form_of(s0), form_of(s1), form_of(si)
    den = wedge(f0, fi).cxy
    lam0 = wedge(f1, fi).cxy / den
    lami = wedge(f0, f1).cxy / den
    return Pencil(f0 * lam0, fi * lami)


def member_parameter(p: Pencil, w: OneForm):
    """The t with ``[w = 0] = F_t``, ``INFINITY`` for ω∞, or None if w does
    not define a member of the pencil."""
    a = wedge(w, p.omegaInf).cxy
    b = wedge(w, p.omega0).cxy
    if w.is_zero():
        return None
    if a.is_zero():
        return INFINITY
    t = -b / a
    return t if d_scalar(t).is_zero() else None


def same_pencil(p: Pencil, q: Pencil) -> bool:
    """True iff the two pencils have the same members: ω₀ and ω∞ of one are
    members of the other and so is one further member."""
    for w in (q.omega0, q.omegaInf, q.omega0 + q.omegaInf):
        if member_parameter(p, w) is None:
            return False
    return True
