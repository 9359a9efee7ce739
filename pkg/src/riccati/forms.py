"""Exact exterior calculus in the two base variables x, y.

Coefficients live in a differential field: rational functions over the
Gaussian rationals in x, y and a finite set of formal atoms (free parameters,
opaque functions of one or two variables, and their derivatives).  Every
value is kept in a canonical form so that equality is decidable and every
zero test is exact.
"""

from __future__ import annotations

import cmath
import enum
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from sympy import QQ, Symbol
from sympy.polys.orderings import grlex
from sympy.polys.rings import ring as _make_ring

__all__ = [
    "Atom",
    "AtomKind",
    "RationalExpr",
    "OneForm",
    "TwoForm",
    "MatrixOneForm",
    "NumericBinding",
    "PolyMap",
    "FormError",
    "UnknownAtomDerivative",
    "NonRepresentableComposition",
    "PoleAtPoint",
    "UnboundAtom",
    "X",
    "Y",
    "ONE",
    "ZERO",
    "DX",
    "DY",
    "as_expr",
    "parameter",
    "function_of_x",
    "function_of_y",
    "function_of_xy",
    "custom_atom",
    "d_scalar",
    "d_oneform",
    "wedge",
    "mat_wedge",
    "mat_d",
    "pullback",
    "substitute",
    "evaluate",
    "compile_expr",
    "partial",
    "atoms_of",
    "exp_atom",
    "numeric_exp",
]


class FormError(Exception):
    """Base class for errors raised by the form algebra."""


class UnknownAtomDerivative(FormError):
    pass


class NonRepresentableComposition(FormError):
    """Substitution would leave the differential field (opaque function composed
    with a non-trivial map); use the numeric layer instead."""


class PoleAtPoint(FormError):
    pass


class UnboundAtom(FormError):
    pass


# --------------------------------------------------------------------------
# atoms


class AtomKind(enum.Enum):
    PARAMETER = "parameter"
    FUNC_X = "function-of-x"
    FUNC_Y = "function-of-y"
    FUNC_XY = "function-of-xy"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Atom:
    """A formal generator of the coefficient field.

    ``order`` counts derivatives taken from the root function: ``(k,)`` for
    univariate functions, ``(i, j)`` (x- and y-derivatives) for functions of
    two variables.  Custom atoms carry explicit partial-derivative rules.
    """

    name: str
    kind: AtomKind
    root: str = ""
    order: tuple[int, ...] = ()
    rules: tuple[Callable[["RationalExpr"], "RationalExpr"], ...] | None = field(
        default=None, compare=False, hash=False, repr=False
    )

    def __post_init__(self):
        if not self.root:
            object.__setattr__(self, "root", self.name)
        if not self.order:
            if self.kind in (AtomKind.FUNC_X, AtomKind.FUNC_Y):
                object.__setattr__(self, "order", (0,))
            elif self.kind is AtomKind.FUNC_XY:
                object.__setattr__(self, "order", (0, 0))

    @property
    def sort_key(self):
        return (self.root, sum(self.order), self.order, self.name)

    @property
    def is_derivative(self) -> bool:
        return any(self.order)

    @property
    def parent(self) -> "Atom | None":
        """The atom this one is a derivative of (``None`` for roots)."""
        if not self.is_derivative:
            return None
        if self.kind is AtomKind.FUNC_XY:
            i, j = self.order
            return _xy_atom(self.root, (i - 1, j) if i else (i, j - 1))
        return _uni_atom(self.root, self.kind, self.order[0] - 1)

    def derivative(self, var: str) -> "RationalExpr":
        """Partial derivative of the atom with respect to ``var`` ('x' or 'y')."""
        if self.kind is AtomKind.PARAMETER:
            return ZERO
        if self.kind is AtomKind.FUNC_X:
            return _atom_expr(_uni_atom(self.root, self.kind, self.order[0] + 1)) if var == "x" else ZERO
        if self.kind is AtomKind.FUNC_Y:
            return _atom_expr(_uni_atom(self.root, self.kind, self.order[0] + 1)) if var == "y" else ZERO
        if self.kind is AtomKind.FUNC_XY:
            i, j = self.order
            return _atom_expr(_xy_atom(self.root, (i + 1, j) if var == "x" else (i, j + 1)))
        if self.rules is None:
            raise UnknownAtomDerivative(self.name)
        return as_expr(self.rules[0 if var == "x" else 1](_atom_expr(self)))


def _uni_atom(root: str, kind: AtomKind, k: int) -> Atom:
    return Atom(root + "'" * k, kind, root, (k,))


def _xy_atom(root: str, order: tuple[int, int]) -> Atom:
    i, j = order
    name = root if i == j == 0 else f"{root}_{'x' * i}{'y' * j}"
    return Atom(name, AtomKind.FUNC_XY, root, (i, j))


def parameter(name: str) -> "RationalExpr":
    """A free complex constant (identically zero differential)."""
    return _atom_expr(Atom(name, AtomKind.PARAMETER))


def function_of_x(name: str) -> "RationalExpr":
    return _atom_expr(_uni_atom(name, AtomKind.FUNC_X, 0))


def function_of_y(name: str) -> "RationalExpr":
    return _atom_expr(_uni_atom(name, AtomKind.FUNC_Y, 0))


def function_of_xy(name: str) -> "RationalExpr":
    """Opaque function u(x, y); its partials u_x, u_y, u_xy, ... are atoms with
    mixed partials identified (u_yx = u_xy)."""
    return _atom_expr(_xy_atom(name, (0, 0)))


def custom_atom(name: str, dx: Callable, dy: Callable) -> "RationalExpr":
    """Atom with explicit partials; ``dx(u)`` and ``dy(u)`` receive the atom as
    an expression, e.g. ``custom_atom('u', lambda u: Y*u, lambda u: X*u)``
    models exp(xy)."""
    return _atom_expr(Atom(name, AtomKind.CUSTOM, rules=(dx, dy)))


# --------------------------------------------------------------------------
# rational expressions


# Generator layout of every polynomial ring: x, y, the imaginary unit i, then
# atoms in their global sort order.  Coefficients are rationals; Gaussian
# constants are polynomials in i kept reduced modulo i^2 + 1.
_I = 2
_A0 = 3


@lru_cache(maxsize=None)
def _ring(atoms: tuple[Atom, ...]):
    symbols = [Symbol("x"), Symbol("y"), Symbol("i")] + [Symbol(a.name) for a in atoms]
    return _make_ring(symbols, QQ, grlex)[0]


def _rational(value) -> Fraction:
    if isinstance(value, bool):
        value = int(value)
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, numbers.Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, numbers.Real):
        return Fraction(float(value))
    raise TypeError(f"cannot use {value!r} as a rational coefficient")


def _const_poly(r, value):
    if isinstance(value, numbers.Complex) and not isinstance(value, numbers.Real):
        value = complex(value)
        re, im = _rational(value.real), _rational(value.imag)
    else:
        re, im = _rational(value), Fraction(0)
    p = r(QQ(re.numerator, re.denominator))
    if im:
        p += r.gens[_I] * QQ(im.numerator, im.denominator)
    return p


def _has_i(poly) -> bool:
    return any(m[_I] for m in poly.monoms())


def _reduce_i(poly):
    """Rewrite i^k using i^2 = -1."""
    if not poly or poly.degree(_I) < 2:
        return poly
    r = poly.ring
    out = {}
    for monom, c in poly.terms():
        e = monom[_I]
        if e >= 2:
            if (e // 2) % 2:
                c = -c
            monom = monom[:_I] + (e % 2,) + monom[_I + 1 :]
        out[monom] = out.get(monom, r.domain.zero) + c
    return r.from_dict({m: c for m, c in out.items() if c})


def _is_numeric(poly) -> bool:
    return all(not any(m[:_I]) and not any(m[_A0:]) for m in poly.monoms())


def _merge(a: tuple[Atom, ...], b: tuple[Atom, ...]) -> tuple[Atom, ...]:
    if a == b:
        return a
    names = {}
    for atom in a + b:
        prev = names.setdefault(atom.name, atom)
        if prev != atom:
            raise FormError(f"conflicting atoms named {atom.name!r}")
    return tuple(sorted(names.values(), key=lambda t: t.sort_key))


class RationalExpr:
    """Quotient ``num/den`` of sparse polynomials in canonical form.

    Canonical: gcd-reduced over the rationals and the denominator monic in
    graded-lex order (generators x, y, i, atoms by name).  With real
    coefficients this form is unique.  When the imaginary unit occurs, common
    factors that only split over Q(i) may survive, so equality then falls back
    to cross-multiplication, which is still an exact test.
    """

    __slots__ = ("num", "den", "atoms")

    def __init__(self, num, den, atoms: tuple[Atom, ...], *, reduced: bool = False):
        self.atoms = atoms
        if not reduced:
            num, den = _canonical(_reduce_i(num), _reduce_i(den))
        self.num = num
        self.den = den

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value) -> "RationalExpr":
        r = _ring(())
        return cls(_const_poly(r, value), r.one, (), reduced=True)

    def _lift(self, atoms: tuple[Atom, ...]) -> tuple:
        if atoms == self.atoms:
            return self.num, self.den
        r = _ring(atoms)
        return self.num.set_ring(r), self.den.set_ring(r)

    def _binary(self, other):
        other = as_expr(other)
        atoms = _merge(self.atoms, other.atoms)
        return atoms, self._lift(atoms), other._lift(atoms)

    # -- field operations -------------------------------------------------
    def __add__(self, other):
        try:
            atoms, (a, b), (c, d) = self._binary(other)
        except TypeError:
            return NotImplemented
        if b == d:
            return RationalExpr(a + c, b, atoms, reduced=b.is_ground)
        if b.is_ground:
            return RationalExpr(_reduce_i(a * d) + c, d, atoms)
        if d.is_ground:
            return RationalExpr(a + _reduce_i(c * b), b, atoms)
        return RationalExpr(a * d + c * b, b * d, atoms)

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr(-self.num, self.den, self.atoms, reduced=True)

    def __sub__(self, other):
        try:
            other = as_expr(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return as_expr(other) - self

    def __mul__(self, other):
        try:
            atoms, (a, b), (c, d) = self._binary(other)
        except TypeError:
            return NotImplemented
        if not a or not c:
            return ZERO
        if c.is_ground and d.is_ground:
            return RationalExpr(a * c.LC, b, atoms, reduced=True)
        if a.is_ground and b.is_ground:
            return RationalExpr(c * a.LC, d, atoms, reduced=True)
        if b.is_ground and d.is_ground:
            return RationalExpr(_reduce_i(a * c), b, atoms, reduced=True)
        if not d.is_ground:
            a, d = a.cancel(d)
        if not b.is_ground:
            c, b = c.cancel(b)
        return RationalExpr(a * c, b * d, atoms)

    __rmul__ = __mul__

    def __truediv__(self, other):
        try:
            other = as_expr(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_expr(other) * self.inverse()

    def inverse(self) -> "RationalExpr":
        if not self.num:
            raise ZeroDivisionError("inverse of the zero expression")
        if _has_i(self.num) and _is_numeric(self.num):
            # 1/(p + q i) = (p - q i)/(p^2 + q^2)
            conj = _conjugate(self.num)
            norm = _reduce_i(self.num * conj)
            return RationalExpr(_reduce_i(self.den * conj), norm, self.atoms)
        return RationalExpr(self.den, self.num, self.atoms)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        if _has_i(self.num) or _has_i(self.den):
            out = ONE
            for _ in range(k):
                out = out * self
            return out
        return RationalExpr(self.num**k, self.den**k, self.atoms, reduced=True)

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        try:
            atoms, (a, b), (c, d) = self._binary(other)
        except TypeError:
            return NotImplemented
        if a == c and b == d:
            return True
        if not any(_has_i(p) for p in (a, b, c, d)):
            return False
        return not _reduce_i(a * d - c * b)

    def __hash__(self):
        if _has_i(self.num) or _has_i(self.den):
            return hash(("gaussian", self.depends_on_xy()))
        return hash(str(self))

    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    @property
    def is_polynomial(self) -> bool:
        return self.den.is_ground

    @property
    def is_constant(self) -> bool:
        return _is_numeric(self.num) and _is_numeric(self.den)

    def free_atoms(self) -> tuple[Atom, ...]:
        """Atoms that actually occur (the carrier may be larger)."""
        used = set()
        for poly in (self.num, self.den):
            for monom in poly.monoms():
                used.update(i for i, e in enumerate(monom[_A0:]) if e)
        return tuple(self.atoms[i] for i in sorted(used))

    def depends_on_xy(self) -> bool:
        return any(m[0] or m[1] for p in (self.num, self.den) for m in p.monoms())

    def to_complex(self) -> complex:
        if not self.is_constant:
            raise ValueError(f"{self} is not a constant")
        return _numeric_value(self.num) / _numeric_value(self.den)

    # -- display ----------------------------------------------------------
    def __str__(self):
        num = _poly_str(self.num)
        if self.den == self.den.ring.one:
            return num
        den = _poly_str(self.den)
        if len(self.num.terms()) > 1 or "/" in num:
            num = f"({num})"
        if not _is_single_factor(self.den):
            den = f"({den})"
        return f"{num}/{den}"

    def __repr__(self):
        return f"RationalExpr({self})"


def _conjugate(poly):
    r = poly.ring
    return r.from_dict({m: (-c if m[_I] % 2 else c) for m, c in poly.terms()})


def _numeric_value(poly) -> complex:
    total = 0j
    for m, c in poly.terms():
        total += float(c) * (1j ** m[_I])
    return total


def _canonical(num, den):
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return num.ring.zero, num.ring.one
    if not den.is_ground:
        num, den = num.cancel(den)
    lc = den.LC
    if lc != den.ring.domain.one:
        num = num.quo_ground(lc)
        den = den.quo_ground(lc)
    return num, den


def _monom_str(symbols, monom) -> str:
    parts = []
    for s, e in zip(symbols, monom):
        if e == 1:
            parts.append(str(s))
        elif e:
            parts.append(f"{s}^{e}")
    return "*".join(parts)


def _poly_str(poly) -> str:
    if not poly:
        return "0"
    symbols = poly.ring.symbols
    out = ""
    for monom, c in poly.terms():
        m = _monom_str(symbols, monom)
        cs = str(c)
        if not m:
            term = cs
        elif cs in ("1", "-1"):
            term = cs[:-1] + m
        else:
            term = f"{cs}*{m}"
        if not out:
            out = term
        elif term.startswith("-"):
            out += " - " + term[1:]
        else:
            out += " + " + term
    return out


def _is_single_factor(poly) -> bool:
    terms = poly.terms()
    return len(terms) == 1 and sum(terms[0][0]) <= 1 and terms[0][1] == poly.ring.domain.one


@lru_cache(maxsize=None)
def _atom_expr(atom: Atom) -> RationalExpr:
    r = _ring((atom,))
    return RationalExpr(r.gens[_A0], r.one, (atom,), reduced=True)


def as_expr(value) -> RationalExpr:
    """Coerce numbers (exactly; floats via their binary value) and expression
    strings to :class:`RationalExpr`."""
    if isinstance(value, RationalExpr):
        return value
    if isinstance(value, str):
        from .parsing import parse_expr

        return parse_expr(value)
    if isinstance(value, numbers.Number):
        return RationalExpr.constant(value)
    raise TypeError(f"cannot convert {type(value).__name__} to RationalExpr")


_R0 = _ring(())
X = RationalExpr(_R0.gens[0], _R0.one, (), reduced=True)
Y = RationalExpr(_R0.gens[1], _R0.one, (), reduced=True)
I = RationalExpr(_R0.gens[_I], _R0.one, (), reduced=True)
ONE = RationalExpr(_R0.one, _R0.one, (), reduced=True)
ZERO = RationalExpr(_R0.zero, _R0.one, (), reduced=True)


# --------------------------------------------------------------------------
# differentiation


def _poly_partial(poly, atoms: tuple[Atom, ...], var: str):
    """Derivative of a polynomial; a polynomial when every atom derivative
    involved is polynomial, otherwise a RationalExpr."""
    r = poly.ring
    out = poly.diff(r.gens[0 if var == "x" else 1])
    extra = None
    for k, atom in enumerate(atoms):
        if atom.kind is AtomKind.PARAMETER:
            continue
        dp = poly.diff(r.gens[k + _A0])
        if not dp:
            continue
        da = atom.derivative(var)
        if not da:
            continue
        if da.is_polynomial and set(da.atoms) <= set(atoms):
            out = out + _reduce_i(dp * da._lift(atoms)[0])
        else:
            term = RationalExpr(dp, r.one, atoms, reduced=True) * da
            extra = term if extra is None else extra + term
    if extra is None:
        return out
    return RationalExpr(out, r.one, atoms) + extra


def partial(f, var: str) -> RationalExpr:
    """Total partial derivative in ``var`` using the atom derivative rules."""
    f = as_expr(f)
    atoms = f.atoms
    dn = _poly_partial(f.num, atoms, var)
    if f.is_polynomial:
        if isinstance(dn, RationalExpr):
            return dn
        return RationalExpr(dn, f.den.ring.one, atoms)
    dd = _poly_partial(f.den, atoms, var)
    if isinstance(dn, RationalExpr) or isinstance(dd, RationalExpr):
        one = f.den.ring.one
        n = RationalExpr(f.num, one, atoms, reduced=True)
        d = RationalExpr(f.den, one, atoms, reduced=True)
        return (as_expr_poly(dn, atoms) * d - n * as_expr_poly(dd, atoms)) / (d * d)
    return RationalExpr(dn * f.den - f.num * dd, f.den**2, atoms)


def as_expr_poly(p, atoms) -> RationalExpr:
    if isinstance(p, RationalExpr):
        return p
    return RationalExpr(p, p.ring.one, atoms)


# --------------------------------------------------------------------------
# forms


@dataclass(frozen=True, eq=False)
class OneForm:
    """``cx dx + cy dy``."""

    cx: RationalExpr = ZERO
    cy: RationalExpr = ZERO

    def __post_init__(self):
        object.__setattr__(self, "cx", as_expr(self.cx))
        object.__setattr__(self, "cy", as_expr(self.cy))

    def __add__(self, other: "OneForm") -> "OneForm":
        if not isinstance(other, OneForm):
            return NotImplemented
        return OneForm(self.cx + other.cx, self.cy + other.cy)

    def __sub__(self, other: "OneForm") -> "OneForm":
        if not isinstance(other, OneForm):
            return NotImplemented
        return OneForm(self.cx - other.cx, self.cy - other.cy)

    def __neg__(self):
        return OneForm(-self.cx, -self.cy)

    def __mul__(self, f) -> "OneForm":
        if isinstance(f, (OneForm, TwoForm)):
            return NotImplemented
        f = as_expr(f)
        return OneForm(self.cx * f, self.cy * f)

    __rmul__ = __mul__

    def __truediv__(self, f) -> "OneForm":
        f = as_expr(f)
        return OneForm(self.cx / f, self.cy / f)

    def __eq__(self, other):
        if not isinstance(other, OneForm):
            return NotImplemented
        return self.cx == other.cx and self.cy == other.cy

    __hash__ = None

    def is_zero(self) -> bool:
        return self.cx.is_zero() and self.cy.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def __call__(self, vx, vy):
        """Contraction with the vector field ``vx ∂x + vy ∂y``."""
        return self.cx * vx + self.cy * vy

    def __str__(self):
        return f"({self.cx}) dx + ({self.cy}) dy"

    def __repr__(self):
        return f"OneForm({self})"

    def to_json(self) -> dict:
        return {"dx": str(self.cx), "dy": str(self.cy)}

    @classmethod
    def from_json(cls, obj: Mapping, atoms: Mapping | None = None) -> "OneForm":
        from .parsing import parse_expr

        return cls(parse_expr(obj["dx"], atoms), parse_expr(obj["dy"], atoms))


@dataclass(frozen=True, eq=False)
class TwoForm:
    """``cxy dx∧dy``."""

    cxy: RationalExpr = ZERO

    def __post_init__(self):
        object.__setattr__(self, "cxy", as_expr(self.cxy))

    def __add__(self, other):
        if not isinstance(other, TwoForm):
            return NotImplemented
        return TwoForm(self.cxy + other.cxy)

    def __sub__(self, other):
        if not isinstance(other, TwoForm):
            return NotImplemented
        return TwoForm(self.cxy - other.cxy)

    def __neg__(self):
        return TwoForm(-self.cxy)

    def __mul__(self, f):
        if isinstance(f, (OneForm, TwoForm)):
            return NotImplemented
        return TwoForm(self.cxy * as_expr(f))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, TwoForm):
            return NotImplemented
        return self.cxy == other.cxy

    __hash__ = None

    def is_zero(self) -> bool:
        return self.cxy.is_zero()

    def __bool__(self):
        return not self.is_zero()

    def __str__(self):
        return f"({self.cxy}) dx^dy"

    def __repr__(self):
        return f"TwoForm({self})"

    def to_json(self) -> dict:
        return {"dxdy": str(self.cxy)}


DX = OneForm(ONE, ZERO)
DY = OneForm(ZERO, ONE)
ZERO1 = OneForm()
ZERO2 = TwoForm()


def d_scalar(f) -> OneForm:
    f = as_expr(f)
    return OneForm(partial(f, "x"), partial(f, "y"))


def d_oneform(w: OneForm) -> TwoForm:
    return TwoForm(partial(w.cy, "x") - partial(w.cx, "y"))


def wedge(a: OneForm, b: OneForm) -> TwoForm:
    return TwoForm(a.cx * b.cy - a.cy * b.cx)


# --------------------------------------------------------------------------
# 2x2 matrices of 1-forms

Grid = tuple[tuple[object, object], tuple[object, object]]


@dataclass(frozen=True, eq=False)
class MatrixOneForm:
    entries: tuple[tuple[OneForm, OneForm], tuple[OneForm, OneForm]]

    def __post_init__(self):
        rows = tuple(tuple(e for e in row) for row in self.entries)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("MatrixOneForm must be 2x2")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def from_matrices(cls, a1: Grid, a2: Grid) -> "MatrixOneForm":
        """``a1 dx + a2 dy`` from two 2x2 coefficient grids."""
        return cls(tuple(tuple(OneForm(a1[i][j], a2[i][j]) for j in range(2)) for i in range(2)))

    @classmethod
    def zero(cls) -> "MatrixOneForm":
        return cls(((ZERO1, ZERO1), (ZERO1, ZERO1)))

    @classmethod
    def scalar(cls, w: OneForm) -> "MatrixOneForm":
        return cls(((w, ZERO1), (ZERO1, w)))

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def dx_part(self) -> list[list[RationalExpr]]:
        return [[self.entries[i][j].cx for j in range(2)] for i in range(2)]

    def dy_part(self) -> list[list[RationalExpr]]:
        return [[self.entries[i][j].cy for j in range(2)] for i in range(2)]

    def map(self, fn) -> "MatrixOneForm":
        return MatrixOneForm(tuple(tuple(fn(e) for e in row) for row in self.entries))

    def __add__(self, other):
        if not isinstance(other, MatrixOneForm):
            return NotImplemented
        return MatrixOneForm(
            tuple(tuple(self.entries[i][j] + other.entries[i][j] for j in range(2)) for i in range(2))
        )

    def __sub__(self, other):
        if not isinstance(other, MatrixOneForm):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return self.map(lambda e: -e)

    def __mul__(self, f):
        return self.map(lambda e: e * f)

    __rmul__ = __mul__

    def trace(self) -> OneForm:
        return self.entries[0][0] + self.entries[1][1]

    def left(self, g: Grid) -> "MatrixOneForm":
        """Product ``g · self`` with a matrix of functions."""
        g = [[as_expr(v) for v in row] for row in g]
        return MatrixOneForm(
            tuple(
                tuple(self.entries[0][j] * g[i][0] + self.entries[1][j] * g[i][1] for j in range(2))
                for i in range(2)
            )
        )

    def right(self, g: Grid) -> "MatrixOneForm":
        """Product ``self · g`` with a matrix of functions."""
        g = [[as_expr(v) for v in row] for row in g]
        return MatrixOneForm(
            tuple(
                tuple(self.entries[i][0] * g[0][j] + self.entries[i][1] * g[1][j] for j in range(2))
                for i in range(2)
            )
        )

    def __eq__(self, other):
        if not isinstance(other, MatrixOneForm):
            return NotImplemented
        return all(self.entries[i][j] == other.entries[i][j] for i in range(2) for j in range(2))

    __hash__ = None

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def __str__(self):
        return "[" + ", ".join("[" + ", ".join(str(e) for e in row) + "]" for row in self.entries) + "]"

    def to_json(self) -> list:
        return [[e.to_json() for e in row] for row in self.entries]

    @classmethod
    def from_json(cls, obj, atoms: Mapping | None = None) -> "MatrixOneForm":
        return cls(tuple(tuple(OneForm.from_json(e, atoms) for e in row) for row in obj))


def mat_wedge(a: MatrixOneForm, b: MatrixOneForm) -> list[list[TwoForm]]:
    return [
        [wedge(a[i, 0], b[0, j]) + wedge(a[i, 1], b[1, j]) for j in range(2)]
        for i in range(2)
    ]


def mat_d(a: MatrixOneForm) -> list[list[TwoForm]]:
    return [[d_oneform(a[i, j]) for j in range(2)] for i in range(2)]


# --------------------------------------------------------------------------
# substitution and pullback


def _compose_poly(poly, atoms: tuple[Atom, ...], images: Sequence[RationalExpr]) -> RationalExpr:
    """Substitute ``images[k]`` for generator k (x, y, i, atoms...) in ``poly``."""
    powers: list[dict[int, RationalExpr]] = [{} for _ in images]

    def power(k, e):
        cache = powers[k]
        if e not in cache:
            cache[e] = images[k] ** e
        return cache[e]

    r0 = _ring(())
    total = ZERO
    for monom, c in poly.terms():
        term = RationalExpr(r0(c), r0.one, (), reduced=True)
        for k, e in enumerate(monom):
            if e:
                term = term * power(k, e)
        total = total + term
    return total


def substitute(e, mapping: Mapping[str, object]):
    """Replace atoms (by name) with expressions; forms are handled entry-wise.

    Only parameters may be replaced by non-constant expressions; function
    atoms may only be renamed to other atoms."""
    if isinstance(e, OneForm):
        return OneForm(substitute(e.cx, mapping), substitute(e.cy, mapping))
    if isinstance(e, TwoForm):
        return TwoForm(substitute(e.cxy, mapping))
    if isinstance(e, MatrixOneForm):
        return e.map(lambda w: substitute(w, mapping))
    e = as_expr(e)
    if not any(a.name in mapping for a in e.atoms):
        return e
    images = [X, Y, I] + [as_expr(mapping[a.name]) if a.name in mapping else _atom_expr(a) for a in e.atoms]
    return _compose_poly(e.num, e.atoms, images) / _compose_poly(e.den, e.atoms, images)


@dataclass(frozen=True, eq=False)
class PolyMap:
    """Polynomial self-map (x, y) -> (fx, fy) of C², parameters allowed."""

    fx: RationalExpr
    fy: RationalExpr

    def __post_init__(self):
        fx, fy = as_expr(self.fx), as_expr(self.fy)
        for f in (fx, fy):
            if not f.is_polynomial:
                raise ValueError(f"PolyMap component {f} is not a polynomial")
            if any(a.kind is not AtomKind.PARAMETER for a in f.free_atoms()):
                raise ValueError(f"PolyMap component {f} contains function atoms")
        object.__setattr__(self, "fx", fx)
        object.__setattr__(self, "fy", fy)

    @classmethod
    def identity(cls) -> "PolyMap":
        return cls(X, Y)

    def jacobian(self) -> list[list[RationalExpr]]:
        return [
            [partial(self.fx, "x"), partial(self.fx, "y")],
            [partial(self.fy, "x"), partial(self.fy, "y")],
        ]

    def then(self, other: "PolyMap") -> "PolyMap":
        """``other ∘ self``."""
        return PolyMap(pullback(other.fx, self), pullback(other.fy, self))

    def compose(self, other: "PolyMap") -> "PolyMap":
        """``self ∘ other``."""
        return other.then(self)

    def __call__(self, point, binding: "NumericBinding | None" = None) -> tuple[complex, complex]:
        return (
            evaluate(self.fx, point, binding or NumericBinding()),
            evaluate(self.fy, point, binding or NumericBinding()),
        )

    def __eq__(self, other):
        if not isinstance(other, PolyMap):
            return NotImplemented
        return self.fx == other.fx and self.fy == other.fy

    __hash__ = None

    def __str__(self):
        return f"(x, y) -> ({self.fx}, {self.fy})"


def _atom_image(atom: Atom, phi: PolyMap) -> RationalExpr:
    if atom.kind is AtomKind.PARAMETER:
        return _atom_expr(atom)
    ok = {
        AtomKind.FUNC_X: phi.fx == X,
        AtomKind.FUNC_Y: phi.fy == Y,
    }.get(atom.kind, phi.fx == X and phi.fy == Y)
    if not ok:
        raise NonRepresentableComposition(f"{atom.name} composed with {phi}")
    return _atom_expr(atom)


def pullback(e, phi: PolyMap):
    """Pull back a function or 1-form along ``phi``."""
    if isinstance(e, OneForm):
        jac = phi.jacobian()
        a, b = pullback(e.cx, phi), pullback(e.cy, phi)
        return OneForm(a * jac[0][0] + b * jac[1][0], a * jac[0][1] + b * jac[1][1])
    if isinstance(e, MatrixOneForm):
        return e.map(lambda w: pullback(w, phi))
    e = as_expr(e)
    images = [phi.fx, phi.fy, I] + [_atom_image(a, phi) for a in e.atoms]
    num = _compose_poly(e.num, e.atoms, images)
    if e.is_polynomial:
        return num * RationalExpr(e.den.ring.one, e.den, e.atoms)
    return num / _compose_poly(e.den, e.atoms, images)


# --------------------------------------------------------------------------
# numerics


class NumericBinding:
    """Numeric values for atoms: complex constants for parameters, callables for
    function atoms (one argument for functions of x or y, two for functions of
    (x, y) and custom atoms).

    Derivative atoms that are not bound explicitly are computed by central
    differences of their parent when ``finite_differences`` is set.
    """

    def __init__(self, values: Mapping[str, object] | None = None, *, finite_differences: bool = False,
                 step: float = 1e-4):
        self.values = dict(values or {})
        self.finite_differences = finite_differences
        self.step = step

    def with_values(self, **extra) -> "NumericBinding":
        vals = dict(self.values)
        vals.update(extra)
        return NumericBinding(vals, finite_differences=self.finite_differences, step=self.step)

    def __contains__(self, name):
        return name in self.values

    def param(self, name: str) -> complex:
        return complex(self.values[name])

    def atom_function(self, atom: Atom, cast: bool = True) -> Callable[[complex, complex], complex]:
        """Numeric realisation of ``atom`` as a function of the point (x, y);
        ``cast=False`` leaves array results alone."""
        conv = complex if cast else (lambda t: t)
        if atom.name in self.values:
            v = self.values[atom.name]
            if atom.kind is AtomKind.PARAMETER or not callable(v):
                c = complex(v)
                return lambda x, y: c
            if atom.kind is AtomKind.FUNC_X:
                return lambda x, y: conv(v(x))
            if atom.kind is AtomKind.FUNC_Y:
                return lambda x, y: conv(v(y))
            return lambda x, y: conv(v(x, y))
        parent = atom.parent
        if parent is None or not self.finite_differences:
            raise UnboundAtom(atom.name)
        f = self.atom_function(parent, cast)
        h = self.step
        if atom.kind is AtomKind.FUNC_XY:
            i, j = atom.order
            along_x = (i, j) != parent.order and parent.order == (i - 1, j)
        else:
            along_x = atom.kind is AtomKind.FUNC_X
        if along_x:
            return lambda x, y: (f(x + h, y) - f(x - h, y)) / (2 * h)
        return lambda x, y: (f(x, y + h) - f(x, y - h)) / (2 * h)


def _compile_poly(poly):
    terms = [(m, complex(float(c))) for m, c in poly.terms()]

    def run(vals):
        total = 0j
        scale = 0.0
        for monom, c in terms:
            t = c
            for v, e in zip(vals, monom):
                if e:
                    t *= v**e
            total += t
            scale += abs(t)
        return total, scale

    return run


def compile_expr(e, binding: NumericBinding | None = None, *, vectorized: bool = False) -> Callable:
    """Numeric callable ``(x, y) -> complex`` for ``e``; raises
    :class:`PoleAtPoint` when the denominator vanishes.

    With ``vectorized`` the callable accepts numpy arrays of points (the atom
    bindings must then accept arrays too).
    """
    e = as_expr(e)
    binding = binding or NumericBinding()
    atoms = e.free_atoms()
    idx = [e.atoms.index(a) for a in atoms]
    fns = [binding.atom_function(a, cast=not vectorized) for a in atoms]
    if e.is_constant:
        c = e.to_complex()
        if vectorized:
            return lambda x, y: np.full(np.shape(x), c, dtype=complex)
        return lambda x, y: c
    num = _compile_poly(e.num)
    den = _compile_poly(e.den)
    width = len(e.atoms)

    def f(x, y):
        vals = [x, y, 1j] + [0j] * width
        for k, fn in zip(idx, fns):
            vals[k + _A0] = fn(x, y)
        n, _ = num(vals)
        d, scale = den(vals)
        bad = np.abs(d) <= 1e-12 * np.maximum(scale, 1e-300)
        if np.any(bad):
            raise PoleAtPoint(f"denominator of {e} vanishes at ({x}, {y})" if not vectorized
                              else f"denominator of {e} vanishes on the sample points")
        return n / d

    return f


def evaluate(e, point, binding: NumericBinding | None = None):
    """Evaluate an expression, form or matrix of forms at ``point`` = (x, y).

    Forms evaluate to their coefficient arrays: a 1-form to ``(cx, cy)``, a
    2-form to ``cxy``, a matrix of 1-forms to a ``(2, 2, 2)`` nested list
    indexed ``[i][j][dx or dy]``.
    """
    x, y = complex(point[0]), complex(point[1])
    if isinstance(e, OneForm):
        return (evaluate(e.cx, point, binding), evaluate(e.cy, point, binding))
    if isinstance(e, TwoForm):
        return evaluate(e.cxy, point, binding)
    if isinstance(e, MatrixOneForm):
        return [[list(evaluate(e[i, j], point, binding)) for j in range(2)] for i in range(2)]
    return compile_expr(e, binding)(x, y)


def atoms_of(items: Iterable) -> dict[str, Atom]:
    """All atoms occurring in a collection of expressions/forms, by name."""
    out: dict[str, Atom] = {}
    for item in items:
        if isinstance(item, OneForm):
            out.update(atoms_of([item.cx, item.cy]))
        elif isinstance(item, TwoForm):
            out.update(atoms_of([item.cxy]))
        elif isinstance(item, MatrixOneForm):
            out.update(atoms_of([e for row in item.entries for e in row]))
        else:
            out.update({a.name: a for a in as_expr(item).free_atoms()})
    return out


def exp_atom(name: str, exponent) -> RationalExpr:
    """Custom atom standing for ``exp(exponent)``; only its derivative rules are
    encoded (∂u = u·∂exponent)."""
    exponent = as_expr(exponent)
    return custom_atom(
        name,
        lambda u: u * partial(exponent, "x"),
        lambda u: u * partial(exponent, "y"),
    )


def numeric_exp(exponent, binding: NumericBinding | None = None):
    """Callable realising :func:`exp_atom` numerically."""
    f = compile_expr(exponent, binding)
    return lambda x, y: cmath.exp(f(x, y))
