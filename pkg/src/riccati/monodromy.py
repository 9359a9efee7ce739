"""Möbius transformations and numerical monodromy of Riccati foliations.

Fiber coordinate convention: a tangent vector v = (v1, v2) has fiber
coordinate z = v2/v1, so a linear map L acts on z through the Möbius matrix
S L S, S being the swap.  Parallel transport solves dV = -θ(ċ) V along a
path; its projectivization moves z along the leaves of dz = -γ - δz - ηz².

The monodromy of a deck generator g with path c from the basepoint p to g(p)
is ρ(g) = T⁻¹ ∘ J: push z forward by the Jacobian of g at p, then transport
back along c.  This is a homomorphism on the deck group, and for torus
translations (J = I) it reproduces the tabulated z·exp(a k + b l).
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .connections import RiccatiForm, theta_from_riccati_form
from .forms import NumericBinding, PoleAtPoint, compile_expr
from .surfaces import DeckGenerator, Path, SurfaceModel, generator_path

__all__ = [
    "Mobius",
    "MobiusClass",
    "HolonomyResult",
    "TransportResult",
    "MobiusGroupReport",
    "TableMatch",
    "TableReport",
    "PoleOnPath",
    "NoConvergence",
    "Inconclusive",
    "mobius_compose",
    "mobius_classify",
    "projective_distance",
    "holonomy_transport",
    "jacobian_action",
    "generator_monodromy",
    "surface_monodromy",
    "compare_generators",
    "group_classify",
    "verify_tables",
]

_SWAP = np.array([[0, 1], [1, 0]], dtype=complex)


class PoleOnPath(RuntimeError):
    pass


class NoConvergence(RuntimeError):
    pass


class Inconclusive(RuntimeError):
    pass


def _normalize(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) == 0 or not np.isfinite(det):
        raise ValueError("Möbius matrix must be invertible")
    m = m / cmath.sqrt(det)
    # fix the global sign so equal classes share a representative
    flat = m.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-9 * np.max(np.abs(flat))))
    if flat[k].real < 0 or (flat[k].real == 0 and flat[k].imag < 0):
        m = -m
    return m


def projective_distance(a, b) -> float:
    """Minimum Frobenius distance between det-normalized representatives."""
    a = a.m if isinstance(a, Mobius) else _normalize(a)
    b = b.m if isinstance(b, Mobius) else _normalize(b)
    return float(min(np.linalg.norm(a - b), np.linalg.norm(a + b)))


@dataclass(frozen=True, eq=False)
class Mobius:
    """z -> (a z + b)/(c z + d), stored with determinant 1."""

    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", _normalize(self.m))

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(np.eye(2))

    @classmethod
    def translation(cls, t) -> "Mobius":
        return cls([[1, t], [0, 1]])

    @classmethod
    def scaling(cls, k) -> "Mobius":
        return cls([[k, 0], [0, 1]])

    @classmethod
    def from_linear(cls, lin) -> "Mobius":
        """Action on z = v2/v1 of a linear map of (v1, v2)."""
        return cls(_SWAP @ np.asarray(lin, dtype=complex) @ _SWAP)

    def __call__(self, z):
        (a, b), (c, d) = self.m
        if z == math.inf:
            return math.inf if c == 0 else a / c
        den = c * z + d
        return math.inf if den == 0 else (a * z + b) / den

    def __matmul__(self, other: "Mobius") -> "Mobius":
        return Mobius(self.m @ other.m)

    def inverse(self) -> "Mobius":
        (a, b), (c, d) = self.m
        return Mobius([[d, -b], [-c, a]])

    def conjugate_by(self, h: "Mobius") -> "Mobius":
        """h ∘ self ∘ h⁻¹."""
        return h @ self @ h.inverse()

    def close_to(self, other: "Mobius", tol: float = 1e-8) -> bool:
        return projective_distance(self, other) <= tol * max(1.0, float(np.linalg.norm(other.m)))

    def is_identity(self, tol: float = 1e-8) -> bool:
        return self.close_to(Mobius.identity(), tol)

    @property
    def trace_squared(self) -> complex:
        return complex(np.trace(self.m)) ** 2

    def __repr__(self):
        (a, b), (c, d) = np.round(self.m, 12)
        return f"Mobius([[{a}, {b}], [{c}, {d}]])"

    def to_json(self) -> list:
        return [[[float(v.real), float(v.imag)] for v in row] for row in self.m]


def mobius_compose(f: Mobius, g: Mobius) -> Mobius:
    """f ∘ g."""
    return f @ g


@dataclass(frozen=True)
class MobiusClass:
    kind: str  # identity | elliptic | parabolic | loxodromic
    order: int | None = None

    @property
    def infinite_order(self) -> bool:
        return self.kind in ("parabolic", "loxodromic") or (self.kind == "elliptic" and self.order is None)

    def __str__(self):
        if self.kind == "elliptic":
            return f"elliptic(order {self.order})" if self.order else "elliptic(irrational rotation)"
        return self.kind


def mobius_classify(f: Mobius, max_order: int = 64, tol: float = 1e-8) -> MobiusClass:
    if f.is_identity(tol):
        return MobiusClass("identity", 1)
    tau = f.trace_squared
    if abs(tau - 4) < tol:
        return MobiusClass("parabolic")
    if abs(tau.imag) < tol and -tol <= tau.real < 4:
        # eigenvalues λ, 1/λ on the unit circle; the rotation multiplier is λ²
        lam = np.linalg.eigvals(f.m)[0]
        mult = lam * lam
        for k in range(1, max_order + 1):
            if abs(mult**k - 1) < tol:
                return MobiusClass("elliptic", k)
        return MobiusClass("elliptic", None)
    return MobiusClass("loxodromic")


# --------------------------------------------------------------------------
# transport


@dataclass(frozen=True)
class TransportResult:
    transport: Mobius
    matrix: np.ndarray
    steps_per_segment: int
    error_estimate: float
    converged: bool


class _CompiledTheta:
    def __init__(self, r: RiccatiForm, binding: NumericBinding):
        theta = theta_from_riccati_form(r).theta
        self.parts = [
            [[compile_expr(theta[i, j].cx, binding, vectorized=True) for j in range(2)] for i in range(2)],
            [[compile_expr(theta[i, j].cy, binding, vectorized=True) for j in range(2)] for i in range(2)],
        ]

    def along(self, xs, ys, vx, vy) -> np.ndarray:
        """θ(ċ) at the sample points, shape (n, 2, 2)."""
        out = np.zeros((len(xs), 2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                out[:, i, j] = self.parts[0][i][j](xs, ys) * vx + self.parts[1][i][j](xs, ys) * vy
        return out


def _chain(mats: np.ndarray) -> np.ndarray:
    """mats[n-1] @ ... @ mats[0] by pairwise reduction."""
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(2, dtype=complex)[None]])
        mats = np.einsum("nij,njk->nik", mats[1::2], mats[0::2])
    return mats[0]


def _rk4_segment(theta: _CompiledTheta, a, b, n: int) -> np.ndarray:
    h = 1.0 / n
    vx, vy = b[0] - a[0], b[1] - a[1]
    t = np.linspace(0.0, 1.0, 2 * n + 1)
    try:
        m = -theta.along(a[0] + t * vx, a[1] + t * vy, vx, vy)
    except PoleAtPoint as exc:
        raise PoleOnPath(str(exc)) from None
    if not np.all(np.isfinite(m)):
        raise PoleOnPath("non-finite connection values on the path")
    a0, ah, a1 = m[0:-1:2], m[1::2], m[2::2]
    eye = np.eye(2, dtype=complex)[None]

    def mul(p, q):
        return np.einsum("nij,njk->nik", p, q)

    k1 = a0
    k2 = mul(ah, eye + h / 2 * k1)
    k3 = mul(ah, eye + h / 2 * k2)
    k4 = mul(a1, eye + h * k3)
    step = eye + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return _chain(step)


def _fundamental(theta: _CompiledTheta, path: Path, n: int) -> np.ndarray:
    v = np.eye(2, dtype=complex)
    for a, b in path.segments():
        v = _rk4_segment(theta, a, b, n) @ v
    return v


def _proj(v: np.ndarray) -> np.ndarray:
    return _normalize(v)


def holonomy_transport(r: RiccatiForm, path: Path, binding: NumericBinding | None = None, tol: float = 1e-10,
                       max_halvings: int = 20, initial_steps: int = 8) -> TransportResult:
    """Projectivized fundamental solution of dV = -θ(ċ)V along ``path``.

    Fixed-step RK4 per segment; the step is halved until successive results
    are within ``tol`` in projective distance, and the last two are combined
    by Richardson extrapolation.
    """
    theta = _CompiledTheta(r, binding or NumericBinding())
    n = initial_steps
    prev = _fundamental(theta, path, n)
    for _ in range(max_halvings):
        n *= 2
        cur = _fundamental(theta, path, n)
        dist = projective_distance(_proj(cur), _proj(prev))
        if dist < tol:
            # RK4 error scales as h^4
            best = cur + (cur - prev) / 15
            return TransportResult(Mobius.from_linear(best), best, n, dist / 15, True)
        prev = cur
    raise NoConvergence(f"transport did not converge after {max_halvings} halvings (last change {dist:.3e})")


def jacobian_action(g: DeckGenerator, p) -> Mobius:
    return Mobius.from_linear(g.numeric_jacobian(p))


# --------------------------------------------------------------------------
# monodromy of deck generators


@dataclass(frozen=True)
class HolonomyResult:
    generator: str
    transport: Mobius
    jacobian_action: Mobius
    monodromy: Mobius
    step_count: int
    error_estimate: float
    converged: bool
    path: Path
    closed_form: Mobius | None = None
    formula: str | None = None
    match_report: str | None = None
    match_error: float | None = None

    def to_json(self) -> dict:
        return {
            "generator": self.generator,
            "transport": self.transport.to_json(),
            "jacobian_action": self.jacobian_action.to_json(),
            "monodromy": self.monodromy.to_json(),
            "step_count": self.step_count,
            "error_estimate": self.error_estimate,
            "converged": self.converged,
            "closed_form": None if self.closed_form is None else self.closed_form.to_json(),
            "formula": self.formula,
            "match_report": self.match_report,
            "match_error": self.match_error,
        }


def generator_monodromy(s: SurfaceModel, g: DeckGenerator | str, tol: float = 1e-10,
                        omega: RiccatiForm | None = None) -> HolonomyResult:
    """Monodromy of one deck generator; ``omega`` overrides the surface's
    catalog foliation (it must be defined with the surface's parameters)."""
    if isinstance(g, str):
        g = s.generator(g)
    path = generator_path(s, g)
    tr = holonomy_transport(omega if omega is not None else s.omega, path, s.binding, tol)
    jac = jacobian_action(g, s.basepoint)
    mono = tr.transport.inverse() @ jac
    closed = None if g.closed_form is None else Mobius(g.closed_form)
    report, err = None, None
    if closed is not None:
        match = compare_generators([mono], [closed])
        report, err = match.kind, match.max_error
    return HolonomyResult(g.label, tr.transport, jac, mono, tr.steps_per_segment, tr.error_estimate, tr.converged,
                          path, closed, g.formula, report, err)


def surface_monodromy(s: SurfaceModel, tol: float = 1e-10, omega: RiccatiForm | None = None) -> list[HolonomyResult]:
    """Per-generator monodromy with the match report computed for the whole
    generating set (a conjugator, if needed, is shared by all generators)."""
    results = [generator_monodromy(s, g, tol, omega) for g in s.generators]
    tabled = [r for r in results if r.closed_form is not None]
    if not tabled:
        return results
    match = compare_generators([r.monodromy for r in tabled], [r.closed_form for r in tabled])
    out = []
    errs = dict(zip([r.generator for r in tabled], match.errors))
    for r in results:
        if r.closed_form is None:
            out.append(r)
        else:
            out.append(HolonomyResult(**{**r.__dict__, "match_report": match.kind, "match_error": errs[r.generator]}))
    return out


# --------------------------------------------------------------------------
# comparison with tabulated closed forms


EXACT = "exact-convention match"
INVERSE = "match up to inverse"
CONJUGACY = "match up to conjugacy"
MISMATCH = "mismatch"


@dataclass(frozen=True)
class TableMatch:
    kind: str
    inverse: bool
    conjugator: Mobius | None
    errors: tuple[float, ...]

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    @property
    def ok(self) -> bool:
        return self.kind != MISMATCH

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "inverse": self.inverse,
            "conjugator": None if self.conjugator is None else self.conjugator.to_json(),
            "max_error": self.max_error,
        }


def _rel_error(a: Mobius, b: Mobius) -> float:
    return projective_distance(a, b) / max(1.0, float(np.linalg.norm(b.m)))


def _common_conjugator(comp: list[Mobius], table: list[Mobius], tol: float, rng) -> Mobius | None:
    """Some h with h C_i h⁻¹ = T_i for all i, if one exists."""
    choices = []
    for c, t in zip(comp, table):
        tc, tt = np.trace(c.m), np.trace(t.m)
        if abs(tt) < 1e-6 and abs(tc) < 1e-6:
            choices.append((1, -1))
        elif abs(tc - tt) <= abs(tc + tt):
            choices.append((1,))
        else:
            choices.append((-1,))
    eye = np.eye(2)
    for signs in itertools.product(*choices):
        # h C - s T h = 0, row-major vec(h): vec(h C) = (I ⊗ Cᵀ) vec h, vec(T h) = (T ⊗ I) vec h
        blocks = [np.kron(eye, c.m.T) - s * np.kron(t.m, eye) for c, t, s in zip(comp, table, signs)]
        a = np.vstack(blocks)
        _, sv, vh = np.linalg.svd(a)
        null = [vh[k].conj() for k in range(4) if sv[k] <= 1e-7 * max(1.0, sv[0])] if len(sv) == 4 else []
        if not null:
            continue
        best, best_det = None, 0.0
        for _ in range(16):
            w = rng.normal(size=len(null)) + 1j * rng.normal(size=len(null))
            h = sum(wk * v for wk, v in zip(w, null)).reshape(2, 2)
            det = abs(np.linalg.det(h)) / max(np.linalg.norm(h) ** 2, 1e-300)
            if det > best_det:
                best, best_det = h, det
        if best is None or best_det < 1e-6:
            continue
        hm = Mobius(best)
        if all(_rel_error(c.conjugate_by(hm), t) <= tol for c, t in zip(comp, table)):
            return hm
    return None


def compare_generators(computed: list[Mobius], table: list[Mobius], tol: float = 1e-8) -> TableMatch:
    """Compare computed monodromies with tabulated ones, in order of
    preference: literally, after inverting every generator, or after a common
    conjugation (optionally combined with inversion)."""
    errs = tuple(_rel_error(c, t) for c, t in zip(computed, table))
    if max(errs) <= tol:
        return TableMatch(EXACT, False, None, errs)
    inv = [c.inverse() for c in computed]
    errs_inv = tuple(_rel_error(c, t) for c, t in zip(inv, table))
    if max(errs_inv) <= tol:
        return TableMatch(INVERSE, True, None, errs_inv)
    rng = np.random.default_rng(0)
    for inverted, comp in ((False, computed), (True, inv)):
        h = _common_conjugator(comp, table, tol, rng)
        if h is not None:
            e = tuple(_rel_error(c.conjugate_by(h), t) for c, t in zip(comp, table))
            return TableMatch(CONJUGACY, inverted, h, e)
    return TableMatch(MISMATCH, False, None, errs)


@dataclass(frozen=True)
class TableReport:
    family: str
    variant: str
    params: dict
    results: tuple[HolonomyResult, ...]
    match: TableMatch | None

    @property
    def ok(self) -> bool:
        return self.match is None or self.match.ok

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "variant": self.variant,
            "match": None if self.match is None else self.match.to_json(),
            "generators": [r.to_json() for r in self.results],
            "ok": self.ok,
        }


def verify_tables(s: SurfaceModel, tol: float = 1e-10, match_tol: float = 1e-8) -> TableReport:
    """Compute every generator's monodromy and compare with the table."""
    results = surface_monodromy(s, tol)
    tabled = [r for r in results if r.closed_form is not None]
    match = None
    if tabled:
        match = compare_generators([r.monodromy for r in tabled], [r.closed_form for r in tabled], match_tol)
    return TableReport(s.family.value, s.variant, s.descriptor()["params"], tuple(results), match)


# --------------------------------------------------------------------------
# group classification


@dataclass(frozen=True)
class MobiusGroupReport:
    generators: tuple[Mobius, ...]
    classification: str  # trivial | finite-cyclic | finite-noncyclic | infinite
    order: int | None
    cyclic: bool | None
    evidence: tuple[str, ...]
    witness: Mobius | None = None

    def to_json(self) -> dict:
        return {
            "classification": self.classification,
            "order": self.order,
            "cyclic": self.cyclic,
            "evidence": list(self.evidence),
            "witness": None if self.witness is None else self.witness.to_json(),
            "generators": [g.to_json() for g in self.generators],
        }


def _key(m: Mobius, quantum=1e-6) -> tuple:
    # pairwise products of entries: invariant under the sign ambiguity of SL2
    e = m.m.ravel()
    prods = (e[i] * e[j] for i in range(4) for j in range(i, 4))
    return tuple(int(round(v / quantum)) for z in prods for v in (z.real, z.imag))


def _infinite_witness(m: Mobius) -> str | None:
    cls = mobius_classify(m)
    if cls.kind in ("parabolic", "loxodromic"):
        return cls.kind
    return None


def _single_cyclic_generator(gens: list[Mobius]) -> bool:
    distinct: list[Mobius] = []
    for g in gens:
        if g.is_identity():
            continue
        if not any(g.close_to(d) or g.close_to(d.inverse()) for d in distinct):
            distinct.append(g)
    return len(distinct) <= 1


def group_classify(gens: list[Mobius], word_bound: int = 8, tol: float = 1e-8, max_elements: int = 20000) -> MobiusGroupReport:
    """Classify the group generated by ``gens``.

    Infinite order is certified only by a parabolic or loxodromic element;
    finiteness by closure of the word enumeration within ``word_bound``.
    """
    if not 1 <= word_bound <= 12:
        raise ValueError("word_bound must be between 1 and 12")
    gens = list(gens)
    if all(g.is_identity(tol) for g in gens):
        return MobiusGroupReport(tuple(gens), "trivial", 1, True, ("every generator is the identity",))
    for i, g in enumerate(gens):
        kind = _infinite_witness(g)
        if kind:
            return MobiusGroupReport(tuple(gens), "infinite", None, True if _single_cyclic_generator(gens) else None,
                                     (f"generator {i} is {kind} (non-periodic)",), g)
    letters = gens + [g.inverse() for g in gens]
    ident = Mobius.identity()
    buckets: dict[tuple, list[Mobius]] = {_key(ident): [ident]}
    elements = [ident]
    frontier = deque([ident])

    def seen(m: Mobius) -> bool:
        return any(m.close_to(o, tol) for o in buckets.get(_key(m), ()))

    for length in range(1, word_bound + 1):
        nxt = deque()
        for w in frontier:
            for a in letters:
                m = a @ w
                if seen(m):
                    continue
                kind = _infinite_witness(m)
                if kind:
                    return MobiusGroupReport(tuple(gens), "infinite", None,
                                             True if _single_cyclic_generator(gens) else None,
                                             (f"word of length {length} is {kind} (non-periodic)",), m)
                buckets.setdefault(_key(m), []).append(m)
                elements.append(m)
                nxt.append(m)
                if len(elements) > max_elements:
                    raise Inconclusive(f"more than {max_elements} elements without closure")
        if not nxt:
            order = len(elements)
            cyclic = any(mobius_classify(e).order == order for e in elements)
            kind = "finite-cyclic" if cyclic else "finite-noncyclic"
            return MobiusGroupReport(tuple(gens), kind, order, cyclic,
                                     (f"closure after words of length {length - 1} with {order} elements",))
        frontier = nxt
    raise Inconclusive(f"no closure and no infinite-order witness within words of length {word_bound}")
