"""Seeded random instances shared by the property and acceptance tests."""

from __future__ import annotations

import random

from riccati.forms import ONE, ZERO, X, Y, MatrixOneForm, OneForm, PolyMap, parameter


def poly(rng: random.Random, degree: int = 2, span: int = 3, params=()):
    """Random polynomial in x, y (and optional parameter atoms) of total degree <= degree."""
    out = ZERO
    for i in range(degree + 1):
        for j in range(degree + 1 - i):
            c = rng.randint(-span, span)
            if c:
                out = out + c * X**i * Y**j
    for name in params:
        if rng.random() < 0.5:
            out = out + rng.randint(1, span) * parameter(name) * (X if rng.random() < 0.5 else ONE)
    return out


def rational(rng: random.Random, degree: int = 2):
    den = poly(rng, 1)
    while den.is_zero():
        den = poly(rng, 1)
    return poly(rng, degree) / (den * den + 1)


def one_form(rng: random.Random, degree: int = 2) -> OneForm:
    return OneForm(poly(rng, degree), poly(rng, degree))


def reduced_theta(rng: random.Random, degree: int = 2) -> MatrixOneForm:
    """Random trace-free matrix of 1-forms with polynomial coefficients."""
    a, b, c = one_form(rng, degree), one_form(rng, degree), one_form(rng, degree)
    return MatrixOneForm(((a, b), (c, -a)))


def commuting_constant_theta(rng: random.Random) -> MatrixOneForm:
    """M1 dx + M2 dy with trace-free M2 a multiple of M1: flat."""
    p, q, r = (rng.randint(-3, 3) for _ in range(3))
    s = rng.randint(-3, 3)
    m1 = [[p, q], [r, -p]]
    m2 = [[s * v for v in row] for row in m1]
    return MatrixOneForm.from_matrices(m1, m2)


def triangular_map(rng: random.Random) -> tuple[PolyMap, PolyMap]:
    """Random composition of a translation and two shears, with its
    (polynomial) inverse."""
    a, b = rng.randint(-2, 2), rng.randint(-2, 2)
    steps = [(PolyMap(X + a, Y + b), PolyMap(X - a, Y - b))]
    for _ in range(2):
        if rng.random() < 0.5:
            p = _poly_x(rng)
            steps.append((PolyMap(X, Y + p), PolyMap(X, Y - p)))
        else:
            q = _poly_y(rng)
            steps.append((PolyMap(X + q, Y), PolyMap(X - q, Y)))
    phi, inv = PolyMap.identity(), PolyMap.identity()
    for f, g in steps:
        phi = phi.then(f)
        inv = g.then(inv)
    return phi, inv


def _poly_x(rng: random.Random):
    return sum((rng.randint(-2, 2) * X**k for k in range(3)), ZERO)


def _poly_y(rng: random.Random):
    return sum((rng.randint(-2, 2) * Y**k for k in range(3)), ZERO)


def torsion_free_theta(rng: random.Random, degree: int = 2) -> MatrixOneForm:
    """Random affine Christoffel matrix with θ12(∂x) = θ11(∂y), θ22(∂x) = θ21(∂y)."""
    p = lambda: poly(rng, degree)  # noqa: E731
    t11 = OneForm(p(), p())
    t21 = OneForm(p(), p())
    t12 = OneForm(t11.cy, p())
    t22 = OneForm(t21.cy, p())
    return MatrixOneForm(((t11, t12), (t21, t22)))
