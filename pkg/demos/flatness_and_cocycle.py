"""Flat Riccati connections from gauge transforms, and the κ cocycle.

Run: python3 demos/flatness_and_cocycle.py
"""

from __future__ import annotations

from riccati.connections import (
    CoordinateChange,
    chern_identity_check,
    cocycle_transform,
    connection_form,
    frobenius_residual,
    is_flat,
    riccati_form_from_theta,
)
from riccati.forms import X, Y, MatrixOneForm, PolyMap, d_scalar, pullback


def main() -> None:
    theta = MatrixOneForm.from_matrices([[1, 2], [0, -1]], [[2, 4], [0, -2]])
    phi = PolyMap(X, Y + X**2)
    moved = cocycle_transform(theta, phi)
    r = riccati_form_from_theta(moved)
    print("gauge-transformed connection:", r)
    print("  flat:", is_flat(moved), " Frobenius residual:", [str(c) for c in frobenius_residual(r)])

    theta = MatrixOneForm.from_matrices([[X * Y, 1], [Y, -X * Y]], [[X, 2], [3 * X, -X]])
    psi = PolyMap(X**2, Y)
    g = CoordinateChange(psi)
    lhs = pullback(connection_form(riccati_form_from_theta(theta)), psi) - connection_form(
        riccati_form_from_theta(cocycle_transform(theta, psi)))
    print("κ cocycle under (x^2, y):", lhs, "=", d_scalar(g.jac_det) / g.jac_det / 2)

    for n in (2, 3, 4):
        print(f"Chern identity n = {n}:", chern_identity_check(n).holds)


if __name__ == "__main__":
    main()
