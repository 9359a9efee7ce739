"""Pencils dx + t u dy: curvature, induced Riccati foliation and cross-ratios.

Run: python3 demos/pencil_curvature.py
"""

from __future__ import annotations

from riccati.connections import distribution_curvature
from riccati.forms import X, Y, exp_atom, parameter
from riccati.pencils import (
    INFINITY,
    cross_ratio,
    normal_pencil,
    pencil_curvature,
    pencil_member,
    pencil_to_riccati,
    slope_of,
)


def main() -> None:
    for label, u in (("1", 1), ("1/(1-xy)", 1 / (1 - X * Y)), ("exp(xy)", exp_atom("u", X * Y))):
        p = normal_pencil(u)
        r = pencil_to_riccati(p)
        k = pencil_curvature(p)
        print(f"u = {label}")
        print(f"  foliation: {r}")
        print(f"  K(P) = {k.cxy} dx^dy; matches distribution curvature: {k == distribution_curvature(r)}")
    t = parameter("t")
    p = normal_pencil(1 + X + Y * Y)
    s = {k: slope_of(pencil_member(p, k)) for k in (0, 1, INFINITY)}
    print("cross-ratio (F_t, F_1, F_0, F_inf) =", cross_ratio(slope_of(pencil_member(p, t)), s[1], s[0], s[INFINITY]))


if __name__ == "__main__":
    main()
