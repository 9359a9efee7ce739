"""Monodromy of the catalog surfaces against their closed-form tables.

Run: python3 demos/monodromy_tour.py
"""

from __future__ import annotations

from riccati.monodromy import group_classify, surface_monodromy, verify_tables
from riccati.surfaces import build_surface

INSTANCES = [
    ("torus", {"type": 1, "a": 1, "b": 2}),
    ("torus", {"type": 2, "c": 5}),
    ("kodaira", {"c": 0.5}),
    ("hopf-primary", {"a": 0.5, "b": 0.5}),
    ("hopf-primary", {"a": 0.3, "b": 0.6}),
    ("inoue-sm", {}),
    ("inoue-splus", {"N": [[2, 1], [1, 1]], "r": 1}),
]


def main() -> None:
    for family, params in INSTANCES:
        s = build_surface(family, params)
        rep = verify_tables(s)
        group = group_classify([r.monodromy for r in surface_monodromy(s)])
        print(f"{family} ({s.variant}): {s.omega}")
        for r in rep.results:
            print(f"  {r.generator}: {r.monodromy!r}  table {r.formula}")
        print(f"  match: {rep.match.kind} (max error {rep.match.max_error:.1e}); group: {group.classification}")


if __name__ == "__main__":
    main()
