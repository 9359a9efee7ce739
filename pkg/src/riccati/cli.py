"""Command-line front end.

Exit status: 0 when every check passes, 1 on a mathematical mismatch or a
failed computation, 2 on usage and parse errors.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .connections import chern_identity_check, distribution_curvature, is_foliation
from .forms import FormError
from .monodromy import (
    CONJUGACY,
    EXACT,
    INVERSE,
    Inconclusive,
    NoConvergence,
    PoleOnPath,
    compare_generators,
    group_classify,
    surface_monodromy,
)
from .parsing import ParseError, parse_expr
from .pencils import DegenerateWeb, normal_pencil, pencil_curvature, pencil_to_riccati
from .surfaces import (
    FAMILY_INFO,
    Family,
    InvalidParameters,
    PathNotFound,
    build_surface,
    check_surface,
    random_params,
    surface_from_descriptor,
)

USAGE, MISMATCH, OK = 2, 1, 0

# families with monodromy tables; the elliptic family is listed with --all
TABLE_FAMILIES = [f for f in Family if f is not Family.ELLIPTIC]


class UsageError(Exception):
    pass


def load_schema(command: str) -> dict:
    """The shipped JSON schema for ``command``'s JSON output."""
    name = command.replace("-", "_") + ".json"
    return json.loads(importlib.resources.files("riccati").joinpath("schemas", name).read_text(encoding="utf-8"))


@dataclass
class RunConfig:
    command: str
    surface: dict | None = None
    params: dict = field(default_factory=dict)
    tol: float = 1e-10
    word_bound: int = 8
    fmt: str = "md"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.tol <= 1e-4:
            raise UsageError("--tol must lie in (0, 1e-4]")
        if not 1 <= self.word_bound <= 12:
            raise UsageError("--word-bound must lie in [1, 12]")
        if self.fmt not in ("json", "md"):
            raise UsageError("--format must be json or md")


# --------------------------------------------------------------------------
# argument handling


def _param_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = _param_value(v.strip())
    return out


def _load_surface(text: str | None) -> dict | None:
    """A family name, inline JSON, or a path to a JSON descriptor."""
    if text is None:
        return None
    if text in {f.value for f in Family}:
        return {"family": text}
    if os.path.exists(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed surface descriptor: {exc}") from None
    if not isinstance(obj, dict):
        raise UsageError("surface descriptor must be a JSON object")
    return obj


def _surface(cfg: RunConfig):
    if cfg.surface is None:
        raise UsageError("--surface is required")
    desc = dict(cfg.surface)
    desc["params"] = {**desc.get("params", {}), **cfg.params}
    return surface_from_descriptor(desc)


def _fmt_c(z, digits=10) -> str:
    z = complex(z)
    re, im = round(z.real, digits) + 0.0, round(z.imag, digits) + 0.0
    if im == 0:
        return f"{re:.{digits}g}"
    if re == 0:
        return f"{im:.{digits}g}i"
    return f"{re:.{digits}g}{'+' if im >= 0 else '-'}{abs(im):.{digits}g}i"


def _fmt_mobius(m) -> str:
    (a, b), (c, d) = m.m
    return f"[[{_fmt_c(a)}, {_fmt_c(b)}], [{_fmt_c(c)}, {_fmt_c(d)}]]"


def _md_table(header, rows) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(str(c).replace("|", "\\|") for c in row) + " |" for row in rows]
    return "\n".join(lines)


# --------------------------------------------------------------------------
# commands; each returns (document, markdown, status)


def cmd_catalog(cfg: RunConfig, filt: str | None = None, include_all: bool = False):
    fams = list(Family) if include_all else TABLE_FAMILIES
    if filt:
        fams = [f for f in fams if filt.lower() in f.value]
    entries = []
    for f in fams:
        info = FAMILY_INFO[f]
        s = build_surface(f)
        entries.append({
            "family": f.value,
            "cover": info["cover"],
            "params": info["params"],
            "connection_parameters": info["connection_parameters"],
            "free_parameters": list(s.free_parameters),
            "constraints": list(s.constraints),
            "generators": [g.label for g in s.generators],
            "tables": info["tables"],
            "foliation": str(s.omega),
        })
    doc = {"command": "catalog", "families": entries}
    md = _md_table(
        ["Family", "Cover", "Generators", "Connection parameters", "Tables"],
        [[e["family"], e["cover"], ", ".join(e["generators"]), ", ".join(e["connection_parameters"]) or "-",
          "; ".join(e["tables"]) or "-"] for e in entries],
    )
    return doc, md, OK


def cmd_check(cfg: RunConfig):
    s = _surface(cfg)
    report = check_surface(s)
    doc = {"command": "check", "surface": s.descriptor(), **report.to_json()}
    md = f"## {s.family.value} ({s.variant})\n\nfoliation: {s.omega}\n\n" + _md_table(
        ["Check", "Result", "Residual"],
        [[e.name, "pass" if e.ok else "FAIL", e.detail or "0"] for e in report.entries],
    )
    return doc, md, OK if report.ok else MISMATCH


def _match_tol(tol: float) -> float:
    return max(1e-8, 10 * tol)


def _group(monos, word_bound):
    try:
        return group_classify(monos, word_bound).to_json()
    except Inconclusive as exc:
        return {"classification": "inconclusive", "order": None, "cyclic": None, "evidence": [str(exc)],
                "witness": None, "generators": [m.to_json() for m in monos]}


def _monodromy_rows(s, tol):
    results = surface_monodromy(s, tol)
    tabled = [r for r in results if r.closed_form is not None]
    match = None
    if tabled:
        match = compare_generators([r.monodromy for r in tabled], [r.closed_form for r in tabled], _match_tol(tol))
    return results, match


def cmd_monodromy(cfg: RunConfig):
    s = _surface(cfg)
    results, match = _monodromy_rows(s, cfg.tol)
    group = _group([r.monodromy for r in results], cfg.word_bound)
    doc = {
        "command": "monodromy",
        "surface": s.descriptor(),
        "variant": s.variant,
        "foliation": str(s.omega),
        "generators": [r.to_json() for r in results],
        "match": None if match is None else match.to_json(),
        "group": group,
    }
    rows = [[r.generator, _fmt_mobius(r.monodromy), r.formula or "-",
             "-" if match is None else match.kind, f"{r.error_estimate:.1e}"] for r in results]
    md = (f"## {s.family.value} ({s.variant})\n\nfoliation: {s.omega}\n\n"
          + _md_table(["Generator", "Monodromy", "Table", "Match", "Error estimate"], rows)
          + f"\n\ngroup: {group['classification']}"
          + (f" (order {group['order']})" if group.get("order") else "")
          + "\n\n" + "\n".join(f"- {e}" for e in group["evidence"]))
    ok = match is None or match.ok
    return doc, md, OK if ok and group["classification"] != "inconclusive" else MISMATCH


def table_draws(seed: int, draws: int = 4) -> list[tuple[str, str, dict]]:
    """(family, row label, params) for every table row: the default instance
    where one exists plus ``draws`` seeded random instances."""
    rng = np.random.default_rng(seed)
    out = []
    for kind in ("1", "2", "3"):
        out.append(("torus", f"type {kind}", {"type": int(kind)}))
        out += [("torus", f"type {kind}", random_params("torus", rng, kind)) for _ in range(draws)]
    out.append(("kodaira", "e = h", {}))
    out += [("kodaira", "e = h", random_params("kodaira", rng)) for _ in range(draws)]
    for fam in ("hopf-primary", "hopf-secondary"):
        for row in ("lambda", "generic", "resonant"):
            out += [(fam, row, random_params(fam, rng, row)) for _ in range(max(draws, 1))]
    out.append(("inoue-sm", "S_M", {}))
    out.append(("inoue-splus", "S+", {}))
    out += [("inoue-splus", "S+", random_params("inoue-splus", rng)) for _ in range(draws)]
    return out


def cmd_verify_tables(cfg: RunConfig, draws: int = 4):
    rows, md_rows = [], []
    status = OK
    for fam, _, params in table_draws(cfg.seed, draws):
        s = build_surface(fam, params)
        try:
            results, match = _monodromy_rows(s, cfg.tol)
            kind = match.kind
            err = match.max_error
        except (NoConvergence, PoleOnPath, PathNotFound) as exc:
            results, match, kind, err = [], None, f"error: {exc}", None
        ok = match is not None and match.ok
        if not ok:
            status = MISMATCH
        rows.append({
            "family": fam,
            "condition": s.variant,
            "params": s.descriptor()["params"],
            "foliation": str(s.omega),
            "match": kind,
            "inverse": None if match is None else match.inverse,
            "conjugator": None if match is None or match.conjugator is None else match.conjugator.to_json(),
            "max_error": err,
            "generators": [{"label": r.generator, "table": r.formula, "monodromy": r.monodromy.to_json()} for r in results],
            "ok": ok,
        })
        md_rows.append([fam, s.variant, str(s.omega),
                        "; ".join(f"{r.generator}: {r.formula}" for r in results),
                        kind + (" (inverse)" if match is not None and match.inverse and kind == CONJUGACY else ""),
                        "-" if err is None else f"{err:.1e}"])
    counts = {k: sum(r["match"] == k for r in rows) for k in (EXACT, INVERSE, CONJUGACY)}
    doc = {"command": "verify-tables", "seed": cfg.seed, "tol": cfg.tol, "rows": rows, "summary": counts,
           "ok": status == OK}
    md = ("## Monodromy tables\n\n"
          + _md_table(["Family", "Type/Condition", "Foliation", "Monodromy (table)", "Match", "Max rel. error"], md_rows)
          + "\n\n" + ", ".join(f"{v} {k}" for k, v in counts.items()))
    return doc, md, status


def cmd_chern(cfg: RunConfig, n: int, k_max: int | None):
    try:
        rep = chern_identity_check(n, k_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"command": "chern", **rep.to_json()}
    md = (f"## Chern identity, n = {n}\n\n"
          + _md_table(["k", "Residual"], [[k, r] for k, r in sorted(rep.residuals.items())])
          + f"\n\nR2 = c2 - (n-1)/(2n) c1^2 residual: {rep.r2_residual}")
    return doc, md, OK if rep.holds else MISMATCH


def cmd_pencil(cfg: RunConfig, u_text: str):
    try:
        u = parse_expr(u_text)
        p = normal_pencil(u)
    except (ParseError, DegenerateWeb) as exc:
        raise UsageError(str(exc)) from None
    k = pencil_curvature(p)
    r = pencil_to_riccati(p)
    consistent = distribution_curvature(r) == k
    doc = {
        "command": "pencil",
        "u": str(u),
        "pencil": p.to_json(),
        "curvature": k.to_json(),
        "foliation": str(r),
        "riccati": r.to_json(),
        "flat": k.is_zero(),
        "integrable": is_foliation(r),
        "curvature_consistent": consistent,
    }
    md = (f"## Pencil dx + t ({u}) dy\n\n- K(P) = {k}\n- induced foliation: {r} = 0\n"
          f"- {'flat' if k.is_zero() else 'non-flat'}\n- integrable: {doc['integrable']}\n"
          f"- K(P) equals the distribution curvature: {consistent}")
    return doc, md, OK if consistent and doc["integrable"] else MISMATCH


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--surface", help="family name, inline JSON descriptor or path to one")
    common.add_argument("--param", action="append", metavar="K=V", help="parameter override (repeatable)")
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--word-bound", type=int, default=8)
    common.add_argument("--format", choices=("json", "md"), default="md")
    common.add_argument("--seed", type=int, default=0)

    ap = argparse.ArgumentParser(prog="riccati", description="Riccati foliations on compact complex surfaces")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("catalog", parents=[common], help="list the surface families")
    c.add_argument("filter", nargs="?")
    c.add_argument("--all", action="store_true", help="include the elliptic family (no tables)")
    sub.add_parser("check", parents=[common], help="structure equations and descent")
    sub.add_parser("monodromy", parents=[common], help="numerical monodromy and group classification")
    v = sub.add_parser("verify-tables", parents=[common], help="reproduce every monodromy table")
    v.add_argument("--draws", type=int, default=4, help="random draws per row besides the default instance")
    ch = sub.add_parser("chern", parents=[common], help="formal Chern-form identity")
    ch.add_argument("--n", type=int, default=2)
    ch.add_argument("--k-max", type=int)
    pe = sub.add_parser("pencil", parents=[common], help="curvature of the pencil dx + t u dy")
    pe.add_argument("--u", required=True, help="the function u(x, y)")
    return ap


def run(argv=None) -> tuple[int, str]:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return (USAGE if exc.code else OK), ""
    try:
        cfg = RunConfig(args.command, _load_surface(args.surface), _parse_params(args.param), args.tol,
                        args.word_bound, args.format, args.seed)
        if args.command == "catalog":
            doc, md, status = cmd_catalog(cfg, args.filter, args.all)
        elif args.command == "check":
            doc, md, status = cmd_check(cfg)
        elif args.command == "monodromy":
            doc, md, status = cmd_monodromy(cfg)
        elif args.command == "verify-tables":
            doc, md, status = cmd_verify_tables(cfg, args.draws)
        elif args.command == "chern":
            doc, md, status = cmd_chern(cfg, args.n, args.k_max)
        else:
            doc, md, status = cmd_pencil(cfg, args.u)
    except (UsageError, InvalidParameters, ParseError) as exc:
        return USAGE, f"error: {exc}\n"
    except (NoConvergence, PoleOnPath, PathNotFound, FormError) as exc:
        return MISMATCH, f"error: {exc}\n"
    if cfg.fmt == "json":
        return status, json.dumps(doc, indent=2, sort_keys=True) + "\n"
    return status, md + "\n"


def main(argv=None) -> int:
    status, out = run(argv)
    stream = sys.stderr if out.startswith("error:") else sys.stdout
    stream.write(out)
    return status


if __name__ == "__main__":
    sys.exit(main())
