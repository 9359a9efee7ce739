"""Text syntax for expressions: ``+ - * / ^`` over ``x``, ``y``, ``i``,
decimal or rational literals and named atoms (``u``, ``u'``, ``u''``...).

Unknown names become parameter atoms unless ``atoms`` maps them to something
else (e.g. a function of y).
"""

from __future__ import annotations

import ast
import re
from fractions import Fraction
from typing import Mapping

from .forms import RationalExpr, X, Y, as_expr, function_of_y, parameter, partial

__all__ = ["parse_expr", "ParseError"]


class ParseError(ValueError):
    pass


_PRIME = "__d"
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*'+")
_ALLOWED = re.compile(r"^[\sA-Za-z_0-9.+\-*/^()']*$")


def _prime_derivative(name: str, atoms: Mapping[str, RationalExpr]) -> RationalExpr:
    base, k = name.rstrip("'"), len(name) - len(name.rstrip("'"))
    root = atoms.get(base, function_of_y(base))
    atom = root.free_atoms()
    if len(atom) != 1:
        raise ParseError(f"{base!r} is not an atom")
    var = "x" if atom[0].kind.value == "function-of-x" else "y"
    out = root
    for _ in range(k):
        out = partial(out, var)
    return out


def parse_expr(text: str, atoms: Mapping[str, RationalExpr] | None = None) -> RationalExpr:
    """Parse ``text`` into a canonical :class:`RationalExpr`.

    Primed names denote derivative atoms of univariate functions; a bare name
    used with primes anywhere in the text is a function of y unless ``atoms``
    says otherwise.
    """
    atoms = dict(atoms or {})
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression")
    if not _ALLOWED.match(text) or "**" in text:
        raise ParseError(f"unexpected characters in {text!r}")
    for primed in set(_NAME_RE.findall(text)):
        base = primed.rstrip("'")
        atoms.setdefault(base, function_of_y(base))
    src = _NAME_RE.sub(lambda m: m.group(0).rstrip("'") + _PRIME * (len(m.group(0)) - len(m.group(0).rstrip("'"))), text)
    src = src.replace("^", "**")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None
    try:
        return _eval(tree.body, atoms)
    except ZeroDivisionError:
        raise ParseError(f"division by zero in {text!r}") from None


def _eval(node, atoms) -> RationalExpr:
    if isinstance(node, ast.BinOp):
        left = _eval(node.left, atoms)
        if isinstance(node.op, ast.Pow):
            k = _integer(node.right)
            return left**k
        right = _eval(node.right, atoms)
        if isinstance(node.op, ast.Add):
            return left + right
        if isinstance(node.op, ast.Sub):
            return left - right
        if isinstance(node.op, ast.Mult):
            return left * right
        if isinstance(node.op, ast.Div):
            return left / right
        raise ParseError(f"unsupported operator {type(node.op).__name__}")
    if isinstance(node, ast.UnaryOp):
        val = _eval(node.operand, atoms)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
        raise ParseError("unsupported unary operator")
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        # decimal literals are read as exact decimals, not binary floats
        return as_expr(Fraction(repr(node.value)))
    if isinstance(node, ast.Name):
        name = node.id
        if _PRIME in name:
            base = name.split(_PRIME)[0]
            return _prime_derivative(base + "'" * name.count(_PRIME), atoms)
        if name == "x":
            return X
        if name == "y":
            return Y
        if name == "i":
            return as_expr(1j)
        if name in atoms:
            return as_expr(atoms[name])
        return parameter(name)
    raise ParseError(f"unsupported syntax: {ast.dump(node)}")


def _integer(node) -> int:
    sign = 1
    while isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        if isinstance(node.op, ast.USub):
            sign = -sign
        node = node.operand
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return sign * node.value
    raise ParseError("exponents must be integer literals")

