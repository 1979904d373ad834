"""Parsing of polynomial and field-element expressions.

The grammar is a small arithmetic subset: integer literals, the polynomial
variable ``z``, the Laurent coefficient variable (``t`` by default), the
operators ``+ - * / ^ **`` and parentheses.  Division is only allowed by
expressions that evaluate to a constant, and exponents must be integer
literals.
"""

from __future__ import annotations

import ast
from fractions import Fraction

from .valfield import FieldDescriptor, FieldElement, ValuedPoly


class ParseError(ValueError):
    pass


def _to_fraction_literal(text: str) -> Fraction | None:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        return None


def _int_exponent(node: ast.AST) -> int:
    sign = 1
    while isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        if isinstance(node.op, ast.USub):
            sign = -sign
        node = node.operand
    if isinstance(node, ast.Constant) and type(node.value) is int:
        return sign * node.value
    raise ParseError("exponents must be integer literals")


def _exponent_value(node: ast.AST) -> Fraction:
    # Laurent monomials may carry rational exponents like t^(1/2)
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Div):
        return Fraction(_int_exponent(node.left), _int_exponent(node.right))
    return Fraction(_int_exponent(node))


def parse_poly(text: str, field: FieldDescriptor) -> ValuedPoly:
    """Parse ``text`` into a polynomial in ``z`` over ``field``."""
    tree = _parse_tree(text)
    return _Builder(field, allow_z=True).visit(tree)


def parse_element(text: str, field: FieldDescriptor) -> FieldElement:
    """Parse a constant field element (no ``z``)."""
    lit = _to_fraction_literal(text)
    if lit is not None:
        return field.element(lit)
    tree = _parse_tree(text)
    poly = _Builder(field, allow_z=False).visit(tree)
    return poly.coeff(0)


def _parse_tree(text: str) -> ast.AST:
    if not text or not text.strip():
        raise ParseError("empty expression")
    try:
        return ast.parse(text.replace("^", "**").strip(), mode="eval").body
    except SyntaxError as exc:
        raise ParseError(f"cannot parse {text!r}: {exc.msg}") from None


class _Builder:
    def __init__(self, field: FieldDescriptor, allow_z: bool):
        self.field = field
        self.allow_z = allow_z

    def const(self, value) -> ValuedPoly:
        return ValuedPoly.constant(self.field, value)

    def visit(self, node: ast.AST) -> ValuedPoly:
        if isinstance(node, ast.Constant):
            if type(node.value) is not int:
                raise ParseError(f"unsupported literal {node.value!r}")
            return self.const(node.value)
        if isinstance(node, ast.Name):
            if node.id == "z" and self.allow_z:
                return ValuedPoly.z(self.field)
            if self.field.kind == "laurent" and node.id == self.field.var:
                return self.const(self.field.gen(1))
            raise ParseError(f"unknown symbol {node.id!r}")
        if isinstance(node, ast.UnaryOp):
            inner = self.visit(node.operand)
            if isinstance(node.op, ast.USub):
                return -inner
            if isinstance(node.op, ast.UAdd):
                return inner
        if isinstance(node, ast.BinOp):
            if isinstance(node.op, ast.Pow):
                return self.power(node)
            left, right = self.visit(node.left), self.visit(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if isinstance(node.op, ast.Div):
                if not right.is_constant():
                    raise ParseError("division by a non-constant expression")
                if right.is_zero():
                    raise ParseError("division by zero")
                try:
                    return left / right
                except ValueError as exc:
                    raise ParseError(str(exc)) from None
        raise ParseError(f"unsupported syntax: {ast.dump(node)[:60]}")

    def power(self, node: ast.BinOp) -> ValuedPoly:
        base = node.left
        if (
            self.field.kind == "laurent"
            and isinstance(base, ast.Name)
            and base.id == self.field.var
        ):
            return self.const(self.field.gen(_exponent_value(node.right)))
        n = _int_exponent(node.right)
        b = self.visit(base)
        if n < 0:
            if not b.is_constant() or b.is_zero():
                raise ParseError("negative powers only of nonzero constants")
            try:
                return self.const(b.coeff(0) ** n)
            except ValueError as exc:
                raise ParseError(str(exc)) from None
        if n > 4096:
            raise ParseError("exponent too large")
        return b ** n
