"""Rendering of exact values to JSON, TSV and DOT."""

from __future__ import annotations

import dataclasses
import json
import math
from fractions import Fraction
from typing import Any, Iterable, Sequence

from .berk import BerkPoint
from .valfield import FieldElement


def rat(x) -> str:
    """Exact rendering: ``a/b``, an integer, or ``inf``/``-inf``."""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        raise TypeError(f"refusing to render float {x!r} as exact")
    return str(Fraction(x))


def dec(x) -> str:
    """Display-only decimal with 6 significant digits."""
    if isinstance(x, float) and math.isinf(x):
        return rat(x)
    return format(float(Fraction(x)), ".6g")


def plain(obj: Any) -> Any:
    """Convert results to JSON-ready values with every rational as a string."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, (Fraction, float)):
        return rat(obj)
    if isinstance(obj, (BerkPoint, FieldElement)):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [plain(v) for v in items]
    return str(obj)


def to_json(obj: Any) -> str:
    return json.dumps(plain(obj), indent=2, ensure_ascii=False) + "\n"


def to_tsv(header: Sequence[str], rows: Iterable[Sequence[Any]], decimals: Sequence[int] = ()) -> str:
    """Tab-separated table; columns listed in ``decimals`` get a trailing ``<name>_dec`` column."""
    head = list(header) + [f"{header[i]}_dec" for i in decimals]
    lines = ["\t".join(head)]
    for row in rows:
        cells = [_cell(v) for v in row] + [dec(row[i]) for i in decimals]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (Fraction, float)):
        return rat(v)
    if v is None:
        return ""
    return str(v)


def to_dot(name: str, nodes: Sequence[tuple[str, str]], edges: Sequence[tuple[str, str, str]]) -> str:
    """Graphviz digraph with nodes and edges emitted in the given order."""
    out = [f"digraph {name} {{"]
    for ident, label in nodes:
        out.append(f'  {ident} [label="{_esc(label)}"];')
    for a, b, label in edges:
        out.append(f'  {a} -> {b} [label="{_esc(label)}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')
