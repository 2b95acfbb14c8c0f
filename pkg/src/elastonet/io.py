"""JSON network and response-spec files with a canonical serialization.

Canonical files list nodes in natural label order, springs by their sorted
endpoint labels, and floats with 17 significant digits, so
``dumps(loads(text)) == text`` for any canonical ``text``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .errors import ElastoNetError, ParseError
from .model import ModalResponse, Network, Node, Spring, StaticResponse

FORMAT_VERSION = 1


def natural_key(label: str) -> tuple:
    """Sort key treating digit runs as integers, so ``n2 < n10``."""
    return tuple((0, int(p), "") if p.isdigit() else (1, 0, p) for p in re.split(r"(\d+)", label) if p)


def fmt(x: float) -> str:
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite value {x}")
    if x == 0.0:
        return "0"  # also folds -0.0
    return format(x, ".17g")


def _vec(v) -> str:
    return "[" + ", ".join(fmt(x) for x in np.ravel(v)) + "]"


def _mat(a, indent: str) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    rows = [indent + "  " + _vec(r) for r in a]
    return "[\n" + ",\n".join(rows) + "\n" + indent + "]"


# -- networks ---------------------------------------------------------------


def dumps_network(net: Network) -> str:
    nodes = sorted(net.nodes, key=lambda n: natural_key(n.label))
    springs = sorted(
        (tuple(sorted(s.endpoints, key=natural_key)), s.stiffness) for s in net.springs
    )
    springs.sort(key=lambda s: (natural_key(s[0][0]), natural_key(s[0][1])))
    out = ["{", f'  "version": {FORMAT_VERSION},', f'  "dimension": {net.dimension},', '  "nodes": [']
    out.append(",\n".join(
        f'    {{"label": {json.dumps(n.label)}, "position": {_vec(n.position)}, '
        f'"mass": {fmt(n.mass)}, "kind": {json.dumps(n.kind)}}}'
        for n in nodes
    ))
    out.append("  ],")
    out.append('  "springs": [')
    out.append(",\n".join(
        f'    {{"labels": [{json.dumps(a)}, {json.dumps(b)}], "stiffness": {fmt(k)}}}'
        for (a, b), k in springs
    ))
    out.append("  ]")
    out.append("}")
    return "\n".join(line for line in out if line) + "\n"


def _load_json(text: str, what: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{what}: top level must be an object")
    version = doc.get("version")
    if version != FORMAT_VERSION:
        raise ParseError(f"{what}: unsupported version {version!r} (expected {FORMAT_VERSION})")
    return doc


def _field(rec: dict, key: str, where: str):
    if not isinstance(rec, dict):
        raise ParseError(f"{where}: record must be an object")
    if key not in rec:
        raise ParseError(f"{where}: missing field {key!r}")
    return rec[key]


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError(f"{where}: expected a number, got {x!r}")
    if not np.isfinite(x):
        raise ParseError(f"{where}: non-finite number")
    return float(x)


def _numbers(xs, where: str, length: int | None = None) -> list:
    if not isinstance(xs, list):
        raise ParseError(f"{where}: expected a list")
    if length is not None and len(xs) != length:
        raise ParseError(f"{where}: expected {length} entries, got {len(xs)}")
    return [_number(x, f"{where}[{i}]") for i, x in enumerate(xs)]


def _matrix(rows, where: str, n: int) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"{where}: expected {n} rows")
    return np.array([_numbers(r, f"{where}[{i}]", n) for i, r in enumerate(rows)])


def loads_network(text: str) -> Network:
    doc = _load_json(text, "network")
    d = doc.get("dimension")
    if d not in (2, 3):
        raise ParseError(f"network: dimension must be 2 or 3, got {d!r}")
    nodes = []
    for i, rec in enumerate(_field(doc, "nodes", "network")):
        where = f"nodes[{i}]"
        label = _field(rec, "label", where)
        if not isinstance(label, str):
            raise ParseError(f"{where}: label must be a string")
        where = f"nodes[{i}] ({label!r})"
        pos = _numbers(_field(rec, "position", where), f"{where}.position", d)
        mass = _number(_field(rec, "mass", where), f"{where}.mass")
        kind = _field(rec, "kind", where)
        try:
            nodes.append(Node(label, tuple(pos), mass, kind))
        except ElastoNetError as exc:
            raise ParseError(f"{where}: {exc}") from exc
    known = {n.label for n in nodes}
    springs = []
    for i, rec in enumerate(_field(doc, "springs", "network")):
        where = f"springs[{i}]"
        labels = _field(rec, "labels", where)
        if not (isinstance(labels, list) and len(labels) == 2 and all(isinstance(l, str) for l in labels)):
            raise ParseError(f"{where}: labels must be two strings")
        where = f"springs[{i}] {tuple(labels)}"
        for l in labels:
            if l not in known:
                raise ParseError(f"{where}: unknown node {l!r}")
        k = _number(_field(rec, "stiffness", where), f"{where}.stiffness")
        try:
            springs.append(Spring(tuple(labels), k))
        except ElastoNetError as exc:
            raise ParseError(f"{where}: {exc}") from exc
    try:
        return Network(d, tuple(nodes), tuple(springs))
    except ElastoNetError as exc:
        raise ParseError(f"network: {exc}") from exc


# -- response specs ---------------------------------------------------------


def dumps_response(resp) -> str:
    pts = resp.terminal_positions
    out = ["{", f'  "version": {FORMAT_VERSION},', '  "terminal_positions": ' + _mat(pts, "  ") + ","]
    if isinstance(resp, StaticResponse):
        out.append('  "static": {')
        out.append('    "matrix": ' + _mat(resp.matrix, "    "))
        out.append("  }")
    elif isinstance(resp, ModalResponse):
        masses = resp.masses
        if not np.array_equal(np.diag(np.repeat(masses, resp.dimension)), resp.M):
            raise ValueError("only diagonal per-terminal mass matrices can be serialized")
        out.append('  "modal": {')
        out.append('    "A": ' + _mat(resp.A, "    ") + ",")
        out.append('    "masses": ' + _vec(masses) + ",")
        terms = [
            '      {"omega_sq": ' + fmt(w) + ', "C": ' + _mat(C, "      ") + "}"
            for w, C in resp.terms
        ]
        out.append('    "terms": [' + ("\n" + ",\n".join(terms) + "\n    ]" if terms else "]"))
        out.append("  }")
    else:
        raise TypeError(f"cannot serialize {type(resp).__name__}")
    out.append("}")
    return "\n".join(out) + "\n"


def loads_response(text: str):
    """Parse a response spec into a StaticResponse or ModalResponse."""
    doc = _load_json(text, "response spec")
    raw = _field(doc, "terminal_positions", "response spec")
    if not isinstance(raw, list) or not raw:
        raise ParseError("terminal_positions: expected a non-empty list of points")
    d = len(raw[0]) if isinstance(raw[0], list) else None
    if d not in (2, 3):
        raise ParseError("terminal_positions[0]: points must have 2 or 3 coordinates")
    pts = np.array([_numbers(p, f"terminal_positions[{i}]", d) for i, p in enumerate(raw)])
    nd = pts.size
    has_static, has_modal = "static" in doc, "modal" in doc
    if has_static == has_modal:
        raise ParseError("response spec: exactly one of 'static' or 'modal' is required")
    if has_static:
        W = _matrix(_field(doc["static"], "matrix", "static"), "static.matrix", nd)
        return StaticResponse(pts, W)
    modal = doc["modal"]
    A = _matrix(_field(modal, "A", "modal"), "modal.A", nd)
    masses = _numbers(_field(modal, "masses", "modal"), "modal.masses", len(pts))
    terms = []
    raw_terms = _field(modal, "terms", "modal")
    if not isinstance(raw_terms, list):
        raise ParseError("modal.terms: expected a list")
    for i, rec in enumerate(raw_terms):
        where = f"modal.terms[{i}]"
        w = _number(_field(rec, "omega_sq", where), f"{where}.omega_sq")
        terms.append((w, _matrix(_field(rec, "C", where), f"{where}.C", nd)))
    return ModalResponse.from_masses(pts, A, masses, terms)


# -- files ------------------------------------------------------------------


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc


def read_network(path) -> Network:
    return loads_network(_read(path))


def write_network(net: Network, path):
    Path(path).write_text(dumps_network(net), encoding="utf-8")


def read_response(path):
    return loads_response(_read(path))


def write_response(resp, path):
    Path(path).write_text(dumps_response(resp), encoding="utf-8")
