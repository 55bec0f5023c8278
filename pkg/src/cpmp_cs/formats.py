"""Instance and solution file formats.

Canonical format (this package's own)::

    # comments and blank lines are ignored
    n p                 (or: n=N p=P)
    id x y demand capacity      one line per node, ids 0..n-1 in order

ORLibrary format (Osman & Christofides capacitated clustering files)::

    count               optional number of problems in the file
    number best_known   per problem
    n p capacity
    id x y demand       n lines, ids 1-based

The ORLibrary column order is configurable through :class:`OrlibLayout`.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import ContractViolation, ParseError
from .instance import DistanceMode, Nest, Node, ProblemInstance


class InstanceFormat(str, enum.Enum):
    CANONICAL = "canonical"
    ORLIB = "orlib"


CANONICAL_SUFFIXES = (".cpmp", ".inst")


@dataclass(frozen=True)
class OrlibLayout:
    problem_header: tuple[str, ...] = ("number", "best_known")
    size_header: tuple[str, ...] = ("n", "p", "capacity")
    node_columns: tuple[str, ...] = ("id", "x", "y", "demand")

    def __post_init__(self):
        for need in ("x", "y", "demand"):
            if need not in self.node_columns:
                raise ContractViolation(f"node_columns must contain {need!r}")
        for need in ("n", "p", "capacity"):
            if need not in self.size_header:
                raise ContractViolation(f"size_header must contain {need!r}")

    @classmethod
    def from_string(cls, spec: str) -> "OrlibLayout":
        return cls(node_columns=tuple(c.strip() for c in spec.split(",") if c.strip()))


@dataclass(frozen=True)
class OrlibProblem:
    instance: ProblemInstance
    number: int | None
    best_known: float | None


class _Lines:
    """Iterator over non-empty, comment-free lines with 1-based numbers."""

    def __init__(self, text: str):
        self.items = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0]
            if body.strip():
                self.items.append((lineno, raw, body.split()))
        self.pos = 0
        self.last_line = len(text.splitlines())

    def __bool__(self):
        return self.pos < len(self.items)

    def peek(self):
        return self.items[self.pos]

    def take(self, what: str):
        if not self:
            raise ParseError(f"unexpected end of file, expected {what}", line=self.last_line + 1)
        item = self.items[self.pos]
        self.pos += 1
        return item


def _number(token: str, lineno: int, raw: str, kind=float):
    try:
        value = kind(token) if kind is float else int(token)
    except ValueError:
        col = raw.find(token) + 1
        raise ParseError(f"expected {'an integer' if kind is int else 'a number'}, got {token!r}", lineno, col) from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", lineno, raw.find(token) + 1)
    return value


def _decode(data) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8 text ({exc})") from None
    return data


def parse_canonical(data, name: str = "instance") -> ProblemInstance:
    lines = _Lines(_decode(data))
    lineno, raw, tokens = lines.take("header 'n p'")
    if len(tokens) != 2:
        raise ParseError(f"header must have 2 fields (n p), found {len(tokens)}", lineno, 1)
    header = {}
    for k, tok in zip(("n", "p"), tokens):
        if "=" in tok:
            key, _, tok = tok.partition("=")
            if key != k:
                raise ParseError(f"expected '{k}=', got {key!r}", lineno, raw.find(key) + 1)
        header[k] = _number(tok, lineno, raw, int)
    n, p = header["n"], header["p"]
    nodes = []
    for i in range(n):
        lineno, raw, tokens = lines.take(f"node record {i + 1} of {n}")
        if len(tokens) != 5:
            raise ParseError(f"node record needs 5 fields (id x y demand capacity), found {len(tokens)}", lineno, 1)
        node_id = _number(tokens[0], lineno, raw, int)
        if node_id != i:
            raise ParseError(f"node ids must be 0..n-1 in order; expected {i}, got {node_id}", lineno, 1)
        x, y, q, c = (_number(t, lineno, raw) for t in tokens[1:])
        nodes.append(_node(i, x, y, q, c, lineno))
    if lines:
        lineno, _, _ = lines.peek()
        raise ParseError(f"trailing data after {n} node records", lineno, 1)
    return _instance(nodes, p, name)


def _node(i, x, y, q, c, lineno) -> Node:
    try:
        return Node(i, x, y, q, c)
    except ContractViolation as exc:
        raise ParseError(str(exc), lineno) from None


def _instance(nodes, p, name) -> ProblemInstance:
    try:
        return ProblemInstance(tuple(nodes), p, name)
    except ContractViolation as exc:
        raise ParseError(str(exc)) from None


def parse_orlib(data, name: str = "orlib", layout: OrlibLayout = OrlibLayout()) -> list[OrlibProblem]:
    """All problems of an ORLibrary capacitated p-median file.

    Problems are named ``<name>-<k>`` with ``k`` the 1-based position in the
    file, zero-padded to two digits.
    """
    lines = _Lines(_decode(data))
    count = None
    if lines and len(lines.peek()[2]) == 1:
        lineno, raw, tokens = lines.take("problem count")
        count = _number(tokens[0], lineno, raw, int)
    problems = []
    while lines and (count is None or len(problems) < count):
        problems.append(_parse_orlib_problem(lines, f"{name}-{len(problems) + 1:02d}", layout))
    if count is not None and len(problems) < count:
        raise ParseError(f"file announces {count} problems, found {len(problems)}", lines.last_line + 1)
    if lines:
        raise ParseError("trailing data after the last problem", lines.peek()[0], 1)
    if not problems:
        raise ParseError("no problems found", 1)
    return problems


def _fields(lines: _Lines, columns, what):
    lineno, raw, tokens = lines.take(what)
    if len(tokens) < len(columns):
        raise ParseError(f"{what} needs {len(columns)} fields ({' '.join(columns)}), found {len(tokens)}", lineno, 1)
    return lineno, {c: _number(t, lineno, raw) for c, t in zip(columns, tokens)}


def _parse_orlib_problem(lines: _Lines, name: str, layout: OrlibLayout) -> OrlibProblem:
    number = best = None
    if layout.problem_header:
        _, head = _fields(lines, layout.problem_header, "problem header")
        number = int(head["number"]) if "number" in head else None
        best = head.get("best_known")
    lineno, size = _fields(lines, layout.size_header, "size line (n p capacity)")
    n, p, cap = int(size["n"]), int(size["p"]), size["capacity"]
    if n < 1:
        raise ParseError(f"n must be positive, got {n}", lineno, 1)
    nodes = []
    for i in range(n):
        lineno, rec = _fields(lines, layout.node_columns, f"node record {i + 1} of {n}")
        nodes.append(_node(i, rec["x"], rec["y"], rec["demand"], rec.get("capacity", cap), lineno))
    return OrlibProblem(_instance(nodes, p, name), number, best)


def parse_instance(data, fmt=InstanceFormat.CANONICAL, name: str = "instance", problem: int = 1,
                   layout: OrlibLayout = OrlibLayout()) -> ProblemInstance:
    """Parse one instance; for multi-problem ORLibrary files pick ``problem`` (1-based)."""
    fmt = InstanceFormat(fmt)
    if fmt is InstanceFormat.CANONICAL:
        return parse_canonical(data, name)
    problems = parse_orlib(data, name, layout)
    if not 1 <= problem <= len(problems):
        raise ParseError(f"problem {problem} requested, file holds {len(problems)}")
    return problems[problem - 1].instance


def detect_format(path: Path) -> InstanceFormat:
    return InstanceFormat.CANONICAL if Path(path).suffix.lower() in CANONICAL_SUFFIXES else InstanceFormat.ORLIB


def load_problems(path, fmt="auto", layout: OrlibLayout = OrlibLayout()) -> list[OrlibProblem]:
    """Every problem stored in ``path`` (a canonical file holds exactly one)."""
    path = Path(path)
    fmt = detect_format(path) if fmt == "auto" else InstanceFormat(fmt)
    data = path.read_bytes()
    if fmt is InstanceFormat.CANONICAL:
        return [OrlibProblem(parse_canonical(data, path.stem), None, None)]
    return parse_orlib(data, path.stem, layout)


def dump_canonical(instance: ProblemInstance) -> str:
    out = [f"# {instance.name}", f"{instance.n} {instance.p}"]
    for node in instance.nodes:
        out.append(f"{node.id} {node.x:g} {node.y:g} {node.demand:g} {node.capacity:g}")
    return "\n".join(out) + "\n"


def write_solution(path, instance: ProblemInstance, nest: Nest, mode=DistanceMode.FLOAT_EXACT) -> None:
    doc = {"instance": instance.name, "distance_mode": DistanceMode(mode).value, **nest.to_dict()}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_solution(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"solution file is not valid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    for key in ("medians", "assignment"):
        if key not in doc:
            raise ParseError(f"solution file lacks {key!r}")
    return doc
