"""Core data model: terms, atoms, rules and the logical attack graph.

The attack graph is a directed graph over three node kinds:

* LEAF  -- a primitive fact (no incoming edges),
* AND   -- one successful rule instantiation (incoming edges from its
           preconditions, exactly one outgoing edge to the fact it proves),
* OR    -- a derived fact (incoming edges from the AND nodes that prove it).

Graphs are immutable after construction and safe to share across threads.
Node identifiers are content-derived so that identical inputs always yield
identical graphs.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field

__all__ = [
    "Term",
    "Atom",
    "Rule",
    "Node",
    "AttackGraph",
    "EdgeViolation",
    "edge_partition_check",
]

_IDENT_RE = re.compile(r"[a-z][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Term:
    """A constant or a variable.

    Variables start with an uppercase letter (or ``_``); constants start with
    a lowercase letter, or are quoted strings or integers.
    """

    kind: str  # "constant" | "variable"
    value: str | int

    def __post_init__(self) -> None:
        if self.kind not in ("constant", "variable"):
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.kind == "variable":
            text = str(self.value)
            if not (text[:1].isupper() or text[:1] == "_"):
                raise ValueError(f"variable must start uppercase or '_': {text!r}")
        if isinstance(self.value, float):
            raise ValueError("float constants are not supported in terms")

    @property
    def is_variable(self) -> bool:
        return self.kind == "variable"

    @staticmethod
    def var(name: str) -> "Term":
        return Term("variable", name)

    @staticmethod
    def const(value: str | int) -> "Term":
        return Term("constant", value)

    def __str__(self) -> str:
        if self.kind == "variable":
            return str(self.value)
        if isinstance(self.value, int):
            return str(self.value)
        if _IDENT_RE.match(self.value):
            return self.value
        return "'" + self.value.replace("\\", "\\\\").replace("'", "\\'") + "'"


@dataclass(frozen=True)
class Atom:
    """A predicate applied to a fixed list of terms."""

    predicate: str
    args: tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def is_ground(self) -> bool:
        return all(not t.is_variable for t in self.args)

    def variables(self) -> set[str]:
        return {str(t.value) for t in self.args if t.is_variable}

    def substitute(self, binding: dict[str, Term]) -> "Atom":
        new_args = tuple(
            binding.get(str(t.value), t) if t.is_variable else t for t in self.args
        )
        return Atom(self.predicate, new_args)

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(str(t) for t in self.args)})"


@dataclass(frozen=True)
class Rule:
    """A Horn clause: ``head :- body``.

    Every variable occurring in the head must appear in at least one body
    atom (range restriction), which guarantees that derived facts are ground.
    """

    head: Atom
    body: tuple[Atom, ...]
    id: str
    label: str = ""

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError(f"rule {self.id}: empty body (write a fact instead)")
        missing = self.head.variables() - set().union(*(b.variables() for b in self.body))
        if missing:
            raise ValueError(
                f"rule {self.id}: head variables {sorted(missing)} do not occur in the body"
            )

    def variables(self) -> set[str]:
        out = self.head.variables()
        for b in self.body:
            out |= b.variables()
        return out

    def __str__(self) -> str:
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


# Node kinds used throughout the graph layer.
KIND_AND = "AND"
KIND_OR = "OR"
KIND_LEAF = "LEAF"


@dataclass(frozen=True)
class Node:
    id: str
    kind: str  # AND | OR | LEAF
    label: str
    fact: str | None = None  # ground atom text, for OR / LEAF nodes
    rule_id: str | None = None  # for AND nodes


def _digest(*parts: str) -> str:
    h = hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()
    return h[:12]


def fact_node_id(atom: Atom, primitive: bool) -> str:
    return _digest("leaf" if primitive else "derived", str(atom))


def derivation_node_id(rule_id: str, head: Atom, supports: frozenset[str]) -> str:
    return _digest("rule", rule_id, str(head), *sorted(supports))


@dataclass
class AttackGraph:
    """Immutable-by-convention logical attack graph.

    ``nodes`` maps node id to :class:`Node`; ``edges`` is a sorted tuple of
    (src, dst) id pairs; ``goals`` lists the OR nodes matching the goal
    pattern used during construction.
    """

    nodes: dict[str, Node]
    edges: tuple[tuple[str, str], ...]
    goals: tuple[str, ...]
    _incoming: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)
    _outgoing: dict[str, tuple[str, ...]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.edges = tuple(sorted(set(self.edges)))
        self.goals = tuple(sorted(set(self.goals)))
        inc: dict[str, list[str]] = {n: [] for n in self.nodes}
        out: dict[str, list[str]] = {n: [] for n in self.nodes}
        for src, dst in self.edges:
            if src not in self.nodes or dst not in self.nodes:
                raise ValueError(f"edge ({src}, {dst}) references an unknown node")
            inc[dst].append(src)
            out[src].append(dst)
        self._incoming = {n: tuple(sorted(v)) for n, v in inc.items()}
        self._outgoing = {n: tuple(sorted(v)) for n, v in out.items()}

    def incoming(self, node_id: str) -> tuple[str, ...]:
        return self._incoming[node_id]

    def outgoing(self, node_id: str) -> tuple[str, ...]:
        return self._outgoing[node_id]

    def nodes_of_kind(self, kind: str) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == kind]

    def __len__(self) -> int:
        return len(self.nodes)

    # ---------------------------------------------------------------- export

    def to_json_dict(self) -> dict:
        def sort_key(n: Node):
            return ({"LEAF": 0, "AND": 1, "OR": 2}[n.kind], n.label, n.id)

        nodes = []
        for n in sorted(self.nodes.values(), key=sort_key):
            entry: dict = {"id": n.id, "kind": n.kind, "label": n.label}
            if n.kind == KIND_AND:
                entry["rule_id"] = n.rule_id
            else:
                entry["fact"] = n.fact
            nodes.append(entry)
        return {
            "schema_version": 1,
            "nodes": nodes,
            "edges": [{"src": s, "dst": d} for s, d in self.edges],
            "goals": list(self.goals),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, data: dict) -> "AttackGraph":
        nodes = {}
        for entry in data["nodes"]:
            if entry["kind"] not in (KIND_AND, KIND_OR, KIND_LEAF):
                raise ValueError(f"node {entry['id']}: unknown kind {entry['kind']!r}")
            nodes[entry["id"]] = Node(
                id=entry["id"],
                kind=entry["kind"],
                label=entry["label"],
                fact=entry.get("fact"),
                rule_id=entry.get("rule_id"),
            )
        edges = tuple((e["src"], e["dst"]) for e in data["edges"])
        return cls(nodes=nodes, edges=edges, goals=tuple(data.get("goals", ())))

    @classmethod
    def from_json(cls, text: str) -> "AttackGraph":
        return cls.from_json_dict(json.loads(text))

    def to_dot(self) -> str:
        """Render as graphviz source: AND ellipses, OR diamonds, LEAF boxes."""
        shapes = {KIND_AND: "ellipse", KIND_OR: "diamond", KIND_LEAF: "box"}
        lines = ["digraph attack_graph {", "  rankdir=LR;"]
        for n in sorted(self.nodes.values(), key=lambda x: x.id):
            label = n.label.replace('"', '\\"')
            extra = ", penwidth=2, color=red" if n.id in self.goals else ""
            lines.append(f'  "{n.id}" [shape={shapes[n.kind]}, label="{label}"{extra}];')
        for src, dst in self.edges:
            lines.append(f'  "{src}" -> "{dst}";')
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class EdgeViolation:
    edge: tuple[str, str] | None
    message: str


def edge_partition_check(graph: AttackGraph) -> list[EdgeViolation]:
    """Check the structural invariants of a logical attack graph.

    Returns one violation per offending edge or node; an empty report means
    the graph is well formed:

    * edges only run (LEAF|OR) -> AND or AND -> OR,
    * each AND node has exactly one outgoing edge and at least one incoming,
    * each OR node has at least one incoming AND node,
    * LEAF nodes have no incoming edges,
    * no two OR/LEAF nodes carry the same ground fact.
    """
    violations: list[EdgeViolation] = []
    for src, dst in graph.edges:
        ks, kd = graph.nodes[src].kind, graph.nodes[dst].kind
        if ks in (KIND_LEAF, KIND_OR) and kd == KIND_AND:
            continue
        if ks == KIND_AND and kd == KIND_OR:
            continue
        violations.append(
            EdgeViolation((src, dst), f"illegal edge kind {ks} -> {kd}")
        )
    for node in graph.nodes.values():
        n_in = len(graph.incoming(node.id))
        n_out = len(graph.outgoing(node.id))
        if node.kind == KIND_AND:
            if n_out != 1:
                violations.append(
                    EdgeViolation(None, f"AND node {node.id} has {n_out} outgoing edges")
                )
            if n_in < 1:
                violations.append(
                    EdgeViolation(None, f"AND node {node.id} has no incoming edges")
                )
        elif node.kind == KIND_OR:
            if not any(graph.nodes[p].kind == KIND_AND for p in graph.incoming(node.id)):
                violations.append(
                    EdgeViolation(None, f"OR node {node.id} has no incoming AND node")
                )
        elif node.kind == KIND_LEAF:
            if n_in:
                violations.append(
                    EdgeViolation(None, f"LEAF node {node.id} has incoming edges")
                )
    seen: dict[str, str] = {}
    for node in graph.nodes.values():
        if node.fact is None:
            continue
        if node.fact in seen:
            violations.append(
                EdgeViolation(None, f"fact {node.fact!r} appears as two nodes")
            )
        seen[node.fact] = node.id
    return violations
