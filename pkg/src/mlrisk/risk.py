"""Likelihood propagation and attack-path ranking over attack graphs.

Leaf facts carry exploitation probabilities taken from vulnerability
metadata (access-complexity classes for traditional vulnerabilities, attack
performance for adversarial-ML ones; every other fact is certain).  AND
nodes multiply their parents, OR nodes combine them by inclusion-exclusion,
and a node's risk is its likelihood times the impact of the compromised
asset.  Attack paths are minimal proof trees, ranked by descending risk.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .cmlvss import impact_value, performance_likelihood
from .core import Atom, AttackGraph, KIND_AND, KIND_LEAF, KIND_OR
from .datalog import parse_atom

__all__ = [
    "ACCESS_COMPLEXITY_PROBABILITY",
    "VulnerabilityInfo",
    "VulnerabilityMetadata",
    "MissingMetadataError",
    "CycleError",
    "PathLimitError",
    "vuln_likelihood",
    "combine_and",
    "combine_or",
    "build_likelihood_equations",
    "node_risk",
    "AttackPath",
    "enumerate_paths",
    "RiskReport",
    "assess",
]

# CVSS v2 access-complexity exploitation probabilities.
ACCESS_COMPLEXITY_PROBABILITY = {"High": 0.35, "Medium": 0.61, "Low": 0.71}

# Leaf predicates that must carry vulnerability metadata (arity suffixes vary).
VULNERABILITY_PREDICATE_PREFIXES = ("vulExists", "vulModel")


class MissingMetadataError(ValueError):
    """A vulnerability-bearing leaf has no metadata entry."""


class CycleError(RuntimeError):
    """The likelihood-relevant subgraph contains a directed cycle."""

    def __init__(self, component: Sequence[str]):
        self.component = tuple(sorted(component))
        super().__init__(
            "attack graph contains a cycle; one strongly connected component: "
            + ", ".join(self.component)
        )


class PathLimitError(RuntimeError):
    """Path enumeration exceeded the combinatorial cap."""


@dataclass(frozen=True)
class VulnerabilityInfo:
    """Metadata for one vulnerability id.

    ``kind`` is ``traditional`` (scored by access complexity), ``aml``
    (scored by attack performance) or ``property`` (a model trait that gates
    rules but is not itself exploited; likelihood 1).
    """

    vuln_id: str
    kind: str
    klass: str | None = None
    impacts: tuple[str, ...] = ()
    technique: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("traditional", "aml", "property"):
            raise ValueError(f"{self.vuln_id}: unknown vulnerability kind {self.kind!r}")
        if self.kind in ("traditional", "aml") and self.klass not in ("Low", "Medium", "High"):
            raise ValueError(f"{self.vuln_id}: kind {self.kind} requires a Low/Medium/High class")


@dataclass
class VulnerabilityMetadata:
    """Sidecar table: vulnerability id -> :class:`VulnerabilityInfo`."""

    entries: dict[str, VulnerabilityInfo] = field(default_factory=dict)

    def lookup_atom(self, atom: Atom) -> VulnerabilityInfo | None:
        """Find the entry referenced by any constant argument of an atom."""
        for term in atom.args:
            if not term.is_variable and isinstance(term.value, str):
                info = self.entries.get(term.value)
                if info is not None:
                    return info
        return None

    @classmethod
    def from_json_dict(cls, data: dict) -> "VulnerabilityMetadata":
        entries = {}
        for vuln_id, spec in data.get("vulnerabilities", {}).items():
            entries[vuln_id] = VulnerabilityInfo(
                vuln_id=vuln_id,
                kind=spec["kind"],
                klass=spec.get("class"),
                impacts=tuple(spec.get("impacts", ())),
                technique=spec.get("technique"),
            )
        return cls(entries=entries)

    @classmethod
    def from_json(cls, text: str) -> "VulnerabilityMetadata":
        return cls.from_json_dict(json.loads(text))

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "vulnerabilities": {
                vid: {
                    "kind": info.kind,
                    **({"class": info.klass} if info.klass else {}),
                    "impacts": list(info.impacts),
                    **({"technique": info.technique} if info.technique else {}),
                }
                for vid, info in sorted(self.entries.items())
            },
        }


def vuln_likelihood(info: VulnerabilityInfo | None) -> float:
    """Exploitation probability of a leaf given its vulnerability metadata.

    Plain configuration facts (no metadata) and model properties can be
    materialized in any situation, so they carry probability 1.
    """
    if info is None or info.kind == "property":
        return 1.0
    if info.kind == "traditional":
        return ACCESS_COMPLEXITY_PROBABILITY[info.klass]  # type: ignore[index]
    return performance_likelihood(info.klass)  # type: ignore[arg-type]


def combine_and(likelihoods: Iterable[float]) -> float:
    """Probability that all parents materialize: the plain product."""
    return math.prod(likelihoods)


def combine_or(likelihoods: Iterable[float]) -> float:
    """Inclusion-exclusion over the parents, via the complement product.

    1 - prod(1 - p_i) equals the expanded alternating inclusion-exclusion
    sum for any number of parents.
    """
    return 1.0 - math.prod(1.0 - p for p in likelihoods)


def _leaf_likelihoods(
    graph: AttackGraph,
    metadata: VulnerabilityMetadata | None,
) -> dict[str, float]:
    metadata = metadata or VulnerabilityMetadata()
    out: dict[str, float] = {}
    for node in graph.nodes_of_kind(KIND_LEAF):
        atom = parse_atom(node.fact or node.label)
        info = metadata.lookup_atom(atom)
        if info is None and atom.predicate.startswith(VULNERABILITY_PREDICATE_PREFIXES):
            raise MissingMetadataError(
                f"vulnerability atom {atom} has no metadata entry"
            )
        out[node.id] = vuln_likelihood(info)
    return out


def build_likelihood_equations(
    graph: AttackGraph,
    metadata: VulnerabilityMetadata | None = None,
    order: Sequence[str] | None = None,
) -> dict[str, float]:
    """Assign a likelihood to every node of an acyclic attack graph.

    Maintains a processed set (initially the leaves) and an unprocessed
    worklist; a node is popped and resolved once all of its parents are
    processed, otherwise it is pushed back.  The result does not depend on
    the worklist order.  A graph whose non-leaf part contains a directed
    cycle raises :class:`CycleError` naming one strongly connected component.
    """
    processed: dict[str, float] = _leaf_likelihoods(graph, metadata)
    if order is None:
        unprocessed = [nid for nid in sorted(graph.nodes) if nid not in processed]
    else:
        unprocessed = [nid for nid in order if nid not in processed]
        missing = set(graph.nodes) - set(unprocessed) - set(processed)
        if missing:
            raise ValueError(f"worklist order misses nodes: {sorted(missing)}")

    while unprocessed:
        progressed = False
        deferred: list[str] = []
        for nid in unprocessed:
            parents = graph.incoming(nid)
            if all(p in processed for p in parents):
                values = [processed[p] for p in parents]  # parents come sorted by id
                kind = graph.nodes[nid].kind
                processed[nid] = combine_and(values) if kind == KIND_AND else combine_or(values)
                progressed = True
            else:
                deferred.append(nid)
        if not progressed:
            raise CycleError(_find_scc(graph, deferred))
        unprocessed = deferred
    return processed


def _find_scc(graph: AttackGraph, candidates: Sequence[str]) -> list[str]:
    """Return one non-trivial strongly connected component (Tarjan)."""
    candidate_set = set(candidates)
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = [0]
    found: list[list[str]] = []

    def strongconnect(v: str) -> None:
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in graph.outgoing(v):
            if w not in candidate_set:
                continue
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            component = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                component.append(w)
                if w == v:
                    break
            if len(component) > 1:
                found.append(component)

    for v in candidates:
        if v not in index:
            strongconnect(v)
    if not found:
        return list(candidates)
    return sorted(found, key=lambda c: sorted(c)[0])[0]


def node_risk(node_id: str, likelihoods: Mapping[str, float], impact: float) -> float:
    """Risk of a node: impact of the compromised asset times its likelihood."""
    return impact * likelihoods[node_id]


# ------------------------------------------------------------------- paths


@dataclass(frozen=True)
class AttackPath:
    """One minimal proof tree of a goal, with its risk annotations."""

    goal: str
    rank: int
    nodes: frozenset[str]
    leaves: tuple[str, ...]
    phases: tuple[str, ...]
    likelihood: float
    impacts: tuple[str, ...]
    impact: float
    risk: float
    vulnerabilities: tuple[str, ...]
    techniques: tuple[str, ...]


def _proof_trees(graph: AttackGraph, goal: str, cap: int):
    """Yield node-id sets of minimal proof trees for one goal OR node.

    A tree commits to exactly one AND parent at every OR node it touches;
    the same OR reached through two branches keeps its earlier choice.
    """
    count = [0]

    def expand(pending: tuple[str, ...], included: frozenset[str], choices: dict[str, str]):
        while pending:
            nid, pending = pending[0], pending[1:]
            if nid in included:
                continue
            node = graph.nodes[nid]
            included = included | {nid}
            if node.kind == KIND_LEAF:
                continue
            if node.kind == KIND_AND:
                pending = pending + graph.incoming(nid)
                continue
            parents = graph.incoming(nid)
            chosen = choices.get(nid)
            if chosen is not None:
                pending = pending + (chosen,)
                continue
            for parent in parents:
                yield from expand(
                    pending + (parent,), included, {**choices, nid: parent}
                )
            return
        count[0] += 1
        if count[0] > cap:
            raise PathLimitError(f"more than {cap} attack paths; raise the cap to continue")
        yield included

    yield from expand((goal,), frozenset(), {})


def _topological_phases(graph: AttackGraph, tree: frozenset[str]) -> tuple[str, ...]:
    """Derived-fact labels of a proof tree, ordered leaves-to-goal."""
    indeg = {n: 0 for n in tree}
    for src, dst in graph.edges:
        if src in tree and dst in tree:
            indeg[dst] += 1
    ready = sorted((n for n, d in indeg.items() if d == 0), key=lambda n: graph.nodes[n].label)
    order: list[str] = []
    while ready:
        nid = ready.pop(0)
        order.append(nid)
        for dst in graph.outgoing(nid):
            if dst not in tree:
                continue
            indeg[dst] -= 1
            if indeg[dst] == 0:
                ready.append(dst)
        ready.sort(key=lambda n: graph.nodes[n].label)
    return tuple(graph.nodes[n].label for n in order if graph.nodes[n].kind == KIND_OR)


def enumerate_paths(
    graph: AttackGraph,
    metadata: VulnerabilityMetadata | None = None,
    limit: int | None = None,
    cap: int = 10_000,
    weights=None,
) -> list[AttackPath]:
    """Enumerate, score and rank the minimal attack paths to the goal set.

    A path's likelihood is the product of its distinct leaf probabilities
    (each exploited vulnerability counts once even when several preconditions
    rest on it); its impact is the value of the union of impacts declared by
    the vulnerabilities on the path (0.33 per impact by default, or the
    impact-group weight mass when a weight model is supplied).
    """
    metadata = metadata or VulnerabilityMetadata()
    leaf_lh = _leaf_likelihoods(graph, metadata)

    raw: list[tuple[str, frozenset[str]]] = []
    seen: set[frozenset[str]] = set()
    for goal in graph.goals:
        for tree in _proof_trees(graph, goal, cap):
            if tree in seen:
                continue
            seen.add(tree)
            raw.append((goal, tree))

    scored = []
    for goal, tree in raw:
        leaves = tuple(
            sorted(
                (n for n in tree if graph.nodes[n].kind == KIND_LEAF),
                key=lambda n: graph.nodes[n].label,
            )
        )
        likelihood = combine_and(leaf_lh[n] for n in leaves)
        impacts: list[str] = []
        vulns: list[str] = []
        techniques: list[str] = []
        for n in leaves:
            atom = parse_atom(graph.nodes[n].fact or graph.nodes[n].label)
            info = metadata.lookup_atom(atom)
            if info is None or info.kind == "property":
                continue
            vulns.append(info.vuln_id)
            impacts.extend(info.impacts)
            if info.technique:
                techniques.append(info.technique)
        impacts_set = tuple(sorted(set(impacts)))
        impact = impact_value(impacts_set, weights)
        scored.append(
            {
                "goal": goal,
                "tree": tree,
                "leaves": leaves,
                "likelihood": likelihood,
                "impacts": impacts_set,
                "impact": impact,
                "risk": impact * likelihood,
                "vulnerabilities": tuple(sorted(set(vulns))),
                "techniques": tuple(sorted(set(techniques))),
                "phases": _topological_phases(graph, tree),
            }
        )

    scored.sort(
        key=lambda p: (-p["risk"], -p["likelihood"], p["phases"], p["leaves"])
    )
    if limit is not None:
        scored = scored[:limit]
    return [
        AttackPath(
            goal=p["goal"],
            rank=i + 1,
            nodes=p["tree"],
            leaves=p["leaves"],
            phases=p["phases"],
            likelihood=p["likelihood"],
            impacts=p["impacts"],
            impact=p["impact"],
            risk=p["risk"],
            vulnerabilities=p["vulnerabilities"],
            techniques=p["techniques"],
        )
        for i, p in enumerate(scored)
    ]


# ------------------------------------------------------------------ report


@dataclass
class RiskReport:
    paths: list[AttackPath]
    node_likelihoods: dict[str, float]
    graph: AttackGraph

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "paths": [
                {
                    "rank": p.rank,
                    "risk": p.risk,
                    "impact": p.impact,
                    "likelihood": p.likelihood,
                    "impacts": list(p.impacts),
                    "phases": list(p.phases),
                    "leaves": [self.graph.nodes[n].label for n in p.leaves],
                    "vulnerabilities": list(p.vulnerabilities),
                    "techniques": list(p.techniques),
                }
                for p in self.paths
            ],
            "goal_likelihoods": {
                self.graph.nodes[g].label: self.node_likelihoods[g] for g in self.graph.goals
            },
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    def to_text(self) -> str:
        """Two-decimal summary for standard output."""
        if not self.paths:
            return "No attack paths reach the goal.\n"
        lines = [f"{len(self.paths)} attack path(s), ranked by risk:"]
        for p in self.paths:
            lines.append(
                f"  #{p.rank}  risk={p.risk:.2f}  likelihood={p.likelihood:.2f}  "
                f"impact={p.impact:.2f} ({', '.join(p.impacts) or 'none'})"
            )
            if p.techniques:
                lines.append(f"      techniques: {', '.join(p.techniques)}")
            if p.vulnerabilities:
                lines.append(f"      vulnerabilities: {', '.join(p.vulnerabilities)}")
            for i, phase in enumerate(p.phases, 1):
                lines.append(f"      phase {i}: {phase}")
        return "\n".join(lines) + "\n"


def assess(
    graph: AttackGraph,
    metadata: VulnerabilityMetadata | None = None,
    limit: int | None = None,
    cap: int = 10_000,
    weights=None,
) -> RiskReport:
    """Full likelihood propagation plus ranked path extraction."""
    likelihoods = build_likelihood_equations(graph, metadata)
    paths = enumerate_paths(graph, metadata, limit=limit, cap=cap, weights=weights)
    return RiskReport(paths=paths, node_likelihoods=likelihoods, graph=graph)
