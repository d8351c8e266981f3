"""Analytic hierarchy process: pairwise matrices, weights, consistency, agreement.

Weight derivation uses the principal right eigenvector obtained by power
iteration (the canonical AHP estimator); a geometric-mean variant is kept
behind a flag for sensitivity analysis.  Consistency is gated at CR < 0.1
and cross-expert agreement is measured with Kendall's coefficient of
concordance (W > 0.6 counts as strong agreement).
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

__all__ = [
    "LIKERT_SCALE",
    "RANDOM_INDEX",
    "CR_THRESHOLD",
    "STRONG_AGREEMENT",
    "PairwiseMatrix",
    "ConvergenceError",
    "InconsistentResponsesError",
    "derive_weights",
    "principal_eigenvalue",
    "consistency_ratio",
    "KendallResult",
    "kendalls_w",
    "HierarchyNode",
    "Hierarchy",
    "load_default_hierarchy",
    "ExpertResponse",
    "load_responses_csv",
    "dump_responses_csv",
    "WeightModel",
    "aggregate_experts",
]

logger = logging.getLogger(__name__)

CR_THRESHOLD = 0.1
STRONG_AGREEMENT = 0.6

# Saaty random-index table for n = 1..10 (standard convention).
RANDOM_INDEX = (0.0, 0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49)

# The 17 admissible ratio positions of the nine-level importance scale.
LIKERT_SCALE = tuple(1.0 / k for k in range(9, 1, -1)) + tuple(float(k) for k in range(1, 10))


class ConvergenceError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


@dataclass
class PairwiseMatrix:
    """A reciprocal pairwise-comparison matrix over labelled items.

    Invariants: a_ii = 1, a_ij * a_ji = 1 and all entries positive.
    """

    items: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        n = len(self.items)
        if self.values.shape != (n, n):
            raise ValueError(f"matrix shape {self.values.shape} does not match {n} items")
        if np.any(self.values <= 0):
            raise ValueError("pairwise matrix entries must be positive")
        if not np.allclose(np.diag(self.values), 1.0, atol=1e-9):
            raise ValueError("pairwise matrix diagonal must be 1")
        if not np.allclose(self.values * self.values.T, 1.0, atol=1e-6):
            raise ValueError("pairwise matrix must be reciprocal (a_ij * a_ji = 1)")

    @property
    def n(self) -> int:
        return len(self.items)

    @classmethod
    def identity(cls, items: Sequence[str]) -> "PairwiseMatrix":
        return cls(tuple(items), np.ones((len(items), len(items))))

    @classmethod
    def from_judgments(
        cls,
        items: Sequence[str],
        judgments: Mapping[tuple[str, str], float],
    ) -> "PairwiseMatrix":
        """Build a matrix from (item_a, item_b) -> ratio judgments.

        The ratio is a_ab: how many times item_a outweighs item_b on the
        nine-level scale.  Missing pairs default to 1 (equal importance).
        """
        idx = {item: i for i, item in enumerate(items)}
        values = np.ones((len(items), len(items)))
        for (a, b), ratio in judgments.items():
            if a not in idx or b not in idx:
                raise KeyError(f"judgment references unknown item: {(a, b)}")
            if ratio <= 0:
                raise ValueError(f"ratio for {(a, b)} must be positive")
            values[idx[a], idx[b]] = ratio
            values[idx[b], idx[a]] = 1.0 / ratio
        return cls(tuple(items), values)

    @classmethod
    def consistent_from_weights(
        cls, items: Sequence[str], weights: Sequence[float]
    ) -> "PairwiseMatrix":
        w = np.asarray(weights, dtype=float)
        return cls(tuple(items), np.outer(w, 1.0 / w))

    def permuted(self, order: Sequence[int]) -> "PairwiseMatrix":
        order = list(order)
        return PairwiseMatrix(
            tuple(self.items[i] for i in order),
            self.values[np.ix_(order, order)],
        )


def derive_weights(
    matrix: PairwiseMatrix,
    method: str = "eigenvector",
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> np.ndarray:
    """Derive the priority vector of a pairwise matrix (positive, sums to 1).

    ``eigenvector`` runs power iteration to the principal eigenvector;
    ``geometric`` returns the normalized geometric mean of the rows (the two
    coincide exactly on consistent matrices).
    """
    a = matrix.values
    n = matrix.n
    if method == "geometric":
        g = np.exp(np.mean(np.log(a), axis=1))
        return g / g.sum()
    if method != "eigenvector":
        raise ValueError(f"unknown weight derivation method {method!r}")
    w = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = a @ w
        nxt = nxt / nxt.sum()
        if np.max(np.abs(nxt - w)) < tol:
            return nxt
        w = nxt
    raise ConvergenceError(f"power iteration did not converge within {max_iter} iterations")


def principal_eigenvalue(matrix: PairwiseMatrix, weights: np.ndarray | None = None) -> float:
    """Estimate lambda_max as the mean Rayleigh ratio over components."""
    if weights is None:
        weights = derive_weights(matrix)
    return float(np.mean((matrix.values @ weights) / weights))


def consistency_ratio(matrix: PairwiseMatrix) -> float:
    """CR = ((lambda_max - n) / (n - 1)) / RI(n), clamped at 0 from below.

    Matrices of size 1 and 2 are consistent by definition (CR = 0); sizes
    above 10 are outside the supported random-index table.
    """
    n = matrix.n
    if n > 10:
        raise ValueError(f"matrix size {n} outside the supported range (2..10)")
    if n <= 2:
        return 0.0
    lam = principal_eigenvalue(matrix)
    ci = (lam - n) / (n - 1)
    return max(0.0, ci / RANDOM_INDEX[n])


# ----------------------------------------------------------------- agreement


class KendallResult(NamedTuple):
    w: float
    strong_agreement: bool


def _midranks(values: Sequence[float]) -> list[float]:
    """Rank values ascending, assigning tied entries their mid-rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def kendalls_w(
    rankings: Sequence[Mapping[str, float]] | Sequence[Sequence[float]],
) -> KendallResult:
    """Kendall's coefficient of concordance over m raters and n items.

    Accepts either aligned rank sequences or item -> rank mappings (all
    raters must rank the same item set).  Ties are resolved by mid-rank and
    the tie-corrected denominator is used; without ties this reduces to
    12*S / (m^2 * (n^3 - n)).
    """
    if not rankings:
        raise ValueError("at least one ranking is required")
    if isinstance(rankings[0], Mapping):
        keys = sorted(rankings[0].keys())
        for r in rankings:
            if sorted(r.keys()) != keys:  # type: ignore[union-attr]
                raise ValueError("raters rank different item sets")
        table = [[float(r[k]) for k in keys] for r in rankings]  # type: ignore[index]
    else:
        n0 = len(rankings[0])
        for r in rankings:
            if len(r) != n0:
                raise ValueError("raters rank different item sets")
        table = [[float(x) for x in r] for r in rankings]

    m = len(table)
    n = len(table[0])
    if n < 2:
        raise ValueError("need at least two items to measure concordance")

    ranked = [_midranks(row) for row in table]
    sums = [sum(row[j] for row in ranked) for j in range(n)]
    mean = sum(sums) / n
    s = sum((x - mean) ** 2 for x in sums)
    tie_term = 0.0
    for row in ranked:
        counts: dict[float, int] = {}
        for r in row:
            counts[r] = counts.get(r, 0) + 1
        tie_term += sum(t**3 - t for t in counts.values())
    denom = m * m * (n**3 - n) - m * tie_term
    w = 0.0 if denom <= 0 else 12.0 * s / denom
    w = min(1.0, max(0.0, w))
    return KendallResult(w=w, strong_agreement=w > STRONG_AGREEMENT)


# ----------------------------------------------------------------- hierarchy


@dataclass
class HierarchyNode:
    name: str
    label: str
    children: list["HierarchyNode"] = field(default_factory=list)
    question: str | None = None
    metric_group: str | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class Hierarchy:
    """The attack severity taxonomy used for elicitation and scoring."""

    root: HierarchyNode

    def node_at(self, path: str) -> HierarchyNode:
        node = self.root
        parts = path.split("/")
        if parts[0] != self.root.name:
            raise KeyError(path)
        for part in parts[1:]:
            for child in node.children:
                if child.name == part:
                    node = child
                    break
            else:
                raise KeyError(path)
        return node

    def sibling_groups(self) -> list[tuple[str, HierarchyNode]]:
        """All internal nodes with >= 2 children, as (path, node) pairs.

        Single-child groups carry weight 1 by definition and are skipped.
        """
        groups: list[tuple[str, HierarchyNode]] = []

        def walk(node: HierarchyNode, path: str) -> None:
            if len(node.children) >= 2:
                groups.append((path, node))
            for child in node.children:
                walk(child, f"{path}/{child.name}")

        walk(self.root, self.root.name)
        return groups

    def group_paths(self) -> list[str]:
        return [path for path, _ in self.sibling_groups()]

    def leaves(self) -> list[tuple[str, HierarchyNode]]:
        out: list[tuple[str, HierarchyNode]] = []

        def walk(node: HierarchyNode, path: str) -> None:
            if node.is_leaf:
                out.append((path, node))
            for child in node.children:
                walk(child, f"{path}/{child.name}")

        walk(self.root, self.root.name)
        return out

    def leaves_under(self, path: str) -> list[str]:
        base = self.node_at(path)
        out: list[str] = []

        def walk(node: HierarchyNode, p: str) -> None:
            if node.is_leaf:
                out.append(p)
            for child in node.children:
                walk(child, f"{p}/{child.name}")

        walk(base, path)
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "Hierarchy":
        def build(entry: dict) -> HierarchyNode:
            return HierarchyNode(
                name=entry["name"],
                label=entry.get("label", entry["name"]),
                children=[build(c) for c in entry.get("children", [])],
                question=entry.get("question"),
                metric_group=entry.get("metric_group"),
            )

        return cls(root=build(data["root"]))

    def to_json_dict(self) -> dict:
        def dump(node: HierarchyNode) -> dict:
            entry: dict = {"name": node.name, "label": node.label}
            if node.question:
                entry["question"] = node.question
            if node.metric_group:
                entry["metric_group"] = node.metric_group
            if node.children:
                entry["children"] = [dump(c) for c in node.children]
            return entry

        return {"schema_version": 1, "root": dump(self.root)}


def load_default_hierarchy() -> Hierarchy:
    text = resources.files("mlrisk.data").joinpath("hierarchy.json").read_text("utf-8")
    return Hierarchy.from_json_dict(json.loads(text))


# ------------------------------------------------------------ expert answers


@dataclass
class ExpertResponse:
    """One expert's pairwise matrices, keyed by sibling-group path."""

    expert_id: str
    matrices: dict[str, PairwiseMatrix] = field(default_factory=dict)

    def missing_groups(self, hierarchy: Hierarchy) -> list[str]:
        return [p for p in hierarchy.group_paths() if p not in self.matrices]

    def is_complete(self, hierarchy: Hierarchy) -> bool:
        return not self.missing_groups(hierarchy)

    def inconsistent_groups(self, threshold: float = CR_THRESHOLD) -> list[tuple[str, float]]:
        out = []
        for path, matrix in sorted(self.matrices.items()):
            cr = consistency_ratio(matrix)
            if cr >= threshold:
                out.append((path, cr))
        return out


def load_responses_csv(text: str, hierarchy: Hierarchy) -> list[ExpertResponse]:
    """Load responses from flat CSV with columns expert,group,item_a,item_b,ratio."""
    reader = csv.DictReader(io.StringIO(text))
    required = {"expert", "group", "item_a", "item_b", "ratio"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError(f"response CSV must have columns {sorted(required)}")
    judgments: dict[str, dict[str, dict[tuple[str, str], float]]] = {}
    for row in reader:
        expert = judgments.setdefault(row["expert"], {})
        group = expert.setdefault(row["group"], {})
        group[(row["item_a"], row["item_b"])] = float(row["ratio"])
    responses = []
    for expert_id in sorted(judgments):
        matrices = {}
        for path, pairs in judgments[expert_id].items():
            items = [c.name for c in hierarchy.node_at(path).children]
            matrices[path] = PairwiseMatrix.from_judgments(items, pairs)
        responses.append(ExpertResponse(expert_id=expert_id, matrices=matrices))
    return responses


def dump_responses_csv(responses: Iterable[ExpertResponse]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["expert", "group", "item_a", "item_b", "ratio"])
    for resp in responses:
        for path in sorted(resp.matrices):
            matrix = resp.matrices[path]
            for i in range(matrix.n):
                for j in range(i + 1, matrix.n):
                    writer.writerow(
                        [resp.expert_id, path, matrix.items[i], matrix.items[j],
                         repr(float(matrix.values[i, j]))]
                    )
    return buf.getvalue()


# --------------------------------------------------------------- weight model


class InconsistentResponsesError(ValueError):
    """Raised when aggregation is attempted over inconsistent responses."""

    def __init__(self, offenders: list[tuple[str, str, float]]):
        self.offenders = offenders
        listing = "; ".join(f"{e}:{g} (CR={cr:.3f})" for e, g, cr in offenders)
        super().__init__(f"inconsistent expert responses: {listing}")


@dataclass
class WeightModel:
    """Per-group local weights plus derived global leaf weights."""

    hierarchy: Hierarchy
    local_weights: dict[str, dict[str, float]]
    provenance: dict = field(default_factory=dict)
    kendall: float | None = None

    def __post_init__(self) -> None:
        for path, weights in self.local_weights.items():
            total = sum(weights.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"local weights for {path} sum to {total}, expected 1")

    def local(self, path: str) -> dict[str, float]:
        node = self.hierarchy.node_at(path)
        if path in self.local_weights:
            return dict(self.local_weights[path])
        if len(node.children) == 1:
            return {node.children[0].name: 1.0}
        raise KeyError(f"no local weights for group {path}")

    def weight_below(self, ancestor_path: str, leaf_path: str) -> float:
        """Product of local weights along ancestor -> leaf."""
        if not leaf_path.startswith(ancestor_path):
            raise ValueError(f"{leaf_path} is not under {ancestor_path}")
        weight = 1.0
        parts = leaf_path[len(ancestor_path):].strip("/").split("/")
        current = ancestor_path
        for part in parts:
            if not part:
                continue
            weight *= self.local(current)[part]
            current = f"{current}/{part}"
        return weight

    def global_leaf_weights(self) -> dict[str, float]:
        root = self.hierarchy.root.name
        return {
            path: self.weight_below(root, path) for path, _ in self.hierarchy.leaves()
        }

    def subtree_leaf_weights(self, subtree_path: str) -> dict[str, float]:
        """Leaf weights normalized to sum to 1 within one subtree."""
        return {
            leaf: self.weight_below(subtree_path, leaf)
            for leaf in self.hierarchy.leaves_under(subtree_path)
        }

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "local_weights": {
                path: dict(sorted(w.items())) for path, w in sorted(self.local_weights.items())
            },
            "global_leaf_weights": dict(sorted(self.global_leaf_weights().items())),
            "kendalls_w": self.kendall,
            "provenance": self.provenance,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, data: dict, hierarchy: Hierarchy | None = None) -> "WeightModel":
        hierarchy = hierarchy or load_default_hierarchy()
        return cls(
            hierarchy=hierarchy,
            local_weights={p: dict(w) for p, w in data["local_weights"].items()},
            provenance=data.get("provenance", {}),
            kendall=data.get("kendalls_w"),
        )

    @classmethod
    def from_json(cls, text: str, hierarchy: Hierarchy | None = None) -> "WeightModel":
        return cls.from_json_dict(json.loads(text), hierarchy)

    @classmethod
    def defaults(cls, hierarchy: Hierarchy | None = None) -> "WeightModel":
        """Built-in fallback when no elicitation has been run.

        Top-level weights reflect the finding that the attacker model
        dominates severity (0.5 / 0.2 / 0.15 / 0.15); weights inside every
        other sibling group are uniform.
        """
        hierarchy = hierarchy or load_default_hierarchy()
        local: dict[str, dict[str, float]] = {}
        for path, node in hierarchy.sibling_groups():
            names = [c.name for c in node.children]
            local[path] = {n: 1.0 / len(names) for n in names}
        root = hierarchy.root.name
        local[root] = {
            "attacker_model": 0.5,
            "attack_impact": 0.2,
            "attack_performance": 0.15,
            "attack_complexity": 0.15,
        }
        return cls(hierarchy=hierarchy, local_weights=local, provenance={"source": "defaults"})


def aggregate_experts(
    responses: Sequence[ExpertResponse],
    hierarchy: Hierarchy,
    method: str = "eigenvector",
) -> WeightModel:
    """Aggregate individually consistent expert responses into one model.

    Local weights are the arithmetic mean of the experts' derived weights,
    renormalized per group; the global weight of a leaf is the product of
    local weights along the root-to-leaf path.  All responses must be
    complete and satisfy CR < 0.1 in every group; weak agreement (Kendall's
    W <= 0.6) is reported as a warning, not an error.
    """
    if not responses:
        raise ValueError("at least one expert response is required")
    offenders: list[tuple[str, str, float]] = []
    for resp in responses:
        missing = resp.missing_groups(hierarchy)
        if missing:
            raise ValueError(f"expert {resp.expert_id} is missing groups: {missing}")
        for path, cr in resp.inconsistent_groups():
            offenders.append((resp.expert_id, path, cr))
    if offenders:
        raise InconsistentResponsesError(offenders)

    local: dict[str, dict[str, float]] = {}
    for path, node in hierarchy.sibling_groups():
        names = [c.name for c in node.children]
        stacked = np.zeros(len(names))
        for resp in responses:
            matrix = resp.matrices[path]
            if list(matrix.items) != names:
                order = [matrix.items.index(n) for n in names]
                matrix = matrix.permuted(order)
            stacked += derive_weights(matrix, method=method)
        mean = stacked / len(responses)
        mean = mean / mean.sum()
        local[path] = {n: float(w) for n, w in zip(names, mean)}

    model = WeightModel(
        hierarchy=hierarchy,
        local_weights=local,
        provenance={"experts": [r.expert_id for r in responses], "method": method},
    )

    if len(responses) >= 2:
        rankings = []
        for resp in responses:
            single = aggregate_experts([resp], hierarchy, method=method)
            weights = single.global_leaf_weights()
            # higher weight -> better (lower) rank
            rankings.append({leaf: -w for leaf, w in weights.items()})
        result = kendalls_w([{k: r for k, r in _rankdict(m).items()} for m in rankings])
        model.kendall = result.w
        if not result.strong_agreement:
            logger.warning(
                "weak inter-expert agreement: Kendall's W = %.3f (<= %.1f)",
                result.w,
                STRONG_AGREEMENT,
            )
    return model


def _rankdict(scores: Mapping[str, float]) -> dict[str, float]:
    keys = sorted(scores)
    ranks = _midranks([scores[k] for k in keys])
    return dict(zip(keys, ranks))
