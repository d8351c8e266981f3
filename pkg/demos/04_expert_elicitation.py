"""Derive attribute weights from expert pairwise comparisons.

Each expert fills one reciprocal comparison matrix per sibling group of the
severity taxonomy.  Weights come from the principal eigenvector, internal
coherence is gated at CR < 0.1, and cross-expert agreement is measured with
Kendall's W before averaging into the final weight model.
"""

import numpy as np

from mlrisk.ahp import (
    ExpertResponse,
    PairwiseMatrix,
    aggregate_experts,
    consistency_ratio,
    derive_weights,
    load_default_hierarchy,
)

hierarchy = load_default_hierarchy()
groups = hierarchy.sibling_groups()
print(f"taxonomy has {len(groups)} sibling groups to rank:")
for path, node in groups:
    print(f"  {path} ({len(node.children)} items, {len(node.children) * (len(node.children) - 1) // 2} questions)")

# One comparison matrix: impacts ranked tampering > disclosure > dos.
impacts = PairwiseMatrix.from_judgments(
    ["ag1", "ag2", "ag3"],
    {("ag1", "ag2"): 4, ("ag1", "ag3"): 2, ("ag3", "ag2"): 2},
)
w = derive_weights(impacts)
print("\nimpact weights:", {i: round(float(x), 3) for i, x in zip(impacts.items, w)})
print(f"consistency ratio: {consistency_ratio(impacts):.4f} (accepted below 0.1)")

# An intransitive ranking fails the gate and would be sent back for revision.
cyclic = PairwiseMatrix.from_judgments(
    ["ag1", "ag2", "ag3"],
    {("ag1", "ag2"): 9, ("ag2", "ag3"): 9, ("ag1", "ag3"): 1 / 9},
)
print(f"intransitive triple CR: {consistency_ratio(cyclic):.3f} -> rejected")


def expert(expert_id: str, lean: float) -> ExpertResponse:
    """Synthetic expert: scales every group's first-item preference."""
    matrices = {}
    for path, node in groups:
        names = [c.name for c in node.children]
        weights = np.array([lean] + [1.0] * (len(names) - 1))
        matrices[path] = PairwiseMatrix.consistent_from_weights(names, weights)
    return ExpertResponse(expert_id=expert_id, matrices=matrices)


model = aggregate_experts([expert("alice", 3.0), expert("bob", 2.0)], hierarchy)
print(f"\naggregated 2 experts, Kendall's W = {model.kendall:.3f}")
print("top-level weights:", {k: round(v, 3) for k, v in model.local("severity").items()})

leaves = sorted(model.global_leaf_weights().items(), key=lambda kv: -kv[1])
print("\nheaviest leaf attributes:")
for path, weight in leaves[:5]:
    print(f"  {weight:.4f}  {path}")

with open("weights.json", "w", encoding="utf-8") as fh:
    fh.write(model.to_json())
print("\nwrote weights.json (feed it to `mlrisk score --weights weights.json`)")
