"""Severity scoring for adversarial-ML attack techniques (CMLVSS).

A technique profile lists the access/knowledge levels an attacker must hold,
the security impacts the attack can achieve and its performance class.  The
severity of a profile combines four weighted components:

    score = 10 * clamp( w_impact      * impact_fraction
                      + w_performance * performance_fraction
                      + w_attacker    * (1 - capability_cost)
                      + w_complexity  * (1 - environment_cost), 0, 1)

Attacker-model requirements and deployment guards act as costs (harder
attacks score lower); impacts and performance act as gains.  A limited or
partial requirement counts half the attribute's weight.  The shipped
technique catalog provides the requirement profiles; the weight model
defaults to the built-in fallback until an elicitation has been aggregated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from .ahp import Hierarchy, WeightModel, load_default_hierarchy

__all__ = [
    "ACCESS_LEVELS",
    "KNOWLEDGE_LEVELS",
    "IMPACTS",
    "PERFORMANCE_CLASSES",
    "AttackProfile",
    "EnvironmentProfile",
    "SeverityScore",
    "CatalogError",
    "load_catalog",
    "catalog_lookup",
    "severity",
    "impact_value",
    "performance_likelihood",
]

ACCESS_ATTRIBUTES = tuple(f"ac{i}" for i in range(1, 12))
KNOWLEDGE_ATTRIBUTES = tuple(f"ak{i}" for i in range(1, 9))
ACCESS_LEVELS = ("none", "limited", "full")
KNOWLEDGE_LEVELS = ("none", "partial", "full")
IMPACTS = ("tampering", "dos", "disclosure")
PERFORMANCE_CLASSES = ("Low", "Medium", "High")

_IMPACT_LEAF = {"tampering": "ag1", "dos": "ag2", "disclosure": "ag3"}
_LEVEL_COST = {"none": 0.0, "limited": 0.5, "partial": 0.5, "full": 1.0}
_PERFORMANCE_GAIN = {None: 0.0, "Low": 1.0 / 3.0, "Medium": 2.0 / 3.0, "High": 1.0}

# Exploitation probability per performance class; higher attack performance
# means a more likely successful exploitation.
_PERFORMANCE_PROBABILITY = {"Low": 0.35, "Medium": 0.61, "High": 0.71}

DEFAULT_IMPACT_VALUE = 0.33


class CatalogError(KeyError):
    """Unknown technique id or malformed catalog data."""


@dataclass
class AttackProfile:
    """Requirement profile of one attack technique."""

    technique: str
    name: str = ""
    threat: str = ""
    target_assets: tuple[str, ...] = ()
    access: dict[str, str] = field(default_factory=dict)
    knowledge: dict[str, str] = field(default_factory=dict)
    impacts: tuple[str, ...] = ()
    performance: str | None = None
    reference_score: float | None = None

    def __post_init__(self) -> None:
        self.access = {k: self.access.get(k, "none") for k in ACCESS_ATTRIBUTES}
        self.knowledge = {k: self.knowledge.get(k, "none") for k in KNOWLEDGE_ATTRIBUTES}
        self.impacts = tuple(dict.fromkeys(self.impacts))
        self.validate()

    def validate(self) -> None:
        for attr, level in self.access.items():
            if attr not in ACCESS_ATTRIBUTES:
                raise ValueError(f"{self.technique}: unknown access attribute {attr!r}")
            if level not in ACCESS_LEVELS:
                raise ValueError(
                    f"{self.technique}: access {attr} has unspecified/invalid level {level!r}"
                )
        for attr, level in self.knowledge.items():
            if attr not in KNOWLEDGE_ATTRIBUTES:
                raise ValueError(f"{self.technique}: unknown knowledge attribute {attr!r}")
            if level not in KNOWLEDGE_LEVELS:
                raise ValueError(
                    f"{self.technique}: knowledge {attr} has unspecified/invalid level {level!r}"
                )
        for impact in self.impacts:
            if impact not in IMPACTS:
                raise ValueError(f"{self.technique}: unknown impact {impact!r}")
        if self.performance is not None and self.performance not in PERFORMANCE_CLASSES:
            raise ValueError(f"{self.technique}: unknown performance class {self.performance!r}")

    def requirement(self, attribute: str) -> str:
        if attribute in self.access:
            return self.access[attribute]
        if attribute in self.knowledge:
            return self.knowledge[attribute]
        raise KeyError(attribute)

    def replace_requirement(self, attribute: str, level: str) -> "AttackProfile":
        access = dict(self.access)
        knowledge = dict(self.knowledge)
        if attribute in access:
            access[attribute] = level
        elif attribute in knowledge:
            knowledge[attribute] = level
        else:
            raise KeyError(attribute)
        return AttackProfile(
            technique=self.technique,
            name=self.name,
            threat=self.threat,
            target_assets=self.target_assets,
            access=access,
            knowledge=knowledge,
            impacts=self.impacts,
            performance=self.performance,
            reference_score=self.reference_score,
        )

    @classmethod
    def from_json_dict(cls, data: dict) -> "AttackProfile":
        return cls(
            technique=data["id"],
            name=data.get("name", ""),
            threat=data.get("threat", ""),
            target_assets=tuple(data.get("target_assets", ())),
            access=dict(data.get("access", {})),
            knowledge=dict(data.get("knowledge", {})),
            impacts=tuple(data.get("impacts", ())),
            performance=data.get("performance"),
            reference_score=data.get("reference_score"),
        )


@dataclass(frozen=True)
class EnvironmentProfile:
    """Deployment guards of the target pipeline."""

    data_validation: bool = False
    feature_extraction: bool = False
    ab_testing: bool = False

    @property
    def kind(self) -> str:
        return "naive" if not self.enabled_guards() else "guarded"

    def enabled_guards(self) -> tuple[str, ...]:
        out = []
        if self.data_validation:
            out.append("data_validation")
        if self.feature_extraction:
            out.append("feature_extraction")
        if self.ab_testing:
            out.append("ab_testing")
        return tuple(out)


_GUARD_LEAVES = ("data_validation", "feature_extraction", "ab_testing")


@dataclass(frozen=True)
class SeverityScore:
    value: float
    components: dict[str, float]

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "severity": self.value,
            "components": dict(sorted(self.components.items())),
        }


_CATALOG_CACHE: dict[str, AttackProfile] | None = None


def load_catalog() -> dict[str, AttackProfile]:
    """Load the shipped technique catalog, keyed by technique id."""
    global _CATALOG_CACHE
    if _CATALOG_CACHE is None:
        text = resources.files("mlrisk.data").joinpath("catalog.json").read_text("utf-8")
        data = json.loads(text)
        _CATALOG_CACHE = {
            entry["id"]: AttackProfile.from_json_dict(entry) for entry in data["techniques"]
        }
    return dict(_CATALOG_CACHE)


def catalog_lookup(technique_id: str) -> AttackProfile:
    catalog = load_catalog()
    key = technique_id.upper()
    if key not in catalog:
        raise CatalogError(f"unknown technique id {technique_id!r}")
    return catalog[key]


def performance_likelihood(performance_class: str) -> float:
    """Map an attack performance class to an exploitation probability."""
    if performance_class not in _PERFORMANCE_PROBABILITY:
        raise ValueError(f"unknown performance class {performance_class!r}")
    return _PERFORMANCE_PROBABILITY[performance_class]


def impact_value(
    impacts,
    weights: WeightModel | None = None,
) -> float:
    """Value in [0, 1] of an achieved impact set.

    The default mapping counts 0.33 per distinct impact, capped at 1.0; when
    a weight model is supplied, the value is the model's impact-group weight
    mass of the achieved impacts instead.
    """
    present = [i for i in dict.fromkeys(impacts)]
    for impact in present:
        if impact not in IMPACTS:
            raise ValueError(f"unknown impact {impact!r}")
    if weights is None:
        return min(1.0, DEFAULT_IMPACT_VALUE * len(present))
    root = weights.hierarchy.root.name
    local = weights.local(f"{root}/attack_impact")
    return min(1.0, sum(local[_IMPACT_LEAF[i]] for i in present))


def _closed_requirements(profile: AttackProfile) -> dict[str, str]:
    """Effective requirement levels after capability subsumption.

    Perfect knowledge (ak1) covers every other knowledge attribute and, since
    it includes the training data itself, also yields a surrogate dataset
    (ac8).  Closing the requirements keeps the cost of a profile comparable
    with profiles that spell those capabilities out.
    """
    levels: dict[str, str] = {**profile.access, **profile.knowledge}

    def raise_to(attr: str, level: str) -> None:
        order = {"none": 0, "limited": 1, "partial": 1, "full": 2}
        if order[levels[attr]] < order[level]:
            levels[attr] = level

    if levels["ak1"] == "full":
        for attr in KNOWLEDGE_ATTRIBUTES:
            raise_to(attr, "full")
        raise_to("ac8", "full")
    return levels


def _capability_cost(profile: AttackProfile, weights: WeightModel) -> float:
    """Weight mass of the required capabilities within the attacker model.

    Leaf weights are normalized within the attacker-model subtree so the
    cost of requiring everything at full is exactly 1.
    """
    root = weights.hierarchy.root.name
    subtree = f"{root}/attacker_model"
    leaf_weights = weights.subtree_leaf_weights(subtree)
    levels = _closed_requirements(profile)
    cost = 0.0
    for leaf_path, weight in leaf_weights.items():
        attr = leaf_path.rsplit("/", 1)[-1]
        cost += _LEVEL_COST[levels[attr]] * weight
    return cost


def _environment_cost(env: EnvironmentProfile, weights: WeightModel) -> float:
    """Weight mass of the enabled deployment guards, in [0, 1].

    Guard weights are renormalized over the three guard leaves; the naive
    baseline leaf takes part in elicitation but carries no guard cost.
    """
    root = weights.hierarchy.root.name
    local = weights.local(f"{root}/attack_complexity")
    total = sum(local[g] for g in _GUARD_LEAVES)
    if total <= 0:
        return 0.0
    return sum(local[g] for g in env.enabled_guards()) / total


def severity(
    profile: AttackProfile,
    weights: WeightModel | None = None,
    env: EnvironmentProfile | None = None,
) -> SeverityScore:
    """Severity in [0, 10] of a technique profile in a given environment."""
    profile.validate()
    weights = weights or WeightModel.defaults()
    env = env or EnvironmentProfile()
    root = weights.hierarchy.root.name
    level1 = weights.local(root)

    components = {
        "attack_impact": level1["attack_impact"] * impact_value(profile.impacts, weights),
        "attack_performance": level1["attack_performance"] * _PERFORMANCE_GAIN[profile.performance],
        "attacker_model": level1["attacker_model"] * (1.0 - _capability_cost(profile, weights)),
        "attack_complexity": level1["attack_complexity"] * (1.0 - _environment_cost(env, weights)),
    }
    combination = sum(components.values())
    value = 10.0 * min(1.0, max(0.0, combination))
    return SeverityScore(value=value, components=components)
