"""Bundled interaction rules, predicate registry and assessment scenarios.

The rulepack ships the ML-pipeline modeling layer as plain-text rule files:
cluster data propagation, network reachability, attacker access/knowledge
derivation and one rule per attack technique.  Scenarios pair a fact file
with a goal pattern, vulnerability metadata and (optionally) the technique
subset under assessment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

from ..cmlvss import EnvironmentProfile
from ..core import Atom
from ..datalog import Program, parse_atom, parse_program
from ..risk import VulnerabilityMetadata

__all__ = [
    "PredicateSpec",
    "RulepackError",
    "RULE_TECHNIQUES",
    "load_registry",
    "load_rulepack",
    "rule_sources",
    "Scenario",
    "list_scenarios",
    "load_scenario",
    "ValidationIssue",
    "ValidationReport",
    "validate_facts",
    "environment_from_program",
]

_DATA = resources.files("mlrisk.rulepack.data")

# rule id -> technique id, used for per-scenario technique filtering
RULE_TECHNIQUES = {
    "at1_gradient_whitebox_evasion": "AT1",
    "at2_boundary_scorebased_evasion": "AT2",
    "at3_boundary_decisionbased_evasion": "AT3",
    "at4_transferability_refdata_evasion": "AT4",
    "at5_transferability_traindata_evasion": "AT5",
    "at6_gradient_whitebox_poisoning": "AT6",
    "at7_transferability_blackbox_poisoning": "AT7",
    "at8_gradient_whitebox_fs_poisoning": "AT8",
    "at9_transferability_blackbox_fs_poisoning": "AT9",
    "at10_gradient_whitebox_corruption": "AT10",
    "at11_transferability_blackbox_corruption": "AT11",
    "at12_gradient_whitebox_fs_corruption": "AT12",
    "at13_transferability_blackbox_fs_corruption": "AT13",
    "at14_shadow_membership_inference": "AT14",
    "at15_whitebox_membership_inference": "AT15",
    "at16_shadow_property_inference": "AT16",
    "at17_map_data_reconstruction": "AT17",
    "at18_gradient_data_reconstruction": "AT18",
    "at19_blackbox_data_reconstruction": "AT19",
    "at20_query_model_extraction": "AT20",
    "at21_data_theft_via_access": "AT21",
    "at21_model_theft_via_access": "AT21",
    "t7_prediction_flooding_via_corruption": "T7",
    "t8_resource_exhaustion_queries": "T8",
}


class RulepackError(RuntimeError):
    """The shipped rule set is internally inconsistent (build-time check)."""


@dataclass(frozen=True)
class PredicateSpec:
    name: str
    arity: int
    category: str
    doc: str


def load_registry() -> dict[str, PredicateSpec]:
    data = json.loads(_DATA.joinpath("registry.json").read_text("utf-8"))
    registry = {}
    for name, spec in data["predicates"].items():
        registry[name] = PredicateSpec(
            name=name, arity=spec["arity"], category=spec["category"], doc=spec.get("doc", "")
        )
    return registry


def rule_sources() -> dict[str, str]:
    """Raw text of the shipped rule files, keyed by file name."""
    out = {}
    rules_dir = _DATA.joinpath("rules")
    for entry in sorted(rules_dir.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".pl"):
            out[entry.name] = entry.read_text("utf-8")
    return out


def _check_consistency(program: Program, registry: dict[str, PredicateSpec]) -> None:
    for rule in program.rules:
        for atom in (rule.head, *rule.body):
            spec = registry.get(atom.predicate)
            if spec is None:
                raise RulepackError(
                    f"rule {rule.id} uses unregistered predicate {atom.predicate}"
                )
            if spec.arity != atom.arity:
                raise RulepackError(
                    f"rule {rule.id}: {atom.predicate} used with arity {atom.arity}, "
                    f"registered as {spec.arity}"
                )
    for name, spec in registry.items():
        suffix = ""
        for ch in reversed(name):
            if ch.isdigit():
                suffix = ch + suffix
            else:
                break
        if suffix and int(suffix) != spec.arity:
            raise RulepackError(
                f"predicate {name}: arity suffix {suffix} does not match arity {spec.arity}"
            )


def load_rulepack(techniques=None) -> Program:
    """Load the shipped interaction rules as a facts-free program.

    ``techniques`` optionally restricts the technique layer to a set of
    technique ids (e.g. {"AT3", "AT7"}); the modeling layers (network,
    access, knowledge, cluster) are always included.
    """
    program = Program()
    for name, text in rule_sources().items():
        program = program.merged(parse_program(text, source=name))
    _check_consistency(program, load_registry())
    if techniques is not None:
        selected = {t.upper() for t in techniques}
        unknown = selected - set(RULE_TECHNIQUES.values())
        if unknown:
            raise ValueError(f"unknown technique ids: {sorted(unknown)}")
        kept = [
            r
            for r in program.rules
            if r.id not in RULE_TECHNIQUES or RULE_TECHNIQUES[r.id] in selected
        ]
        filtered = Program()
        filtered.rules = kept
        filtered.rule_positions = {r.id: program.rule_positions[r.id] for r in kept}
        for rule in kept:
            for atom in (rule.head, *rule.body):
                filtered._register_arity(atom, filtered.rule_positions[rule.id])
        program = filtered
    return program


# ------------------------------------------------------------------ scenarios


@dataclass
class Scenario:
    name: str
    description: str
    goal: Atom
    techniques: tuple[str, ...] | None
    expected_path_count: int | None
    metadata: VulnerabilityMetadata
    facts: Program
    program: Program
    environment: EnvironmentProfile

    @property
    def goal_pattern(self) -> str:
        return str(self.goal)


def list_scenarios() -> list[str]:
    scen_dir = _DATA.joinpath("scenarios")
    return sorted(entry.name for entry in scen_dir.iterdir() if entry.is_dir())


def load_scenario(name: str) -> Scenario:
    scen_dir = _DATA.joinpath("scenarios").joinpath(name)
    try:
        spec = json.loads(scen_dir.joinpath("scenario.json").read_text("utf-8"))
    except FileNotFoundError:
        raise KeyError(f"unknown scenario {name!r}; available: {list_scenarios()}") from None
    facts_text = scen_dir.joinpath(spec["facts_file"]).read_text("utf-8")
    facts = parse_program(facts_text, source=f"{name}/{spec['facts_file']}")
    techniques = spec.get("techniques")
    rules = load_rulepack(techniques=techniques)
    program = rules.merged(facts)
    metadata = VulnerabilityMetadata.from_json_dict(spec)
    return Scenario(
        name=spec["name"],
        description=spec.get("description", ""),
        goal=parse_atom(spec["goal"]),
        techniques=tuple(techniques) if techniques is not None else None,
        expected_path_count=spec.get("expected_path_count"),
        metadata=metadata,
        facts=facts,
        program=program,
        environment=environment_from_program(facts),
    )


def environment_from_program(program: Program) -> EnvironmentProfile:
    """Read the deployment-guard facts into an environment profile."""
    present = {f.predicate for f in program.facts}
    return EnvironmentProfile(
        data_validation="pipelineHasDataValidation1" in present,
        feature_extraction="pipelineHasFeatureExtraction1" in present,
        ab_testing="pipelineHasABTesting1" in present,
    )


# ----------------------------------------------------------------- validation


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # unregistered-predicate | arity-mismatch | orphan-vulnerability
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return not self.issues

    def of_kind(self, kind: str) -> list[ValidationIssue]:
        return [i for i in self.issues if i.kind == kind]

    def __str__(self) -> str:
        if self.is_clean:
            return "facts validate cleanly\n"
        return "\n".join(f"{i.kind}: {i.message}" for i in self.issues) + "\n"


_VULN_ID_POSITION = {"vulExists5": 1, "vulModel5": 4}


def validate_facts(
    program: Program,
    metadata: VulnerabilityMetadata | None = None,
    registry: dict[str, PredicateSpec] | None = None,
) -> ValidationReport:
    """Diagnostic pass over scenario facts.

    Flags fact predicates missing from the registry, arity mismatches
    against it, and vulnerability atoms without metadata (orphans).
    """
    registry = registry if registry is not None else load_registry()
    report = ValidationReport()
    for fact in program.facts:
        spec = registry.get(fact.predicate)
        if spec is None:
            report.issues.append(
                ValidationIssue("unregistered-predicate", f"{fact} uses an unknown predicate")
            )
            continue
        if spec.arity != fact.arity:
            report.issues.append(
                ValidationIssue(
                    "arity-mismatch",
                    f"{fact} has arity {fact.arity}, registered as {spec.arity}",
                )
            )
        pos = _VULN_ID_POSITION.get(fact.predicate)
        if pos is not None and fact.arity > pos:
            vuln_id = fact.args[pos].value
            known = metadata is not None and str(vuln_id) in metadata.entries
            if not known:
                report.issues.append(
                    ValidationIssue(
                        "orphan-vulnerability",
                        f"{fact} references vulnerability {vuln_id!r} with no metadata",
                    )
                )
    return report
