"""End-to-end risk assessment of the bundled ML production scenario.

The demo environment has eight components: web server and prediction
service in a DMZ, feature store / training server / model repository in the
LAN, a client application on the internet and two firewalls.  The evasion
goal is reachable two ways: directly through the decision-based query API,
or by tampering with the feature store to poison the next retraining cycle.
"""

from mlrisk.datalog import build_attack_graph, evaluate
from mlrisk.risk import assess, build_likelihood_equations
from mlrisk.rulepack import load_scenario, validate_facts

scenario = load_scenario("demo")
print(scenario.description, "\n")

report = validate_facts(scenario.facts, scenario.metadata)
print("fact validation:", "clean" if report.is_clean else str(report))

result = evaluate(scenario.program)
print(f"fixpoint: {len(result.derived)} derived facts in {result.rounds} rounds")

graph = build_attack_graph(scenario.program, scenario.goal, result=result)
print(f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges\n")

risk = assess(graph, scenario.metadata)
print(risk.to_text())

# The per-node likelihood map comes from the worklist propagation: leaves
# carry exploitation probabilities (access complexity for traditional
# vulnerabilities, attack performance for adversarial-ML ones), AND nodes
# multiply, OR nodes combine by inclusion-exclusion.
likelihoods = build_likelihood_equations(graph, scenario.metadata)
goal = graph.goals[0]
print(f"goal node likelihood (both routes combined): {likelihoods[goal]:.4f}")

# Path likelihoods multiply each distinct exploited vulnerability once:
#   path 1: 0.61 (evasion, performance Medium)         -> risk 0.61 * 0.33
#   path 2: 0.71 * 0.61 * 0.35 (RCE, SQLi, poisoning)  -> risk 0.1516 * 0.66
for path in risk.paths:
    factors = " * ".join(f"{v}" for v in sorted(path.vulnerabilities))
    print(f"path {path.rank}: likelihood {path.likelihood:.4f} from [{factors}]")
