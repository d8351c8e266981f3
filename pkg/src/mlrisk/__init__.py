"""Risk assessment toolkit for machine learning production systems.

Builds logical attack graphs from Datalog-style facts and interaction rules,
scores adversarial-ML techniques with an expert-elicited weight model, and
propagates likelihood and risk over the graph to rank attack paths.
"""

from .core import Atom, AttackGraph, Rule, Term, edge_partition_check
from .datalog import Program, build_attack_graph, evaluate, parse_atom, parse_program

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "AttackGraph",
    "Program",
    "Rule",
    "Term",
    "build_attack_graph",
    "edge_partition_check",
    "evaluate",
    "parse_atom",
    "parse_program",
    "__version__",
]
