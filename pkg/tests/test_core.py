"""Term/atom/rule validation and attack-graph structural invariants."""

import pytest

from mlrisk.core import (
    Atom,
    AttackGraph,
    Node,
    Rule,
    Term,
    edge_partition_check,
)


def test_variable_must_start_uppercase():
    assert Term.var("Host").is_variable
    assert Term.var("_G1").is_variable
    with pytest.raises(ValueError):
        Term("variable", "host")


def test_floats_rejected_in_terms():
    with pytest.raises(ValueError):
        Term("constant", 0.5)


def test_constant_rendering_quotes_non_identifiers():
    assert str(Term.const("attacker")) == "attacker"
    assert str(Term.const(42)) == "42"
    assert str(Term.const("CVE-2021-41773")) == "'CVE-2021-41773'"


def test_atom_str_and_substitute():
    atom = Atom("netAccess4", (Term.var("P"), Term.const("web"), Term.const("tcp"), Term.const(80)))
    assert str(atom) == "netAccess4(P, web, tcp, 80)"
    ground = atom.substitute({"P": Term.const("attacker")})
    assert ground.is_ground
    assert str(ground) == "netAccess4(attacker, web, tcp, 80)"


def test_rule_range_restriction():
    head = Atom("a", (Term.var("X"),))
    body = (Atom("b", (Term.var("Y"),)),)
    with pytest.raises(ValueError, match="head variables"):
        Rule(head=head, body=body, id="bad")


def test_rule_requires_nonempty_body():
    with pytest.raises(ValueError, match="empty body"):
        Rule(head=Atom("a", ()), body=(), id="bad")


def _chain_graph():
    """Minimal legal graph: primitive -> AND -> derived."""
    nodes = {
        "leaf": Node(id="leaf", kind="LEAF", label="f", fact="f"),
        "and": Node(id="and", kind="AND", label="r", rule_id="r"),
        "or": Node(id="or", kind="OR", label="d", fact="d"),
    }
    return AttackGraph(nodes=nodes, edges=(("leaf", "and"), ("and", "or")), goals=("or",))


def test_minimal_chain_is_legal():
    assert edge_partition_check(_chain_graph()) == []


def test_derived_to_derived_edge_is_reported():
    g = _chain_graph()
    nodes = dict(g.nodes)
    nodes["or2"] = Node(id="or2", kind="OR", label="d2", fact="d2")
    nodes["and2"] = Node(id="and2", kind="AND", label="r2", rule_id="r2")
    bad = AttackGraph(
        nodes=nodes,
        edges=g.edges + (("or", "or2"), ("or", "and2"), ("and2", "or2")),
        goals=g.goals,
    )
    violations = [v for v in edge_partition_check(bad) if v.edge == ("or", "or2")]
    assert len(violations) == 1


def test_and_node_with_two_outgoing_edges_is_reported():
    g = _chain_graph()
    nodes = dict(g.nodes)
    nodes["or2"] = Node(id="or2", kind="OR", label="d2", fact="d2")
    bad = AttackGraph(nodes=nodes, edges=g.edges + (("and", "or2"),), goals=g.goals)
    assert any("outgoing" in v.message for v in edge_partition_check(bad))


def test_leaf_with_incoming_edge_is_reported():
    nodes = {
        "leaf": Node(id="leaf", kind="LEAF", label="f", fact="f"),
        "leaf2": Node(id="leaf2", kind="LEAF", label="g", fact="g"),
        "and": Node(id="and", kind="AND", label="r", rule_id="r"),
        "or": Node(id="or", kind="OR", label="d", fact="d"),
    }
    bad = AttackGraph(
        nodes=nodes,
        edges=(("leaf", "and"), ("and", "or"), ("and", "leaf2")),
        goals=(),
    )
    messages = [v.message for v in edge_partition_check(bad)]
    assert any("LEAF" in m and "incoming" in m for m in messages)


def test_duplicate_fact_nodes_are_reported():
    nodes = {
        "l1": Node(id="l1", kind="LEAF", label="f", fact="same(a)"),
        "l2": Node(id="l2", kind="LEAF", label="f", fact="same(a)"),
        "and": Node(id="and", kind="AND", label="r", rule_id="r"),
        "or": Node(id="or", kind="OR", label="d", fact="d"),
    }
    bad = AttackGraph(
        nodes=nodes, edges=(("l1", "and"), ("l2", "and"), ("and", "or")), goals=()
    )
    assert any("two nodes" in v.message for v in edge_partition_check(bad))


def test_graph_json_roundtrip():
    g = _chain_graph()
    restored = AttackGraph.from_json(g.to_json())
    assert restored.nodes == g.nodes
    assert restored.edges == g.edges
    assert restored.goals == g.goals


def test_dot_export_node_shapes():
    dot = _chain_graph().to_dot()
    assert "shape=ellipse" in dot  # AND
    assert "shape=diamond" in dot  # OR
    assert "shape=box" in dot  # LEAF
    assert dot.startswith("digraph")


def test_edge_referencing_unknown_node_rejected():
    nodes = {"leaf": Node(id="leaf", kind="LEAF", label="f", fact="f")}
    with pytest.raises(ValueError, match="unknown node"):
        AttackGraph(nodes=nodes, edges=(("leaf", "ghost"),), goals=())
