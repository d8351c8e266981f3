"""Build a logical attack graph from facts and interaction rules.

A tiny three-host environment shows the moving parts: ground facts describe
the configuration, Horn rules describe how an attacker chains privileges,
and the graph materializes every derivation as AND nodes (rule firings)
feeding OR nodes (derived facts) on top of LEAF nodes (the configuration).
"""

from mlrisk import build_attack_graph, edge_partition_check, parse_program

SOURCE = """
% configuration facts
malicious1(attacker).
attackerLocated2(attacker, internet).
hacl4(internet, web, tcp, 80).
hacl4(web, db, tcp, 5432).
networkService5(web, httpd, tcp, 80, root).
networkService5(db, postgres, tcp, 5432, dbadmin).
vulExists5(web, cveWeb, httpd, remote, privEscalation).
vulExists5(db, cveDb, postgres, remote, privEscalation).

% interaction rules
% rule reach_direct: attacker reaches services its zone may talk to
netAccess4(P, H, Prot, Port) :- malicious1(P), attackerLocated2(P, Z), hacl4(Z, H, Prot, Port).
% rule reach_pivot: owned hosts extend the attacker's reach
netAccess4(P, H, Prot, Port) :- execCode3(P, S, Priv), hacl4(S, H, Prot, Port).
% rule exploit: remote privilege escalation on a reachable service
execCode3(P, H, Priv) :-
    malicious1(P), networkService5(H, Prog, Prot, Port, Priv),
    vulExists5(H, V, Prog, remote, privEscalation), netAccess4(P, H, Prot, Port).
"""

program = parse_program(SOURCE)
print(f"parsed {len(program.facts)} facts and {len(program.rules)} rules")

graph = build_attack_graph(program, "execCode3(attacker, db, Priv)")
print(f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges")
for kind in ("LEAF", "AND", "OR"):
    labels = sorted(n.label for n in graph.nodes_of_kind(kind))
    print(f"  {kind}: {len(labels)}")
    for label in labels:
        print(f"    {label}")

violations = edge_partition_check(graph)
print(f"structural violations: {len(violations)} (a well-formed graph reports none)")

# DOT export mirrors the usual attack-graph convention: AND ellipses,
# OR diamonds, LEAF boxes. Render with: dot -Tpng -O attack_graph.gv
with open("attack_graph.gv", "w", encoding="utf-8") as fh:
    fh.write(graph.to_dot())
print("wrote attack_graph.gv")
