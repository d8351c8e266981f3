"""Independent reference implementations used to check the main code paths.

These deliberately avoid the library's own matching/propagation machinery:
the Datalog oracle re-implements naive repeat-until-fixpoint evaluation with
its own unifier, the OR-node oracle expands the alternating
inclusion-exclusion sum, and likelihood recursion is a direct memoized
traversal.
"""

from __future__ import annotations

import itertools
import random
from math import prod

import numpy as np

from mlrisk.core import Atom, Rule, Term
from mlrisk.datalog import Program


# ------------------------------------------------------- naive Datalog oracle


def _oracle_match(pattern: Atom, ground: Atom, binding):
    if pattern.predicate != ground.predicate or len(pattern.args) != len(ground.args):
        return None
    env = dict(binding)
    for p, g in zip(pattern.args, ground.args):
        if p.kind == "variable":
            name = str(p.value)
            if name in env:
                if env[name] != g:
                    return None
            else:
                env[name] = g
        elif p != g:
            return None
    return env


def naive_fixpoint(program: Program) -> set[Atom]:
    """Repeat-until-fixpoint evaluation joining every rule against all atoms."""
    atoms: set[Atom] = set(program.facts)
    changed = True
    while changed:
        changed = False
        for rule in program.rules:
            stack = [({}, 0)]
            while stack:
                env, i = stack.pop()
                if i == len(rule.body):
                    head = rule.head.substitute({k: v for k, v in env.items()})
                    if head not in atoms:
                        atoms.add(head)
                        changed = True
                    continue
                for ground in list(atoms):
                    extended = _oracle_match(rule.body[i], ground, env)
                    if extended is not None:
                        stack.append((extended, i + 1))
    return atoms - set(program.facts)


def random_program(rng: random.Random, max_predicates: int = 10, max_rules: int = 30) -> Program:
    """Random range-restricted program over a small constant pool."""
    n_preds = rng.randint(2, max_predicates)
    arities = {f"p{i}": rng.randint(1, 3) for i in range(n_preds)}
    constants = ["a", "b", "c", "d", "e"][: rng.randint(2, 5)]
    variables = ["X", "Y", "Z", "W"]

    program = Program()
    for _ in range(rng.randint(2, 10)):
        pred = rng.choice(list(arities))
        args = tuple(Term.const(rng.choice(constants)) for _ in range(arities[pred]))
        atom = Atom(pred, args)
        if atom not in set(program.facts):
            program.facts.append(atom)
            program.fact_positions.append(("<random>", 0))
            program._register_arity(atom, ("<random>", 0))

    for r in range(rng.randint(1, max_rules)):
        body = []
        for _ in range(rng.randint(1, 3)):
            pred = rng.choice(list(arities))
            args = tuple(
                Term.var(rng.choice(variables))
                if rng.random() < 0.7
                else Term.const(rng.choice(constants))
                for _ in range(arities[pred])
            )
            body.append(Atom(pred, args))
        body_vars = sorted(set().union(*(b.variables() for b in body)) or {""})
        head_pred = rng.choice(list(arities))
        head_args = []
        for _ in range(arities[head_pred]):
            if body_vars != [""] and rng.random() < 0.7:
                head_args.append(Term.var(rng.choice([v for v in body_vars if v])))
            else:
                head_args.append(Term.const(rng.choice(constants)))
        rule = Rule(head=Atom(head_pred, tuple(head_args)), body=tuple(body), id=f"r{r}")
        program.rules.append(rule)
        program.rule_positions[rule.id] = ("<random>", r)
        for atom in (rule.head, *rule.body):
            program._register_arity(atom, ("<random>", r))
    return program


# ---------------------------------------------------- inclusion-exclusion sum


def expanded_inclusion_exclusion(probabilities) -> float:
    """The alternating sum over all non-empty subsets."""
    ps = list(probabilities)
    total = 0.0
    for k in range(1, len(ps) + 1):
        for subset in itertools.combinations(ps, k):
            total += (-1) ** (k + 1) * prod(subset)
    return total


# ------------------------------------------------- direct likelihood recursion


def recursive_likelihoods(graph, leaf_values: dict[str, float]) -> dict[str, float]:
    """Memoized top-down recomputation, with the expanded OR formula."""
    memo: dict[str, float] = dict(leaf_values)

    def lh(nid: str) -> float:
        if nid in memo:
            return memo[nid]
        parents = [lh(p) for p in graph.incoming(nid)]
        if graph.nodes[nid].kind == "AND":
            value = prod(parents)
        else:
            value = expanded_inclusion_exclusion(parents)
        memo[nid] = value
        return value

    for nid in graph.nodes:
        lh(nid)
    return memo


# --------------------------------------------------------- random structures


def random_dag_graph(rng: random.Random, max_nodes: int = 15):
    """Random well-formed attack graph plus random leaf probabilities."""
    from mlrisk.core import AttackGraph, Node

    n_leaves = rng.randint(1, 4)
    nodes = {}
    edges = []
    leaves = []
    for i in range(n_leaves):
        nid = f"leaf{i}"
        nodes[nid] = Node(id=nid, kind="LEAF", label=f"fact{i}", fact=f"fact{i}")
        leaves.append(nid)

    ors: list[str] = []
    and_count = 0
    while len(nodes) < rng.randint(n_leaves + 2, max_nodes):
        or_id = f"or{len(ors)}"
        n_alternatives = rng.randint(1, 2)
        added_any = False
        for _ in range(n_alternatives):
            pool = leaves + ors
            supports = rng.sample(pool, k=min(len(pool), rng.randint(1, 3)))
            if not supports:
                continue
            and_id = f"and{and_count}"
            and_count += 1
            nodes[and_id] = Node(id=and_id, kind="AND", label=f"rule{and_count}", rule_id=f"r{and_count}")
            for s in supports:
                edges.append((s, and_id))
            edges.append((and_id, or_id))
            added_any = True
        if added_any:
            nodes[or_id] = Node(id=or_id, kind="OR", label=f"derived{len(ors)}", fact=f"derived{len(ors)}")
            ors.append(or_id)

    goals = [ors[-1]] if ors else []
    graph = AttackGraph(nodes=nodes, edges=tuple(edges), goals=tuple(goals))
    leaf_values = {nid: rng.random() for nid in leaves}
    return graph, leaf_values


def random_weight_model(rng: np.random.Generator, hierarchy, alpha: float = 3.0):
    """Random valid weight model: Dirichlet local weights per sibling group."""
    from mlrisk.ahp import WeightModel

    local = {}
    for path, node in hierarchy.sibling_groups():
        names = [c.name for c in node.children]
        w = rng.dirichlet(np.full(len(names), alpha))
        d = dict(zip(names, w / w.sum()))
        d[max(d, key=d.get)] += 1.0 - sum(d.values())
        local[path] = {k: float(v) for k, v in d.items()}
    return WeightModel(hierarchy=hierarchy, local_weights=local, provenance={"source": "random"})
