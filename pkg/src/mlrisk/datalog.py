"""Fact/rule language front-end and bottom-up inference.

The input language is the classic Datalog subset used by attack-graph
tooling: ground facts ``pred(c1, c2).`` and Horn rules
``head(X) :- b1(X, Y), b2(Y).`` with ``%`` line comments.  Variables start
uppercase, constants start lowercase (or are quoted strings / integers) and
``_`` is an anonymous variable, fresh at every occurrence.

Evaluation is semi-naive bottom-up with per-predicate delta sets.  Every
successful rule instantiation is recorded in a :class:`DerivationTrace` so
the attack graph can expose each alternative derivation route.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

from .core import (
    Atom,
    AttackGraph,
    KIND_AND,
    KIND_LEAF,
    KIND_OR,
    Node,
    Rule,
    Term,
    derivation_node_id,
    fact_node_id,
)

__all__ = [
    "ParseError",
    "ResourceLimitError",
    "Program",
    "DerivationStep",
    "EvaluationResult",
    "parse_program",
    "parse_atom",
    "evaluate",
    "build_attack_graph",
]

logger = logging.getLogger(__name__)


class ParseError(ValueError):
    """Syntax or validation error, carrying a source position."""

    def __init__(self, message: str, line: int, column: int, source: str = "<input>"):
        super().__init__(f"{source}:{line}:{column}: {message}")
        self.line = line
        self.column = column
        self.source = source


class ResourceLimitError(RuntimeError):
    """Raised when evaluation derives more atoms than the configured cap."""


# ----------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>%[^\n]*)
  | (?P<implies>:-)
  | (?P<punct>[(),.])
  | (?P<int>-?\d+)
  | (?P<quoted>'(?:\\.|[^'\\])*'|"(?:\\.|[^"\\])*")
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str, source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, source)
        kind = m.lastgroup or ""
        tok = m.group()
        if kind not in ("ws",):
            tokens.append(_Token(kind, tok, line, col))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            col = len(tok) - tok.rfind("\n")
        else:
            col += len(tok)
        pos = m.end()
    return tokens


# -------------------------------------------------------------------- parser

_RULE_NOTE_RE = re.compile(r"%\s*rule\s+([A-Za-z0-9_.-]+)\s*:\s*(.*\S)?\s*$")


@dataclass
class Program:
    """Parsed facts and rules plus the predicate arity registry."""

    facts: list[Atom] = field(default_factory=list)
    rules: list[Rule] = field(default_factory=list)
    arities: dict[str, int] = field(default_factory=dict)
    fact_positions: list[tuple[str, int]] = field(default_factory=list)
    rule_positions: dict[str, tuple[str, int]] = field(default_factory=dict)
    _arity_sites: dict[str, tuple[str, int]] = field(default_factory=dict, repr=False)

    @property
    def fact_set(self) -> frozenset[Atom]:
        return frozenset(self.facts)

    def head_predicates(self) -> set[str]:
        return {r.head.predicate for r in self.rules}

    def fact_predicates(self) -> set[str]:
        return {f.predicate for f in self.facts}

    def body_only_predicates(self) -> set[str]:
        """Predicates used in rule bodies that are neither facts nor rule heads."""
        used = {b.predicate for r in self.rules for b in r.body}
        return used - self.fact_predicates() - self.head_predicates()

    def merged(self, other: "Program") -> "Program":
        """Combine two programs, re-checking arity consistency."""
        out = Program()
        for source in (self, other):
            for atom, pos in zip(source.facts, source.fact_positions):
                out._register_arity(atom, pos)
                out.facts.append(atom)
                out.fact_positions.append(pos)
            for rule in source.rules:
                pos = source.rule_positions.get(rule.id, ("<merged>", 0))
                for atom in (rule.head, *rule.body):
                    out._register_arity(atom, pos)
                out.rules.append(rule)
                out.rule_positions[rule.id] = pos
        # drop duplicate facts, keeping first occurrence order
        seen: set[Atom] = set()
        facts, positions = [], []
        for atom, pos in zip(out.facts, out.fact_positions):
            if atom in seen:
                continue
            seen.add(atom)
            facts.append(atom)
            positions.append(pos)
        out.facts, out.fact_positions = facts, positions
        return out

    def _register_arity(self, atom: Atom, pos: tuple[str, int]) -> None:
        known = self.arities.get(atom.predicate)
        if known is None:
            self.arities[atom.predicate] = atom.arity
            self._arity_sites[atom.predicate] = pos
        elif known != atom.arity:
            first = self._arity_sites.get(atom.predicate, ("<unknown>", 0))
            raise ParseError(
                f"predicate {atom.predicate}/{atom.arity} conflicts with earlier "
                f"{atom.predicate}/{known} (first used at {first[0]}:{first[1]})",
                pos[1],
                0,
                pos[0],
            )

    def __str__(self) -> str:
        lines = [f"{a}." for a in self.facts]
        for rule in self.rules:
            body = ",\n    ".join(str(b) for b in rule.body)
            lines.append(f"% rule {rule.id}: {rule.label}".rstrip())
            lines.append(f"{rule.head} :-\n    {body}.")
        return "\n".join(lines) + ("\n" if lines else "")


class _Parser:
    def __init__(self, tokens: list[_Token], source: str):
        self.tokens = tokens
        self.source = source
        self.pos = 0
        self.fresh_counter = 0

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, expected: str | None = None) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.column, self.source)
        if expected is not None and tok.text != expected:
            raise ParseError(
                f"expected {expected!r}, found {tok.text!r}", tok.line, tok.column, self.source
            )
        self.pos += 1
        return tok

    def _parse_term(self) -> Term:
        tok = self._next()
        if tok.kind == "int":
            return Term.const(int(tok.text))
        if tok.kind == "quoted":
            body = tok.text[1:-1]
            body = body.replace("\\'", "'").replace('\\"', '"').replace("\\\\", "\\")
            return Term.const(body)
        if tok.kind == "ident":
            if tok.text == "_":
                self.fresh_counter += 1
                return Term.var(f"_G{self.fresh_counter}")
            if tok.text[0].isupper() or tok.text[0] == "_":
                return Term.var(tok.text)
            return Term.const(tok.text)
        raise ParseError(f"expected a term, found {tok.text!r}", tok.line, tok.column, self.source)

    def _parse_atom(self) -> Atom:
        tok = self._next()
        if tok.kind != "ident" or not tok.text[0].islower():
            raise ParseError(
                f"expected a predicate name, found {tok.text!r}", tok.line, tok.column, self.source
            )
        predicate = tok.text
        args: list[Term] = []
        nxt = self._peek()
        if nxt is not None and nxt.text == "(":
            self._next("(")
            args.append(self._parse_term())
            while self._peek() is not None and self._peek().text == ",":  # type: ignore[union-attr]
                self._next(",")
                args.append(self._parse_term())
            self._next(")")
        return Atom(predicate, tuple(args))

    def parse(self) -> Program:
        program = Program()
        pending_note: tuple[str, str] | None = None
        rule_counter = 0
        while True:
            tok = self._peek()
            if tok is None:
                break
            if tok.kind == "comment":
                note = _RULE_NOTE_RE.match(tok.text)
                if note:
                    pending_note = (note.group(1), note.group(2) or "")
                self._next()
                continue
            start = tok
            head = self._parse_atom()
            tok = self._peek()
            if tok is None:
                raise ParseError("unexpected end of clause", start.line, start.column, self.source)
            if tok.text == ".":
                self._next(".")
                if not head.is_ground:
                    raise ParseError(
                        f"fact {head} contains variables", start.line, start.column, self.source
                    )
                program._register_arity(head, (self.source, start.line))
                if head not in set(program.facts):
                    program.facts.append(head)
                    program.fact_positions.append((self.source, start.line))
                pending_note = None
                continue
            self._next(":-")
            body = [self._parse_atom()]
            while self._peek() is not None and self._peek().text == ",":  # type: ignore[union-attr]
                self._next(",")
                body.append(self._parse_atom())
            self._next(".")
            if pending_note is not None:
                rule_id, label = pending_note
            else:
                rule_counter += 1
                rule_id = f"{head.predicate}/{start.line}"
                label = ""
            pending_note = None
            try:
                rule = Rule(head=head, body=tuple(body), id=rule_id, label=label)
            except ValueError as exc:
                raise ParseError(str(exc), start.line, start.column, self.source) from exc
            for atom in (head, *body):
                program._register_arity(atom, (self.source, start.line))
            if rule.id in program.rule_positions:
                raise ParseError(
                    f"duplicate rule id {rule.id!r}", start.line, start.column, self.source
                )
            program.rules.append(rule)
            program.rule_positions[rule.id] = (self.source, start.line)
        return program


def parse_program(text: str, source: str = "<input>") -> Program:
    """Parse fact/rule source text into a :class:`Program`.

    A comment of the form ``% rule <id>: <label>`` immediately preceding a
    rule attaches a stable identifier and human-readable label to it;
    unannotated rules get an id derived from their head predicate and line.
    """
    return _Parser(_tokenize(text, source), source).parse()


def parse_atom(text: str, source: str = "<goal>") -> Atom:
    """Parse a single (possibly non-ground) atom, e.g. a goal pattern."""
    parser = _Parser(_tokenize(text, source), source)
    atom = parser._parse_atom()
    trailing = parser._peek()
    if trailing is not None and trailing.text == ".":
        parser._next(".")
        trailing = parser._peek()
    if trailing is not None:
        raise ParseError(
            f"unexpected input after atom: {trailing.text!r}",
            trailing.line,
            trailing.column,
            source,
        )
    return atom


# -------------------------------------------------------------- unification


def match_atom(pattern: Atom, ground: Atom, binding: dict[str, Term]) -> dict[str, Term] | None:
    """Match a pattern atom against a ground atom, extending ``binding``."""
    if pattern.predicate != ground.predicate or pattern.arity != ground.arity:
        return None
    out = dict(binding)
    for p, g in zip(pattern.args, ground.args):
        if p.is_variable:
            bound = out.get(str(p.value))
            if bound is None:
                out[str(p.value)] = g
            elif bound != g:
                return None
        elif p != g:
            return None
    return out


# --------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class DerivationStep:
    """One successful rule instantiation.

    Supports are ordered by body position; every support is either a fact or
    an atom derived in an earlier round.
    """

    rule_id: str
    binding: tuple[tuple[str, str], ...]
    atom: Atom
    supports: tuple[Atom, ...]
    round: int

    @property
    def support_set(self) -> frozenset[Atom]:
        return frozenset(self.supports)


@dataclass
class EvaluationResult:
    derived: set[Atom]
    trace: list[DerivationStep]
    rounds: int
    atom_round: dict[Atom, int]


def evaluate(program: Program, max_atoms: int = 1_000_000) -> EvaluationResult:
    """Compute the least fixpoint of the rules over the facts.

    Returns all derived ground atoms together with the derivation trace; an
    atom derived by k distinct (rule, support-set) pairs appears in k trace
    entries, while a repeat of an identical support set is ignored.
    """
    atom_round: dict[Atom, int] = {}
    by_pred: dict[str, list[Atom]] = {}

    def add_atom(atom: Atom, rnd: int) -> bool:
        if atom in atom_round:
            return False
        atom_round[atom] = rnd
        by_pred.setdefault(atom.predicate, []).append(atom)
        return True

    for fact in program.facts:
        add_atom(fact, 0)
    n_facts = len(atom_round)

    trace: list[DerivationStep] = []
    seen_derivations: set[tuple[str, Atom, frozenset[Atom]]] = set()

    def candidates(pred: str, rnd_lo: int, rnd_hi: int) -> list[Atom]:
        return [
            a for a in by_pred.get(pred, []) if rnd_lo <= atom_round[a] <= rnd_hi
        ]

    rnd = 0
    delta_nonempty = True
    while delta_nonempty:
        rnd += 1
        new_atoms: list[Atom] = []
        for rule in program.rules:
            n = len(rule.body)
            for pivot in range(n):
                # semi-naive split: the pivot position matches last round's
                # delta, earlier positions match strictly older atoms, later
                # positions match anything known so far.
                def extend(i: int, binding: dict[str, Term], supports: list[Atom]) -> None:
                    if i == n:
                        head = rule.head.substitute(binding)
                        key = (rule.id, head, frozenset(supports))
                        if key in seen_derivations:
                            return
                        seen_derivations.add(key)
                        trace.append(
                            DerivationStep(
                                rule_id=rule.id,
                                binding=tuple(
                                    sorted((v, str(t)) for v, t in binding.items())
                                ),
                                atom=head,
                                supports=tuple(supports),
                                round=rnd,
                            )
                        )
                        if add_atom(head, rnd):
                            new_atoms.append(head)
                            if len(atom_round) - n_facts > max_atoms:
                                raise ResourceLimitError(
                                    f"derived-atom cap exceeded ({max_atoms})"
                                )
                        return
                    if i == pivot:
                        pool = candidates(rule.body[i].predicate, rnd - 1, rnd - 1)
                    elif i < pivot:
                        pool = candidates(rule.body[i].predicate, 0, rnd - 2)
                    else:
                        pool = candidates(rule.body[i].predicate, 0, rnd - 1)
                    for ground in pool:
                        extended = match_atom(rule.body[i], ground, binding)
                        if extended is not None:
                            supports.append(ground)
                            extend(i + 1, extended, supports)
                            supports.pop()

                extend(0, {}, [])
        delta_nonempty = bool(new_atoms)

    derived = {a for a, r in atom_round.items() if r > 0 and a not in program.fact_set}
    return EvaluationResult(derived=derived, trace=trace, rounds=rnd, atom_round=atom_round)


# ------------------------------------------------------------ graph building


def build_attack_graph(
    program: Program,
    goal: Atom | str,
    result: EvaluationResult | None = None,
    max_atoms: int = 1_000_000,
) -> AttackGraph:
    """Build the logical attack graph backward-reachable from a goal pattern.

    Facts become LEAF nodes, derived atoms OR nodes and each recorded rule
    instantiation an AND node.  When alternative derivations would close a
    directed cycle (possible with recursive rules), later derivations are
    dropped in trace order so the result is always acyclic; first derivations
    are never dropped.
    """
    if isinstance(goal, str):
        goal = parse_atom(goal)
    if result is None:
        result = evaluate(program, max_atoms=max_atoms)

    facts = program.fact_set
    goal_atoms = sorted(
        (a for a in result.derived if match_atom(goal, a, {}) is not None),
        key=str,
    )
    if not goal_atoms:
        logger.warning("goal pattern %s matches no derived atom; graph is empty", goal)
        return AttackGraph(nodes={}, edges=(), goals=())

    # entries per derived atom, in chronological (trace) order; derivations
    # of atoms that are already facts are ignored -- facts stay leaves.
    entries_by_atom: dict[Atom, list[DerivationStep]] = {}
    for step in result.trace:
        if step.atom in facts:
            continue
        entries_by_atom.setdefault(step.atom, []).append(step)

    # backward closure over all recorded derivations
    needed: set[Atom] = set()
    stack = list(goal_atoms)
    while stack:
        atom = stack.pop()
        if atom in needed:
            continue
        needed.add(atom)
        for step in entries_by_atom.get(atom, ()):
            for support in step.supports:
                if support not in needed:
                    stack.append(support)

    nodes: dict[str, Node] = {}
    edges: set[tuple[str, str]] = set()

    def node_for_atom(atom: Atom) -> str:
        primitive = atom in facts
        nid = fact_node_id(atom, primitive)
        if nid not in nodes:
            nodes[nid] = Node(
                id=nid,
                kind=KIND_LEAF if primitive else KIND_OR,
                label=str(atom),
                fact=str(atom),
            )
        return nid

    def reaches(src: str, dst: str, adjacency: dict[str, set[str]]) -> bool:
        seen = {src}
        stack = [src]
        while stack:
            cur = stack.pop()
            if cur == dst:
                return True
            for nxt in adjacency.get(cur, ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    adjacency: dict[str, set[str]] = {}
    rules_by_id = {r.id: r for r in program.rules}

    def add_edge(src: str, dst: str) -> None:
        edges.add((src, dst))
        adjacency.setdefault(src, set()).add(dst)

    for step in result.trace:
        if step.atom in facts or step.atom not in needed:
            continue
        head_id = node_for_atom(step.atom)
        support_ids = [node_for_atom(s) for s in step.supports]
        # refuse derivations that would close a directed cycle
        if any(reaches(head_id, sid, adjacency) for sid in set(support_ids)):
            logger.debug("dropping cyclic derivation of %s via %s", step.atom, step.rule_id)
            continue
        rule = rules_by_id[step.rule_id]
        and_id = derivation_node_id(step.rule_id, step.atom, frozenset(map(str, step.supports)))
        if and_id in nodes:
            continue
        nodes[and_id] = Node(
            id=and_id,
            kind=KIND_AND,
            label=rule.label or rule.id,
            rule_id=rule.id,
        )
        for sid in set(support_ids):
            add_edge(sid, and_id)
        add_edge(and_id, head_id)

    # prune anything that no longer leads to a goal node
    goal_ids = {fact_node_id(a, False) for a in goal_atoms}
    incoming: dict[str, set[str]] = {}
    for src, dst in edges:
        incoming.setdefault(dst, set()).add(src)
    keep: set[str] = set()
    stack2 = [g for g in goal_ids if g in nodes]
    while stack2:
        cur = stack2.pop()
        if cur in keep:
            continue
        keep.add(cur)
        stack2.extend(incoming.get(cur, ()))
    nodes = {nid: n for nid, n in nodes.items() if nid in keep}
    kept_edges = tuple(e for e in edges if e[0] in keep and e[1] in keep)
    return AttackGraph(nodes=nodes, edges=kept_edges, goals=tuple(sorted(goal_ids & keep)))
