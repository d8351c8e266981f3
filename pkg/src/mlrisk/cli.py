"""Command-line front end.

Subcommands: ``generate`` (facts -> attack graph), ``risk`` (graph ->
ranked report), ``score`` (technique severity), ``elicit serve`` /
``elicit aggregate`` (expert questionnaire service) and ``demo`` (the
bundled end-to-end scenario).  Exit codes: 0 success, 1 input error, 2
internal error.  ``MLRISK_WEIGHTS`` names a default weight-model file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import rulepack
from .ahp import WeightModel, aggregate_experts, load_default_hierarchy
from .cmlvss import AttackProfile, CatalogError, EnvironmentProfile, catalog_lookup, severity
from .core import AttackGraph
from .datalog import ParseError, build_attack_graph, evaluate, parse_atom, parse_program
from .risk import VulnerabilityMetadata, assess

WEIGHTS_ENV = "MLRISK_WEIGHTS"


class InputError(Exception):
    """User-facing input problem; maps to exit code 1."""


def _load_weights(path: str | None) -> WeightModel:
    path = path or os.environ.get(WEIGHTS_ENV)
    if not path:
        return WeightModel.defaults()
    try:
        return WeightModel.from_json(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise InputError(f"weight model file not found: {path}") from None
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"bad weight model file {path}: {exc}") from exc


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text("utf-8")
    except FileNotFoundError:
        raise InputError(f"{what} file not found: {path}") from None


def cmd_generate(args: argparse.Namespace) -> int:
    facts = parse_program(_read_text(args.facts, "facts"), source=args.facts)
    if args.rules:
        rules = parse_program(_read_text(args.rules, "rules"), source=args.rules)
    else:
        techniques = args.techniques.split(",") if args.techniques else None
        try:
            rules = rulepack.load_rulepack(techniques=techniques)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    program = rules.merged(facts)

    report = rulepack.validate_facts(facts)
    bad = report.of_kind("arity-mismatch")
    if bad and not args.rules:
        raise InputError("facts do not match the builtin registry:\n" + str(report))
    dangling = program.body_only_predicates()
    if dangling:
        print(
            f"warning: predicates used in rule bodies but never derivable or asserted: "
            f"{sorted(dangling)}",
            file=sys.stderr,
        )

    goal = parse_atom(args.goal)
    result = evaluate(program)
    graph = build_attack_graph(program, goal, result=result)
    if not graph.goals:
        print(f"warning: goal {args.goal} matches no derived fact; graph is empty", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(graph.to_json(), "utf-8")
    if args.dot:
        Path(args.dot).write_text(graph.to_dot(), "utf-8")
    if not args.out and not args.dot:
        print(graph.to_json())
    print(
        f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, "
        f"{len(graph.goals)} goal node(s)",
        file=sys.stderr,
    )
    return 0


def cmd_risk(args: argparse.Namespace) -> int:
    try:
        graph = AttackGraph.from_json(_read_text(args.graph, "graph"))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"graph file {args.graph} does not match the graph schema: {exc}") from exc
    metadata = VulnerabilityMetadata()
    if args.metadata:
        try:
            metadata = VulnerabilityMetadata.from_json(_read_text(args.metadata, "metadata"))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"bad metadata file {args.metadata}: {exc}") from exc
    # weight-model-driven impact values only on request; the default 0.33
    # mapping is what the bundled scenario numbers are defined against
    weights = None
    if args.weights or os.environ.get(WEIGHTS_ENV):
        weights = _load_weights(args.weights)
    report = assess(graph, metadata, limit=args.limit, cap=args.cap, weights=weights)
    if args.out:
        Path(args.out).write_text(report.to_json(), "utf-8")
    sys.stdout.write(report.to_text())
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    if bool(args.technique) == bool(args.profile):
        raise InputError("provide exactly one of --technique or --profile")
    if args.technique:
        try:
            profile = catalog_lookup(args.technique)
        except CatalogError as exc:
            raise InputError(str(exc)) from exc
    else:
        try:
            profile = AttackProfile.from_json_dict(json.loads(_read_text(args.profile, "profile")))
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"bad profile file {args.profile}: {exc}") from exc
    weights = _load_weights(args.weights)
    env = EnvironmentProfile(
        data_validation=args.data_validation,
        feature_extraction=args.feature_extraction,
        ab_testing=args.ab_testing,
    )
    score = severity(profile, weights, env)
    payload = {
        **score.to_json_dict(),
        "technique": profile.technique,
        "environment": {
            "kind": env.kind,
            "data_validation": env.data_validation,
            "feature_extraction": env.feature_extraction,
            "ab_testing": env.ab_testing,
        },
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    print(text)
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    scenario = rulepack.load_scenario(args.scenario)
    report_v = rulepack.validate_facts(scenario.facts, scenario.metadata)
    if not report_v.is_clean:
        raise InputError(f"scenario {scenario.name} facts are invalid:\n{report_v}")
    result = evaluate(scenario.program)
    graph = build_attack_graph(scenario.program, scenario.goal, result=result)
    print(f"scenario: {scenario.name} - {scenario.description}")
    print(
        f"graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, "
        f"{len(graph.goals)} goal node(s)"
    )
    if not graph.goals:
        print("warning: goal matches no derived fact; nothing to assess")
        return 0
    report = assess(graph, scenario.metadata)
    sys.stdout.write(report.to_text())
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "graph.json").write_text(graph.to_json(), "utf-8")
        (out / "graph.dot").write_text(graph.to_dot(), "utf-8")
        (out / "report.json").write_text(report.to_json(), "utf-8")
        (out / "metadata.json").write_text(
            json.dumps(scenario.metadata.to_json_dict(), indent=2), "utf-8"
        )
        print(f"artifacts written to {out}/", file=sys.stderr)
    return 0


def cmd_elicit_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(store_dir=args.store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_elicit_aggregate(args: argparse.Namespace) -> int:
    from .service import SessionStore

    hierarchy = load_default_hierarchy()
    store = SessionStore(args.store)
    session_ids = args.sessions.split(",") if args.sessions else store.list_sessions()
    responses = []
    for sid in session_ids:
        try:
            session = store.load(sid.strip())
        except KeyError:
            raise InputError(f"unknown session {sid!r} in store {args.store}") from None
        if not session.submitted:
            raise InputError(f"session {sid} is not submitted; aggregate only submitted sessions")
        responses.append(session.to_response(hierarchy))
    model = aggregate_experts(responses, hierarchy)
    text = model.to_json()
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    print(text)
    if model.kendall is not None:
        print(f"kendalls_w: {model.kendall:.4f}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlrisk",
        description="Attack-graph risk assessment for ML production systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build an attack graph from fact/rule files")
    p.add_argument("--facts", required=True, help="fact file (Datalog-style)")
    p.add_argument("--rules", help="rule file; defaults to the builtin rulepack")
    p.add_argument("--techniques", help="comma-separated technique ids to keep (builtin rules only)")
    p.add_argument("--goal", required=True, help="goal pattern, e.g. 'evasionAttack4(P, Pl, M, I)'")
    p.add_argument("--out", help="write graph JSON here")
    p.add_argument("--dot", help="write graphviz DOT here")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("risk", help="propagate likelihood over a graph and rank attack paths")
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--metadata", help="vulnerability metadata JSON file")
    p.add_argument("--weights", help="weight model JSON for impact values (default: 0.33 per impact)")
    p.add_argument("--limit", type=int, help="report at most this many paths")
    p.add_argument("--cap", type=int, default=10_000, help="path enumeration cap")
    p.add_argument("--out", help="write report JSON here")
    p.set_defaults(func=cmd_risk)

    p = sub.add_parser("score", help="severity score of an attack technique")
    p.add_argument("--technique", help="catalog technique id, e.g. AT3")
    p.add_argument("--profile", help="profile JSON file (catalog entry format)")
    p.add_argument("--weights", help=f"weight model JSON (default ${WEIGHTS_ENV} or builtin)")
    p.add_argument("--data-validation", action="store_true", help="pipeline validates data")
    p.add_argument("--feature-extraction", action="store_true", help="pipeline extracts features")
    p.add_argument("--ab-testing", action="store_true", help="pipeline A/B-tests models")
    p.add_argument("--out", help="write severity JSON here")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("demo", help="run the bundled demonstration scenario end to end")
    p.add_argument("--scenario", default="demo", help="bundled scenario name")
    p.add_argument("--out-dir", help="write graph/report artifacts here")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("elicit", help="expert elicitation service")
    esub = p.add_subparsers(dest="elicit_command", required=True)
    ps = esub.add_parser("serve", help="run the questionnaire HTTP service")
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=8100)
    ps.add_argument("--store", default="./elicitation-sessions", help="session store directory")
    ps.set_defaults(func=cmd_elicit_serve)
    pa = esub.add_parser("aggregate", help="aggregate submitted sessions into a weight model")
    pa.add_argument("--store", default="./elicitation-sessions", help="session store directory")
    pa.add_argument("--sessions", help="comma-separated session ids (default: all submitted)")
    pa.add_argument("--out", help="write weight model JSON here")
    pa.set_defaults(func=cmd_elicit_aggregate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
