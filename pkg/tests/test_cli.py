"""Command-line behavior: files in, files/reports out, exit codes."""

import json

import pytest

from mlrisk.cli import main
from mlrisk.rulepack import load_scenario
from mlrisk.service import SessionStore


@pytest.fixture()
def demo_files(tmp_path):
    scenario = load_scenario("demo")
    facts = tmp_path / "facts.pl"
    facts.write_text(str(scenario.facts), "utf-8")
    metadata = tmp_path / "metadata.json"
    metadata.write_text(json.dumps(scenario.metadata.to_json_dict()), "utf-8")
    return scenario, facts, metadata


def test_generate_writes_graph_and_dot(demo_files, tmp_path, capsys):
    scenario, facts, _ = demo_files
    graph_path = tmp_path / "graph.json"
    dot_path = tmp_path / "graph.dot"
    code = main(
        [
            "generate",
            "--facts", str(facts),
            "--techniques", "AT3,AT7",
            "--goal", scenario.goal_pattern,
            "--out", str(graph_path),
            "--dot", str(dot_path),
        ]
    )
    assert code == 0
    err = capsys.readouterr().err
    assert "nodes" in err and "goal node(s)" in err
    payload = json.loads(graph_path.read_text("utf-8"))
    assert payload["goals"]
    assert dot_path.read_text("utf-8").startswith("digraph")


def test_generate_missing_file_is_input_error(capsys):
    code = main(["generate", "--facts", "/nonexistent.pl", "--goal", "g(X)"])
    assert code == 1
    assert "not found" in capsys.readouterr().err


def test_generate_unmatched_goal_warns_but_succeeds(demo_files, tmp_path, capsys):
    _, facts, _ = demo_files
    out = tmp_path / "empty.json"
    code = main(
        ["generate", "--facts", str(facts), "--goal", "noSuchThing4(A, B, C, D)",
         "--out", str(out)]
    )
    assert code == 0
    assert "matches no derived fact" in capsys.readouterr().err
    assert json.loads(out.read_text("utf-8"))["nodes"] == []


def test_risk_reports_demo_numbers(demo_files, tmp_path, capsys):
    scenario, facts, metadata = demo_files
    graph_path = tmp_path / "graph.json"
    main(
        ["generate", "--facts", str(facts), "--techniques", "AT3,AT7",
         "--goal", scenario.goal_pattern, "--out", str(graph_path)]
    )
    report_path = tmp_path / "report.json"
    code = main(
        ["risk", "--graph", str(graph_path), "--metadata", str(metadata),
         "--out", str(report_path)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "risk=0.20" in out and "risk=0.10" in out
    report = json.loads(report_path.read_text("utf-8"))
    risks = [p["risk"] for p in report["paths"]]
    assert risks == sorted(risks, reverse=True)
    assert abs(risks[0] - 0.20) < 0.01 and abs(risks[1] - 0.10) < 0.01


def test_risk_rejects_corrupt_graph(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", "utf-8")
    assert main(["risk", "--graph", str(bad)]) == 1
    assert "schema" in capsys.readouterr().err


def test_risk_graph_without_vulnerabilities(tmp_path, capsys):
    facts = tmp_path / "facts.pl"
    facts.write_text("f(a).\n% rule r: step\ng(X) :- f(X).", "utf-8")
    graph_path = tmp_path / "g.json"
    main(["generate", "--facts", str(facts), "--rules", str(facts),
          "--goal", "g(X)", "--out", str(graph_path)])
    code = main(["risk", "--graph", str(graph_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "likelihood=1.00" in out


def test_score_technique_ordering(capsys):
    assert main(["score", "--technique", "AT3"]) == 0
    at3 = json.loads(capsys.readouterr().out)
    assert main(["score", "--technique", "AT1"]) == 0
    at1 = json.loads(capsys.readouterr().out)
    assert at3["severity"] > at1["severity"]


def test_score_maximal_profile_is_ten(tmp_path, capsys):
    profile = tmp_path / "profile.json"
    profile.write_text(
        json.dumps(
            {"id": "MAX", "impacts": ["tampering", "dos", "disclosure"], "performance": "High"}
        ),
        "utf-8",
    )
    assert main(["score", "--profile", str(profile)]) == 0
    assert json.loads(capsys.readouterr().out)["severity"] == pytest.approx(10.0)


def test_score_ab_testing_flag_never_raises_score(capsys):
    assert main(["score", "--technique", "AT7"]) == 0
    off = json.loads(capsys.readouterr().out)
    assert main(["score", "--technique", "AT7", "--ab-testing"]) == 0
    on = json.loads(capsys.readouterr().out)
    assert on["severity"] <= off["severity"]
    assert on["environment"]["kind"] == "guarded"


def test_score_unknown_technique(capsys):
    assert main(["score", "--technique", "AT99"]) == 1
    assert "unknown technique" in capsys.readouterr().err


def test_score_requires_exactly_one_source(capsys):
    assert main(["score"]) == 1
    assert "exactly one" in capsys.readouterr().err


def test_demo_end_to_end(tmp_path, capsys):
    out_dir = tmp_path / "artifacts"
    code = main(["demo", "--out-dir", str(out_dir)])
    assert code == 0
    out = capsys.readouterr().out
    assert "2 attack path(s)" in out
    assert "risk=0.20" in out and "risk=0.10" in out
    assert out.index("risk=0.20") < out.index("risk=0.10")
    assert (out_dir / "graph.json").exists()
    assert (out_dir / "report.json").exists()
    assert (out_dir / "graph.dot").exists()


def test_empty_scenario_demo(capsys):
    code = main(["demo", "--scenario", "empty"])
    assert code == 0
    assert "nothing to assess" in capsys.readouterr().out


def test_elicit_aggregate_from_store(tmp_path, capsys):
    store = SessionStore(tmp_path / "sessions")
    from mlrisk.ahp import load_default_hierarchy

    hierarchy = load_default_hierarchy()
    for expert in ("e1", "e2"):
        session = store.create(expert)
        for path, node in hierarchy.sibling_groups():
            items = [c.name for c in node.children]
            for i, a in enumerate(items):
                for b in items[i + 1:]:
                    ratio = 2.0 if a == items[0] else 1.0
                    store.record_judgment(session.session_id, path, a, b, ratio)
        store.record_submit(session.session_id)
    out = tmp_path / "weights.json"
    code = main(["elicit", "aggregate", "--store", str(tmp_path / "sessions"), "--out", str(out)])
    assert code == 0
    payload = json.loads(out.read_text("utf-8"))
    assert "local_weights" in payload
    assert payload["kendalls_w"] == pytest.approx(1.0)


def test_elicit_aggregate_rejects_unsubmitted(tmp_path, capsys):
    store = SessionStore(tmp_path / "sessions")
    session = store.create("e1")
    code = main(
        ["elicit", "aggregate", "--store", str(tmp_path / "sessions"),
         "--sessions", session.session_id]
    )
    assert code == 1
    assert "not submitted" in capsys.readouterr().err


def test_generate_unknown_technique_is_input_error(demo_files, capsys):
    scenario, facts, _ = demo_files
    code = main(
        ["generate", "--facts", str(facts), "--techniques", "AT99",
         "--goal", scenario.goal_pattern]
    )
    assert code == 1
    assert "unknown technique" in capsys.readouterr().err


def test_risk_rejects_bad_node_kind(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(
        json.dumps({"nodes": [{"id": "n", "kind": "NAND", "label": "x"}], "edges": [], "goals": []}),
        "utf-8",
    )
    assert main(["risk", "--graph", str(bad)]) == 1
    assert "schema" in capsys.readouterr().err
