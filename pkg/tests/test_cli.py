import copy
import json
import subprocess
import sys

import pytest

from rashomon.cli import main
from rashomon.scenario import ScenarioError, meridian_path, parse_scenario

MERIDIAN = str(meridian_path())


@pytest.fixture(scope="module")
def raw():
    return json.loads(meridian_path().read_text())


def write(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


# -- scenario loading -------------------------------------------------------


@pytest.mark.parametrize(
    "mutate, path",
    [
        (lambda d: d["perspectives"][0].pop("id"), "perspectives[0]"),
        (lambda d: d["perspectives"][0].update(id="has space"), "perspectives[0].id"),
        (lambda d: d["perspectives"][1].update(backend="oracle"), "perspectives[1].backend"),
        (lambda d: d["observations"][2].update(timestamp="yesterday"), "observations[2].timestamp"),
        (lambda d: d["queries"].append(d["queries"][0]), "queries[5].id"),
        (lambda d: d["curation"].update(decay=1.5), "curation.decay"),
        (
            lambda d: d["perspectives"][0]["fixture"]["observations"]["obs-1"].update(triples="mer:x a"),
            "perspectives[0].fixture.observations.obs-1.triples",
        ),
        (
            lambda d: d["perspectives"][2]["fixture"]["queries"]["q1"]["attacks"].append({"target": "ops", "justification": "x"}),
            "perspectives[2].fixture.queries.q1.attacks[1].target",
        ),
        (lambda d: d["expected"]["queries"].update(q9={"mode": "selection"}), "expected.queries.q9"),
        (lambda d: d["perspectives"][0]["seed_tbox"]["subclass_of"].append(["rel:Nope", "rel:Stakeholder"]), "perspectives[0].seed_tbox"),
    ],
)
def test_malformed_scenarios_name_the_field(raw, mutate, path):
    data = copy.deepcopy(raw)
    mutate(data)
    with pytest.raises(ScenarioError) as info:
        parse_scenario(data)
    assert info.value.path == path
    assert str(info.value).startswith(path + ":")


def test_invalid_json_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "perspectives": [,]\n}')
    assert main(["encode", "--scenario", str(path)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path, capsys):
    assert main(["encode", "--scenario", str(tmp_path / "absent.json")]) == 2
    assert "absent.json" in capsys.readouterr().err


# -- encode -----------------------------------------------------------------


def test_encode_writes_graphs_and_report(tmp_path, capsys):
    assert main(["encode", "--scenario", MERIDIAN, "--out", str(tmp_path), "--logical-clock"]) == 0
    printed = capsys.readouterr().out
    assert "13 of 24 possible encodings" in printed
    assert sorted(p.name for p in tmp_path.iterdir()) == ["fin.ttl", "rel.ttl", "report.json", "report.txt", "risk.ttl"]
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["total"] == {"encoded": 13, "of": 24}
    assert {p: t["encoded"] for p, t in report["totals"].items()} == {"rel": 5, "risk": 3, "fin": 5}
    assert report["generated_at"].startswith("2025-01-01T00:00")


def test_encode_with_rule_backend(capsys):
    assert main(["encode", "--scenario", MERIDIAN, "--backend", "rule_based"]) == 0
    assert "13 of 24" in capsys.readouterr().out


def test_encode_with_zero_observations(tmp_path, raw, capsys):
    data = copy.deepcopy(raw)
    data["observations"] = []
    for p in data["perspectives"]:
        p["fixture"]["observations"] = {}
        for q in p["fixture"]["queries"].values():
            q["proposal"] = None
    del data["expected"]
    out = tmp_path / "out"
    assert main(["encode", "--scenario", write(tmp_path, data), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["observations"] == [] and report["total"]["encoded"] == 0


def test_encode_failure_is_reported_and_nonzero(tmp_path, raw, capsys):
    data = copy.deepcopy(raw)
    del data["perspectives"][1]["fixture"]["observations"]["obs-4"]
    assert main(["encode", "--scenario", write(tmp_path, data)]) == 1
    assert "risk on obs-4" in capsys.readouterr().err


# -- query ------------------------------------------------------------------


def test_query_selection(tmp_path, capsys):
    assert main(["query", "--scenario", MERIDIAN, "--query", "q3", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out == "mode: selection, grounded: {risk}\n"
    outcome = json.loads((tmp_path / "q3.outcome.json").read_text())
    assert outcome["mode"] == "selection" and outcome["grounded"] == ["risk"]
    assert (tmp_path / "q3.af").read_text().startswith("af 3\nrel\nrisk\nfin\n")
    assert "Risk Management's assessment" in (tmp_path / "q3.explanation.txt").read_text()


def test_query_surfacing_lists_preferred(capsys):
    assert main(["query", "--scenario", MERIDIAN, "--query", "q4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "mode: surfacing, grounded: {}"
    assert sorted(lines[1:]) == ["preferred: {fin}", "preferred: {rel}", "preferred: {risk}"]


def test_query_dot_for_unchallenged_round(tmp_path):
    assert main(["query", "--scenario", MERIDIAN, "--query", "q2", "--out", str(tmp_path)]) == 0
    dot = (tmp_path / "q2.dot").read_text()
    assert dot.count("[label=") == 3 and "->" not in dot
    assert dot.count("fillcolor=lightblue") == 3


def test_query_dot_colours_follow_grounded(tmp_path):
    main(["query", "--scenario", MERIDIAN, "--query", "q1", "--out", str(tmp_path)])
    dot = (tmp_path / "q1.dot").read_text()
    assert dot.count("->") == 2
    assert '"rel" [label="Relationship Strategy" style=filled fillcolor=gray85]' in dot
    assert dot.count("fillcolor=lightblue") == 2


def test_query_with_no_proposals(tmp_path, raw, capsys):
    data = copy.deepcopy(raw)
    for p in data["perspectives"]:
        p["fixture"]["queries"]["q2"]["proposal"] = None
        p["fixture"]["queries"]["q2"]["attacks"] = []
    assert main(["query", "--scenario", write(tmp_path, data), "--query", "q2", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("mode: none, grounded: {}") and "no perspective found the query relevant" in out


def test_unknown_query_is_an_error(capsys):
    assert main(["query", "--scenario", MERIDIAN, "--query", "q9"]) != 0
    assert "q9" in capsys.readouterr().err


# -- replay -----------------------------------------------------------------


def test_replay_passes_on_shipped_scenario(capsys):
    assert main(["replay", "--scenario", MERIDIAN]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.rstrip().endswith("25/25 checks passed")


def test_replay_with_rule_backend(capsys):
    assert main(["replay", "--scenario", MERIDIAN, "--backend", "rule_based"]) == 0


def test_replay_detects_tampered_golden(tmp_path, raw, capsys):
    data = copy.deepcopy(raw)
    data["expected"]["queries"]["q4"]["mode"] = "selection"
    assert main(["replay", "--scenario", write(tmp_path, data)]) == 1
    failing = [line for line in capsys.readouterr().out.splitlines() if line.startswith("FAIL")]
    assert len(failing) == 1 and "q4 mode" in failing[0]


def test_replay_without_goldens_is_a_usage_error(tmp_path, raw, capsys):
    data = copy.deepcopy(raw)
    del data["expected"]
    assert main(["replay", "--scenario", write(tmp_path, data)]) == 2
    assert "expected" in capsys.readouterr().err


def test_replay_artifacts_are_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["replay", "--scenario", MERIDIAN, "--logical-clock", "--out", str(out)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and len(names) == 25
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


# -- solve ------------------------------------------------------------------


def solve(tmp_path, text, semantics, capsys):
    path = tmp_path / "graph.af"
    path.write_text(text)
    code = main(["solve", str(path), "--semantics", semantics])
    return code, capsys.readouterr()


def test_solve_grounded_selection_graph(tmp_path, capsys):
    text = "af 3\nrel\nrisk\nfin\natt risk rel\natt risk fin\natt fin rel\n"
    code, out = solve(tmp_path, text, "grounded", capsys)
    assert code == 0 and out.out == "risk\n"


def test_solve_preferred_complete_graph(tmp_path, capsys):
    text = "af 3\nrel\nrisk\nfin\n" + "".join(f"att {a} {b}\n" for a in ("rel", "risk", "fin") for b in ("rel", "risk", "fin") if a != b)
    code, out = solve(tmp_path, text, "preferred", capsys)
    assert code == 0 and sorted(out.out.splitlines()) == ["fin", "rel", "risk"]


def test_solve_members_are_sorted(tmp_path, capsys):
    code, out = solve(tmp_path, "af 3\nc\nb\na\n", "grounded", capsys)
    assert out.out == "a b c\n"


def test_solve_empty_framework(tmp_path, capsys):
    code, out = solve(tmp_path, "# nothing\naf 0\n", "grounded", capsys)
    assert code == 0 and out.out == "\n"


def test_solve_parse_error_reports_line(tmp_path, capsys):
    code, out = solve(tmp_path, "af 2\na\nb\natt a\n", "grounded", capsys)
    assert code != 0 and "line 4" in out.err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rashomon", "replay", "--scenario", MERIDIAN], capture_output=True, text=True)
    assert proc.returncode == 0 and "25/25" in proc.stdout
