from __future__ import annotations

import json

import pytest

from osmag_nav.cli import main
from osmag_nav.fixtures import five_room_map, five_room_records
from osmag_nav.osmag import serialize_osmag


@pytest.fixture()
def fixture_files(tmp_path):
    map_path = tmp_path / "fixture.osm"
    map_path.write_text(serialize_osmag(five_room_map()), encoding="utf-8")
    records_path = tmp_path / "records.json"
    records_path.write_text(json.dumps(five_room_records()), encoding="utf-8")
    return tmp_path, map_path, records_path


def test_validate_ok(fixture_files, capsys):
    _, map_path, _ = fixture_files
    assert main(["validate", str(map_path)]) == 0
    assert "0 violations" in capsys.readouterr().out


def test_validate_json_output(fixture_files, capsys):
    _, map_path, _ = fixture_files
    assert main(["validate", str(map_path), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload == {"violations": []}


def test_validate_reports_violations(fixture_files, capsys):
    tmp_path, map_path, _ = fixture_files
    broken = map_path.read_text().replace(
        '<tag k="name" v="lounge"/>',
        '<tag k="name" v="lounge"/>\n    <tag k="parent" v="999"/>',
    )
    bad = tmp_path / "broken.osm"
    bad.write_text(broken, encoding="utf-8")
    assert main(["validate", str(bad)]) == 1
    assert "parent-missing" in capsys.readouterr().out


def test_missing_file_is_config_error(tmp_path, capsys):
    assert main(["validate", str(tmp_path / "absent.osm")]) == 2


def test_unknown_flag_exits_2(fixture_files):
    _, map_path, _ = fixture_files
    with pytest.raises(SystemExit) as exc:
        main(["validate", str(map_path), "--frobnicate"])
    assert exc.value.code == 2


def test_enrich_and_query_pipeline(fixture_files, capsys):
    tmp_path, map_path, records_path = fixture_files
    enriched_path = tmp_path / "enriched.osm"
    assert main(["enrich", str(map_path), str(records_path), "-o", str(enriched_path)]) == 0
    capsys.readouterr()
    assert enriched_path.exists()

    assert main(["query", str(enriched_path), "sink"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["rooms"][0]["room_id"] == 105
    assert plan["rooms"][0]["nodes"][0] == 162
    assert "drops" in plan


def test_query_with_scripted_fixture_file(fixture_files, capsys, tmp_path):
    tmp, map_path, records_path = fixture_files
    enriched_path = tmp / "enriched.osm"
    main(["enrich", str(map_path), str(records_path), "-o", str(enriched_path)])
    capsys.readouterr()

    from osmag_nav.llm import ScriptedBackend
    from osmag_nav.osmag import parse_osmag
    from osmag_nav.retrieval import Query, build_prompt

    m = parse_osmag(enriched_path.read_text())
    backend = ScriptedBackend({})
    backend.record(
        build_prompt(m, Query("couch")),
        json.dumps({"rooms": [{"room_id": 105, "nodes": [163]}]}),
    )
    fixtures_path = tmp_path / "replies.json"
    fixtures_path.write_text(json.dumps(backend.fixtures), encoding="utf-8")

    code = main(
        [
            "query", str(enriched_path), "couch",
            "--backend", "scripted", "--fixtures", str(fixtures_path),
        ]
    )
    assert code == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["rooms"] == [{"room_id": 105, "nodes": [163]}]


def test_render_writes_pgm_and_sidecar(fixture_files, capsys):
    tmp_path, map_path, _ = fixture_files
    out = tmp_path / "grid.pgm"
    assert main(["render", str(map_path), "--res", "0.1", "-o", str(out)]) == 0
    assert out.exists()
    sidecar = tmp_path / "grid.json"
    assert sidecar.exists()
    meta = json.loads(sidecar.read_text())
    assert meta["resolution_m"] == 0.1
    assert out.read_text().startswith("P2\n")


def test_simulate_then_eval(fixture_files, capsys):
    tmp_path, map_path, records_path = fixture_files
    enriched_path = tmp_path / "enriched.osm"
    main(["enrich", str(map_path), str(records_path), "-o", str(enriched_path)])
    capsys.readouterr()

    from osmag_nav.fixtures import demo_experiment_config, five_room_world

    world_path = tmp_path / "world.json"
    world_path.write_text(json.dumps(five_room_world().to_dict()), encoding="utf-8")
    config = demo_experiment_config()
    config["map"] = "enriched.osm"
    config["world"] = "world.json"
    config["generate"] = [{"category": "SO", "granularity": "o"}]
    config_path = tmp_path / "experiment.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")

    records_out = tmp_path / "records.jsonl"
    assert main(["simulate", str(config_path), "-o", str(records_out), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["episodes"] == 2

    report_out = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    code = main(
        [
            "eval",
            str(records_out),
            "-o",
            str(report_out),
            "--csv",
            str(csv_out),
            "--map",
            str(enriched_path),
            "--json",
        ]
    )
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["episodes"] == 2
    assert report["r_rsr"] == 1.0
    assert report["map_size_bytes"] > 0
    assert json.loads(report_out.read_text())["episodes"] == 2
    assert csv_out.read_text().startswith("slice,")


def test_demo_seed_reproducible(tmp_path, capsys):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["demo", "--seed", "7", "-o", str(out_a)]) == 0
    assert main(["demo", "--seed", "7", "-o", str(out_b)]) == 0
    capsys.readouterr()
    for name in ("records.jsonl", "report.json", "report.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_demo_json_parses(tmp_path, capsys):
    out = tmp_path / "demo"
    assert main(["demo", "--seed", "1", "-o", str(out), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["episodes"] == 6
    assert set(payload["by_category"]) == {"SO", "RO", "UO"}
