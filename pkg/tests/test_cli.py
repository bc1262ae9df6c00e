import json

import pytest

from convexval.cli import main
from convexval.errors import SceneError
from convexval.scene import Scene, dump_report, run_scene

SQUARE = '{"box": [[0, 0], [1, 1]]}'


def _run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_eval_square_half_perimeter_is_exact(capsys):
    code, report = _run(capsys, ["eval", "--body", SQUARE, "--valuation", "intrinsic:1", "--expect", "2"])
    task = report["tasks"][0]
    assert code == 0
    assert task["value"] == 2 and task["method"] == "exact" and task["deviation"] == 0


def test_eval_failing_expectation_exits_one(capsys):
    code, report = _run(capsys, ["eval", "--body", SQUARE, "--valuation", "volume", "--expect", "3"])
    assert code == 1 and report["passed"] is False


def test_euler_on_triangle(capsys):
    code, report = _run(capsys, ["eval", "--body", '{"vertices": [[0,0],[3,0],[1,2]]}',
                                 "--valuation", "euler"])
    assert code == 0 and report["tasks"][0]["value"] == 1


def test_product_of_euler_and_first_intrinsic(capsys):
    code, report = _run(capsys, ["product", "--body", SQUARE, "--left", "euler",
                                 "--right", "intrinsic:1", "--expect", "2", "--tolerance", "1e-3"])
    assert code == 0
    assert report["tasks"][0]["value"] == pytest.approx(2, rel=1e-3)


def test_bad_valuation_name_exits_two(capsys):
    assert main(["eval", "--body", SQUARE, "--valuation", "foo"]) == 2
    assert "unknown valuation" in capsys.readouterr().err


def test_bad_json_exits_two(capsys):
    assert main(["eval", "--body", "{box", "--valuation", "volume"]) == 2


def test_approx_writes_csv(tmp_path, capsys):
    out = tmp_path / "rates.csv"
    code, report = _run(capsys, ["approx", "--sides", "8,16,32,64", "--csv", str(out)])
    assert code == 0 and report["orders"]["V1"] > 1.9
    assert out.read_text().splitlines()[0] == "m,V1_error,V2_error"


def test_check_single_suite(capsys):
    code, report = _run(capsys, ["check", "approx"])
    assert code == 0 and report["results"][0]["name"] == "approx"


UNIT_SCENE = {
    "mode": "rational",
    "bodies": {"sq": {"box": [[0, 0], [1, 1]]}, "tri": {"vertices": [[0, 0], [3, 0], [1, 2]]},
               "quad": {"vertices": [[-1, 0], [0, -1], [1, 0], [0, 2]]}},
    "valuations": {
        "mixed": {"dim": 2, "terms": [{"bodies": ["quad"]}]},
        "vol": {"volume": 2},
        "both": {"sum": ["mixed", "vol"]},
    },
    "tasks": [
        {"id": "unit", "op": "unit_law", "args": {"valuations": ["mixed", "both"], "bodies": ["sq", "tri"]},
         "tolerance": 1e-6},
        {"id": "area", "op": "volume", "args": {"body": "tri"}, "expect": 3},
        {"id": "hp", "op": "intrinsic_volume", "args": {"body": "sq", "j": 1}, "expect": "2"},
    ],
}


def test_unit_law_scene_exits_zero(tmp_path, capsys):
    path = tmp_path / "unit.json"
    path.write_text(json.dumps(UNIT_SCENE))
    code, report = _run(capsys, ["scene", str(path)])
    assert code == 0
    assert [t["passed"] for t in report["tasks"]] == [True, True, True]


def test_scene_report_is_deterministic_apart_from_timing(tmp_path):
    scene = Scene(json.loads(json.dumps(UNIT_SCENE)))

    def strip(report):
        for t in report["tasks"]:
            t.pop("seconds")
        return dump_report(report)

    a, _ = run_scene(scene)
    b, _ = run_scene(scene, threads=3)
    assert strip(a) == strip(b)


def test_dangling_reference_is_named():
    data = json.loads(json.dumps(UNIT_SCENE))
    data["tasks"].append({"id": "lost", "op": "volume", "args": {"body": "ghost"}})
    with pytest.raises(SceneError, match="'ghost'.*'lost'"):
        Scene(data)


def test_dangling_reference_in_valuation():
    data = json.loads(json.dumps(UNIT_SCENE))
    data["valuations"]["mixed"]["terms"][0]["bodies"] = ["nowhere"]
    with pytest.raises(SceneError, match="nowhere"):
        Scene(data)


def test_scene_errors(tmp_path, capsys):
    with pytest.raises(SceneError, match="line 1"):
        Scene.parse("{\"tasks\": [}")
    dup = {"bodies": {"sq": {"box": [[0, 0], [1, 1]]}},
           "tasks": [{"id": "a", "op": "volume", "args": {"body": "sq"}},
                     {"id": "a", "op": "volume", "args": {"body": "sq"}}]}
    with pytest.raises(SceneError, match="duplicate"):
        Scene(dup)
    with pytest.raises(SceneError, match="unknown operation"):
        Scene({"tasks": [{"id": "x", "op": "teleport"}]})
    with pytest.raises(SceneError, match="seed"):
        Scene({"tasks": [{"id": "s", "op": "suite", "args": {"name": "approx"}}]})
    path = tmp_path / "broken.json"
    path.write_text("{")
    assert main(["scene", str(path)]) == 2
    assert "parse error" in capsys.readouterr().err


def test_scene_charts_and_slices(capsys, tmp_path):
    data = {
        "bodies": {"sq": {"box": [[0, 0], [1, 1]]}, "T": {"box": [[0, 0], [2, 2]]},
                   "A": {"vertices": [[0], [1]]}, "B": {"vertices": [["1/2"], [3]]}},
        "valuations": {"vol": {"volume": 2}},
        "charts": {"shear": "affine:[[2,1],[0,1]],[1,0]"},
        "tasks": [
            {"id": "push", "op": "pushforward_eval", "args": {"valuation": "vol", "chart": "shear", "body": "sq"},
             "expect": "1/2"},
            {"id": "slice", "op": "slice_identity", "args": {"T": "T", "A": "A", "B": "B", "x0": ["1/2"]}},
            {"id": "gb", "op": "gauss_bonnet", "args": {"body": "sq"}},
        ],
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(data))
    assert main(["scene", str(path), "--out", str(tmp_path / "r.json")]) == 0
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["tasks"][0]["value"] == "1/2"
    assert all(t["passed"] for t in report["tasks"])
