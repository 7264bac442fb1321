import json
import subprocess
import sys
from pathlib import Path

import pytest

from finspace.cli import run_cli

from oracles import dunce_hat

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def fx(name):
    return str(FIXTURES / name)


def run(capsys, *argv):
    code = run_cli([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", fx("dl.json"))
    assert code == 0
    assert out == "valid: 3 points, dimension 1, rational universe\nfinite space: yes\n"
    code, out, _ = run(capsys, "validate", fx("s1.json"), "--format", "json")
    assert json.loads(out) == {
        "valid": True,
        "finite_space": True,
        "points": 4,
        "dimension": 1,
        "universe": "topological over Z",
    }


def test_cohomology_default_degrees(capsys):
    code, out, _ = run(capsys, "cohomology", fx("p1.json"))
    assert code == 0
    assert out.splitlines() == ["open: {g, p, q}  sheaf: structure", "H^0 = k    [constant: 1]", "H^1 = 0    [0]"]
    _, out, _ = run(capsys, "cohomology", fx("s1.json"))
    assert out.splitlines()[1:] == ["H^0 = Z    [module: 1]", "H^1 = Z    [module: 1]"]


def test_doubled_line_first_cohomology(capsys):
    code, out, _ = run(capsys, "cohomology", fx("dl.json"), "--degree", "1")
    assert code == 0
    assert out.splitlines()[1].startswith("H^1 = k(x)/k[x]    [")
    _, out, _ = run(capsys, "cohomology", fx("dl.json"), "--degree", "1", "--format", "json")
    doc = json.loads(out)
    assert [d["degree"] for d in doc["degrees"]] == [1]
    assert doc["degrees"][0]["rendered"] == "k(x)/k[x]"


def test_degree_past_dimension_is_zero(capsys):
    _, out, _ = run(capsys, "cohomology", fx("p1.json"), "--degree", "4")
    assert out.splitlines()[1] == "H^4 = 0    [0]"


def test_cohomology_of_twist(capsys):
    _, out, _ = run(capsys, "cohomology", fx("p1.json"), "--sheaf", fx("p1_twist_m2.json"))
    assert out.splitlines()[2] == "H^1 = laurent:-1:1    [laurent:-1: 1]"
    _, out, _ = run(capsys, "cohomology", fx("p1.json"), "--sheaf", fx("p1_twist_3.json"), "--format", "json")
    doc = json.loads(out)
    assert sum(p["dim"] * p["multiplicity"] for p in doc["degrees"][0]["pieces"]) == 4


def test_cohomology_on_open(capsys):
    _, out, _ = run(capsys, "cohomology", fx("p1.json"), "--open", "p", "--format", "json")
    doc = json.loads(out)
    assert doc["open"] == ["g", "p"]
    assert doc["degrees"][0]["rendered"] == "k[x]"


def test_window_mode(capsys):
    code, out, _ = run(capsys, "cohomology", fx("dl.json"), "--mode", "window", "--window", "8")
    assert code == 0
    assert out.splitlines() == [
        "window 8 (stabilized)",
        "H^0: constant: 1, infinity: 8",
        "H^1: place:one: 8, place:zero: 8, unlisted: 8",
    ]


@pytest.mark.parametrize(
    "argv, code, first",
    [
        (["check", "schematic", "dl.json"], 0, "schematic: true"),
        (["check", "semi-separated", "p1.json"], 0, "semi-separated: true"),
        (["check", "schematic", "vee.json"], 1, "schematic: false"),
        (["check", "affine", "p1.json"], 1, "affine: false"),
        (["check", "affine", "wedge.json"], 0, "affine: true"),
        (["check", "finite", "p1.json"], 0, "finite space: yes"),
        (["check", "open-restrictions", "p1.json"], 0, "open restrictions: true"),
        (["check", "open-restrictions", "dl.json"], 1, "open restrictions: false"),
        (["check", "quasi-coherent", "s1.json", "--sheaf", "s1_doubled.json"], 1, "quasi-coherent: false"),
        (["check", "quasi-coherent", "s1.json", "--sheaf", "s1_constant.json"], 0, "quasi-coherent: true"),
        (["check", "quasi-coherent", "s1.json", "--sheaf", "s1_constant.json", "--finite-type"], 0, "finite type: true"),
        (["check", "quasi-coherent", "p1.json", "--sheaf", "p1_twist_m2.json"], 0, "quasi-coherent: true"),
        (["morphism-check", "dl_to_point.json", "--property", "affine"], 1, "affine morphism: false"),
        (["morphism-check", "chain3_to_chain2.json", "--property", "weak-equivalence"], 0, "weak equivalence: true"),
        (["morphism-check", "generic_into_dl.json"], 0, "schematic morphism: true"),
        (["morphism-check", "generic_into_dl.json", "--property", "weak-equivalence"], 1, "weak equivalence: false"),
        (["morphism-check", "p1_to_point.json", "--property", "locally-acyclic"], 0, "locally acyclic"),
    ],
)
def test_check_verdicts(capsys, argv, code, first):
    argv = [fx(a) if a.endswith(".json") else a for a in argv]
    got, out, _ = run(capsys, *argv)
    assert got == code
    assert out.splitlines()[0].startswith(first)


def test_counterexample_lines(capsys):
    _, out, _ = run(capsys, "check", "open-restrictions", fx("dl.json"))
    assert out.splitlines()[1] == "fails: edge p<g: flat-mono-not-open"
    _, out, _ = run(capsys, "check", "quasi-coherent", fx("s1.json"), "--sheaf", fx("s1_doubled.json"))
    assert out.splitlines()[1] == "  fails at a<c"


def test_check_json_and_certificate(capsys):
    _, out, _ = run(capsys, "check", "affine", fx("dl.json"), "--format", "json")
    doc = json.loads(out)
    assert doc["verdict"] is False
    assert doc["counterexample"]["kind"] == "acyclic"
    _, out, _ = run(capsys, "check", "schematic", fx("p1.json"), "--format", "json", "--certificate")
    doc = json.loads(out)
    assert doc["verdict"] is True
    assert len(doc["certificate"]) == doc["obligations"]


def test_paranoid_agrees(capsys):
    for name in ("dl.json", "p1.json", "vee.json", "s1.json"):
        plain, _, _ = run(capsys, "check", "schematic", fx(name))
        paranoid, _, _ = run(capsys, "check", "schematic", fx(name), "--paranoid")
        assert plain == paranoid


def test_unknown_exit(capsys, tmp_path):
    path = tmp_path / "hat.json"
    path.write_text(json.dumps(dunce_hat().to_json()))
    code, out, _ = run(capsys, "check", "affine", path)
    assert code == 2
    assert out.startswith("affine: unknown")


def test_stein_writes_middle_space(capsys, tmp_path):
    out_path = tmp_path / "stein.json"
    code, out, _ = run(capsys, "stein", fx("dl_to_point.json"), "-o", out_path)
    assert code == 0
    assert out.splitlines() == [f"Y' written to {out_path}", "  pt: k[x]"]
    doc = json.loads(out_path.read_text())
    assert set(doc) == {"space", "stein_part", "affine_part"}
    assert doc["stein_part"]["map"] == {"g": "pt", "p": "pt", "q": "pt"}
    middle = tmp_path / "middle.json"
    middle.write_text(json.dumps(doc["space"]))
    assert run(capsys, "validate", middle)[0] == 0


def test_product_over_a_point(capsys, tmp_path):
    out_path = tmp_path / "prod.json"
    code, out, _ = run(
        capsys, "product", fx("x_over_s.json"), fx("y_over_s.json"), "--over", fx("point_s.json"), "-o", out_path
    )
    assert code == 0
    assert out.splitlines()[0] == f"fibered product: 1 point written to {out_path}"
    doc = json.loads(out_path.read_text())
    assert doc["space"]["points"][0]["poles"] == ["zero", "one", "inf"]


def test_product_of_wedges(capsys, tmp_path):
    out_path = tmp_path / "wedge2.json"
    code, out, _ = run(capsys, "product", fx("wedge.json"), fx("wedge.json"), "--over", fx("point_top.json"), "-o", out_path)
    assert code == 0
    assert out.splitlines()[1:] == ["schematic: true", "projections schematic: true, true"]
    assert len(json.loads(out_path.read_text())["space"]["points"]) == 9


def test_product_rejects_wrong_base(capsys, tmp_path):
    code, _, err = run(
        capsys, "product", fx("x_over_s.json"), fx("y_over_s.json"), "--over", fx("point.json"), "-o", tmp_path / "p.json"
    )
    assert code == 3
    assert "x_over_s.json" in err


def test_model_with_refinement(capsys, tmp_path):
    out_path = tmp_path / "model.json"
    code, out, _ = run(capsys, "model", fx("p1.json"), fx("p1_cover.json"), "-o", out_path)
    assert code == 0
    assert out.splitlines() == [
        f"model: 3 points written to {out_path}",
        "refinement map: g -> g, p -> p, q -> q",
        "weak equivalence: true",
    ]
    doc = json.loads(out_path.read_text())
    assert doc["refinement"]["weak_equivalence"]["verdict"] is True


def test_spec_export(capsys, tmp_path):
    code, out, _ = run(capsys, "spec-export", fx("chain2.json"))
    assert code == 0
    assert out.splitlines() == [
        "Spec descriptor: scheme",
        "  chart g: Spec k[x,1/x]",
        "  chart p: Spec k[x]",
        "  g -> p: open-immersion removing {zero}",
        "  global sections: k[x]",
        "  affine: collapses to Spec k[x]",
    ]
    out_path = tmp_path / "dl_spec.json"
    run(capsys, "spec-export", fx("dl.json"), "-o", out_path)
    doc = json.loads(out_path.read_text())
    assert doc["is_scheme"] is False


def test_core(capsys):
    _, out, _ = run(capsys, "core", fx("chain3.json"))
    assert out == "core: {p}  (removed: g, m)\n"
    _, out, _ = run(capsys, "core", fx("s1.json"), "--format", "json")
    assert json.loads(out)["removed"] == []


def test_missing_file_names_it(capsys):
    code, _, err = run(capsys, "validate", "nope.json")
    assert code == 3
    assert "nope.json" in err


def test_malformed_space_names_it(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [{"id": "a", "poles": ["elsewhere"]}], "relations": []}')
    code, _, err = run(capsys, "validate", bad)
    assert code == 3
    assert "bad.json" in err
    bad.write_text("{not json")
    code, _, err = run(capsys, "cohomology", bad)
    assert code == 3
    assert "bad.json" in err


def test_bad_arguments(capsys):
    assert run(capsys, "check", "nonsense", fx("p1.json"))[0] == 3
    assert run(capsys, "cohomology", fx("p1.json"), "--degree", "x")[0] == 3
    assert run(capsys, "cohomology", fx("p1.json"), "--open", "nowhere")[0] == 3
    assert run(capsys, "cohomology", fx("p1.json"), "--sheaf", fx("s1_doubled.json"))[0] == 3


def test_output_is_byte_identical(tmp_path):
    def once(tag):
        out_path = tmp_path / f"{tag}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "finspace", "product", fx("wedge.json"), fx("wedge.json"),
             "--over", fx("point_top.json"), "-o", str(out_path), "--format", "json"],
            capture_output=True,
            check=True,
        )
        return proc.stdout, out_path.read_bytes()

    first, second = once("a"), once("b")
    assert first[1] == second[1]
    assert first[0].replace(b"a.json", b"b.json") == second[0]
    spec = [
        subprocess.run(
            [sys.executable, "-m", "finspace", "spec-export", fx("p1.json"), "--format", "json"],
            capture_output=True,
            check=True,
        ).stdout
        for _ in range(2)
    ]
    assert spec[0] == spec[1]
