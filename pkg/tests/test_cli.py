import json
import math
import subprocess
import sys

import pytest
import yaml

from jetgeom import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_space(tmp_path, doc):
    p = tmp_path / "space.yaml"
    p.write_text(yaml.safe_dump(doc), encoding="utf-8")
    return str(p)


def test_check_bundled(capsys):
    code, out, _ = run(capsys, "check", "flat2x2", "--format", "json")
    assert code == 0
    assert json.loads(out) == {"ok": True, "space": "flat2x2", "m": 2, "n": 2}


@pytest.mark.parametrize(
    "doc, code_name",
    [
        (
            {"dims": {"m": 2, "n": 2}, "h": [["1", "0"], ["0", "1"]], "g_inv": [["1", "1"], ["1", "1"]]},
            "singular_metric",
        ),
        ({"dims": {"m": 2, "n": 2}, "h": [["1", "0"], ["0", "1"]]}, "missing_required_field"),
    ],
)
def test_check_rejects_invalid_files(doc, code_name, capsys, tmp_path):
    code, out, _ = run(capsys, "check", write_space(tmp_path, doc))
    assert code == 1
    report = json.loads(out)
    assert report["ok"] is False
    assert [e["code"] for e in report["errors"]] == [code_name]


def test_compute_sphere_christoffel_at_point(capsys):
    code, out, _ = run(capsys, "compute", "sphere2", "--object", "gamma", "--at", "x1=0.7", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    comps = {tuple(c["index"]): c["value"] for c in doc["tensors"][0]["components"]}
    assert abs(comps[(1, 2, 2)] - (-math.sin(0.7) * math.cos(0.7))) < 1e-10
    assert abs(comps[(1, 2, 2)] - (-0.49273)) < 1e-5
    assert list(comps) == sorted(comps)


def test_compute_flat_em_is_zero(capsys):
    code, out, _ = run(capsys, "compute", "flat2x2", "--object", "em", "--format", "json")
    assert code == 0
    doc = json.loads(out)
    assert [t["name"] for t in doc["tensors"]] == ["F", "f"]
    assert {c["value"] for t in doc["tensors"] for c in t["components"]} == {0}


def test_compute_sphere_scalars(capsys):
    code, out, _ = run(capsys, "compute", "sphere2", "--object", "scalar", "--format", "json")
    assert code == 0
    assert json.loads(out)["values"] == {"chi": 0, "R": 2, "Sc": 2}


def test_compute_symbolic_text(capsys):
    code, out, _ = run(capsys, "compute", "sphere2", "--object", "gamma")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "gamma[1,1,1] = 0"
    assert any(line.startswith("gamma[1,2,2] = ") and "sin(x1)" in line for line in lines)


@pytest.mark.parametrize("obj", sorted(cli.OBJECTS))
@pytest.mark.parametrize("name", ["sphere2_u", "m1sphere"])
def test_every_object_renders(obj, name, capsys):
    code, out, _ = run(capsys, "compute", name, "--object", obj, "--at", "x1=0.6", "--format", "json")
    assert code == 0
    json.loads(out)
    code, out, _ = run(capsys, "compute", name, "--object", obj)
    assert code == 0 and out.strip()


def test_compute_ordering_is_stable(capsys):
    first = run(capsys, "compute", "timewarp", "--object", "curvature")
    second = run(capsys, "compute", "timewarp", "--object", "curvature")
    assert first == second


def test_list_objects(capsys):
    code, out, _ = run(capsys, "compute", "--list-objects")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines()]
    assert names == ["chi", "gamma", "G", "N", "cartan", "torsion", "curvature", "ricci", "scalar",
                     "deflection", "em", "einstein"]


def test_compute_input_errors(capsys):
    assert run(capsys, "compute", "sphere2", "--object", "nope")[0] == 1
    assert run(capsys, "compute", "sphere2", "--object", "gamma", "--at", "y7=1")[0] == 1
    assert run(capsys, "compute", "sphere2", "--object", "einstein", "--kappa", "0")[0] == 1
    assert run(capsys, "compute", "sphere2")[0] == 1


def test_point_outside_box_warns(capsys):
    code, out, err = run(capsys, "compute", "sphere2", "--object", "gamma", "--at", "x1=2.0")
    assert code == 0 and "warning" in err and out


def test_verify_flat(capsys):
    code, out, _ = run(capsys, "verify", "flat2x2", "--samples", "20")
    assert code == 0
    report = json.loads(out)
    assert list(report) == ["space", "suite", "seed", "samples", "tolerances", "kappa", "results"]
    for r in report["results"]:
        assert {"identity", "paper_ref", "max_abs_residual", "max_rel_residual", "worst_point"} <= set(r)
        assert ("pass" in r) != ("report_only" in r)


def test_verify_maxwell_end_to_end(capsys):
    code, out, _ = run(capsys, "verify", "sphere2_u", "--suite", "maxwell", "--seed", "7", "--samples", "100")
    assert code == 0
    results = json.loads(out)["results"]
    assert len(results) == 3 and all(r["pass"] for r in results)


def test_verify_negative_control(capsys):
    code, out, err = run(capsys, "verify", "corrupt_gamma", "--samples", "20")
    assert code == 2
    assert "metricity.g_ij|k" in err
    failing = [r["identity"] for r in json.loads(out)["results"] if r.get("pass") is False]
    assert "metricity.g_ij|k" in failing


def test_verify_is_byte_identical(capsys):
    a = run(capsys, "verify", "m1sphere", "--seed", "3", "--samples", "25")
    b = run(capsys, "verify", "m1sphere", "--seed", "3", "--samples", "25")
    assert a == b


def test_report_only_results_do_not_fail_verify(capsys):
    code, out, _ = run(capsys, "verify", "timewarp", "--suite", "conservation", "--samples", "20")
    assert code == 0
    assert all(r["report_only"] for r in json.loads(out)["results"])


def test_verify_input_errors(capsys):
    assert run(capsys, "verify", "flat2x2", "--samples", "0")[0] == 1
    assert run(capsys, "verify", "flat2x2", "--suite", "bogus")[0] == 1


def test_internal_error_exit_code(capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "run_suite", boom)
    code, _, err = run(capsys, "verify", "flat2x2")
    assert code == 3 and "boom" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "jetgeom", "check", "sphere2"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert "valid" in proc.stdout
