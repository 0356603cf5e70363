import io
import json

import pytest

from minnisens.cli import run
from minnisens.summary import edinburgh_records, ingest_records, synthesize_summary, write_csv


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    status = run(list(argv), out, err)
    return status, out.getvalue(), err.getvalue()


@pytest.fixture()
def summary_file(tmp_path, published):
    path = tmp_path / "edinburgh.json"
    path.write_text(published.to_json())
    return str(path)


def test_summarize_from_csv(tmp_path):
    path = tmp_path / "survey.csv"
    with open(path, "w", newline="") as fh:
        write_csv(ingest_records(edinburgh_records()), fh)
    status, out, _ = call("summarize", str(path))
    doc = json.loads(out)
    assert status == 0 and doc["n_total"] == 6136 and doc["n_missing"] == 2308


def test_summarize_synthesize():
    status, out, _ = call("summarize", "--synthesize", "--mu-obs", "0.732", "--frac-missing", "0.376",
                          "--n-observed", "3828")
    assert status == 0 and json.loads(out)["frac_missing"] == 0.376
    assert call("summarize", "--synthesize", "--mu-obs", "0.7")[0] == 2


def test_minni_difference(summary_file):
    status, out, _ = call("minni", "--summary", summary_file, "--scale", "difference", "--k-se", "1", "--json")
    doc = json.loads(out)
    assert status == 0
    # one exact standard error; the rounded 0.0072 gives 0.1384 instead
    assert doc["index"][0] == pytest.approx(0.137983, abs=1e-6)
    assert [round(v, 2) for v in doc["index"]] == [0.14, 0.14]
    status, out, _ = call("minni", "--summary", summary_file, "--k-sigma", "0.0072", "--json")
    assert json.loads(out)["index"][0] == pytest.approx(0.1384, abs=5e-5)


def test_minni_ratio(summary_file):
    status, out, _ = call("minni", "--summary", summary_file, "--scale", "ratio", "--k-sigma", "0.0072", "--json")
    assert status == 0 and json.loads(out)["index"][0] == pytest.approx(1.193, abs=5e-4)


def test_budget_must_be_unique(summary_file):
    assert call("minni", "--summary", summary_file)[0] == 2
    assert call("minni", "--summary", summary_file, "--k-se", "1", "--k-sigma", "0.1")[0] == 2


def test_no_missing(tmp_path):
    path = tmp_path / "all-observed.json"
    path.write_text(synthesize_summary(0.5, 0.0, 100).to_json())
    status, out, _ = call("minni", "--summary", str(path), "--k-se", "1", "--json")
    assert status == 1 and "no analysis needed" in json.loads(out)["error"]
    status, _, err = call("minni", "--summary", str(path), "--k-se", "1")
    assert status == 1 and "no analysis needed" in err


def test_infeasible_reports_json(summary_file):
    status, out, _ = call("minni", "--summary", summary_file, "--k-sigma", "0.9", "--json")
    assert status == 1 and json.loads(out)["feasible"] is False


def test_surface_table_column(summary_file):
    status, out, _ = call("surface", "--summary", summary_file, "--pi0", "0.5", "--exp-beta1", "2,3",
                          "--exp-gamma1", "2,3")
    lines = out.strip().splitlines()
    assert status == 0 and lines[0] == "pi0,exp_beta1,exp_gamma1,bias"
    got = [float(l.split(",")[3]) for l in lines[1:]]
    assert got == pytest.approx([-0.0088, -0.0139, -0.0138, -0.0218], abs=1e-4)


def test_isobols_files(summary_file, tmp_path):
    csv_path, svg_path = tmp_path / "iso.csv", tmp_path / "iso.svg"
    status, out, _ = call("isobols", "--summary", summary_file, "--plane", "ed_rd", "--levels-se", "1,2",
                          "--csv", str(csv_path), "--svg", str(svg_path), "--json")
    doc = json.loads(out)
    assert status == 0 and [lv["n_polylines"] for lv in doc["levels"]] == [1, 1]
    assert svg_path.read_text().count("<path") == 2
    assert csv_path.read_text().startswith("plane,level,point_index,x,y\n")


def test_isobols_surface_stdout(summary_file):
    status, out, _ = call("isobols", "--summary", summary_file, "--levels-se=-2", "--resolution", "48")
    assert status == 0 and out.count("\n") > 10
    assert call("isobols", "--summary", summary_file)[0] == 2


def test_strata(tmp_path):
    path = tmp_path / "strata.csv"
    path.write_text("outcome,stratum\n1,a\nNA,a\n0,a\n1,b\n1,b\n0,b\n")
    status, out, _ = call("strata", str(path), "--k-sigma", "0.01", "--ed", "a=0.2,b=0.1", "--rd", "a=0.3,b=0.0")
    assert status == 0 and out.splitlines()[0] == "stratum,weight,bias,minni_ed,minni_rd,feasible"
    assert "no analysis needed" in out.splitlines()[2] or out.splitlines()[2].startswith("b")


def test_variance(tmp_path):
    status, out, _ = call("variance", "--vd-yu", "0.1", "--vd-ug", "0.05", "--ed-yu", "0.3", "--rd-ug", "0.2",
                          "--pr-g1", "0.6", "--json")
    assert status == 0 and json.loads(out)["variance_gap"] == pytest.approx(0.010664)


def test_oracle_small():
    status, out, _ = call("oracle", "--n-joints", "200", "--seed", "3")
    doc = json.loads(out)
    assert status == 0 and doc["pass"] and doc["breaches"] == []


def test_config_file_and_override(summary_file, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# budget\nsummary = {summary_file}\nk_sigma = 0.0072\njson = true\n")
    status, out, _ = call("minni", "--config", str(cfg))
    assert status == 0 and json.loads(out)["k_sigma"] == 0.0072
    status, out, _ = call("minni", "--config", str(cfg), "--k-sigma", "0.005")
    assert json.loads(out)["k_sigma"] == 0.005
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    assert call("minni", "--config", str(bad))[0] == 2


def test_usage_errors(tmp_path):
    assert call("frobnicate")[0] == 2
    assert call("minni", "--summary", str(tmp_path / "missing.json"), "--k-se", "1")[0] == 2
    status, out, _ = call("minni", "--summary", str(tmp_path / "missing.json"), "--k-se", "1", "--json")
    assert status == 2 and json.loads(out)["status"] == 2


def test_deterministic_output(summary_file, tmp_path):
    runs = []
    for _ in range(2):
        svg = tmp_path / "a.svg"
        call("isobols", "--summary", summary_file, "--levels", "-0.0144", "--resolution", "40", "--svg", str(svg))
        runs.append(svg.read_bytes())
    assert runs[0] == runs[1]
    assert call("oracle", "--n-joints", "50")[1] == call("oracle", "--n-joints", "50")[1]


def test_output_flag(summary_file, tmp_path):
    target = tmp_path / "out.json"
    status, out, _ = call("minni", "--summary", summary_file, "--k-se", "1", "--json", "-o", str(target))
    assert status == 0 and out == "" and json.loads(target.read_text())["scale"] == "difference"
