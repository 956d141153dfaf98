import json
import math

import pytest

from builders import astring
from fractaltrace import cli
from fractaltrace import fractalspec as fs


@pytest.fixture
def files(tmp_path):
    cantor = tmp_path / "cantor.json"
    cantor.write_text(json.dumps(fs.spec_to_dict(fs.cantor())))
    alt = tmp_path / "alt.json"
    alt.write_text(json.dumps(fs.spec_to_dict(fs.symmetric([2, 3], [0.25, 1 / 6]))))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"interval": [0, 1], "generator": {"kind": "self_similar", "maps": [[0.6, 0], [0.6, 0.4]]}}))
    gaps = tmp_path / "gaps.csv"
    g = astring(10**5)
    gaps.write_text("length\n" + "\n".join(f"{x:.17g}" for x in g.lengths) + "\n")
    return {"cantor": str(cantor), "alt": str(alt), "bad": str(bad), "gaps": str(gaps), "dir": tmp_path}


def call(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out), out


def test_parse_config_defaults(files):
    cfg = cli.parse_config(["dim", "--spec", files["cantor"]])
    assert cfg.level == 20 and cfg.tolerance == 1e-3 and cfg.kind == "full"
    assert cfg.procedures == ["cesaro_log", "geometric_subsequence", "level_sequence"]
    assert cfg.seed == 0


def test_negative_level_is_a_usage_error(capsys, files):
    code, res, _ = call(capsys, "dim", "--spec", files["cantor"], "--level", "-1")
    assert code == 2 and res["error"]["type"] == "usage"


def test_two_sources_conflict(capsys, files):
    code, res, _ = call(capsys, "dim", "--spec", files["cantor"], "--gaps", files["gaps"])
    assert code == 2 and "not allowed" in res["error"]["message"]


def test_missing_source_and_file(capsys, files):
    assert call(capsys, "dim")[0] == 2
    assert call(capsys, "dim", "--spec", files["dir"] / "nope.json")[0] == 2


def test_invalid_spec_exit_three(capsys, files):
    code, res, _ = call(capsys, "validate", "--spec", files["bad"])
    assert code == 3 and res["error"]["type"] == "validation"


def test_validate(capsys, files):
    code, res, _ = call(capsys, "validate", "--spec", files["cantor"])
    assert code == 0 and res["schema"] == 1 and res["lebesgue"]["verdict"] == "zero"


def test_spectrum_and_csv(capsys, files):
    out = files["dir"] / "s.csv"
    code, res, _ = call(capsys, "spectrum", "--spec", files["cantor"], "--kind", "lacunary", "--level", "3", "--out", out)
    assert code == 0
    assert [h["multiplicity"] for h in res["head"]] == [2, 4, 8]
    assert out.read_text().splitlines()[0] == "value,multiplicity"


def test_dim_cantor(capsys, files):
    code, res, _ = call(capsys, "dim", "--spec", files["cantor"])
    assert code == 0
    assert abs(res["d_abscissa"] - math.log(2) / math.log(3)) < 0.01
    assert res["d_exact"] == pytest.approx(0.6309297536, abs=1e-9)


def test_dim_from_gaps(capsys, files):
    code, res, _ = call(capsys, "dim", "--gaps", files["gaps"])
    assert code == 0 and abs(res["d_box"] - 0.5) < 0.01 and abs(res["d_abscissa"] - 0.5) < 0.01


def test_indices_alternating(capsys, files):
    code, res, _ = call(capsys, "indices", "--spec", files["alt"], "--level", "16")
    assert res["ordered"] is True
    assert res["closed_form"]["delta_lower"] == pytest.approx(0.5, abs=1e-9)


def test_zeta_with_plot(capsys, files):
    out = files["dir"] / "z.csv"
    code, res, _ = call(capsys, "zeta", "--spec", files["cantor"], "--kind", "filled", "--exponent", "1", "--out", out)
    v = res["values"][0]
    assert v["partial"] + v["tail_bound"] == pytest.approx(6.0, rel=1e-9)
    assert out.read_text().splitlines()[0] == "s,zeta"


def test_trace_dixmier(capsys, files):
    code, res, _ = call(capsys, "trace", "--spec", files["cantor"], "--kind", "lacunary", "--level", "30")
    assert code == 0 and len(res["reports"]) == 3
    for r in res["reports"]:
        assert r["value"] == pytest.approx(1 / math.log(2), rel=0.01)


def test_trace_hb_function(capsys, files):
    code, res, _ = call(capsys, "trace", "--spec", files["cantor"], "--kind", "lacunary", "--level", "16",
                        "--function", "indicator:0,0.3333333333333333")
    assert res["spread_across_procedures"] < 1e-3
    assert res["reports"][0]["value"] == pytest.approx(0.5, abs=1e-3)


def test_measure(capsys, files):
    out = files["dir"] / "m.csv"
    code, res, _ = call(capsys, "measure", "--spec", files["cantor"], "--level", "4",
                        "--function", "indicator:0,0.1111111111111111", "--out", out)
    assert res["integral"]["value"] == 0.25 and res["cells"] == 16
    assert out.read_text().splitlines()[1].startswith("1111,")


def test_distance(capsys, files):
    code, res, _ = call(capsys, "distance", "--spec", files["cantor"], "--kind", "lacunary", "--level", "6",
                        "--points", "0,1", "--points", "0.3333333333333333,0.6666666666666666")
    d = [r["distance"] for r in res["distances"]]
    assert d[0] == "inf" and d[1] == pytest.approx(1 / 3)
    assert res["gap_sum"]["bound"] == pytest.approx(1 - (2 / 3) ** 6)


def test_distance_outside_interval(capsys, files):
    code, res, _ = call(capsys, "distance", "--spec", files["cantor"], "--points", "0,2", "--level", "2")
    assert code == 2


def test_minkowski(capsys, files):
    code, res, _ = call(capsys, "minkowski", "--gaps", files["gaps"], "--gauge", "0.5")
    assert res["verdict"] == "measurable"
    assert res["dixmier_prediction"] == pytest.approx(2.0, rel=0.01)


def test_check_seed(capsys):
    code, res, _ = call(capsys, "check", "--seed", "7")
    assert code == 0 and res["all_pass"] is True


def test_report_bundles_everything(capsys, files):
    code, res, _ = call(capsys, "report", "--spec", files["cantor"], "--level", "14")
    assert {"validate", "dim", "indices", "zeta", "trace", "minkowski"} <= set(res)


def test_warm_and_cold_cache_identical(capsys, files):
    cache = files["dir"] / "cache"
    args = ("dim", "--spec", files["alt"], "--level", "12", "--cache", cache)
    _, _, cold = call(capsys, *args)
    assert any(cache.iterdir())
    _, _, warm = call(capsys, *args)
    _, _, none = call(capsys, "dim", "--spec", files["alt"], "--level", "12")
    assert cold == warm == none


def test_floats_have_twelve_significant_digits():
    text = cli.dumps({"x": 1 / 3, "y": math.inf, "z": math.nan})
    res = json.loads(text)
    assert res["x"] == 0.333333333333 and res["y"] == "inf" and res["z"] is None
    assert res["schema"] == 1
