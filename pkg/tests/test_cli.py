import json

import pytest

from kedfl.cli import CSV_HEADER, format_row, main

LINK = {"d_m": 5.0, "H_m": 0.9, "freq_hz": 2.486e9}


def body(x, y=0.0, c=0.55, h=1.8):
    return {"a_m": c, "b_m": c, "h_m": h, "x_m": x, "y_m": y}


@pytest.fixture
def write(tmp_path):
    def _write(doc, name="scenario.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return _write


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_predict_empty_link(write, capsys):
    code, rec = run(capsys, "predict", "--scenario", write({"link": LINK, "bodies": []}))
    assert code == 0
    assert rec["mbm"]["A_db"] == 0 and rec["pmbm"]["A_db"] == 0 and rec["additive"]["A_db"] == 0


def test_predict_two_bodies(write, capsys):
    code, rec = run(capsys, "predict", "--scenario", write({"link": LINK, "bodies": [body(1.0), body(2.5)]}))
    assert code == 0
    assert rec["mbm"]["A_db"] == pytest.approx(20.2203, abs=1e-3)
    assert rec["mixed_term_abs"] > 0.1
    assert set(rec) >= {"mbm", "pmbm", "additive", "warnings"}


@pytest.mark.parametrize(
    "doc, code",
    [
        ({"link": {"dm": 5, "H_m": 0.9, "freq_hz": 1e9}, "bodies": []}, 2),
        ({"link": LINK, "bodies": [body(1.0), body(1.001)]}, 3),
        ({"link": LINK, "bodies": [body(0.5), body(1.5), body(2.5), body(3.5)]}, 5),
    ],
)
def test_exit_codes(write, capsys, doc, code):
    assert run(capsys, "predict", "--engine", "mbm", "--scenario", write(doc))[0] == code


def test_missing_file(capsys):
    assert run(capsys, "predict", "--scenario", "/nonexistent/x.json")[0] == 2


def test_sweep_csv(write, capsys, tmp_path):
    doc = {"link": LINK, "bodies": [body(1.0), body(2.5)], "sweeps": [
        {"name": "along", "body_index": 1, "axis": "along", "start_m": 4.5, "stop_m": 5.0, "step_m": 0.25},
    ]}
    out = tmp_path / "sweep.csv"
    code, rec = run(capsys, "sweep", "--scenario", write(doc), "--sweep", "along", "--engine", "pmbm", "--out", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert [ln.split(",")[0] for ln in lines[1:]] == ["4.5", "4.75", "5"]
    assert lines[-1] == "5,nan,nan,nan,nan,nan"
    assert any("outside" in w for w in rec["warnings"])


def test_sweep_single_row_and_symmetry(write, capsys):
    doc = {"link": LINK, "bodies": [body(1.0), body(2.5)], "sweeps": [
        {"name": "one", "body_index": 1, "axis": "across", "start_m": 0.0, "stop_m": 0.1, "step_m": 1.0},
        {"name": "pm", "body_index": 1, "axis": "across", "start_m": -0.5, "stop_m": 0.5, "step_m": 0.5},
    ]}
    path = write(doc)
    _, rec = run(capsys, "sweep", "--scenario", path, "--sweep", "one", "--engine", "pmbm")
    assert len(rec["csv"].splitlines()) == 2
    _, rec = run(capsys, "sweep", "--scenario", path, "--sweep", "pm", "--engine", "pmbm")
    rows = [ln.split(",") for ln in rec["csv"].splitlines()[1:]]
    assert rows[0][2] == rows[2][2]


def test_format_row_is_six_digits():
    assert format_row([1.0, 12.3456789, float("nan")]) == "1,12.3457,nan"


def test_stats(write, capsys):
    stats = {"P_L_dbm": -45.0, "seed": 5, "sigma0_sq": 1.0, "dsigma_C_sq": 0.5, "n_samples": 50}
    path = write({"link": LINK, "bodies": [body(2.5)], "stats": stats})
    code, rec = run(capsys, "stats", "--scenario", path, "--engine", "pmbm")
    assert code == 0
    assert rec["delta_sigma_sq"] == 0.5 and rec["seed"] == 5
    assert run(capsys, "stats", "--scenario", write({"link": LINK, "bodies": [body(2.5)]}, "b.json"))[0] == 2


def test_oracle(write, capsys):
    path = write({"link": LINK, "bodies": [body(2.0, c=0.2, h=1.1)]})
    code, rec = run(capsys, "oracle", "--scenario", path)
    assert code == 0 and abs(rec["diff_db"]) < 0.1
    assert run(capsys, "oracle", "--scenario", path, "--grid-step", "0.5")[0] == 2
    three = write({"link": LINK, "bodies": [body(1.0), body(2.0), body(3.0)]}, "three.json")
    assert run(capsys, "oracle", "--scenario", three)[0] == 5


def test_calibrate(write, capsys, tmp_path):
    from kedfl.calibration import LandmarkMeasurement, predicted_shift
    from kedfl.scenario import ScenarioGeometry

    g = ScenarioGeometry.from_frequency(5.0, 0.9, 2.486e9)
    places = [((2.5, 0.0), (x, 0.0)) for x in (3.0, 3.5, 4.0)]
    shift = predicted_shift(g, [LandmarkMeasurement(p, 0.0) for p in places], [(0.3, 1.5)] * 2, "pmbm")
    meas = {"landmarks": [
        {"bodies": [{"x_m": a[0], "y_m": 0.0}, {"x_m": b[0], "y_m": 0.0}], "rss_mean_dbm": -50.0 + s}
        for (a, b), s in zip(places, shift)
    ], "reference": {"mu0_dbm": -50.0}}
    scn = write({"link": LINK, "bodies": [body(2.5, c=0.3, h=1.5), body(3.0, c=0.3, h=1.5)],
                 "calibration": {"shared": True, "engine": "pmbm"}})
    mpath = write(meas, "meas.json")
    out = tmp_path / "fit.json"
    code, rec = run(capsys, "calibrate", "--scenario", scn, "--measurements", mpath, "--out", str(out))
    assert code == 0 and rec["iterations"] == 0
    assert json.loads(out.read_text())["c_m"] == [0.3, 0.3]
    empty = write({"landmarks": [], "reference": {"mu0_dbm": -50.0}}, "empty.json")
    assert run(capsys, "calibrate", "--scenario", scn, "--measurements", empty)[0] == 2
    far = write({"landmarks": [{"bodies": [{"x_m": 2.5, "y_m": 30.0}, {"x_m": 3.0, "y_m": 30.0}],
                                "rss_mean_dbm": -50.0}], "reference": {"mu0_dbm": -50.0}}, "far.json")
    code, rec = run(capsys, "calibrate", "--scenario", scn, "--measurements", far)
    assert code == 4 and "no gradient signal" in rec["error"]
