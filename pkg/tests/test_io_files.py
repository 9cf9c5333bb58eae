"""File formats: cell formatting, dataset and feature round trips,
byte-identical re-saves, line-numbered schema errors, and report writers."""

import hashlib
import json
import math
import os

import numpy as np
import pytest

import pedcross.evaluation as ev
import pedcross.features as ftr
import pedcross.io_files as iof
import pedcross.models as md
from pedcross import gaps as gp


def test_fmt_cells():
    assert iof.fmt(None) == ""
    assert iof.fmt(True) == "1" and iof.fmt(False) == "0"
    assert iof.fmt(42) == "42"
    assert iof.fmt(4.0) == "4"
    assert iof.fmt(6.5) == "6.5"
    assert iof.fmt(1.0 / 3.0) == "0.333333333"
    assert iof.fmt("DE-p001-t002") == "DE-p001-t002"


def test_json_float_rounding_and_nonfinite():
    assert iof.json_float(float("nan")) is None
    assert iof.json_float(float("inf")) is None
    assert iof.json_float(1.23456789012345) == 1.23456789
    doc = iof.json_float({"a": [math.inf, 2.0], "b": {"c": math.nan}})
    assert doc == {"a": [None, 2.0], "b": {"c": None}}


def test_config_hash_stable():
    h1 = iof.config_hash("[experiment]\nseed = 1\n")
    h2 = iof.config_hash("[experiment]\nseed = 1\n")
    assert h1 == h2 and len(h1) == 64
    assert h1 != iof.config_hash("[experiment]\nseed = 2\n")


def test_atomic_write_leaves_no_temp(tmp_path):
    p = tmp_path / "out.txt"
    iof.atomic_write_text(str(p), "hello\n")
    assert p.read_text() == "hello\n"
    assert os.listdir(tmp_path) == ["out.txt"]


def _tree_digest(root):
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for name in sorted(filenames):
            full = os.path.join(dirpath, name)
            h.update(os.path.relpath(full, root).encode())
            h.update(open(full, "rb").read())
    return h.hexdigest()


def test_dataset_round_trip(de_cohort, tmp_path):
    trials = de_cohort[:24]
    out = tmp_path / "ds"
    manifest = iof.save_dataset(trials, str(out), seed=1234, cfg_hash="abc")
    assert manifest["counts"]["trials"] == 24
    assert manifest["seed"] == 1234

    loaded = iof.load_dataset(str(out))
    assert [t.trial_id for t in loaded] == sorted(t.trial_id for t in trials)
    orig = {t.trial_id: t for t in trials}
    for t in loaded:
        o = orig[t.trial_id]
        assert t.participant_id == o.participant_id
        assert t.scenario == o.scenario
        assert t.trace_t.shape == o.trace_t.shape
        assert np.abs(t.trace_t - o.trace_t).max() < 1e-7
        assert [s.lane for s in t.streams] == [s.lane for s in o.streams]
        for s, so in zip(t.streams, o.streams):
            assert s.direction == so.direction
            assert np.abs(s.arrival_times - so.arrival_times).max() < 1e-6


def test_dataset_saves_byte_identical(de_cohort, tmp_path):
    trials = de_cohort[:12]
    a, b = tmp_path / "a", tmp_path / "b"
    iof.save_dataset(trials, str(a), seed=9, cfg_hash="h")
    iof.save_dataset(trials, str(b), seed=9, cfg_hash="h")
    assert _tree_digest(a) == _tree_digest(b)


def test_events_jsonl_valid_and_consistent(de_cohort, tmp_path):
    trials = de_cohort[:12]
    out = tmp_path / "ds"
    iof.save_dataset(trials, str(out), seed=1)
    ids = set()
    with open(out / "events.jsonl") as f:
        for line in f:
            doc = json.loads(line)
            ids.add(doc["trial_id"])
            assert set(doc["gaps"]) == {"car_near", "car_far", "car_both",
                                        "eff_near", "eff_far", "eff_both"}
            for windows in doc["gaps"].values():
                for open_t, close_t, dur, used, missed, extrap in windows:
                    assert close_t > open_t
                    assert dur == pytest.approx(close_t - open_t, abs=1e-6)
    assert ids == {t.trial_id for t in trials}


def test_load_reports_row_numbers(de_cohort, tmp_path):
    out = tmp_path / "ds"
    iof.save_dataset(de_cohort[:6], str(out), seed=2)

    idx = out / "index.csv"
    lines = idx.read_text().splitlines()
    lines[3] = lines[3] + ",extra"
    idx.write_text("\n".join(lines) + "\n")
    with pytest.raises(iof.SchemaError, match=":4:"):
        iof.load_dataset(str(out))

    iof.save_dataset(de_cohort[:6], str(out), seed=2)
    lines = idx.read_text().splitlines()
    cells = lines[2].split(",")
    cells[7] = "fast"              # vehicle_speed column
    lines[2] = ",".join(cells)
    idx.write_text("\n".join(lines) + "\n")
    with pytest.raises(iof.SchemaError, match=":3:.*vehicle_speed"):
        iof.load_dataset(str(out))


def test_load_rejects_bad_header(de_cohort, tmp_path):
    out = tmp_path / "ds"
    iof.save_dataset(de_cohort[:6], str(out), seed=3)
    idx = out / "index.csv"
    lines = idx.read_text().splitlines()
    lines[0] = lines[0].replace("trial_id", "trial")
    idx.write_text("\n".join(lines) + "\n")
    with pytest.raises(iof.SchemaError):
        iof.load_dataset(str(out))
    with pytest.raises(iof.SchemaError):
        iof.load_dataset(str(tmp_path / "nowhere"))


def test_features_round_trip(de_cohort, tmp_path):
    rows = [ftr.extract(t) for t in de_cohort[:24]]
    path = tmp_path / "features.csv"
    iof.save_features(rows, str(path))
    back = iof.load_features(str(path))
    assert [r.trial_id for r in back] == sorted(r.trial_id for r in rows)
    orig = {r.trial_id: r for r in rows}
    for r in back:
        o = orig[r.trial_id]
        assert np.allclose(r.pre.as_array(), o.pre.as_array(),
                           rtol=1e-8, atol=1e-12)
        assert (r.label_gap is None) == (o.label_gap is None)
        if r.label_gap is not None:
            assert r.label_gap == pytest.approx(o.label_gap, rel=1e-8)
        assert r.label_zebra == o.label_zebra
        if o.label_trajectory is not None:
            assert r.label_trajectory.shape == (32, 2)
            assert np.allclose(r.label_trajectory, o.label_trajectory,
                               rtol=1e-8, atol=1e-8)


def test_feature_file_errors(tmp_path):
    path = tmp_path / "features.csv"
    path.write_text("nope\n1\n")
    with pytest.raises(iof.SchemaError, match=":1:"):
        iof.load_features(str(path))
    header = ",".join(iof.feature_columns())
    path.write_text(header + "\nshort,row\n")
    with pytest.raises(iof.SchemaError, match=":2:"):
        iof.load_features(str(path))


def _tiny_report():
    return ev.EvalReport(
        task=ev.TASK_GAP, model_kind=md.LINEAR_REGRESSION,
        split_mode=ev.BY_TRIAL,
        fold_metrics=[{"MAE": 1.0, "MAPE": 10.0}, {"MAE": 3.0, "MAPE": 30.0}],
        fold_sizes=[4, 4], mean_metrics={"MAE": 2.0, "MAPE": 20.0})


def test_eval_report_writers(tmp_path):
    rep = _tiny_report()
    csv_path = tmp_path / "eval.csv"
    iof.eval_reports_csv([rep], str(csv_path))
    text = csv_path.read_text().splitlines()
    assert text[0] == "task,model,split_mode,fold,n,MAE,MAPE"
    mean_lines = [l for l in text[1:] if l.split(",")[3] == "mean"]
    assert len(mean_lines) == 1
    assert mean_lines[0].split(",")[4:] == ["8", "2", "20"]

    json_path = tmp_path / "eval.json"
    iof.eval_reports_json([rep], str(json_path))
    doc = json.loads(json_path.read_text())
    assert doc[0]["mean_metrics"]["MAE"] == 2.0
    assert doc[0]["fold_metrics"][1]["MAPE"] == 30.0


def test_small_writers(tmp_path):
    import pedcross.stats as st

    imp = tmp_path / "imp.csv"
    iof.importance_csv([("NN", [("T_w", 0.5), ("V_p", 0.25)])], str(imp))
    lines = imp.read_text().splitlines()
    assert lines[0] == "model,rank,column,score"
    assert lines[1] == "NN,1,T_w,0.5"
    assert lines[2] == "NN,2,V_p,0.25"

    curve = tmp_path / "curve.csv"
    iof.binned_curve_csv([(0.0, 1.0, 0.5, 3, 2.5)], str(curve))
    lines = curve.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,bin_center,n,value"
    assert lines[1] == "0,1,0.5,3,2.5"

    res = tmp_path / "stats.json"
    result = st.TestResult(statistic=1.5, p_value=0.01, group_sizes=(5, 6),
                           statistic_name="U", method="exact")
    iof.test_results_json({"label_gap": result}, str(res))
    doc = json.loads(res.read_text())
    assert doc["label_gap"]["p_value"] == 0.01
    assert doc["label_gap"]["group_sizes"] == [5, 6]
