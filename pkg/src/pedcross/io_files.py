"""Dataset and report file formats.

A dataset directory holds index.csv (one row per trial with scenario and
agent bookkeeping), traces/<trial_id>.csv (t, x, y), streams/<trial_id>.csv
(lane, direction, arrival_t), and manifest.json (seed, config hash, counts;
no timestamps, so reruns are byte-identical).  All files are UTF-8 CSV with
header rows, '.' decimal separator, floats at 9 significant digits, and are
written atomically via temp + rename.

Planted arrival times sit on a 1/64 s grid, which 9 significant digits
represent exactly below 1000 s, so leader-gap arithmetic survives the CSV
round trip bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile

import numpy as np

from . import features as ftr
from . import gaps as gp
from . import sim

DATASET_FORMAT = "pedcross-dataset"
DATASET_VERSION = 1


def fmt(v) -> str:
    """Canonical cell: %.9g floats, plain ints, 1/0 bools, '' for None."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.9g" % float(v)
    return str(v)


def atomic_write_text(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path: str, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def write_json(path: str, doc) -> None:
    atomic_write_text(path, json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _round9(v: float) -> float:
    return float("%.9g" % float(v))


def json_float(v):
    """Round floats to the serialization precision inside JSON documents."""
    if isinstance(v, dict):
        return {k: json_float(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [json_float(x) for x in v]
    if isinstance(v, (float, np.floating)):
        return _round9(v) if np.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


# ---------------------------------------------------------------------------
# Dataset

INDEX_COLUMNS = (
    "trial_id", "participant_id", "country_tag", "condition",
    "zebra_present", "group_condition", "leader_gap",
    "vehicle_speed", "gap_min", "gap_max", "road_width", "zebra_x",
    "start_x", "start_y", "goal_x", "goal_y", "frame_dt",
    "lane_offset_min", "lane_offset_max",
    "walk_speed", "safety_margin", "plan", "followed_leader",
    "missed_before_entry", "threshold_at_entry", "move_start_t",
    "road_entry_est", "lane_offset", "entry_frame_index",
    "zebra_yield_on", "zebra_yield_off",
)


def _index_row(t: sim.TrialRecord):
    s = t.scenario
    o = t.outcome
    yw = t.zebra_yield or (None, None)
    return (t.trial_id, t.participant_id, t.country_tag, t.condition_label,
            s.zebra_present, s.group_condition, s.leader_gap,
            s.vehicle_speed, s.gap_min, s.gap_max, s.road_width, s.zebra_x,
            s.start_x, s.start_y, s.goal_x, s.goal_y, s.frame_dt,
            s.lane_offset_min, s.lane_offset_max,
            o.walk_speed, o.safety_margin, o.plan, o.followed_leader,
            o.missed_before_entry, o.threshold_at_entry, o.move_start_t,
            o.road_entry_est, o.lane_offset, t.entry_frame_index,
            yw[0], yw[1])


def config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def save_dataset(trials, outdir: str, seed, cfg_hash: str = "") -> dict:
    trials = sorted(trials, key=lambda t: t.trial_id)
    os.makedirs(os.path.join(outdir, "traces"), exist_ok=True)
    os.makedirs(os.path.join(outdir, "streams"), exist_ok=True)
    write_csv(os.path.join(outdir, "index.csv"), INDEX_COLUMNS,
              (_index_row(t) for t in trials))
    for t in trials:
        write_csv(os.path.join(outdir, "traces", f"{t.trial_id}.csv"),
                  ("t", "x", "y"),
                  ((tt, xy[0], xy[1]) for tt, xy in zip(t.trace_t, t.trace_xy)))
        rows = []
        for s in t.streams:
            rows.extend((s.lane, s.direction, a) for a in s.arrival_times)
        write_csv(os.path.join(outdir, "streams", f"{t.trial_id}.csv"),
                  ("lane", "direction", "arrival_t"), rows)
    lines = []
    for t in trials:
        bundle = t.gaps or gp.compute_all_gaps(t)
        ev = t.events or gp.crossing_events(t, bundle)
        windows = {
            kind: [[w.open_t, w.close_t, w.duration,
                    bool(w.used), bool(w.missed), bool(w.extrapolated)]
                   for w in getattr(bundle, kind)]
            for kind in ("car_near", "car_far", "car_both",
                         "eff_near", "eff_far", "eff_both")}
        doc = {"trial_id": t.trial_id,
               "wait_start": ev.wait_start,
               "road_entry_t": ev.road_entry_t,
               "crossing_end_t": ev.crossing_end_t,
               "accepted_gap_car_both": ev.accepted_gap_car_both,
               "accepted_gap_effective_both": ev.accepted_gap_effective_both,
               "used_zebra": ev.used_zebra,
               "gaps": windows}
        lines.append(json.dumps(json_float(doc), sort_keys=True))
    atomic_write_text(os.path.join(outdir, "events.jsonl"),
                      "\n".join(lines) + "\n")

    conditions: dict = {}
    for t in trials:
        conditions[t.condition_label] = conditions.get(t.condition_label, 0) + 1
    manifest = {
        "format": DATASET_FORMAT,
        "version": DATASET_VERSION,
        "seed": seed,
        "config_hash": cfg_hash,
        "counts": {
            "trials": len(trials),
            "participants": len({t.participant_id for t in trials}),
            "conditions": dict(sorted(conditions.items())),
        },
    }
    write_json(os.path.join(outdir, "manifest.json"), manifest)
    return manifest


class SchemaError(ValueError):
    """Malformed dataset or feature file."""


def _parse(row_no: int, path: str, conv, value, column: str):
    try:
        return conv(value)
    except ValueError as e:
        raise SchemaError(f"{path}:{row_no}: bad {column} value {value!r}") from e


def load_dataset(path: str):
    """Rebuild TrialRecords from a dataset directory."""
    index_path = os.path.join(path, "index.csv")
    if not os.path.exists(index_path):
        raise SchemaError(f"{index_path}: missing index file")
    with open(index_path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = tuple(next(reader, ()))
        if header != INDEX_COLUMNS:
            raise SchemaError(f"{index_path}:1: unexpected header")
        trials = []
        for i, row in enumerate(reader, start=2):
            if len(row) != len(INDEX_COLUMNS):
                raise SchemaError(f"{index_path}:{i}: expected "
                                  f"{len(INDEX_COLUMNS)} cells, got {len(row)}")
            r = dict(zip(INDEX_COLUMNS, row))
            F = lambda c: _parse(i, index_path, float, r[c], c)  # noqa: E731
            scenario = sim.ScenarioConfig(
                vehicle_speed=F("vehicle_speed"), gap_min=F("gap_min"),
                gap_max=F("gap_max"), road_width=F("road_width"),
                zebra_present=r["zebra_present"] == "1", zebra_x=F("zebra_x"),
                start_x=F("start_x"), start_y=F("start_y"),
                goal_x=F("goal_x"), goal_y=F("goal_y"),
                group_condition=r["group_condition"],
                leader_gap=None if r["leader_gap"] == "" else F("leader_gap"),
                frame_dt=F("frame_dt"),
                lane_offset_min=F("lane_offset_min"),
                lane_offset_max=F("lane_offset_max"))
            outcome = sim.AgentOutcome(
                walk_speed=F("walk_speed"), safety_margin=F("safety_margin"),
                plan=r["plan"], followed_leader=r["followed_leader"] == "1",
                missed_before_entry=int(F("missed_before_entry")),
                threshold_at_entry=F("threshold_at_entry"),
                move_start_t=F("move_start_t"),
                road_entry_est=F("road_entry_est"),
                lane_offset=F("lane_offset"))
            zy = (None if r["zebra_yield_on"] == ""
                  else (F("zebra_yield_on"), F("zebra_yield_off")))
            trials.append((r, scenario, outcome, zy, i))

    records = []
    for r, scenario, outcome, zy, row_no in trials:
        tid = r["trial_id"]
        tpath = os.path.join(path, "traces", f"{tid}.csv")
        spath = os.path.join(path, "streams", f"{tid}.csv")
        for p in (tpath, spath):
            if not os.path.exists(p):
                raise SchemaError(
                    f"{index_path}:{row_no}: missing file for {tid}: {p}")
        tdata = np.loadtxt(tpath, delimiter=",", skiprows=1, ndmin=2)
        lanes: dict = {}
        with open(spath, encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            next(reader)
            for j, row in enumerate(reader, start=2):
                lane, direction, at = row
                lanes.setdefault((lane, int(direction)), []).append(
                    _parse(j, spath, float, at, "arrival_t"))
        # dict preserves write order, which mirrors the stream tuple order
        streams = tuple(
            sim.VehicleStream(lane=lane, direction=d,
                              arrival_times=np.array(ts))
            for (lane, d), ts in lanes.items())
        records.append(sim.TrialRecord(
            trial_id=tid, participant_id=r["participant_id"],
            country_tag=r["country_tag"], scenario=scenario, streams=streams,
            trace_t=tdata[:, 0], trace_xy=tdata[:, 1:3],
            entry_frame_index=int(r["entry_frame_index"]),
            outcome=outcome, zebra_yield=zy))
    return records


# ---------------------------------------------------------------------------
# Feature rows

def feature_columns(m: int = 32):
    traj = [f"traj{i}_{ax}" for i in range(m) for ax in ("x", "y")]
    return (["trial_id", "participant_id", "country_tag", "condition"]
            + list(ftr.PRE_EVENT_COLUMNS) + list(ftr.ENTRY_COLUMNS)
            + ["label_gap", "label_zebra"] + traj)


def save_features(rows, path: str, m: int = 32) -> None:
    cols = feature_columns(m)

    def gen():
        for r in sorted(rows, key=lambda r: r.trial_id):
            pre = list(r.pre.as_array())
            entry = list(r.entry.as_array()) if r.entry is not None else [None] * 5
            traj = (list(r.label_trajectory.reshape(-1))
                    if r.label_trajectory is not None else [None] * (2 * m))
            yield ([r.trial_id, r.participant_id, r.country_tag, r.condition]
                   + pre + entry + [r.label_gap, r.label_zebra] + traj)

    write_csv(path, cols, gen())


def load_features(path: str, m: int = 32):
    cols = feature_columns(m)
    rows = []
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, ())
        if tuple(header) != tuple(cols):
            raise SchemaError(f"{path}:1: unexpected feature header")
        for i, raw in enumerate(reader, start=2):
            if len(raw) != len(cols):
                raise SchemaError(f"{path}:{i}: expected {len(cols)} cells")
            d = dict(zip(cols, raw))
            pre = ftr.PreEventFeatures(**{
                c: _parse(i, path, float, d[c], c)
                for c in ftr.PRE_EVENT_COLUMNS})
            entry = None
            if d["D_n"] != "":
                entry = ftr.EntryFrameFeatures(**{
                    c: _parse(i, path, float, d[c], c)
                    for c in ftr.ENTRY_COLUMNS})
            traj = None
            if d["traj0_x"] != "":
                flat = [_parse(i, path, float, d[f"traj{j}_{ax}"], "traj")
                        for j in range(m) for ax in ("x", "y")]
                traj = np.array(flat).reshape(m, 2)
            rows.append(ftr.FeatureRow(
                trial_id=d["trial_id"], participant_id=d["participant_id"],
                country_tag=d["country_tag"], condition=d["condition"],
                pre=pre, entry=entry,
                label_gap=None if d["label_gap"] == "" else float(d["label_gap"]),
                label_zebra=None if d["label_zebra"] == "" else d["label_zebra"] == "1",
                label_trajectory=traj))
    return rows


# ---------------------------------------------------------------------------
# Reports

def eval_reports_csv(reports, path: str) -> None:
    names = sorted({n for rep in reports for n in rep.metric_names})
    header = ["task", "model", "split_mode", "fold", "n"] + names

    def gen():
        for rep in reports:
            for f, (mets, n) in enumerate(zip(rep.fold_metrics, rep.fold_sizes)):
                yield ([rep.task, rep.model_kind, rep.split_mode, f, n]
                       + [mets.get(k) for k in names])
            yield ([rep.task, rep.model_kind, rep.split_mode, "mean",
                    sum(rep.fold_sizes)]
                   + [rep.mean_metrics.get(k) for k in names])

    write_csv(path, header, gen())


def eval_reports_json(reports, path: str) -> None:
    docs = [{"task": r.task, "model": r.model_kind, "split_mode": r.split_mode,
             "fold_metrics": json_float(r.fold_metrics),
             "fold_sizes": r.fold_sizes,
             "mean_metrics": json_float(r.mean_metrics)} for r in reports]
    write_json(path, docs)


def transfer_matrix_csv(tm, path: str) -> None:
    names = sorted({n for rep in tm.cells.values() for n in rep.metric_names})
    header = ["train_domain", "test_domain", "model"] + names

    def gen():
        for (src, dst, kind) in sorted(tm.cells):
            rep = tm.cells[(src, dst, kind)]
            yield [src, dst, kind] + [rep.mean_metrics.get(k) for k in names]

    write_csv(path, header, gen())


def strategy_reports_csv(reports, path: str) -> None:
    tags = sorted({t for rep in reports for t in rep.per_domain})
    names = sorted({n for rep in reports for n in rep.average})
    header = ["strategy", "model", "n_clusters"]
    for t in tags:
        header += [f"{t}_{n}" for n in names]
    header += [f"avg_{n}" for n in names]
    ks = sorted({c for rep in reports for c in rep.per_cluster})
    header += [f"ADE_cluster{c}" for c in ks]

    def gen():
        for rep in reports:
            row = [rep.strategy, rep.model_kind, rep.n_clusters]
            for t in tags:
                row += [rep.per_domain.get(t, {}).get(n) for n in names]
            row += [rep.average.get(n) for n in names]
            row += [rep.per_cluster.get(c) for c in ks]
            yield row

    write_csv(path, header, gen())


def importance_csv(items, path: str) -> None:
    """items: iterable of (model_kind, ranked list of (column, score))."""
    def gen():
        for kind, ranking in items:
            for rank, (col, score) in enumerate(ranking, start=1):
                yield [kind, rank, col, score]

    write_csv(path, ("model", "rank", "column", "score"), gen())


def test_results_json(results: dict, path: str) -> None:
    docs = {}
    for name, r in results.items():
        docs[name] = {"statistic": _round9(r.statistic),
                      "statistic_name": r.statistic_name,
                      "p_value": _round9(r.p_value),
                      "group_sizes": list(r.group_sizes),
                      "method": r.method, "correction": r.correction}
    write_json(path, docs)


def binned_curve_csv(curve, path: str) -> None:
    """curve: iterable of (lo, hi, center, n, value)."""
    write_csv(path, ("bin_lo", "bin_hi", "bin_center", "n", "value"), curve)
