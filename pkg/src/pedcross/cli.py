"""Command-line front end.

Subcommands: simulate, extract, run, transfer, stats, report.  Every command
is driven by an INI experiment file; --seed/--out/--split/--task/--strategy
override single values from it.  PEDCROSS_SEED overrides the seed when
--seed is absent; PEDCROSS_THREADS caps compute threads (read at import).

Exit codes: 0 success, 1 runtime failure, 2 invalid input (nothing written).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import config as cfgmod
from . import evaluation as ev
from . import features as ftr
from . import io_files as iof
from . import models as md
from . import sim
from . import stats as st
from . import transfer as tr


def _profile_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(11, i)).generate_state(1)[0])


def _load_experiment(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    elif os.environ.get("PEDCROSS_SEED"):
        try:
            updates["seed"] = int(os.environ["PEDCROSS_SEED"])
        except ValueError:
            raise cfgmod.ConfigError(
                f"PEDCROSS_SEED={os.environ['PEDCROSS_SEED']!r} is not an integer")
    if args.out is not None:
        updates["out"] = args.out
    if getattr(args, "split", None):
        updates["split_mode"] = cfgmod.SPLIT_NAMES[args.split]
    if getattr(args, "task", None):
        updates["task"] = args.task
    if getattr(args, "strategy", None):
        updates["strategies"] = tuple(args.strategy)
    if updates:
        cfg = dataclasses.replace(cfg, **updates)
    # re-validate combinations the overrides may have broken
    for m in cfg.models:
        if not md.supports_task(m, ev.MODEL_TASK[cfg.task]):
            raise cfgmod.ConfigError(
                f"model '{m}' cannot run task '{cfg.task}'")
    for s in cfg.strategies:
        tr.validate_strategy_task(s, cfg.task)
    return cfg


def _dataset_dir(cfg) -> str:
    if cfg.dataset_path is not None:
        return cfg.dataset_path
    return os.path.join(cfg.out, "dataset")


def _load_rows(cfg):
    """Dataset -> feature rows (sorted by trial id)."""
    trials = iof.load_dataset(_dataset_dir(cfg))
    rows = [ftr.extract(t, m_points=cfg.resample_points) for t in trials]
    rows.sort(key=lambda r: r.trial_id)
    return rows


def _reports_dir(cfg) -> str:
    d = os.path.join(cfg.out, "reports")
    os.makedirs(d, exist_ok=True)
    return d


# ---------------------------------------------------------------------------
# Commands

def cmd_simulate(cfg) -> int:
    if cfg.generate is None:
        raise cfgmod.ConfigError(
            "simulate needs a [generate] section (config uses [dataset])")
    plan = cfg.generate
    scenarios = plan.scenario_configs()
    trials = []
    for i, agent in enumerate(plan.agent_profiles()):
        trials.extend(sim.generate_dataset(
            scenarios, agent, plan.participants, plan.trials_per_condition,
            _profile_seed(cfg.seed, i), country_tag=plan.profiles[i],
            horizon=cfg.horizon))
    out = _dataset_dir(cfg)
    manifest = iof.save_dataset(trials, out, cfg.seed,
                                iof.config_hash(cfg.source_text))
    print(f"dataset: {out}")
    print(f"trials: {manifest['counts']['trials']}  "
          f"participants: {manifest['counts']['participants']}")
    return 0


def cmd_extract(cfg) -> int:
    rows = _load_rows(cfg)
    path = os.path.join(cfg.out, "features.csv")
    iof.save_features(rows, path, m=cfg.resample_points)
    print(f"features: {path} ({len(rows)} rows)")
    return 0


def _gap_plot_curves(cfg, rows, rep_dir) -> None:
    keep, X, Y, _ = ev.task_data(rows, ev.TASK_GAP)
    t_w = np.array([r.pre.T_w for r in keep])
    v_p = np.array([r.pre.V_p for r in keep])
    n_cb = np.array([r.pre.N_cb for r in keep])
    iof.binned_curve_csv(ev.binned_curve(n_cb, Y, integer_bins=True),
                         os.path.join(rep_dir, "plot_gap_vs_missed.csv"))
    iof.binned_curve_csv(ev.binned_curve(t_w, Y, 5),
                         os.path.join(rep_dir, "plot_gap_vs_waiting.csv"))
    iof.binned_curve_csv(ev.binned_curve(v_p, Y, 5),
                         os.path.join(rep_dir, "plot_gap_vs_speed.csv"))


def _per_model_curves(cfg, rows, plan, rep_dir) -> None:
    for kind in cfg.models:
        spec = md.ModelSpec(kind, ev.MODEL_TASK[cfg.task], seed=cfg.seed)
        keep, y_true, y_pred = ev.cross_val_predict(spec, rows, plan, cfg.task)
        if cfg.task == ev.TASK_GAP:
            v_p = np.array([r.pre.V_p for r in keep])
            iof.binned_curve_csv(
                ev.binned_curve(v_p, y_pred, 5),
                os.path.join(rep_dir, f"plot_pred_gap_vs_speed_{kind}.csv"))
        elif cfg.task == ev.TASK_ZEBRA:
            t_w = np.array([r.pre.T_w for r in keep])
            correct = ((y_pred >= 0.5) == (y_true >= 0.5)).astype(float)
            iof.binned_curve_csv(
                ev.binned_curve(t_w, correct, 5),
                os.path.join(rep_dir, f"plot_acc_vs_waiting_{kind}.csv"))


def _split_by_domain(rows) -> dict:
    by: dict = {}
    for r in rows:
        by.setdefault(r.country_tag, []).append(r)
    return by


def _two_domains(by_domain: dict, what: str):
    if len(by_domain) != 2:
        raise cfgmod.ConfigError(
            f"{what} needs exactly two populations; dataset has "
            f"{len(by_domain)} ({', '.join(sorted(by_domain))})")
    (_, rows_a), (_, rows_b) = sorted(by_domain.items())
    return rows_a, rows_b


def _cluster_ade_table(cfg, rows_a, rows_b, rep_dir) -> None:
    """Overall + per-cluster ADE per model for the trajectory task."""
    plan = ev.make_splits(list(rows_a) + list(rows_b), cfg.split_mode,
                          cfg.seed, n_folds=cfg.n_folds)
    reports = []
    for kind in cfg.models:
        spec = md.ModelSpec(kind, ev.MODEL_TASK[cfg.task], seed=cfg.seed)
        sspec = tr.StrategySpec(tr.CLUSTER_FEATURE, spec,
                                n_clusters=cfg.n_clusters)
        reports.append(tr.run_strategy(sspec, rows_a, rows_b, plan, cfg.task))
    iof.strategy_reports_csv(reports,
                             os.path.join(rep_dir, "ade_per_cluster.csv"))


def cmd_run(cfg) -> int:
    rows = _load_rows(cfg)
    rep_dir = _reports_dir(cfg)
    by_domain = _split_by_domain(rows)

    # within-domain CV, one report per model per domain (+ pooled)
    reports = []
    importance = []
    scopes = [("all", rows)]
    if len(by_domain) > 1:
        scopes += sorted(by_domain.items())
    for scope_tag, scope_rows in scopes:
        plan = ev.make_splits(scope_rows, cfg.split_mode, cfg.seed,
                              n_folds=cfg.n_folds)
        for kind in cfg.models:
            spec = md.ModelSpec(kind, ev.MODEL_TASK[cfg.task], seed=cfg.seed)
            rep = ev.cross_validate(spec, scope_rows, plan, cfg.task)
            rep = ev.EvalReport(
                task=rep.task, model_kind=f"{kind}[{scope_tag}]",
                split_mode=rep.split_mode, fold_metrics=rep.fold_metrics,
                fold_sizes=rep.fold_sizes, mean_metrics=rep.mean_metrics)
            reports.append(rep)
        if scope_tag != "all":
            continue
        for kind in cfg.models:
            spec = md.ModelSpec(kind, ev.MODEL_TASK[cfg.task], seed=cfg.seed)
            keep, X, Y, columns = ev.task_data(scope_rows, cfg.task)
            scaler, model = ev.fit_fold(spec, X, Y, columns)
            ranking = md.feature_importance(model)
            importance.append((kind, ranking))

    iof.eval_reports_csv(reports, os.path.join(rep_dir, "eval_reports.csv"))
    iof.eval_reports_json(reports, os.path.join(rep_dir, "eval_reports.json"))
    iof.importance_csv(importance, os.path.join(rep_dir, "importance.csv"))

    if len(by_domain) == 2:
        rows_a, rows_b = _two_domains(by_domain, "transfer matrix")
        specs = [md.ModelSpec(k, ev.MODEL_TASK[cfg.task], seed=cfg.seed)
                 for k in cfg.models]
        tm = tr.transfer_eval(rows_a, rows_b, specs, cfg.split_mode,
                              cfg.seed, cfg.task)
        iof.transfer_matrix_csv(tm, os.path.join(rep_dir,
                                                 "transfer_matrix.csv"))

    plan = ev.make_splits(rows, cfg.split_mode, cfg.seed, n_folds=cfg.n_folds)
    if cfg.task == ev.TASK_GAP:
        _gap_plot_curves(cfg, rows, rep_dir)
    if cfg.task in (ev.TASK_GAP, ev.TASK_ZEBRA):
        _per_model_curves(cfg, rows, plan, rep_dir)
    if cfg.task == ev.TASK_TRAJECTORY and len(by_domain) == 2:
        rows_a, rows_b = _two_domains(by_domain, "cluster table")
        _cluster_ade_table(cfg, rows_a, rows_b, rep_dir)

    for rep in reports:
        mets = "  ".join(f"{k}={v:.4g}" for k, v in rep.mean_metrics.items())
        print(f"{rep.task} {rep.model_kind} [{rep.split_mode}] {mets}")
    print(f"reports: {rep_dir}")
    return 0


def cmd_transfer(cfg) -> int:
    if not cfg.strategies:
        raise cfgmod.ConfigError("no strategies configured "
                                 "(set 'strategies' or pass --strategy)")
    rows = _load_rows(cfg)
    rep_dir = _reports_dir(cfg)
    rows_a, rows_b = _two_domains(_split_by_domain(rows), "transfer")
    plan = ev.make_splits(rows, cfg.split_mode, cfg.seed, n_folds=cfg.n_folds)
    reports = []
    for kind in cfg.models:
        spec = md.ModelSpec(kind, ev.MODEL_TASK[cfg.task], seed=cfg.seed)
        for name in cfg.strategies:
            sspec = tr.StrategySpec(name, spec, n_clusters=cfg.n_clusters)
            reports.append(tr.run_strategy(sspec, rows_a, rows_b, plan,
                                           cfg.task))
    path = os.path.join(rep_dir, "strategy_comparison.csv")
    iof.strategy_reports_csv(reports, path)
    for rep in reports:
        mets = "  ".join(f"{k}={v:.4g}" for k, v in rep.average.items())
        print(f"{rep.strategy:<20} {rep.model_kind:<18} {mets}")
    print(f"strategies: {path}")
    return 0


_STATS_VALUES = {"label_gap": lambda r: r.label_gap,
                 "T_w": lambda r: r.pre.T_w,
                 "V_p": lambda r: r.pre.V_p}
_STATS_GROUPS = {"condition": lambda r: r.condition,
                 "country_tag": lambda r: r.country_tag}


def cmd_stats(cfg) -> int:
    rows = _load_rows(cfg)
    rep_dir = _reports_dir(cfg)
    if cfg.stats_group_by not in _STATS_GROUPS:
        raise cfgmod.ConfigError(
            f"stats group_by must be one of {', '.join(sorted(_STATS_GROUPS))}")
    group_of = _STATS_GROUPS[cfg.stats_group_by]
    results = {}
    k = len(cfg.stats_values)
    for value_name in cfg.stats_values:
        if value_name not in _STATS_VALUES:
            raise cfgmod.ConfigError(
                f"stats value '{value_name}' not one of "
                f"{', '.join(sorted(_STATS_VALUES))}")
        value_of = _STATS_VALUES[value_name]
        groups: dict = {}
        for r in rows:
            v = value_of(r)
            if v is not None:
                groups.setdefault(group_of(r), []).append(float(v))
        if len(groups) < 2:
            raise cfgmod.ConfigError(
                f"grouping '{cfg.stats_group_by}' yields "
                f"{len(groups)} group(s) for '{value_name}'; need >= 2")
        samples = [np.array(groups[g]) for g in sorted(groups)]
        if len(samples) == 2:
            res = st.mann_whitney_u(samples[0], samples[1])
        else:
            res = st.kruskal_wallis_h(samples)
        if k > 1:
            res = st.bonferroni(res, k)
        results[f"{value_name}_by_{cfg.stats_group_by}"] = res
    path = os.path.join(rep_dir, "stats.json")
    iof.test_results_json(results, path)
    for name, res in results.items():
        print(f"{name}: {res.statistic_name}={res.statistic:.6g} "
              f"p={res.p_value:.6g} ({res.method}, n={list(res.group_sizes)})")
    print(f"stats: {path}")
    return 0


def cmd_report(cfg) -> int:
    """Collate existing outputs into one plain-text summary."""
    rep_dir = os.path.join(cfg.out, "reports")
    parts = [f"experiment summary (seed {cfg.seed}, task {cfg.task})", ""]
    sources = ("eval_reports.csv", "transfer_matrix.csv",
               "strategy_comparison.csv", "ade_per_cluster.csv", "stats.json")
    found = False
    for name in sources:
        p = os.path.join(rep_dir, name)
        if not os.path.exists(p):
            continue
        found = True
        with open(p, encoding="utf-8") as f:
            body = f.read().rstrip("\n")
        parts += [f"== {name} ==", body, ""]
    if not found:
        raise cfgmod.ConfigError(
            f"no reports under {rep_dir}; run/transfer/stats first")
    path = os.path.join(cfg.out, "summary.txt")
    iof.atomic_write_text(path, "\n".join(parts) + "\n")
    print(f"summary: {path}")
    return 0


# ---------------------------------------------------------------------------

COMMANDS = {"simulate": cmd_simulate, "extract": cmd_extract,
            "run": cmd_run, "transfer": cmd_transfer,
            "stats": cmd_stats, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pedcross",
        description="Road-crossing behavior laboratory: simulate cohorts, "
                    "extract gap features, train and evaluate models, and "
                    "compare cross-population transfer strategies.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__)
        sp.add_argument("--config", required=True, help="experiment INI file")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--out", default=None,
                        help="override the output directory")
        if name in ("run", "transfer", "extract", "stats"):
            sp.add_argument("--split", choices=sorted(cfgmod.SPLIT_NAMES),
                            default=None, help="override the split mode")
            sp.add_argument("--task", choices=ev.TASKS, default=None,
                            help="override the task")
        if name == "transfer":
            sp.add_argument("--strategy", action="append", default=None,
                            choices=tr.STRATEGIES,
                            help="strategy to run (repeatable; overrides "
                                 "the config list)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_experiment(args)
    except (cfgmod.ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except (cfgmod.ConfigError, iof.SchemaError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: missing input: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # runtime failure, distinct from bad input
        print(f"failed: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
