"""Experiment configuration: INI files with line-precise validation.

An experiment file has an [experiment] section plus exactly one of
[dataset] (path to a previously written dataset directory) or [generate]
(cohort synthesis parameters).  Optional sections: [scenario] for physical
overrides, [profile.TAG] for custom agent populations, [stats] for the
grouping tests.  Unknown sections and keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from . import evaluation as ev
from . import sim
from . import transfer as tr
from .models import base as mb

SCHEMA_VERSION = 1

SPLIT_NAMES = {"trial": ev.BY_TRIAL, "participant": ev.BY_PARTICIPANT}
CONDITION_NAMES = ("alone", "risky", "safe", "zebra")

_SCENARIO_FLOATS = ("vehicle_speed", "gap_min", "gap_max", "road_width",
                    "zebra_x", "frame_dt", "lane_offset_min",
                    "lane_offset_max", "start_x", "start_y", "goal_x",
                    "goal_y")
_PROFILE_FLOATS = ("walk_speed_mean", "walk_speed_sd", "safety_margin_mean",
                   "safety_margin_sd", "impatience_rate", "threshold_floor",
                   "zebra_preference", "leader_follow_weight",
                   "mind_change_prob")

_EXPERIMENT_KEYS = {"schema_version", "seed", "out", "task", "split",
                    "n_folds", "models", "strategies", "n_clusters",
                    "resample_points", "horizon"}
_GENERATE_KEYS = {"profiles", "participants", "trials_per_condition",
                  "conditions", "leader_gap_risky", "leader_gap_safe"}


class ConfigError(ValueError):
    """Invalid experiment configuration; message carries file:line."""


@dataclass(frozen=True)
class GenerationPlan:
    profiles: tuple
    participants: int
    trials_per_condition: int
    conditions: tuple
    leader_gap_risky: float = 4.0
    leader_gap_safe: float = 6.5
    scenario_overrides: dict = field(default_factory=dict)
    custom_profiles: dict = field(default_factory=dict)

    def scenario_configs(self) -> list:
        """One ScenarioConfig per named condition, overrides applied."""
        out = []
        for name in self.conditions:
            kw = dict(self.scenario_overrides)
            if name == "risky":
                kw.update(group_condition=sim.RISKY,
                          leader_gap=self.leader_gap_risky)
            elif name == "safe":
                kw.update(group_condition=sim.SAFE,
                          leader_gap=self.leader_gap_safe)
            elif name == "zebra":
                kw.update(zebra_present=True)
            out.append(sim.ScenarioConfig(**kw))
        return out

    def agent_profiles(self) -> list:
        out = []
        for tag in self.profiles:
            if tag in self.custom_profiles:
                out.append(self.custom_profiles[tag])
            else:
                out.append(sim.PROFILE_PRESETS[tag])
        return out


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    out: str
    task: str
    split_mode: str
    models: tuple
    strategies: tuple
    n_folds: int = 5
    n_clusters: int = 2
    resample_points: int = 32
    horizon: float = 120.0
    dataset_path: str | None = None
    generate: GenerationPlan | None = None
    stats_group_by: str = "condition"
    stats_values: tuple = ("label_gap",)
    source_text: str = ""


class _Located(configparser.ConfigParser):
    """ConfigParser that remembers the line number of every option."""

    def __init__(self):
        super().__init__(interpolation=None)
        self.lines: dict = {}

    def index_lines(self, text: str) -> None:
        section = None
        for no, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith(("#", ";")):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                self.lines[(section, None)] = no
            elif section is not None and ("=" in line or ":" in line):
                key = line.replace(":", "=").split("=", 1)[0].strip().lower()
                self.lines.setdefault((section, key), no)

    def where(self, section: str, key: str | None = None) -> int:
        return self.lines.get((section, key), self.lines.get((section, None), 0))


def _fail(path: str, line: int, msg: str):
    raise ConfigError(f"{path}:{line}: {msg}")


def _get_typed(cp, path, section, key, conv, default=None, required=False):
    if not cp.has_option(section, key):
        if required:
            _fail(path, cp.where(section), f"[{section}] missing key '{key}'")
        return default
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError:
        _fail(path, cp.where(section, key),
              f"[{section}] {key}: cannot parse {raw!r}")


def _csv_list(raw: str) -> tuple:
    items = tuple(s.strip() for s in raw.split(",") if s.strip())
    if not items:
        raise ValueError("empty list")
    return items


def _check_keys(cp, path, section, allowed):
    for key in cp.options(section):
        if key not in allowed:
            _fail(path, cp.where(section, key),
                  f"[{section}] unknown key '{key}'")


def load_config(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    return parse_config(text, path)


def parse_config(text: str, path: str = "<config>") -> ExperimentConfig:
    cp = _Located()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        line = getattr(e, "lineno", 0) or 0
        raise ConfigError(f"{path}:{line}: {e.message.splitlines()[0]}") from e
    cp.index_lines(text)

    known = {"experiment", "dataset", "generate", "scenario", "stats"}
    for section in cp.sections():
        if section not in known and not section.startswith("profile."):
            _fail(path, cp.where(section), f"unknown section [{section}]")

    if not cp.has_section("experiment"):
        _fail(path, 1, "missing [experiment] section")
    _check_keys(cp, path, "experiment", _EXPERIMENT_KEYS)

    version = _get_typed(cp, path, "experiment", "schema_version", int,
                         default=SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        _fail(path, cp.where("experiment", "schema_version"),
              f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")

    seed = _get_typed(cp, path, "experiment", "seed", int, required=True)
    out = _get_typed(cp, path, "experiment", "out", str, required=True)
    task = _get_typed(cp, path, "experiment", "task", str, default=ev.TASK_GAP)
    if task not in ev.TASKS:
        _fail(path, cp.where("experiment", "task"),
              f"task must be one of {', '.join(ev.TASKS)}")

    split = _get_typed(cp, path, "experiment", "split", str, default="participant")
    if split not in SPLIT_NAMES:
        _fail(path, cp.where("experiment", "split"),
              "split must be 'trial' or 'participant'")

    n_folds = _get_typed(cp, path, "experiment", "n_folds", int, default=5)
    if n_folds < 2:
        _fail(path, cp.where("experiment", "n_folds"), "n_folds must be >= 2")

    models = _get_typed(cp, path, "experiment", "models", _csv_list,
                        default=(mb.LINEAR_REGRESSION,))
    for m in models:
        if m not in mb.MODEL_KINDS:
            _fail(path, cp.where("experiment", "models"),
                  f"unknown model '{m}' (known: {', '.join(mb.MODEL_KINDS)})")
        if not mb.supports_task(m, ev.MODEL_TASK[task]):
            _fail(path, cp.where("experiment", "models"),
                  f"model '{m}' cannot run task '{task}'")

    strategies = _get_typed(cp, path, "experiment", "strategies", _csv_list,
                            default=())
    for s in strategies:
        if s not in tr.STRATEGIES:
            _fail(path, cp.where("experiment", "strategies"),
                  f"unknown strategy '{s}' (known: {', '.join(tr.STRATEGIES)})")
        try:
            tr.validate_strategy_task(s, task)
        except ValueError as e:
            _fail(path, cp.where("experiment", "strategies"), str(e))

    n_clusters = _get_typed(cp, path, "experiment", "n_clusters", int, default=2)
    if n_clusters < 1:
        _fail(path, cp.where("experiment", "n_clusters"),
              "n_clusters must be >= 1")
    m_points = _get_typed(cp, path, "experiment", "resample_points", int,
                          default=32)
    if m_points < 2:
        _fail(path, cp.where("experiment", "resample_points"),
              "resample_points must be >= 2")
    horizon = _get_typed(cp, path, "experiment", "horizon", float, default=120.0)
    if not horizon > 0:
        _fail(path, cp.where("experiment", "horizon"), "horizon must be > 0")

    has_dataset = cp.has_section("dataset")
    has_generate = cp.has_section("generate")
    if has_dataset == has_generate:
        _fail(path, cp.where("experiment"),
              "exactly one of [dataset] or [generate] is required")

    dataset_path = None
    plan = None
    if has_dataset:
        _check_keys(cp, path, "dataset", {"path"})
        dataset_path = _get_typed(cp, path, "dataset", "path", str, required=True)
    else:
        _check_keys(cp, path, "generate", _GENERATE_KEYS)
        profiles = _get_typed(cp, path, "generate", "profiles", _csv_list,
                              required=True)
        participants = _get_typed(cp, path, "generate", "participants", int,
                                  required=True)
        per_cond = _get_typed(cp, path, "generate", "trials_per_condition",
                              int, required=True)
        conditions = _get_typed(cp, path, "generate", "conditions", _csv_list,
                                default=CONDITION_NAMES)
        for c in conditions:
            if c not in CONDITION_NAMES:
                _fail(path, cp.where("generate", "conditions"),
                      f"unknown condition '{c}' "
                      f"(known: {', '.join(CONDITION_NAMES)})")
        if participants < 1 or per_cond < 1:
            _fail(path, cp.where("generate"),
                  "participants and trials_per_condition must be >= 1")
        gap_risky = _get_typed(cp, path, "generate", "leader_gap_risky",
                               float, default=4.0)
        gap_safe = _get_typed(cp, path, "generate", "leader_gap_safe",
                              float, default=6.5)

        overrides = {}
        if cp.has_section("scenario"):
            _check_keys(cp, path, "scenario", set(_SCENARIO_FLOATS)
                        | {"zebra_present"})
            for key in _SCENARIO_FLOATS:
                v = _get_typed(cp, path, "scenario", key, float)
                if v is not None:
                    overrides[key] = v

        custom = {}
        for section in cp.sections():
            if not section.startswith("profile."):
                continue
            tag = section.split(".", 1)[1]
            _check_keys(cp, path, section, set(_PROFILE_FLOATS))
            base = sim.PROFILE_PRESETS.get(tag, sim.PROFILE_PRESETS["DE"])
            kw = {k: getattr(base, k) for k in _PROFILE_FLOATS}
            for key in _PROFILE_FLOATS:
                v = _get_typed(cp, path, section, key, float)
                if v is not None:
                    kw[key] = v
            try:
                custom[tag] = sim.AgentProfile(profile_name=tag, **kw)
            except ValueError as e:
                _fail(path, cp.where(section), f"[{section}] {e}")

        for tag in profiles:
            if tag not in custom and tag not in sim.PROFILE_PRESETS:
                _fail(path, cp.where("generate", "profiles"),
                      f"profile '{tag}' has no preset and no [profile.{tag}] "
                      "section")

        try:
            plan = GenerationPlan(
                profiles=profiles, participants=participants,
                trials_per_condition=per_cond, conditions=conditions,
                leader_gap_risky=gap_risky, leader_gap_safe=gap_safe,
                scenario_overrides=overrides, custom_profiles=custom)
            plan.scenario_configs()
        except ValueError as e:
            where = "scenario" if overrides else "generate"
            _fail(path, cp.where(where), str(e))

    group_by = "condition"
    values: tuple = ("label_gap",)
    if cp.has_section("stats"):
        _check_keys(cp, path, "stats", {"group_by", "values"})
        group_by = _get_typed(cp, path, "stats", "group_by", str,
                              default=group_by)
        values = _get_typed(cp, path, "stats", "values", _csv_list,
                            default=values)

    return ExperimentConfig(
        seed=seed, out=out, task=task, split_mode=SPLIT_NAMES[split],
        models=models, strategies=strategies, n_folds=n_folds,
        n_clusters=n_clusters, resample_points=m_points, horizon=horizon,
        dataset_path=dataset_path, generate=plan,
        stats_group_by=group_by, stats_values=values, source_text=text)
