"""INI parsing with line-precise errors, override flags, exit codes, and
the subcommand pipeline end to end on a small two-population cohort."""

import json
import os

import pytest

import pedcross.cli as cli
import pedcross.config as cf
import pedcross.evaluation as ev


def _minimal(out="/tmp/x"):
    return f"""\
[experiment]
seed = 42
out = {out}

[generate]
profiles = DE
participants = 6
trials_per_condition = 2
"""


def test_parse_minimal_defaults():
    cfg = cf.parse_config(_minimal())
    assert cfg.seed == 42
    assert cfg.task == ev.TASK_GAP
    assert cfg.split_mode == ev.BY_PARTICIPANT
    assert cfg.n_folds == 5
    assert cfg.models == ("LinearRegression",)
    assert cfg.generate.profiles == ("DE",)
    assert cfg.generate.conditions == cf.CONDITION_NAMES
    assert cfg.dataset_path is None


@pytest.mark.parametrize("snippet,line,pattern", [
    ("[experiment]\nseed = 1\nout = o\nbogus = 3\n\n[dataset]\npath = p\n",
     4, "unknown key"),
    ("[experiment]\nseed = 1\nout = o\ntask = Waiting\n\n[dataset]\npath = p\n",
     4, "task"),
    ("[experiment]\nseed = 1\nout = o\nn_folds = 1\n\n[dataset]\npath = p\n",
     4, "n_folds"),
    ("[experiment]\nseed = 1\nout = o\nmodels = SVR\n\n[dataset]\npath = p\n",
     4, "unknown model"),
    ("[experiment]\nseed = 1\nout = o\nmodels = LogisticRegression\n\n"
     "[dataset]\npath = p\n", 4, "cannot run task"),
    ("[experiment]\nseed = 1\nout = o\nstrategies = ZebraUsageFeature\n\n"
     "[dataset]\npath = p\n", 4, "trajectory task only"),
    ("[experiment]\nseed = abc\nout = o\n\n[dataset]\npath = p\n",
     2, "cannot parse"),
    ("[experiment]\nseed = 1\nout = o\nschema_version = 9\n\n"
     "[dataset]\npath = p\n", 4, "schema_version"),
    ("[experiment]\nseed = 1\nout = o\n\n[simulation]\nx = 1\n\n"
     "[dataset]\npath = p\n", 5, "unknown section"),
    ("[experiment]\nseed = 1\nout = o\n\n[generate]\nprofiles = DE\n"
     "participants = 2\ntrials_per_condition = 1\nconditions = alone, night\n",
     9, "unknown condition"),
])
def test_errors_carry_line_numbers(snippet, line, pattern):
    with pytest.raises(cf.ConfigError, match=f"cfg.ini:{line}: .*{pattern}"):
        cf.parse_config(snippet, "cfg.ini")


def test_structural_errors():
    with pytest.raises(cf.ConfigError, match="missing \\[experiment\\]"):
        cf.parse_config("[dataset]\npath = p\n")
    with pytest.raises(cf.ConfigError, match="exactly one of"):
        cf.parse_config("[experiment]\nseed = 1\nout = o\n")
    both = ("[experiment]\nseed = 1\nout = o\n\n[dataset]\npath = p\n\n"
            "[generate]\nprofiles = DE\nparticipants = 2\n"
            "trials_per_condition = 1\n")
    with pytest.raises(cf.ConfigError, match="exactly one of"):
        cf.parse_config(both)
    with pytest.raises(cf.ConfigError, match="missing key 'seed'"):
        cf.parse_config("[experiment]\nout = o\n\n[dataset]\npath = p\n")
    with pytest.raises(cf.ConfigError, match=":1:"):
        cf.parse_config("[experiment\nseed = 1\n")


def test_scenario_override_errors_point_at_scenario():
    text = ("[experiment]\nseed = 1\nout = o\n\n[generate]\nprofiles = DE\n"
            "participants = 2\ntrials_per_condition = 1\n\n"
            "[scenario]\ngap_min = 9.0\ngap_max = 3.0\n")
    # attributed to the [scenario] section line, not [generate]
    with pytest.raises(cf.ConfigError, match="cfg.ini:10: .*gap_min"):
        cf.parse_config(text, "cfg.ini")


def test_unknown_profile_rejected():
    text = ("[experiment]\nseed = 1\nout = o\n\n[generate]\nprofiles = XX\n"
            "participants = 2\ntrials_per_condition = 1\n")
    with pytest.raises(cf.ConfigError, match="profile"):
        cf.parse_config(text)


def test_custom_profile_section_accepted():
    text = ("[experiment]\nseed = 1\nout = o\n\n[generate]\nprofiles = ZZ\n"
            "participants = 2\ntrials_per_condition = 1\n\n"
            "[profile.ZZ]\nwalk_speed_mean = 1.3\n")
    cfg = cf.parse_config(text)
    assert "ZZ" in cfg.generate.custom_profiles


def _pipeline_config(root):
    return f"""\
[experiment]
seed = 77
out = {root}
task = GapSelection
split = participant
models = LinearRegression, RandomForest
strategies = Separate, Joint, ClusterFeature

[generate]
profiles = DE, JP
participants = 6
trials_per_condition = 2
conditions = alone, risky, zebra
"""


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cliwork")
    cfg_path = root / "exp.ini"
    out = root / "out"
    cfg_path.write_text(_pipeline_config(out))
    argv = ["--config", str(cfg_path)]
    for command in ("simulate", "extract", "run", "transfer", "stats",
                    "report"):
        assert cli.main([command] + argv) == 0, command
    return out


def test_pipeline_artifacts(pipeline):
    assert (pipeline / "dataset" / "manifest.json").exists()
    assert (pipeline / "features.csv").exists()
    rep = pipeline / "reports"
    for name in ("eval_reports.csv", "eval_reports.json",
                 "transfer_matrix.csv", "importance.csv",
                 "strategy_comparison.csv", "stats.json"):
        assert (rep / name).exists(), name
    assert (pipeline / "summary.txt").exists()
    manifest = json.loads((pipeline / "dataset" / "manifest.json").read_text())
    assert manifest["seed"] == 77
    assert manifest["counts"]["trials"] == 2 * 6 * 2 * 3
    assert manifest["counts"]["participants"] == 12


def test_pipeline_report_content(pipeline):
    rep = pipeline / "reports"
    eval_lines = (rep / "eval_reports.csv").read_text().splitlines()
    tagged = [l.split(",")[1] for l in eval_lines[1:]]
    kinds = {t.split("[")[0] for t in tagged}
    assert kinds == {"LinearRegression", "RandomForest"}
    scopes = {t.split("[")[-1].rstrip("]") for t in tagged if "[" in t}
    assert scopes == {"all", "DE", "JP"}

    tm = (rep / "transfer_matrix.csv").read_text().splitlines()
    assert tm[0].startswith("train_domain,test_domain,model")
    assert len(tm) == 1 + 4 * 2    # 2x2 matrix for each of 2 models

    strat = (rep / "strategy_comparison.csv").read_text().splitlines()
    names = {l.split(",")[0] for l in strat[1:]}
    assert names == {"Separate", "Joint", "ClusterFeature"}

    stats = json.loads((rep / "stats.json").read_text())
    assert stats
    summary = (pipeline / "summary.txt").read_text()
    assert "transfer" in summary.lower()


def test_pipeline_rerun_is_byte_identical(pipeline, tmp_path):
    cfg_path = tmp_path / "exp.ini"
    out = tmp_path / "out"
    cfg_path.write_text(_pipeline_config(out))
    argv = ["--config", str(cfg_path)]
    for command in ("simulate", "extract", "run", "transfer"):
        assert cli.main([command] + argv) == 0
    for rel in (("features.csv",),
                ("reports", "eval_reports.csv"),
                ("reports", "transfer_matrix.csv"),
                ("reports", "strategy_comparison.csv")):
        a = os.path.join(pipeline, *rel)
        b = os.path.join(out, *rel)
        assert open(a, "rb").read() == open(b, "rb").read(), rel


def test_exit_codes(tmp_path):
    assert cli.main(["simulate", "--config", str(tmp_path / "nope.ini")]) == 2

    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nseed = x\nout = o\n\n[dataset]\npath = p\n")
    assert cli.main(["simulate", "--config", str(bad)]) == 2

    ds_only = tmp_path / "ds.ini"
    ds_only.write_text("[experiment]\nseed = 1\nout = %s\n\n[dataset]\n"
                       "path = %s\n" % (tmp_path / "o", tmp_path / "missing"))
    # simulate needs [generate]; run needs an existing dataset
    assert cli.main(["simulate", "--config", str(ds_only)]) == 2
    assert cli.main(["run", "--config", str(ds_only)]) == 2
    assert not (tmp_path / "o").exists()


def test_seed_overrides(tmp_path, monkeypatch):
    cfg_path = tmp_path / "exp.ini"
    out = tmp_path / "out"
    cfg_path.write_text(_minimal(out))

    assert cli.main(["simulate", "--config", str(cfg_path),
                     "--seed", "7"]) == 0
    manifest = json.loads((out / "dataset" / "manifest.json").read_text())
    assert manifest["seed"] == 7

    monkeypatch.setenv("PEDCROSS_SEED", "99")
    assert cli.main(["simulate", "--config", str(cfg_path)]) == 0
    manifest = json.loads((out / "dataset" / "manifest.json").read_text())
    assert manifest["seed"] == 99

    monkeypatch.setenv("PEDCROSS_SEED", "many")
    assert cli.main(["simulate", "--config", str(cfg_path)]) == 2

    # explicit flag beats the environment
    monkeypatch.setenv("PEDCROSS_SEED", "99")
    assert cli.main(["simulate", "--config", str(cfg_path),
                     "--seed", "5"]) == 0
    manifest = json.loads((out / "dataset" / "manifest.json").read_text())
    assert manifest["seed"] == 5


def test_task_override_validates_models(tmp_path):
    cfg_path = tmp_path / "exp.ini"
    cfg_path.write_text(_minimal(tmp_path / "out"))
    # LinearRegression cannot serve the binary task
    assert cli.main(["run", "--config", str(cfg_path),
                     "--task", "ZebraUsage"]) == 2
