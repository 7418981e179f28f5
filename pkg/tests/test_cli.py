import json

import pytest

from main import build_parser, load_config, main
from src.cli.commands import VERBS, CommandOptions, RunLayout, run_command
from src.cli.manifest import load_manifest, manifest_path
from src.numcore.checkpoint import read_checkpoint
from src.utils.config import RunConfig
from src.utils.errors import DependencyError, InvalidParameterError
from src.utils.io import file_sha256, read_jsonl

PIPELINE = ("gen-worlds", "gen-syfis", "pretrain-translator", "train-agent", "evaluate", "translate", "report")


def make_config(settings, root, **ablation):
    config = RunConfig.from_dict({**settings, "output_dir": str(root)})
    for flag, value in ablation.items():
        setattr(config.ablation, flag, value)
    config.validate_config()
    return config


def run_pipeline(config, verbs=PIPELINE, **options):
    return {verb: run_command(verb, config, CommandOptions(**options)) for verb in verbs}


@pytest.fixture(scope="module")
def full_run(tmp_path_factory, tiny_settings):
    config = make_config(tiny_settings, tmp_path_factory.mktemp("full"))
    return config, run_pipeline(config, maps=1, limit=5)


@pytest.fixture(scope="module")
def repeat_run(tmp_path_factory, tiny_settings):
    config = make_config(tiny_settings, tmp_path_factory.mktemp("repeat"))
    return config, run_pipeline(config, maps=1, limit=5)


def test_pipeline_writes_every_artifact(full_run):
    config, results = full_run
    layout = RunLayout(config.output_dir)
    assert set(results) == set(VERBS)
    index = json.loads(layout.world_index.read_text())
    assert len(index["seen"]) == 2 and len(index["unseen"]) == 1
    assert (layout.root / "figures" / f"world_{index['seen'][0]}.png").exists()
    for split in ("seen", "unseen"):
        for name in ("syfis.jsonl", "trajectories.jsonl", "stats.json", "tokenizer.json"):
            assert (layout.dataset_dir(split) / name).exists()
        assert (layout.eval_dir / f"{split}_episodes.jsonl").exists()
        assert (layout.eval_dir / f"{split}_metrics.csv").exists()
        assert (layout.report_dir / f"overlap_{split}.json").exists()
        assert (layout.report_dir / f"overlap_{split}.png").exists()
    for path in (layout.translator_checkpoint, layout.joint_translator_checkpoint, layout.agent_checkpoint):
        assert path.exists()
    for name in ("results.tsv", "seeds.json", "landmark_association.csv"):
        assert (layout.report_dir / name).exists()
    assert len(read_jsonl(layout.root / "translate" / "translations.jsonl")) <= 5


def test_manifests_record_checksums(full_run):
    config, results = full_run
    for verb, result in results.items():
        manifest = load_manifest(manifest_path(config.output_dir, verb))
        assert manifest is not None and result.manifest == manifest_path(config.output_dir, verb)
        assert manifest["verb"] == verb
        assert manifest["config_hash"] == config.config_hash()
        assert manifest["label"] == "+SIG+DSL+SS"
        assert set(manifest["checksums"]) == set(manifest["artifacts"])
    manifest = load_manifest(manifest_path(config.output_dir, "train-agent"))
    assert manifest["checksums"]["agent"] == file_sha256(RunLayout(config.output_dir).agent_checkpoint)
    assert "train" in manifest["timings"]


def test_evaluation_summary(full_run):
    config, _ = full_run
    layout = RunLayout(config.output_dir)
    summary = json.loads(layout.eval_summary.read_text())
    assert summary["label"] == "+SIG+DSL+SS"
    assert summary["seed"] == config.seeds.seed
    assert set(summary["splits"]) == {"seen", "unseen"}
    for split, metrics in summary["splits"].items():
        rows = read_jsonl(layout.eval_dir / f"{split}_episodes.jsonl")
        assert metrics["episodes"] == len(rows)
        assert 0.0 <= metrics["sr"] <= 1.0
        for row in rows:
            assert row["mode"] == "greedy"
            assert set(row["metrics"]) >= {"ne", "sr", "spl", "cls", "ndtw", "sdtw"}
    if summary["splits"]["unseen"]["episodes"]:
        assert 0.0 <= summary["split_f1"]["unseen"]["f1"] <= 1.0


def test_runs_are_reproducible(full_run, repeat_run):
    first, second = RunLayout(full_run[0].output_dir), RunLayout(repeat_run[0].output_dir)
    for split in ("seen", "unseen"):
        for name in ("syfis.jsonl", "trajectories.jsonl", "stats.json", "tokenizer.json"):
            assert file_sha256(first.dataset_dir(split) / name) == file_sha256(second.dataset_dir(split) / name)
        name = f"{split}_episodes.jsonl"
        assert file_sha256(first.eval_dir / name) == file_sha256(second.eval_dir / name)
    for attribute in ("translator_checkpoint", "joint_translator_checkpoint", "agent_checkpoint"):
        a = read_checkpoint(getattr(first, attribute))
        b = read_checkpoint(getattr(second, attribute))
        assert a.keys() == b.keys()
        assert all((a[name] == b[name]).all() for name in a)
    assert (first.report_dir / "results.tsv").read_text() == (second.report_dir / "results.tsv").read_text()


def test_baseline_run_and_combined_report(full_run, tmp_path, tiny_settings):
    config = make_config(tiny_settings, tmp_path / "baseline", no_translator=True)
    assert config.label == "Baseline"
    run_pipeline(config, ("gen-worlds", "gen-syfis", "train-agent", "evaluate"))
    layout = RunLayout(config.output_dir)
    assert not layout.joint_translator_checkpoint.exists()
    summary = json.loads(layout.eval_summary.read_text())
    assert "split_f1" not in summary

    result = run_command("report", config, CommandOptions(runs=[full_run[0].output_dir, config.output_dir]))
    rows = [line.split("\t") for line in (layout.report_dir / "results.tsv").read_text().splitlines()[1:]]
    assert [(r[0], r[1]) for r in rows] == [
        ("Baseline", "seen"), ("Baseline", "unseen"), ("+SIG+DSL+SS", "seen"), ("+SIG+DSL+SS", "unseen"),
    ]
    assert "Baseline" in result.summary


def test_missing_artifacts_name_the_producer(tiny_config):
    with pytest.raises(DependencyError, match="gen-worlds"):
        run_command("evaluate", tiny_config)
    run_pipeline(tiny_config, ("gen-worlds", "gen-syfis"))
    with pytest.raises(DependencyError, match="pretrain-translator"):
        run_command("train-agent", tiny_config)
    with pytest.raises(DependencyError, match="train-agent"):
        run_command("evaluate", tiny_config)
    with pytest.raises(InvalidParameterError):
        run_command("deploy", tiny_config)


def test_main_exit_codes(tmp_path, tiny_config, capsys):
    config_path = tmp_path / "tiny.json"
    tiny_config.save(config_path)
    out = str(tmp_path / "cli-run")
    assert main(["gen-worlds", "--config", str(config_path), "--output-dir", out, "--log-level", "WARNING"]) == 0
    assert "worlds: 2 seen, 1 unseen" in capsys.readouterr().out

    assert main(["evaluate", "--config", str(config_path), "--output-dir", out, "--log-level", "WARNING"]) == 2
    assert "error dependency:" in capsys.readouterr().err

    assert main(["gen-worlds", "--set", "world.colour=red", "--output-dir", out, "--log-level", "WARNING"]) == 2
    assert "world.colour" in capsys.readouterr().err


def test_cli_flags_become_overrides(tmp_path, tiny_config):
    config_path = tmp_path / "tiny.json"
    tiny_config.save(config_path)
    args = build_parser().parse_args([
        "train-agent", "--config", str(config_path), "--seed", "11", "--ablation", "no-ss",
        "--set", "losses.beta1=0.5", "--output-dir", str(tmp_path / "x"),
    ])
    config = load_config(args)
    assert config.seeds.seed == 11
    assert config.ablation.no_ss
    assert config.losses.beta1 == 0.5
    assert config.output_dir == str(tmp_path / "x")
    assert config.label == "+SIG+DSL"


ACCEPTANCE_SEEDS = (1, 2)


def acceptance_settings(settings, seed):
    settings = json.loads(json.dumps(settings))
    settings["world"].update({"node_count": 12, "seen_worlds": 4, "unseen_worlds": 2})
    settings["syfis"].update({"trajectories_per_world": 30, "path_length_min": 3, "path_length_max": 5})
    settings["model"].update({"embed_dim": 16, "hidden_dim": 16, "mlp_hidden": 16})
    settings["train"].update({
        "pretrain_steps": 300, "pretrain_batch": 16, "agent_steps": 200, "agent_batch": 8, "log_every": 100,
    })
    settings["rollout"] = {"max_steps": 10}
    settings["seeds"] = {"seed": seed}
    return settings


@pytest.fixture(scope="module")
def ablation_runs(tmp_path_factory, tiny_settings):
    summaries = {"full": [], "baseline": []}
    for seed in ACCEPTANCE_SEEDS:
        settings = acceptance_settings(tiny_settings, seed)
        full = make_config(settings, tmp_path_factory.mktemp(f"full-{seed}"))
        run_pipeline(full, ("gen-worlds", "gen-syfis", "pretrain-translator", "train-agent", "evaluate"))
        baseline = make_config(settings, tmp_path_factory.mktemp(f"baseline-{seed}"), no_translator=True)
        run_pipeline(baseline, ("gen-worlds", "gen-syfis", "train-agent", "evaluate"))
        for name, config in (("full", full), ("baseline", baseline)):
            summaries[name].append(json.loads(RunLayout(config.output_dir).eval_summary.read_text()))
    return summaries


@pytest.mark.slow
def test_split_decisions_after_agent_training(ablation_runs):
    for summary in ablation_runs["full"]:
        assert summary["splits"]["seen"]["episodes"] > 0
        assert summary["split_f1"]["seen"]["f1"] >= 0.8


@pytest.mark.slow
def test_translator_beats_baseline_on_unseen_worlds(ablation_runs):
    def mean_sr(name, split):
        return sum(s["splits"][split]["sr"] for s in ablation_runs[name]) / len(ACCEPTANCE_SEEDS)
    assert mean_sr("full", "seen") >= 0.9
    assert mean_sr("full", "unseen") - mean_sr("baseline", "unseen") >= 0.05
