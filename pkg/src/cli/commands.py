"""Experiment verbs over one run directory.

Each verb reads the artifacts of the verbs before it, writes its own under
``config.output_dir`` and finishes with a manifest in ``manifests/<verb>.json``.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Set, Tuple

from ..agent.model import AgentModel
from ..agent.trainer import episode_specs, evaluate_episodes, split_f1, train_agent
from ..landmark.detector import SyntheticDetector
from ..landmark.vocabulary import LabelVocabulary
from ..metrics.figures import render_overlap_chart, render_world_map
from ..metrics.overlap import instruction_landmarks, landmark_association, overlap_report
from ..metrics.report import aggregate_table, group_runs, seed_statistics, write_association_csv, write_episode_csv
from ..metrics.trajectory import aggregate, evaluate_episode, metric_rows
from ..models.episode import Episode, EpisodeSpec
from ..models.instruction import SyfisRecord, Trajectory
from ..models.world import EnvironmentGraph
from ..numcore.checkpoint import load_checkpoint, save_checkpoint
from ..sim.world import WorldParams, generate_world, world_seeds
from ..syfis.builder import generate_dataset, split_trajectory_ids
from ..syfis.tokenizer import Tokenizer
from ..translator.model import TranslatorModel
from ..translator.pretrain import candidate_features, holdout_split, pretrain_translator, translate_record
from ..utils.errors import DependencyError, InvalidParameterError
from ..utils.io import read_json, read_jsonl, read_text, write_json, write_jsonl, write_text
from .manifest import RunManifest, manifest_path

logger = logging.getLogger(__name__)

VERBS = ("gen-worlds", "gen-syfis", "pretrain-translator", "train-agent", "evaluate", "translate", "report")
SPLITS = ("seen", "unseen")


@dataclass
class CommandOptions:
    progress: bool = False
    maps: int = 0                                   # gen-worlds: render this many seen-world maps
    runs: List[str] = field(default_factory=list)   # report: run directories to aggregate
    limit: int = 20                                 # translate: records to decode


@dataclass
class CommandResult:
    verb: str
    manifest: Path
    summary: str


class RunLayout:
    """Artifact paths inside one run directory"""

    def __init__(self, output_dir):
        self.root = Path(output_dir)

    def worlds_dir(self, split: str) -> Path:
        return self.root / "worlds" / split

    @property
    def world_index(self) -> Path:
        return self.root / "worlds" / "index.json"

    def dataset_dir(self, split: str) -> Path:
        return self.root / "dataset" / split

    @property
    def translator_checkpoint(self) -> Path:
        return self.root / "checkpoints" / "translator.ckpt"

    @property
    def joint_translator_checkpoint(self) -> Path:
        return self.root / "checkpoints" / "translator_joint.ckpt"

    @property
    def agent_checkpoint(self) -> Path:
        return self.root / "checkpoints" / "agent.ckpt"

    @property
    def eval_dir(self) -> Path:
        return self.root / "eval"

    @property
    def eval_summary(self) -> Path:
        return self.eval_dir / "summary.json"

    @property
    def report_dir(self) -> Path:
        return self.root / "report"


def require(path: Path, verb: str, producer: str) -> Path:
    if not Path(path).exists():
        raise DependencyError(f"{verb} needs {path}; run '{producer}' first")
    return Path(path)


def make_detector(config) -> SyntheticDetector:
    return SyntheticDetector(LabelVocabulary.default(config.world.vocab_size), dim=config.feature_dim)


def load_worlds(layout: RunLayout, split: str, verb: str) -> Dict[str, EnvironmentGraph]:
    index = read_json(require(layout.world_index, verb, "gen-worlds"))
    worlds = {}
    for world_id in index.get(split, []):
        path = require(layout.worlds_dir(split) / f"{world_id}.json", verb, "gen-worlds")
        worlds[world_id] = EnvironmentGraph.from_json(read_text(path))
    return worlds


def load_dataset(layout: RunLayout, split: str, verb: str) -> Tuple[List[SyfisRecord], List[Trajectory], Tokenizer]:
    directory = layout.dataset_dir(split)
    records = [SyfisRecord.from_dict(row) for row in read_jsonl(require(directory / "syfis.jsonl", verb, "gen-syfis"))]
    trajectories = [
        Trajectory.from_dict(row) for row in read_jsonl(require(directory / "trajectories.jsonl", verb, "gen-syfis"))
    ]
    tokenizer = Tokenizer.load(require(directory / "tokenizer.json", verb, "gen-syfis"))
    return records, trajectories, tokenizer


def held_out_ids(records: List[SyfisRecord], config) -> Set[str]:
    """Trajectories held out of training; the same split the translator pretraining uses"""
    _, held = split_trajectory_ids((r.trajectory_id for r in records), config.train.holdout_fraction, config.seeds.seed)
    return set(held)


def split_specs(layout: RunLayout, config, split: str, verb: str) -> Tuple[List[EpisodeSpec], List[SyfisRecord], Tokenizer]:
    """Complete-episode specs of one split, with its records and tokenizer"""
    records, trajectories, tokenizer = load_dataset(layout, split, verb)
    specs = episode_specs(records, trajectories, config.syfis.instruction_mode, config.model.max_text_len)
    return specs, records, tokenizer


def _load_translator(config, vocab_size: int, path: Path) -> TranslatorModel:
    translator = TranslatorModel.from_config(config, vocab_size)
    load_checkpoint(translator.store, path)
    return translator


def _manifest(verb: str, config) -> RunManifest:
    return RunManifest(verb=verb, config_hash=config.config_hash(), label=config.label)


def _finish(layout: RunLayout, manifest: RunManifest, config, summary: str) -> CommandResult:
    config_path = layout.root / "config.json"
    config.save(config_path)
    manifest.add_artifact("config", config_path)
    path = manifest.write(manifest_path(layout.root, manifest.verb))
    return CommandResult(manifest.verb, path, summary)


def gen_worlds(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("gen-worlds", config)
    manifest.start("generate")
    params = WorldParams.from_config(config)
    w = config.world
    index: Dict[str, List[str]] = {}
    for split, count, offset in (("seen", w.seen_worlds, 0), ("unseen", w.unseen_worlds, w.unseen_seed_offset)):
        index[split] = []
        for seed in world_seeds(config.seeds.seed, count, offset):
            graph = generate_world(seed, params, split=split)
            path = write_text(layout.worlds_dir(split) / f"{graph.world_id}.json", graph.to_json())
            manifest.add_artifact(f"world:{graph.world_id}", path)
            index[split].append(graph.world_id)
            if split == "seen" and len(index[split]) <= options.maps:
                figure = render_world_map(graph, layout.root / "figures" / f"world_{graph.world_id}.png")
                manifest.add_artifact(f"map:{graph.world_id}", figure)
    manifest.add_artifact("index", write_json(layout.world_index, index))
    manifest.stop("generate")
    logger.info("generated %d seen and %d unseen worlds", len(index["seen"]), len(index["unseen"]))
    return _finish(layout, manifest, config, f"worlds: {len(index['seen'])} seen, {len(index['unseen'])} unseen")


def gen_syfis(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("gen-syfis", config)
    detector = make_detector(config)
    parts = []
    for split in SPLITS:
        worlds = load_worlds(layout, split, "gen-syfis")
        if not worlds:
            continue
        manifest.start(split)
        seed = config.seeds.seed + (config.world.unseen_seed_offset if split == "unseen" else 0)
        result = generate_dataset(
            [worlds[w] for w in sorted(worlds)],
            config.syfis.trajectories_per_world,
            detector,
            config,
            seed,
            out_dir=layout.dataset_dir(split),
            worker_threads=config.worker_threads,
            progress=options.progress,
        )
        manifest.stop(split)
        for name in ("syfis.jsonl", "trajectories.jsonl", "stats.json", "tokenizer.json"):
            manifest.add_artifact(f"{split}:{name}", layout.dataset_dir(split) / name)
        parts.append(f"{split} {result.stats.emitted} records ({sum(result.stats.skipped.values())} skipped)")
    return _finish(layout, manifest, config, "syfis: " + ", ".join(parts))


def pretrain(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("pretrain-translator", config)
    records, _, tokenizer = load_dataset(layout, "seen", "pretrain-translator")
    worlds = load_worlds(layout, "seen", "pretrain-translator")
    if config.ablation.no_translator:
        logger.info("no_translator is set; the pretrained translator will not be used by the agent")
    translator = TranslatorModel.from_config(config, tokenizer.size)
    manifest.start("pretrain")
    result = pretrain_translator(translator, records, worlds, config, progress=options.progress)
    manifest.stop("pretrain")
    manifest.add_artifact("translator", save_checkpoint(
        translator.store, layout.translator_checkpoint, extra={"config_hash": config.config_hash()}
    ))
    manifest.add_artifact("history", write_json(layout.root / "pretrain.json", result.to_dict()))
    holdout = result.holdout
    summary = f"translator: {result.train_records} train records"
    if holdout:
        summary += (
            f", held-out token accuracy {holdout['token_accuracy']:.3f}, "
            f"D(a,p) {holdout['mean_d_ap']:.3f} < D(a,hard) {holdout['mean_d_an_hard']:.3f}"
        )
    return _finish(layout, manifest, config, summary)


def train(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("train-agent", config)
    specs, records, tokenizer = split_specs(layout, config, "seen", "train-agent")
    held = held_out_ids(records, config)
    train_specs = [s for s in specs if s.episode_id not in held]
    worlds = load_worlds(layout, "seen", "train-agent")
    translator: Optional[TranslatorModel] = None
    if not config.ablation.no_translator:
        translator = _load_translator(
            config, tokenizer.size, require(layout.translator_checkpoint, "train-agent", "pretrain-translator")
        )
    agent = AgentModel.from_config(config, tokenizer.size)
    manifest.start("train")
    result = train_agent(agent, translator, train_specs, worlds, config, progress=options.progress)
    manifest.stop("train")
    extra = {"config_hash": config.config_hash()}
    manifest.add_artifact("agent", save_checkpoint(agent.store, layout.agent_checkpoint, extra=extra))
    if translator is not None:
        manifest.add_artifact("translator", save_checkpoint(
            translator.store, layout.joint_translator_checkpoint, extra=extra
        ))
    manifest.add_artifact("history", write_json(layout.root / "train_agent.json", result.to_dict()))
    last = result.history[-1] if result.history else {}
    return _finish(
        layout, manifest, config,
        f"agent: {len(train_specs)} episodes, {len(result.history)} steps, final loss {last.get('total', 0.0):.4f}",
    )


def evaluate(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("evaluate", config)
    summary: Dict = {"label": config.label, "seed": config.seeds.seed, "config_hash": config.config_hash(), "splits": {}}
    agent = translator = None
    parts = []
    for split in SPLITS:
        worlds = load_worlds(layout, split, "evaluate")
        if not worlds:
            continue
        specs, records, tokenizer = split_specs(layout, config, split, "evaluate")
        if split == "seen":
            held = held_out_ids(records, config)
            specs = [s for s in specs if s.episode_id in held]
        if agent is None:
            agent = AgentModel.from_config(config, tokenizer.size)
            load_checkpoint(agent.store, require(layout.agent_checkpoint, "evaluate", "train-agent"))
            if not config.ablation.no_translator:
                translator = _load_translator(
                    config, tokenizer.size, require(layout.joint_translator_checkpoint, "evaluate", "train-agent")
                )
        manifest.start(split)
        episodes = evaluate_episodes(agent, translator, specs, worlds, config, progress=options.progress)
        results = [
            evaluate_episode(ep, spec.reference_path, worlds[spec.world_id], config.rollout.success_radius)
            for ep, spec in zip(episodes, specs)
        ]
        manifest.stop(split)
        rows = [{**ep.to_dict(), "metrics": r.to_dict()} for ep, r in zip(episodes, results)]
        manifest.add_artifact(f"{split}:episodes", write_jsonl(layout.eval_dir / f"{split}_episodes.jsonl", rows))
        manifest.add_artifact(f"{split}:metrics", write_episode_csv(
            layout.eval_dir / f"{split}_metrics.csv", metric_rows(results, [ep.episode_id for ep in episodes])
        ))
        summary["splits"][split] = aggregate(results)
        if translator is not None and specs:
            summary.setdefault("split_f1", {})[split] = split_f1(translator, agent, specs, worlds, config)
        parts.append(f"{split} SR {summary['splits'][split]['sr']:.3f} over {len(results)} episodes")
    manifest.add_artifact("summary", write_json(layout.eval_summary, summary))
    return _finish(layout, manifest, config, f"evaluate [{config.label}]: " + ", ".join(parts))


def translate(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("translate", config)
    records, _, tokenizer = load_dataset(layout, "seen", "translate")
    worlds = load_worlds(layout, "seen", "translate")
    checkpoint = layout.joint_translator_checkpoint
    if not checkpoint.exists():
        checkpoint = require(layout.translator_checkpoint, "translate", "pretrain-translator")
    translator = _load_translator(config, tokenizer.size, checkpoint)
    _, holdout = holdout_split(records, config.train.holdout_fraction, config.seeds.seed)
    chosen = (holdout or records)[: options.limit]
    rows = [translate_record(translator, tokenizer, r, candidate_features(worlds, r)) for r in chosen]
    manifest.add_artifact("translations", write_jsonl(layout.root / "translate" / "translations.jsonl", rows))
    exact = sum(row["decoded"] == row["positive"] for row in rows)
    return _finish(layout, manifest, config, f"translate: {exact}/{len(rows)} sub-instructions decoded exactly")


def _overlap(config, layout: RunLayout, split: str, manifest: RunManifest) -> None:
    path = layout.eval_dir / f"{split}_episodes.jsonl"
    if not path.exists():
        return
    rows = read_jsonl(path)
    episodes = [Episode.from_dict(row) for row in rows]
    successes: Mapping[str, int] = {row["episode_id"]: int(row["metrics"]["sr"]) for row in rows}
    records, _, _ = load_dataset(layout, split, "report")
    report = overlap_report(
        episodes, instruction_landmarks(records), load_worlds(layout, split, "report"),
        make_detector(config), config.detector.k, config.detector.tau, successes,
    )
    manifest.add_artifact(f"{split}:overlap", write_json(layout.report_dir / f"overlap_{split}.json", report.to_dict()))
    manifest.add_artifact(f"{split}:overlap_png", render_overlap_chart(report, layout.report_dir / f"overlap_{split}.png"))


def report(config, layout: RunLayout, options: CommandOptions) -> CommandResult:
    manifest = _manifest("report", config)
    run_dirs = [Path(r) for r in options.runs] or [layout.root]
    runs = [read_json(require(RunLayout(r).eval_summary, "report", "evaluate")) for r in run_dirs]
    table = aggregate_table(runs)
    manifest.add_artifact("table", write_text(layout.report_dir / "results.tsv", table))
    seeds = {f"{label}/{split}": seed_statistics(summaries) for (label, split), summaries in group_runs(runs).items()}
    manifest.add_artifact("seeds", write_json(layout.report_dir / "seeds.json", seeds))
    for split in SPLITS:
        _overlap(config, layout, split, manifest)
    seen_records = layout.dataset_dir("seen") / "syfis.jsonl"
    if seen_records.exists():
        records, _, _ = load_dataset(layout, "seen", "report")
        manifest.add_artifact("association", write_association_csv(
            layout.report_dir / "landmark_association.csv", landmark_association(records)
        ))
    return _finish(layout, manifest, config, f"report: {len(runs)} runs\n{table.rstrip()}")


HANDLERS = {
    "gen-worlds": gen_worlds,
    "gen-syfis": gen_syfis,
    "pretrain-translator": pretrain,
    "train-agent": train,
    "evaluate": evaluate,
    "translate": translate,
    "report": report,
}


def run_command(verb: str, config, options: Optional[CommandOptions] = None) -> CommandResult:
    """Run one verb against ``config.output_dir``"""
    if verb not in HANDLERS:
        raise InvalidParameterError(f"unknown verb '{verb}', expected one of {', '.join(VERBS)}")
    layout = RunLayout(config.output_dir)
    logger.info("running %s in %s (config %s)", verb, layout.root, config.config_hash()[:12])
    return HANDLERS[verb](config, layout, options or CommandOptions())
