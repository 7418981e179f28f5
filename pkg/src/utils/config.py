import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from .errors import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class WorldConfig:
    node_count: int = 20
    floors: int = 2
    spacing: float = 1.0          # lattice step, world units
    floor_height: float = 1.0
    jitter: float = 0.08          # position noise
    extra_edge_prob: float = 0.25 # diagonal shortcuts
    stairs_per_floor: int = 2
    vocab_size: int = 32
    feature_dim: int = 0          # 0 -> vocab_size
    anchored_objects: int = 2
    clutter_density: float = 1.5  # expected clutter labels per view
    zipf_exponent: float = 1.1
    sight_radius: float = 1.75
    seen_worlds: int = 20
    unseen_worlds: int = 8
    unseen_seed_offset: int = 1_000_000


@dataclass
class DetectorConfig:
    k: int = 5
    tau: float = 0.1
    noise: float = 0.05


@dataclass
class SyfisConfig:
    dictionary_path: Optional[str] = None
    trajectories_per_world: int = 100
    path_length_min: int = 5
    path_length_max: int = 7
    max_tokens: int = 8
    motion_threshold: float = 30.0
    instruction_mode: str = "full"
    concat_trajectories: bool = False


@dataclass
class ModelConfig:
    embed_dim: int = 32
    hidden_dim: int = 32
    mlp_hidden: int = 32
    max_text_len: int = 64


@dataclass
class OptimizerConfig:
    lr: float = 1e-2
    betas: List[float] = field(default_factory=lambda: [0.9, 0.999])
    eps: float = 1e-8
    weight_decay: float = 0.01


@dataclass
class LossConfig:
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    beta3: float = 0.1
    lambda_il: float = 0.2
    margin: float = 0.5
    literal_dsl: bool = False
    literal_ss: bool = False


@dataclass
class RolloutConfig:
    max_steps: int = 15
    success_radius: float = 1.0
    discount: float = 0.9
    success_reward: float = 2.0
    failure_penalty: float = 2.0


@dataclass
class TrainConfig:
    pretrain_steps: int = 400
    pretrain_batch: int = 16
    agent_steps: int = 300
    agent_batch: int = 8
    holdout_fraction: float = 0.1
    log_every: int = 50


@dataclass
class SeedConfig:
    seed: int = 7


@dataclass
class AblationConfig:
    no_translator: bool = False
    no_sig: bool = False
    no_dsl: bool = False
    no_ss: bool = False
    freeze_translator: bool = False

    @classmethod
    def from_flags(cls, names: Iterable[str]) -> "AblationConfig":
        ablation = cls()
        for name in names:
            attr = name.replace("-", "_")
            if not hasattr(ablation, attr):
                raise ConfigError(f"unknown ablation flag '{name}'")
            setattr(ablation, attr, True)
        return ablation

    @property
    def label(self) -> str:
        active = [f.name for f in fields(self) if getattr(self, f.name)]
        return "+".join(active) if active else "full"


SECTIONS = {
    "world": WorldConfig,
    "detector": DetectorConfig,
    "syfis": SyfisConfig,
    "model": ModelConfig,
    "optimizer": OptimizerConfig,
    "losses": LossConfig,
    "rollout": RolloutConfig,
    "train": TrainConfig,
    "seeds": SeedConfig,
    "ablation": AblationConfig,
}

SCALARS = {"output_dir": str, "worker_threads": int, "run_label": str}


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Coerce a JSON value to the type of the field default"""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        return [float(v) for v in value]
    if default is None or isinstance(default, str):
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    return value


def _check(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass
class RunConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    syfis: SyfisConfig = field(default_factory=SyfisConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    losses: LossConfig = field(default_factory=LossConfig)
    rollout: RolloutConfig = field(default_factory=RolloutConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: SeedConfig = field(default_factory=SeedConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)

    output_dir: str = "runs/default"
    worker_threads: int = 1
    run_label: str = ""

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Build a config from a (possibly partial) nested dict"""
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        config = cls()
        for key, value in data.items():
            if key in SCALARS:
                setattr(config, key, _coerce(key, value, getattr(config, key)))
                continue
            if key not in SECTIONS:
                raise ConfigError(f"unknown config key '{key}'")
            if not isinstance(value, dict):
                raise ConfigError(f"section '{key}' must be an object")
            section = getattr(config, key)
            known = {f.name for f in fields(section)}
            for sub_key, sub_value in value.items():
                if sub_key not in known:
                    raise ConfigError(f"unknown config key '{key}.{sub_key}'")
                default = getattr(section, sub_key)
                setattr(section, sub_key, _coerce(f"{key}.{sub_key}", sub_value, default))
        return config

    @classmethod
    def load(cls, path: Optional[str] = None, overrides: Iterable[str] = ()) -> "RunConfig":
        """Load configuration from a JSON file, apply overrides and validate"""
        data: Dict[str, Any] = {}
        if path is not None:
            config_path = Path(path)
            if not config_path.exists():
                raise ConfigError(f"config file not found: {config_path}")
            try:
                with open(config_path, "r", encoding="utf-8") as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file {config_path} is not valid JSON: {e}") from e

        config = cls.from_dict(data)
        for override in overrides:
            config.apply_override(override)
        config.validate_config()
        return config

    def apply_override(self, override: str) -> None:
        """Apply one ``section.key=value`` flag override"""
        if "=" not in override:
            raise ConfigError(f"override '{override}' must look like section.key=value")
        key, raw = override.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        key = key.strip()
        if "." in key:
            section, sub_key = key.split(".", 1)
            patch = {section: {sub_key: value}}
        else:
            patch = {key: value}
        patched = RunConfig.from_dict(self._merged(patch))
        self.__dict__.update(patched.__dict__)

    def _merged(self, patch: Dict[str, Any]) -> Dict[str, Any]:
        merged = self.to_dict()
        for key, value in patch.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        return merged

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def save(self, path: Path) -> None:
        """Save the effective configuration"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=4, sort_keys=True)

    def validate_config(self) -> None:
        """Validate configuration values"""
        w, d, s = self.world, self.detector, self.syfis
        _check(w.node_count >= 2, "world.node_count must be >= 2")
        _check(w.floors >= 1, "world.floors must be >= 1")
        _check(2 <= w.vocab_size <= 48, "world.vocab_size must be in [2, 48]")
        _check(w.feature_dim == 0 or w.feature_dim >= w.vocab_size,
               "world.feature_dim must be 0 or >= world.vocab_size")
        _check(w.spacing > 0 and w.floor_height > 0, "world.spacing and world.floor_height must be > 0")
        _check(0.0 <= w.extra_edge_prob <= 1.0, "world.extra_edge_prob must be in [0, 1]")
        _check(w.seen_worlds >= 1 and w.unseen_worlds >= 0, "world.seen_worlds must be >= 1, unseen_worlds >= 0")
        _check(w.sight_radius > 0, "world.sight_radius must be > 0")
        _check(d.k >= 1, "detector.k must be >= 1")
        _check(d.tau > 0, "detector.tau must be > 0")
        _check(d.noise >= 0, "detector.noise must be >= 0")
        _check(2 <= s.path_length_min <= s.path_length_max,
               "syfis.path_length_min must be in [2, path_length_max]")
        _check(s.trajectories_per_world >= 1, "syfis.trajectories_per_world must be >= 1")
        _check(s.max_tokens >= 3, "syfis.max_tokens must be >= 3")
        _check(0 < s.motion_threshold < 180, "syfis.motion_threshold must be in (0, 180)")
        _check(s.instruction_mode in ("full", "last"), "syfis.instruction_mode must be 'full' or 'last'")
        m = self.model
        _check(min(m.embed_dim, m.hidden_dim, m.mlp_hidden) >= 1, "model dims must be >= 1")
        _check(m.embed_dim == m.hidden_dim, "model.embed_dim must equal model.hidden_dim")
        o = self.optimizer
        _check(o.lr > 0 and math.isfinite(o.lr), "optimizer.lr must be a finite number > 0")
        _check(len(o.betas) == 2 and all(0 <= b < 1 for b in o.betas), "optimizer.betas must be two values in [0, 1)")
        _check(o.eps > 0 and o.weight_decay >= 0, "optimizer.eps must be > 0, weight_decay >= 0")
        for f in fields(self.losses):
            value = getattr(self.losses, f.name)
            if isinstance(value, bool):
                continue
            _check(math.isfinite(value) and value >= 0, f"losses.{f.name} must be finite and >= 0")
        r = self.rollout
        _check(r.max_steps >= 1, "rollout.max_steps must be >= 1")
        _check(r.success_radius > 0, "rollout.success_radius must be > 0")
        _check(0 <= r.discount <= 1, "rollout.discount must be in [0, 1]")
        t = self.train
        _check(t.pretrain_steps >= 0 and t.agent_steps >= 0, "train steps must be >= 0")
        _check(t.pretrain_batch >= 1 and t.agent_batch >= 2, "train.pretrain_batch must be >= 1, agent_batch >= 2")
        _check(0 < t.holdout_fraction < 1, "train.holdout_fraction must be in (0, 1)")
        _check(t.log_every >= 1, "train.log_every must be >= 1")
        _check(self.worker_threads >= 1, "worker_threads must be >= 1")

    # Effective coefficients after ablation flags

    @property
    def effective_alphas(self):
        alpha1 = 0.0 if self.ablation.no_sig else self.losses.alpha1
        alpha2 = 0.0 if self.ablation.no_dsl else self.losses.alpha2
        return alpha1, alpha2

    @property
    def effective_betas(self):
        a = self.ablation
        beta2 = 0.0 if (a.no_sig or a.no_translator or a.freeze_translator) else self.losses.beta2
        beta3 = 0.0 if (a.no_ss or a.no_translator or a.freeze_translator) else self.losses.beta3
        return self.losses.beta1, beta2, beta3

    @property
    def label(self) -> str:
        """Run label for report rows: explicit ``run_label`` or the ablation ladder name"""
        if self.run_label:
            return self.run_label
        a = self.ablation
        if a.no_translator:
            return "Baseline"
        if a.freeze_translator or a.no_sig:
            return a.label
        if a.no_dsl:
            return "+SIG+SS" if not a.no_ss else "+SIG"
        return "+SIG+DSL" if a.no_ss else "+SIG+DSL+SS"

    @property
    def feature_dim(self) -> int:
        return self.world.feature_dim or self.world.vocab_size
