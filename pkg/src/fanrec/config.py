"""Pipeline configuration: defaults, JSON file, then command-line overrides."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .annotate import AnnotatorConfig
from .cluster import DEFAULT_K_RANGE, DEFAULT_MAX_ITER, DEFAULT_TOL
from .errors import ConfigError
from .evaluation import SynthSpec
from .fanmodel import DEFAULT_MIN_TWEETS
from .jsonio import dumps
from .recommend import DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_N


@dataclass
class PathsConfig:
    catalog: str | None = None
    tweets: str | None = None
    work_dir: str = "work"


@dataclass
class PreprocessConfig:
    filter_corpus: bool = True


@dataclass
class VectorizeConfig:
    min_df: int = 2
    max_df_ratio: float = 0.5
    weighting: str = "tfidf"


@dataclass
class ProfilesConfig:
    min_tweets: int = DEFAULT_MIN_TWEETS
    facet_weight: float | None = None  # None: 0.3 with annotations, else 0


@dataclass
class ClusterConfig:
    k: int | None = None
    k_min: int = DEFAULT_K_RANGE[0]
    k_max: int = DEFAULT_K_RANGE[1]
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL
    n_jobs: int = 1


@dataclass
class AnnotateConfig:
    mode: str = "off"
    annotator: AnnotatorConfig = field(default_factory=AnnotatorConfig)


@dataclass
class RecommendConfig:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    n: int = DEFAULT_N
    exclude_mentioned: bool = True


@dataclass
class EvalConfig:
    k: int = 5


@dataclass
class SynthConfig:
    n_clusters: int = 4
    fans_per_cluster: int = 200
    tweets_per_fan: int = 10
    vocab_per_cluster: int = 40
    shared_vocab: int = 200
    noise: float = 0.2
    artists_per_cluster: int = 5
    mention_prob: float = 0.6
    tokens_per_tweet: int = 8

    def spec(self, seed: int) -> SynthSpec:
        return SynthSpec(seed=seed, **dataclasses.asdict(self))


@dataclass
class PipelineConfig:
    seed: int = 0
    paths: PathsConfig = field(default_factory=PathsConfig)
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    vectorize: VectorizeConfig = field(default_factory=VectorizeConfig)
    profiles: ProfilesConfig = field(default_factory=ProfilesConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    annotate: AnnotateConfig = field(default_factory=AnnotateConfig)
    recommend: RecommendConfig = field(default_factory=RecommendConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return _build(cls, d, "")

    def content_hash(self) -> str:
        """sha256 of the canonical config, ignoring the work directory."""
        d = self.to_dict()
        d["paths"] = {k: v for k, v in d["paths"].items() if k != "work_dir"}
        return hashlib.sha256(dumps(d).encode("utf-8")).hexdigest()[:16]

    def validate(self) -> None:
        if self.annotate.mode not in ("off", "stub", "online"):
            raise ConfigError(f"annotate.mode must be off, stub or online, not {self.annotate.mode!r}")
        if self.vectorize.weighting not in ("tfidf", "tf"):
            raise ConfigError("vectorize.weighting must be tfidf or tf")
        if self.vectorize.min_df < 1 or not 0 < self.vectorize.max_df_ratio <= 1:
            raise ConfigError("vectorize.min_df must be >= 1 and max_df_ratio in (0, 1]")
        fw = self.profiles.facet_weight
        if fw is not None and not 0 <= fw <= 1:
            raise ConfigError("profiles.facet_weight must lie in [0, 1]")
        if not 0 <= self.recommend.alpha <= 1 or self.recommend.beta < 0 or self.recommend.n < 1:
            raise ConfigError("recommend needs alpha in [0, 1], beta >= 0, n >= 1")
        c = self.cluster
        if c.k is None and not 2 <= c.k_min <= c.k_max:
            raise ConfigError("cluster needs 2 <= k_min <= k_max")
        if c.k is not None and c.k < 1:
            raise ConfigError("cluster.k must be >= 1")
        if self.eval.k < 1:
            raise ConfigError("eval.k must be >= 1")


def _build(cls, d: Any, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where or 'config'} must be a JSON object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(d) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys in {where or 'top level'}: {sorted(unknown)}")
    kwargs = {}
    for name, value in d.items():
        f = fields[name]
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), value, f"{where}{name}.")
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config in {where or 'top level'}: {exc}") from None


def load_config(path: str | Path | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return PipelineConfig.from_dict(data)


def apply_override(cfg: PipelineConfig, assignment: str) -> PipelineConfig:
    """Apply ``section.key=value``; the value is parsed as JSON, else taken as a string."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key=value")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    d = cfg.to_dict()
    node = d
    parts = key.strip().split(".")
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown config section {p!r} in override {key!r}")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {key!r}")
    node[parts[-1]] = value
    return PipelineConfig.from_dict(d)
