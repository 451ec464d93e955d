"""Experiment configuration: one TOML file drives every CLI command.

Relative paths are resolved against the config file's directory so an
experiment bundle can be moved around as a unit. Numeric constraints
owned by the core modules (BM25 parameters, smoothing weight, training
hyperparameters) are re-validated here at load time, before any work
starts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .corpus import TOKENIZERS
from .encoder import TrainConfig
from .errors import QASearchError
from .pipeline import RETRIEVAL_METHODS, PipelineConfig
from .sparse import Bm25Params, LmParams

__all__ = ["ConfigError", "PathsConfig", "AppConfig", "load_config", "config_to_toml"]

SPLITS = ("train", "dev", "test")


class ConfigError(QASearchError):
    """Invalid configuration file or option value."""


@dataclass
class PathsConfig:
    train: Path = Path("data/train.jsonl")
    dev: Path = Path("data/dev.jsonl")
    test: Path = Path("data/test.jsonl")
    model: Path = Path("artifacts/model.spqe")
    index: Path = Path("artifacts/index.spqi")
    store: Path = Path("artifacts/store.spqv")
    stopwords: Path = Path("artifacts/stopwords.txt")
    condensed: Path = Path("artifacts/condensed.jsonl")
    loss_history: Path = Path("artifacts/loss_history.csv")
    reports_dir: Path = Path("artifacts/reports")

    def resolve(self, base: Path) -> "PathsConfig":
        resolved = {}
        for entry in fields(self):
            value: Path = getattr(self, entry.name)
            resolved[entry.name] = value if value.is_absolute() else base / value
        return PathsConfig(**resolved)

    def for_split(self, split: str) -> Path:
        if split not in SPLITS:
            raise ConfigError(f"unknown split {split!r}; expected one of {SPLITS}")
        return getattr(self, split)


@dataclass
class AppConfig:
    seed: int = 13
    paths: PathsConfig = field(default_factory=PathsConfig)
    # preprocessing
    stopword_m: int = 100
    tokenizer: str = "whitespace"
    stopwords_for_dense: bool = True
    # condenser
    condenser_k: int = 5
    # scorer parameters
    bm25: Bm25Params = field(default_factory=Bm25Params)
    lm: LmParams = field(default_factory=LmParams)
    # training
    epochs: int = 15
    batch_size: int = 32
    learning_rate: float = 0.05
    max_tokens: int = 256
    dim: int = 64
    scale: float = 20.0
    # retrieval
    method: str = "two-stage"
    top_k: int = 10
    # evaluation
    eval_k: tuple[int, ...] = (1, 5, 10)
    map_depth: int = 100
    split: str = "test"

    def train_config(self) -> TrainConfig:
        """Training hyperparameters; both RNG streams flow from the one seed."""
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            max_tokens=self.max_tokens,
            dim=self.dim,
            scale=self.scale,
            seed=self.seed,
            shuffle_seed=self.seed + 1,
        )

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            condenser_k=self.condenser_k,
            method=self.method,
            top_k=self.top_k,
            max_tokens=self.max_tokens,
            bm25=self.bm25,
            lm=self.lm,
            stopwords_for_dense=self.stopwords_for_dense,
        )

    def splitter(self):
        return TOKENIZERS[self.tokenizer]


def _section(raw: dict, name: str, known: tuple[str, ...]) -> dict:
    section = raw.pop(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    for key in section:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
    return section


def _int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where} must be an integer")
    return value


def _num(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where} must be a number")
    return float(value)


def parse_config(text: str, base: Path) -> AppConfig:
    """Parse TOML text into a validated AppConfig."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc

    cfg = AppConfig()
    if "seed" in raw:
        cfg.seed = _int(raw.pop("seed"), "seed")

    paths_raw = _section(raw, "paths", tuple(f.name for f in fields(PathsConfig)))
    paths = PathsConfig(**{k: Path(v) for k, v in paths_raw.items()})
    cfg.paths = paths.resolve(base)

    pre = _section(
        raw, "preprocessing", ("stopword_m", "tokenizer", "stopwords_for_dense")
    )
    if "stopword_m" in pre:
        cfg.stopword_m = _int(pre["stopword_m"], "preprocessing.stopword_m")
        if cfg.stopword_m < 0:
            raise ConfigError("preprocessing.stopword_m must be >= 0")
    if "tokenizer" in pre:
        cfg.tokenizer = pre["tokenizer"]
        if cfg.tokenizer not in TOKENIZERS:
            raise ConfigError(
                f"unknown tokenizer {cfg.tokenizer!r}; "
                f"registered: {', '.join(sorted(TOKENIZERS))}"
            )
    if "stopwords_for_dense" in pre:
        if not isinstance(pre["stopwords_for_dense"], bool):
            raise ConfigError("preprocessing.stopwords_for_dense must be a boolean")
        cfg.stopwords_for_dense = pre["stopwords_for_dense"]

    cond = _section(raw, "condenser", ("k",))
    if "k" in cond:
        cfg.condenser_k = _int(cond["k"], "condenser.k")

    bm25 = _section(raw, "bm25", ("k", "b"))
    lm = _section(raw, "lm", ("alpha",))
    train = _section(
        raw,
        "train",
        ("epochs", "batch_size", "learning_rate", "max_tokens", "dim", "scale"),
    )
    retrieval = _section(raw, "retrieval", ("method", "top_k"))
    eval_raw = _section(raw, "eval", ("k_values", "map_depth", "split"))
    if raw:
        raise ConfigError(f"unknown config section {next(iter(raw))!r}")

    try:
        cfg.bm25 = Bm25Params(
            k=_num(bm25.get("k", 1.2), "bm25.k"),
            b=_num(bm25.get("b", 0.75), "bm25.b"),
        )
        cfg.lm = LmParams(alpha=_num(lm.get("alpha", 0.1), "lm.alpha"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if "epochs" in train:
        cfg.epochs = _int(train["epochs"], "train.epochs")
    if "batch_size" in train:
        cfg.batch_size = _int(train["batch_size"], "train.batch_size")
    if "learning_rate" in train:
        cfg.learning_rate = _num(train["learning_rate"], "train.learning_rate")
    if "max_tokens" in train:
        cfg.max_tokens = _int(train["max_tokens"], "train.max_tokens")
    if "dim" in train:
        cfg.dim = _int(train["dim"], "train.dim")
    if "scale" in train:
        cfg.scale = _num(train["scale"], "train.scale")

    if "method" in retrieval:
        cfg.method = retrieval["method"]
        if cfg.method not in RETRIEVAL_METHODS:
            raise ConfigError(
                f"unknown retrieval method {cfg.method!r}; "
                f"expected one of {', '.join(RETRIEVAL_METHODS)}"
            )
    if "top_k" in retrieval:
        cfg.top_k = _int(retrieval["top_k"], "retrieval.top_k")

    if "k_values" in eval_raw:
        values = eval_raw["k_values"]
        if not isinstance(values, list) or not values:
            raise ConfigError("eval.k_values must be a non-empty list of integers")
        cfg.eval_k = tuple(
            sorted({_int(v, "eval.k_values entry") for v in values})
        )
        if any(k < 1 for k in cfg.eval_k):
            raise ConfigError("eval.k_values entries must be >= 1")
    if "map_depth" in eval_raw:
        cfg.map_depth = _int(eval_raw["map_depth"], "eval.map_depth")
        if cfg.map_depth < 1:
            raise ConfigError("eval.map_depth must be >= 1")
    if "split" in eval_raw:
        cfg.split = eval_raw["split"]
        if cfg.split not in SPLITS:
            raise ConfigError(f"eval.split must be one of {SPLITS}")

    # Surface any remaining cross-field violations via the owning modules.
    try:
        cfg.train_config()
        cfg.pipeline_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(encoding="utf-8"), path.parent)


def _toml_str(value) -> str:
    return json.dumps(str(value))


def config_to_toml(cfg: AppConfig) -> str:
    """Serialize so that parsing the output reproduces the same settings."""
    lines = [
        f"seed = {cfg.seed}",
        "",
        "[paths]",
    ]
    lines += [
        f"{entry.name} = {_toml_str(getattr(cfg.paths, entry.name))}"
        for entry in fields(PathsConfig)
    ]
    lines += [
        "",
        "[preprocessing]",
        f"stopword_m = {cfg.stopword_m}",
        f"tokenizer = {_toml_str(cfg.tokenizer)}",
        f"stopwords_for_dense = {'true' if cfg.stopwords_for_dense else 'false'}",
        "",
        "[condenser]",
        f"k = {cfg.condenser_k}",
        "",
        "[bm25]",
        f"k = {cfg.bm25.k!r}",
        f"b = {cfg.bm25.b!r}",
        "",
        "[lm]",
        f"alpha = {cfg.lm.alpha!r}",
        "",
        "[train]",
        f"epochs = {cfg.epochs}",
        f"batch_size = {cfg.batch_size}",
        f"learning_rate = {cfg.learning_rate!r}",
        f"max_tokens = {cfg.max_tokens}",
        f"dim = {cfg.dim}",
        f"scale = {cfg.scale!r}",
        "",
        "[retrieval]",
        f"method = {_toml_str(cfg.method)}",
        f"top_k = {cfg.top_k}",
        "",
        "[eval]",
        f"k_values = [{', '.join(str(k) for k in cfg.eval_k)}]",
        f"map_depth = {cfg.map_depth}",
        f"split = {_toml_str(cfg.split)}",
    ]
    return "\n".join(lines) + "\n"
