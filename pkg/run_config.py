import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values

from data.tokenize import DOMAINS
from errors import ConfigError
from model.seq2seq import ModelConfig, ModelVariant
from training.schedule import MAIN_METRICS, TrainSchedule, ValidationPolicy

_ENV_PREFIX = "LLA_"
_PATH_KEYS = ("train", "val", "test", "probes")


@dataclass
class RunConfig:
    """
    One experiment. Values resolve as: field defaults, then LLA_<KEY>
    environment variables, then the --config file, then explicit flags.
    """
    domain: str = "colors"
    train: Optional[str] = None
    val: Optional[str] = None
    test: Optional[str] = None
    probes: Optional[str] = None
    variant: str = ModelVariant.LLA_LSTM.value
    seed: int = 0
    epochs: int = 1000
    lexicon_epochs: int = 30
    batch_size: int = 30
    lexicon_batch: int = 1
    lr: float = 0.001
    lexicon_lr: float = 0.1
    adversary_lambda: float = 1e-4
    hidden_size: int = 300
    embedding_size: int = 300
    adversary_hidden: int = 1000
    metric: Optional[str] = None  # exact, or bleu for the translation domain
    max_len: int = 1000
    val_size: int = 0
    max_input_words: Optional[int] = None
    dtype: str = "float32"
    workers: int = 1
    out: str = "runs/latest"

    @property
    def validation_metric(self) -> str:
        if self.metric:
            return self.metric
        return "bleu" if self.domain == "zh" else "exact"

    def validate(self) -> "RunConfig":
        if self.domain not in DOMAINS:
            raise ConfigError(f"unknown domain '{self.domain}' (expected one of {', '.join(DOMAINS)})")
        ModelVariant.parse(self.variant)
        if self.validation_metric not in MAIN_METRICS:
            raise ConfigError(f"unknown metric '{self.metric}' (expected one of {', '.join(MAIN_METRICS)})")
        if self.workers < 1 or self.max_len < 1:
            raise ConfigError("workers and max_len must be positive")
        if not self.train:
            raise ConfigError("no training file given (--train or LLA_TRAIN)")
        for key in _PATH_KEYS:
            path = getattr(self, key)
            if path and not Path(path).is_file():
                raise ConfigError(f"{key} file not found: {path}")
        return self

    def schedule(self) -> TrainSchedule:
        return TrainSchedule(
            lexicon_epochs=self.lexicon_epochs,
            total_epochs=self.epochs,
            lexicon_batch=self.lexicon_batch,
            main_batch=self.batch_size,
            lexicon_lr=self.lexicon_lr,
            main_lr=self.lr,
            adversary_lambda=self.adversary_lambda,
            seed=self.seed,
        )

    def policy(self) -> ValidationPolicy:
        return ValidationPolicy(self.validation_metric)

    def model_config(self, input_vocab, output_vocab) -> ModelConfig:
        return ModelConfig(
            input_vocab_size=len(input_vocab),
            output_vocab_size=len(output_vocab),
            stop_id=output_vocab.stop_id,
            variant=ModelVariant.parse(self.variant),
            hidden_size=self.hidden_size,
            embedding_size=self.embedding_size,
            adversary_hidden=self.adversary_hidden,
            dtype=self.dtype,
            seed=self.seed,
        )

    def as_dict(self) -> dict:
        return asdict(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_KEYS = {name for name, f in _FIELDS.items() if f.type in (int, Optional[int])}
_FLOAT_KEYS = {name for name, f in _FIELDS.items() if f.type is float}


def _coerce(key, raw):
    if raw is None or not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if raw == "" and _FIELDS[key].default is None:
        return None
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as a number") from None
    return raw


def _normalize_key(key: str) -> str:
    name = key.strip().lower().replace("-", "_")
    if name not in _FIELDS:
        raise ConfigError(f"unknown config key '{key}'")
    return name


def resolve_config(cli_values: dict = None, config_path=None, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    for name in _FIELDS:
        env_key = _ENV_PREFIX + name.upper()
        if env_key in environ:
            values[name] = environ[env_key]

    if config_path:
        if not Path(config_path).is_file():
            raise ConfigError(f"config file not found: {config_path}")
        for key, raw in dotenv_values(config_path).items():
            if raw is None:
                raise ConfigError(f"{config_path}: '{key}' has no value (expected key=value)")
            values[_normalize_key(key)] = raw

    for key, value in (cli_values or {}).items():
        if value is not None:
            values[_normalize_key(key)] = value

    return RunConfig(**{key: _coerce(key, value) for key, value in values.items()})
