import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from data.tokenize import domain_modes, tokenize
from data.treebank import wsj_paren_transform
from data.vocab import STOP
from errors import ConfigError, DataError, PreconditionError

logger = logging.getLogger(__name__)

# Parsing long WSJ sentences is out of reach for the model, so they are filtered by default.
WSJ_MAX_INPUT_WORDS = 10


@dataclass
class ParallelPair:
    input: list[str]
    output: list[str]  # always ends with the stop token

    @property
    def gold(self) -> list[str]:
        return self.output[:-1]


@dataclass
class DatasetSplit:
    domain: str
    train: list[ParallelPair]
    validation: list[ParallelPair]
    test: list[ParallelPair] = field(default_factory=list)

    def all_pairs(self) -> list[ParallelPair]:
        return self.train + self.validation + self.test


def _read_lines(path):
    try:
        return Path(path).read_text(encoding="utf-8-sig").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def load_tsv(path, domain: str, max_input_words: Optional[int] = None) -> list[ParallelPair]:
    """
    Read `input<TAB>output` lines and tokenize both sides for `domain`.

    Blank lines are skipped; any other line without exactly one tab is an
    ingestion error naming the line. WSJ outputs go through the bracket
    rewrite first and WSJ inputs are lowercased.
    """
    in_mode, out_mode = domain_modes(domain)
    if max_input_words is None and domain == "wsj":
        max_input_words = WSJ_MAX_INPUT_WORDS

    pairs, dropped = [], 0
    for line_no, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise DataError(f"{path}: line {line_no}: expected exactly one tab, found {len(fields) - 1}")
        source, target = fields
        if domain == "wsj":
            source = source.lower()
            try:
                target = wsj_paren_transform(target)
            except DataError as exc:
                raise DataError(f"{path}: line {line_no}: {exc}") from exc
        inputs = tokenize(source, in_mode, line_no)
        outputs = tokenize(target, out_mode, line_no)
        if max_input_words is not None and len(inputs) > max_input_words:
            dropped += 1
            continue
        pairs.append(ParallelPair(inputs, outputs + [STOP]))

    if dropped:
        logger.info("%s: dropped %d pairs longer than %d input words", path, dropped, max_input_words)
    if not pairs:
        raise DataError(f"{path}: no usable pairs")
    return pairs


def random_split(pairs: list[ParallelPair], holdout: int, seed: int = 0):
    """Seeded hold-out of `holdout` pairs; returns (remaining, held_out) in original order."""
    if not 0 < holdout < len(pairs):
        raise PreconditionError(f"cannot hold out {holdout} of {len(pairs)} pairs")
    chosen = set(np.random.default_rng(seed).permutation(len(pairs))[:holdout].tolist())
    rest = [p for i, p in enumerate(pairs) if i not in chosen]
    held = [p for i, p in enumerate(pairs) if i in chosen]
    return rest, held


def load_dataset(train_path, val_path, test_path, domain: str, val_size: int = 0, seed: int = 0,
                 max_input_words: Optional[int] = None) -> DatasetSplit:
    """
    Without a validation file, `val_size` pairs are held out of the training
    file; with neither, the training pairs double as validation (the
    colors setup, where data is too scarce to hold anything out).
    """
    train = load_tsv(train_path, domain, max_input_words)
    test = load_tsv(test_path, domain, max_input_words) if test_path else []
    if val_path:
        validation = load_tsv(val_path, domain, max_input_words)
    elif val_size:
        if not 0 < val_size < len(train):
            raise ConfigError(f"val_size must be between 1 and {len(train) - 1}, got {val_size}")
        train, validation = random_split(train, val_size, seed)
    else:
        validation = list(train)
    logger.info("%s: %d train / %d validation / %d test pairs", domain, len(train), len(validation), len(test))
    return DatasetSplit(domain, train, validation, test)
