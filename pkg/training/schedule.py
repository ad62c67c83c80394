from dataclasses import dataclass
from typing import Sequence

from engine.optim import DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_LR
from errors import ConfigError, PreconditionError

STAGE_LEXICON = "lexicon"
STAGE_MAIN = "main"
MAIN_METRICS = ("exact", "bleu")


@dataclass
class TrainSchedule:
    lexicon_epochs: int = 30
    total_epochs: int = 1000
    lexicon_batch: int = 1
    main_batch: int = 30
    lexicon_lr: float = 0.1
    main_lr: float = DEFAULT_LR
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    adversary_lambda: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.lexicon_epochs < 0:
            raise ConfigError(f"lexicon_epochs must be >= 0, got {self.lexicon_epochs}")
        if self.total_epochs <= self.lexicon_epochs:
            raise ConfigError(f"total_epochs ({self.total_epochs}) must exceed lexicon_epochs "
                              f"({self.lexicon_epochs})")
        if self.lexicon_batch < 1 or self.main_batch < 1:
            raise ConfigError("batch sizes must be positive")
        if self.adversary_lambda < 0:
            raise ConfigError(f"adversary_lambda must be >= 0, got {self.adversary_lambda}")

    @property
    def main_epochs(self) -> range:
        return range(self.lexicon_epochs + 1, self.total_epochs + 1)


@dataclass(frozen=True)
class ValidationPolicy:
    """Stage 1 keeps the lowest validation BCE, stage 2 the highest validation score."""
    main_metric: str = "exact"

    def __post_init__(self):
        if self.main_metric not in MAIN_METRICS:
            raise ConfigError(f"validation metric must be one of {MAIN_METRICS}, got '{self.main_metric}'")

    @staticmethod
    def higher_is_better(stage: str) -> bool:
        return stage == STAGE_MAIN

    def improves(self, stage: str, score: float, best) -> bool:
        if best is None:
            return True
        return score > best if self.higher_is_better(stage) else score < best


def select_best(scores: Sequence[float], higher_is_better: bool = True) -> int:
    """1-based position of the best score; the earliest wins a tie."""
    if not scores:
        raise PreconditionError("select_best: no scores")
    best = 0
    for i, s in enumerate(scores):
        if (s > scores[best]) if higher_is_better else (s < scores[best]):
            best = i
    return best + 1
