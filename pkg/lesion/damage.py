"""
Lesion experiments: re-draw a component of a trained model and see what it still translates.

Damaging the LSTMs should leave the lexical content of the outputs (which
words appear) but scramble their arrangement; damaging the lexicon should do
the opposite. `compare_lesions` checks that ordering over several seeds.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from data.datasets import ParallelPair
from data.vocab import Vocabulary
from errors import ConfigError, PreconditionError
from model.seq2seq import DEFAULT_MAX_LEN, Seq2SeqModel
from training.evaluate import evaluate_checkpoint, translate_all

logger = logging.getLogger(__name__)

BASELINE = "None"
# a trailing run at least this long is shown as "tok ..."
REPEAT_RUN = 10


class LesionTarget(str, Enum):
    LSTMS = "lstms"
    LEXICON_UNIT = "lexicon"
    ADVERSARY = "adversary"


_ORDER = {t: i for i, t in enumerate(LesionTarget)}


@dataclass(frozen=True)
class LesionSpec:
    targets: frozenset
    seed: int = 0

    def __post_init__(self):
        if not self.targets:
            raise ConfigError("a lesion needs at least one target")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "LesionSpec":
        """'lstms', 'lexicon' or a comma-joined combination such as 'lstms,lexicon'."""
        targets = set()
        for part in (p.strip() for p in text.split(",")):
            try:
                targets.add(LesionTarget(part))
            except ValueError:
                choices = ", ".join(t.value for t in LesionTarget)
                raise ConfigError(f"unknown lesion target '{part}' (expected one of {choices})") from None
        return cls(frozenset(targets), seed)

    @property
    def label(self) -> str:
        return ",".join(t.value for t in sorted(self.targets, key=_ORDER.get))


@dataclass
class LesionReport:
    label: str
    seed: int
    precision: float
    translations: list = field(default_factory=list)  # (probe words, output tokens)


def apply_lesion(model: Seq2SeqModel, spec: LesionSpec) -> Seq2SeqModel:
    """A damaged copy; the original model is left untouched."""
    damaged = model.copy()
    rng = np.random.default_rng(spec.seed)
    for target in sorted(spec.targets, key=_ORDER.get):
        if target == LesionTarget.LSTMS:
            damaged.reset_core(rng)
        elif target == LesionTarget.LEXICON_UNIT:
            if not damaged.uses_lexicon:
                raise ConfigError(f"variant '{damaged.variant.value}' has no lexicon unit to lesion")
            damaged.lexicon.data[...] = rng.uniform(-1.0, 1.0, damaged.lexicon.shape)
        else:
            damaged.reset_adversary(rng)
    logger.debug("lesioned %s with seed %d", spec.label, spec.seed)
    return damaged


def compress_repeats(tokens: Sequence[str], run: int = REPEAT_RUN) -> str:
    """Join tokens, collapsing a trailing run of one token into "tok ..."."""
    tokens = list(tokens)
    if len(tokens) >= run:
        last = tokens[-1]
        start = len(tokens)
        while start > 0 and tokens[start - 1] == last:
            start -= 1
        if len(tokens) - start >= run:
            return " ".join(tokens[:start] + [last, "..."])
    return " ".join(tokens)


def lesion_report(model: Seq2SeqModel, spec, test_pairs: Sequence[ParallelPair], probes: Sequence[list[str]],
                  input_vocab: Vocabulary, output_vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN,
                  workers: int = 1) -> LesionReport:
    """Translate the probes and score mean precision on the test set; `spec=None` is the undamaged baseline."""
    if not test_pairs:
        raise PreconditionError("lesion_report: no test pairs")
    subject = model if spec is None else apply_lesion(model, spec)
    probe_ids = [input_vocab.encode(p, allow_unk=True) for p in probes]
    outputs = [output_vocab.decode(ids) for ids in translate_all(subject, probe_ids, max_len, workers)]
    metrics = evaluate_checkpoint(subject, test_pairs, input_vocab, output_vocab, max_len=max_len, workers=workers)
    return LesionReport(
        label=BASELINE if spec is None else spec.label,
        seed=0 if spec is None else spec.seed,
        precision=metrics.mean_precision,
        translations=list(zip(probes, outputs)),
    )


def lesion_sweep(model: Seq2SeqModel, target_sets: Iterable[str], test_pairs: Sequence[ParallelPair],
                 probes: Sequence[list[str]], seeds: Sequence[int], input_vocab: Vocabulary,
                 output_vocab: Vocabulary, max_len: int = DEFAULT_MAX_LEN, workers: int = 1) -> list[LesionReport]:
    """Baseline first, then every target set under every seed."""
    if not seeds:
        raise PreconditionError("lesion_sweep: no seeds")
    reports = [lesion_report(model, None, test_pairs, probes, input_vocab, output_vocab, max_len, workers)]
    for targets in target_sets:
        for seed in seeds:
            spec = LesionSpec.parse(targets, seed)
            reports.append(lesion_report(model, spec, test_pairs, probes, input_vocab, output_vocab,
                                         max_len, workers))
    return reports


def compare_lesions(reports: Sequence[LesionReport]) -> dict:
    """
    Per seed, whether the LSTM lesion kept at least as much test precision as
    the lexicon lesion, and whether that held for a majority of seeds.
    """
    by_seed = {}
    for r in reports:
        if r.label in (LesionTarget.LSTMS.value, LesionTarget.LEXICON_UNIT.value):
            by_seed.setdefault(r.seed, {})[r.label] = r.precision
    per_seed = {
        seed: scores[LesionTarget.LSTMS.value] >= scores[LesionTarget.LEXICON_UNIT.value]
        for seed, scores in sorted(by_seed.items())
        if len(scores) == 2
    }
    if not per_seed:
        raise PreconditionError("compare_lesions: need lstms and lexicon reports under a shared seed")
    held = sum(per_seed.values())
    return {"per_seed": per_seed, "held": held, "seeds": len(per_seed), "majority": held * 2 > len(per_seed)}


def format_lesion_tsv(reports: Sequence[LesionReport]) -> str:
    lines = ["lesion\tseed\tprobe\ttranslation"]
    for r in reports:
        for probe, output in r.translations:
            lines.append(f"{r.label}\t{r.seed}\t{' '.join(probe)}\t{compress_repeats(output)}")
    lines.append("")
    lines.append("lesion\tseed\ttest_precision")
    for r in reports:
        lines.append(f"{r.label}\t{r.seed}\t{r.precision:.2f}")
    return "\n".join(lines) + "\n"
