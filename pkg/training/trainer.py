"""
Two-stage training.

Stage 1 fits only the lexicon table, one pair per step, against the bag of
output tokens of each pair. Stage 2 freezes the lexicon and trains the
LSTMs (and the adversary, for the full model) on the gated output
distribution. Each stage ends by restoring the parameters of its best
validation epoch.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from tqdm import tqdm

from data.datasets import DatasetSplit
from data.vocab import Vocabulary
from engine import Adam, ComputationTape, add, add_all, bce_loss, log, nll_loss, no_tape, scale
from engine.tensor import LOG_EPS, Tensor
from errors import NumericError
from model.checkpoint import save_checkpoint
from model.seq2seq import Seq2SeqModel, lexicon_target
from run_history import CHECKPOINT_FILE, save_best_manifest, save_epoch, start_run_log
from training.evaluate import validation_score
from training.schedule import STAGE_LEXICON, STAGE_MAIN, TrainSchedule, ValidationPolicy, select_best

logger = logging.getLogger(__name__)

EncodedPair = tuple[list[int], list[int]]


@dataclass
class EpochRecord:
    epoch: int
    stage: str
    train_loss: float
    val_score: float


@dataclass
class TrainingResult:
    best_epoch: int
    best_score: float
    metric: str
    records: list[EpochRecord] = field(default_factory=list)
    checkpoint: Optional[Path] = None


def encode_pairs(pairs, input_vocab: Vocabulary, output_vocab: Vocabulary) -> list[EncodedPair]:
    return [(input_vocab.encode(p.input, allow_unk=True), output_vocab.encode(p.output)) for p in pairs]


def _batches(order: np.ndarray, size: int):
    for start in range(0, len(order), size):
        yield order[start:start + size]


def _require_finite(value: float, stage: str, epoch: int, batch: Sequence[int]):
    if not math.isfinite(value):
        logger.error("%s stage, epoch %d: non-finite loss %s", stage, epoch, value)
        raise NumericError(f"{stage} stage, epoch {epoch}: loss is {value} on training pairs {list(batch)}")


def lexicon_loss(model: Seq2SeqModel, input_ids, output_ids) -> Tensor:
    target = lexicon_target(output_ids, model.config.output_vocab_size, model.dtype)
    return bce_loss(model.lexicon_forward(input_ids), target)


def sequence_loss(model: Seq2SeqModel, input_ids, output_ids, lam: float) -> Tensor:
    """Σ_t −log(o'_t[y_t] + ε), plus the adversary's BCE against l when it is active."""
    state = model.encode(input_ids)
    l = None
    if model.uses_lexicon:
        with no_tape():
            l = model.lexicon_forward(input_ids)
    outputs = model.decode(state, l, steps=len(output_ids))
    loss = add_all([nll_loss(log(out.o_gated, eps=LOG_EPS), gold) for out, gold in zip(outputs, output_ids)])
    if model.has_adversary and lam > 0:
        loss = add(loss, bce_loss(model.adversary_forward(state, lam), l))
    return loss


def _run_epoch(model, pairs, optimizer, batch_size, loss_fn, rng, stage, epoch) -> float:
    total = 0.0
    for batch in _batches(rng.permutation(len(pairs)), batch_size):
        optimizer.zero_grad()
        with ComputationTape() as tape:
            losses = [loss_fn(*pairs[i]) for i in batch]
            loss = scale(add_all(losses), 1.0 / len(batch))
        _require_finite(loss.item(), stage, epoch, batch)
        tape.backward(loss)
        optimizer.step()
        total += sum(x.item() for x in losses)
    return total / len(pairs)


def train_lexicon(model: Seq2SeqModel, train_pairs: Sequence[EncodedPair], val_pairs: Sequence[EncodedPair],
                  schedule: TrainSchedule, rng: np.random.Generator = None,
                  on_epoch: Callable[[EpochRecord], None] = None, progress: bool = False) -> list[EpochRecord]:
    """Fit the lexicon table alone and keep the rows of the lowest-validation-BCE epoch."""
    rng = rng if rng is not None else np.random.default_rng(schedule.seed)
    optimizer = Adam({"lexicon": model.lexicon}, lr=schedule.lexicon_lr, beta1=schedule.beta1,
                     beta2=schedule.beta2, epsilon=schedule.epsilon, sparse=True)
    loss_fn = partial(lexicon_loss, model)
    policy = ValidationPolicy()

    records, best_val, best_rows = [], None, model.lexicon.data.copy()
    for epoch in tqdm(range(1, schedule.lexicon_epochs + 1), desc=STAGE_LEXICON, disable=not progress):
        train_loss = _run_epoch(model, train_pairs, optimizer, schedule.lexicon_batch, loss_fn, rng,
                                STAGE_LEXICON, epoch)
        with no_tape():
            val = float(np.mean([lexicon_loss(model, inp, out).item() for inp, out in val_pairs]))
        record = EpochRecord(epoch, STAGE_LEXICON, train_loss, val)
        records.append(record)
        if on_epoch:
            on_epoch(record)
        if policy.improves(STAGE_LEXICON, val, best_val):
            best_val, best_rows = val, model.lexicon.data.copy()

    model.lexicon.data[...] = best_rows
    model.lexicon.grad = None
    return records


def train_main(model: Seq2SeqModel, train_pairs: Sequence[EncodedPair], val_pairs: Sequence[EncodedPair],
               schedule: TrainSchedule, policy: ValidationPolicy = ValidationPolicy(),
               rng: np.random.Generator = None, on_epoch: Callable[[EpochRecord], None] = None,
               workers: int = 1, progress: bool = False) -> list[EpochRecord]:
    """
    Train everything but the lexicon with the gated sequence loss.

    Epochs are numbered after the lexicon stage whichever variant runs, so
    logs of all three variants line up.
    """
    rng = rng if rng is not None else np.random.default_rng(schedule.seed)
    params = {**model.core_parameters(), **model.adversary_parameters()}
    optimizer = Adam(params, lr=schedule.main_lr, beta1=schedule.beta1, beta2=schedule.beta2,
                     epsilon=schedule.epsilon)
    lam = schedule.adversary_lambda

    def loss_fn(inp, out):
        return sequence_loss(model, inp, out, lam)

    records, best_score, best_state = [], None, model.state_dict()
    for epoch in tqdm(schedule.main_epochs, desc=STAGE_MAIN, disable=not progress):
        train_loss = _run_epoch(model, train_pairs, optimizer, schedule.main_batch, loss_fn, rng, STAGE_MAIN, epoch)
        score = validation_score(model, val_pairs, policy.main_metric, workers)
        record = EpochRecord(epoch, STAGE_MAIN, train_loss, score)
        records.append(record)
        if on_epoch:
            on_epoch(record)
        if policy.improves(STAGE_MAIN, score, best_score):
            best_score, best_state = score, model.state_dict()

    model.load_state(best_state)
    model.zero_grad()
    return records


class Trainer:
    """Runs both stages for one model and, given `out_dir`, writes the log, checkpoint and manifest."""

    def __init__(self, model: Seq2SeqModel, split: DatasetSplit, input_vocab: Vocabulary,
                 output_vocab: Vocabulary, schedule: TrainSchedule, policy: ValidationPolicy = ValidationPolicy(),
                 out_dir=None, workers: int = 1, progress: bool = False):
        self.model = model
        self.domain = split.domain
        self.input_vocab = input_vocab
        self.output_vocab = output_vocab
        self.schedule = schedule
        self.policy = policy
        self.out_dir = Path(out_dir) if out_dir else None
        self.workers = workers
        self.progress = progress
        self.train_pairs = encode_pairs(split.train, input_vocab, output_vocab)
        self.val_pairs = encode_pairs(split.validation, input_vocab, output_vocab)
        self.rng = np.random.default_rng(schedule.seed)

    def _on_epoch(self, record: EpochRecord):
        logger.info("epoch %d [%s] train_loss=%.6f val=%.4f", record.epoch, record.stage,
                    record.train_loss, record.val_score)
        if self.out_dir:
            save_epoch(self.out_dir, record.epoch, record.stage, record.train_loss, record.val_score)

    def run(self) -> TrainingResult:
        if self.out_dir:
            start_run_log(self.out_dir)
        logger.info("training %s on %d pairs (%d validation)", self.model.variant.value,
                    len(self.train_pairs), len(self.val_pairs))

        records = []
        if self.model.uses_lexicon and self.schedule.lexicon_epochs:
            records += train_lexicon(self.model, self.train_pairs, self.val_pairs, self.schedule, self.rng,
                                     self._on_epoch, self.progress)
        main = train_main(self.model, self.train_pairs, self.val_pairs, self.schedule, self.policy, self.rng,
                          self._on_epoch, self.workers, self.progress)
        records += main

        best = main[select_best([r.val_score for r in main]) - 1]
        result = TrainingResult(best.epoch, best.val_score, self.policy.main_metric, records)
        if self.out_dir:
            result.checkpoint = save_checkpoint(
                self.out_dir / CHECKPOINT_FILE, self.model, self.input_vocab, self.output_vocab, self.domain,
                extra={"best_epoch": best.epoch, "metric": self.policy.main_metric, "val_score": best.val_score},
            )
            save_best_manifest(self.out_dir, best.epoch, STAGE_MAIN, self.policy.main_metric, best.val_score)
        logger.info("best epoch %d, validation %s %.2f", best.epoch, self.policy.main_metric, best.val_score)
        return result
