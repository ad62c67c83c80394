import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, Union

from tqdm import tqdm

from data.datasets import ParallelPair
from data.vocab import STOP, Vocabulary
from errors import PreconditionError
from model.seq2seq import DEFAULT_MAX_LEN, Seq2SeqModel, greedy_translate
from utils.metrics import MetricsReport, aggregate_reports, corpus_bleu, pair_scores, strip_stop

logger = logging.getLogger(__name__)


def translate_all(model: Seq2SeqModel, inputs: Sequence[Sequence[int]],
                  max_len: Union[int, Sequence[int]] = DEFAULT_MAX_LEN, workers: int = 1,
                  progress: bool = False) -> list[list[int]]:
    """Greedy-decode every input; results come back in input order whatever `workers` is."""
    if workers < 1:
        raise PreconditionError(f"workers must be >= 1, got {workers}")
    caps = [max_len] * len(inputs) if isinstance(max_len, int) else list(max_len)
    if len(caps) != len(inputs):
        raise PreconditionError("translate_all: one max_len per input required")
    jobs = list(zip(inputs, caps))
    bar = dict(total=len(jobs), desc="decoding", unit="pair", disable=not progress, leave=False)

    if workers == 1:
        return [greedy_translate(ids, model, cap) for ids, cap in tqdm(jobs, **bar)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(lambda job: greedy_translate(job[0], model, job[1]), jobs), **bar))


def evaluate_checkpoint(model: Seq2SeqModel, pairs: Sequence[ParallelPair], input_vocab: Vocabulary,
                        output_vocab: Vocabulary, bleu: bool = False, max_len: int = DEFAULT_MAX_LEN,
                        workers: int = 1, progress: bool = False) -> MetricsReport:
    """
    Translate each input and score it against its gold output.

    Unknown input words map to <unk>; gold tokens missing from the output
    vocabulary simply never match.
    """
    if not pairs:
        raise PreconditionError("evaluate_checkpoint: no pairs")
    inputs = [input_vocab.encode(p.input, allow_unk=True) for p in pairs]
    predicted = [output_vocab.decode(ids) for ids in translate_all(model, inputs, max_len, workers, progress)]
    golds = [strip_stop(p.output, STOP) for p in pairs]
    scores = [pair_scores(pred, gold) for pred, gold in zip(predicted, golds)]
    report = aggregate_reports(scores, corpus_bleu(predicted, golds) if bleu else None)
    logger.debug("evaluated %d pairs: exact %.2f", report.pairs, report.mean_exact)
    return report


def validation_score(model: Seq2SeqModel, pairs: Sequence[tuple[list[int], list[int]]], metric: str = "exact",
                     workers: int = 1) -> float:
    """
    Stage-2 selection score over id-encoded pairs, in percent.

    Decoding stops at 2·len(gold)+1 tokens, enough to tell a wrong answer from
    a right one without paying for runaway outputs of an untrained model.
    """
    stop = model.config.stop_id
    golds = [strip_stop(out, stop) for _, out in pairs]
    caps = [2 * len(g) + 1 for g in golds]
    predicted = translate_all(model, [inp for inp, _ in pairs], caps, workers)
    if metric == "bleu":
        return corpus_bleu(predicted, golds)
    return 100.0 * sum(pred == gold for pred, gold in zip(predicted, golds)) / len(golds)
