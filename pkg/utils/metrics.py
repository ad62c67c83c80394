"""
Sequence-level scores for predicted vs. gold token lists.

precision/recall use multiset overlap, accuracy is positional agreement over the
longer of the two sequences, exact is full equality. Corpus BLEU is delegated
to sacrebleu on pre-tokenized text, with 4-gram order, no smoothing and the
usual brevity penalty.
"""
from collections import Counter
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

from sacrebleu.metrics import BLEU

from errors import PreconditionError

METRIC_NAMES = ("precision", "recall", "accuracy", "exact")

_BLEU = BLEU(tokenize="none", smooth_method="none", max_ngram_order=4, effective_order=False, force=True)


class PairScores(NamedTuple):
    precision: float
    recall: float
    accuracy: float
    exact: float


@dataclass
class MetricsReport:
    """Means over a test set, all in percent."""
    pairs: int
    mean_precision: float
    mean_recall: float
    mean_accuracy: float
    mean_exact: float
    corpus_bleu: Optional[float] = None

    def as_dict(self) -> dict:
        return asdict(self)


def strip_stop(tokens: Sequence, stop) -> list:
    return [t for t in tokens if t != stop]


def pair_scores(pred: Sequence, gold: Sequence) -> PairScores:
    overlap = sum((Counter(pred) & Counter(gold)).values())
    if pred:
        precision = overlap / len(pred)
    else:
        precision = 1.0 if not gold else 0.0
    if gold:
        recall = overlap / len(gold)
    else:
        recall = 1.0 if not pred else 0.0
    longest = max(len(pred), len(gold))
    accuracy = sum(p == g for p, g in zip(pred, gold)) / longest if longest else 1.0
    exact = 1.0 if list(pred) == list(gold) else 0.0
    return PairScores(precision, recall, accuracy, exact)


def corpus_bleu(preds: Sequence[Sequence[str]], golds: Sequence[Sequence[str]]) -> float:
    """Corpus BLEU in [0, 100]; a corpus with no matching 4-gram scores 0."""
    if not preds or len(preds) != len(golds):
        raise PreconditionError(f"corpus_bleu: need equally many predictions and references, "
                                f"got {len(preds)} and {len(golds)}")
    hyps = [" ".join(map(str, p)) for p in preds]
    refs = [" ".join(map(str, g)) for g in golds]
    return float(_BLEU.corpus_score(hyps, [refs]).score)


def aggregate_reports(scores: Sequence[PairScores], bleu: Optional[float] = None) -> MetricsReport:
    if not scores:
        raise PreconditionError("aggregate_reports: no scored pairs")
    n = len(scores)
    means = {f"mean_{name}": 100.0 * sum(getattr(s, name) for s in scores) / n for name in METRIC_NAMES}
    return MetricsReport(pairs=n, corpus_bleu=bleu, **means)


_COLUMNS = [
    ("Prec.", "mean_precision"),
    ("Rec.", "mean_recall"),
    ("Acc.", "mean_accuracy"),
    ("Exact", "mean_exact"),
]


def format_report_tsv(report: MetricsReport, bleu: Optional[bool] = None) -> str:
    """Header line plus one row, percentages with two decimals; BLEU only when present or asked for."""
    columns = list(_COLUMNS)
    if bleu if bleu is not None else report.corpus_bleu is not None:
        if report.corpus_bleu is None:
            raise PreconditionError("format_report_tsv: report has no BLEU score")
        columns.append(("BLEU", "corpus_bleu"))
    header = "\t".join(title for title, _ in columns)
    row = "\t".join(f"{getattr(report, attr):.2f}" for _, attr in columns)
    return f"{header}\n{row}\n"
