import numpy as np

from data.vocab import Vocabulary
from errors import ConfigError, PreconditionError, VocabularyError
from model.seq2seq import Seq2SeqModel

DEFAULT_THRESHOLD = 0.05


def lexicon_weights(model: Seq2SeqModel, input_vocab: Vocabulary, output_vocab: Vocabulary, words,
                    threshold: float = DEFAULT_THRESHOLD):
    """
    (word, output token, σ(w)) rows for every σ(w) >= threshold, largest first
    within each word; the data behind a lexicon heatmap.
    """
    if not model.uses_lexicon:
        raise ConfigError(f"variant '{model.variant.value}' has no lexicon unit")
    if not 0.0 <= threshold <= 1.0:
        raise PreconditionError(f"threshold must be in [0, 1], got {threshold}")
    missing = [w for w in words if w not in input_vocab]
    if missing:
        raise VocabularyError(f"not in the input vocabulary: {', '.join(missing)}")

    rows = []
    table = model.lexicon.data.astype(np.float64)
    for word in words:
        sig = 1.0 / (1.0 + np.exp(-table[input_vocab.id(word)]))
        keep = [i for i in np.flatnonzero(sig >= threshold)]
        keep.sort(key=lambda i: (-sig[i], i))
        rows.extend((word, output_vocab.token(int(i)), float(sig[i])) for i in keep)
    return rows


def format_lexicon_tsv(rows) -> str:
    lines = ["word\ttoken\tsigma"]
    lines.extend(f"{word}\t{token}\t{value:.4f}" for word, token, value in rows)
    return "\n".join(lines) + "\n"
