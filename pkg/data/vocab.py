import hashlib
import logging
from pathlib import Path
from typing import Iterable, Sequence

from errors import DataError, PreconditionError, VocabularyError

logger = logging.getLogger(__name__)

STOP = "<s>"
UNK = "<unk>"
RESERVED = (STOP, UNK)
_HEADER_PREFIX = "stop="


class Vocabulary:
    """Bijection between tokens and dense ids 0..n-1; the stop token is always present."""

    def __init__(self, tokens: Sequence[str], with_unk: bool = False):
        self.tokens = list(tokens)
        if STOP not in self.tokens:
            self.tokens.append(STOP)
        if with_unk and UNK not in self.tokens:
            self.tokens.append(UNK)
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise VocabularyError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self._ids

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    @property
    def stop_id(self) -> int:
        return self._ids[STOP]

    @property
    def unk_id(self):
        return self._ids.get(UNK)

    @property
    def word_count(self) -> int:
        """Size without reserved tokens, which is how dictionary sizes are usually quoted."""
        return sum(1 for tok in self.tokens if tok not in RESERVED)

    def id(self, token: str) -> int:
        try:
            return self._ids[token]
        except KeyError:
            raise VocabularyError(f"unknown token {token!r}") from None

    def token(self, idx: int) -> str:
        if not 0 <= idx < len(self.tokens):
            raise VocabularyError(f"id {idx} outside vocabulary of {len(self.tokens)}")
        return self.tokens[idx]

    def encode(self, tokens: Iterable[str], allow_unk: bool = False) -> list[int]:
        if not allow_unk:
            return [self.id(tok) for tok in tokens]
        if self.unk_id is None:
            raise VocabularyError("vocabulary has no <unk> entry")
        return [self._ids.get(tok, self.unk_id) for tok in tokens]

    def unknown(self, tokens: Iterable[str]) -> list[str]:
        return [tok for tok in tokens if tok not in self._ids]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.token(i) for i in ids]

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()

    def save(self, path):
        lines = [f"{_HEADER_PREFIX}{STOP}"] + self.tokens
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        try:
            lines = Path(path).read_text(encoding="utf-8").split("\n")
        except OSError as exc:
            raise DataError(f"cannot read vocabulary {path}: {exc}") from exc
        if not lines or not lines[0].startswith(_HEADER_PREFIX):
            raise DataError(f"{path}: missing '{_HEADER_PREFIX}' header line")
        if lines[0][len(_HEADER_PREFIX):] != STOP:
            raise DataError(f"{path}: stop token {lines[0][len(_HEADER_PREFIX):]!r} differs from {STOP!r}")
        tokens = [ln for ln in lines[1:] if ln]
        return cls(tokens, with_unk=UNK in tokens)


def vocab_hash(vocab: Vocabulary) -> str:
    return vocab.sha256()


def build_vocab(pairs, side: str) -> Vocabulary:
    """Every distinct token on one side, in first-appearance order, reserved tokens last."""
    if not pairs:
        raise PreconditionError("build_vocab: no pairs")
    if side not in ("input", "output"):
        raise PreconditionError(f"build_vocab: side must be 'input' or 'output', got {side!r}")
    seen = {}
    for pair in pairs:
        for tok in (pair.input if side == "input" else pair.output):
            if tok not in RESERVED:
                seen.setdefault(tok, None)
    vocab = Vocabulary(list(seen), with_unk=(side == "input"))
    logger.debug("built %s vocabulary: %d words (%d ids)", side, vocab.word_count, len(vocab))
    return vocab
