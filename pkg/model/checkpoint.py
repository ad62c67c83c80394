"""
Binary checkpoint format (little-endian):

    b"LLA1" | u32 format version | u32 metadata length | metadata (UTF-8 JSON)
    u32 tensor count, then per tensor:
    u16 name length | name | u8 ndim | u32 dims... | float32 data (C order)

The two vocabularies live next to the checkpoint as vocab.input.txt and
vocab.output.txt; their sha256 digests are recorded in the metadata.
"""
import json
import logging
import struct
from pathlib import Path

import numpy as np

from data.vocab import Vocabulary, vocab_hash
from errors import DataError, VocabularyError
from model.seq2seq import ModelConfig, Seq2SeqModel

logger = logging.getLogger(__name__)

MAGIC = b"LLA1"
FORMAT_VERSION = 1
INPUT_VOCAB_FILE = "vocab.input.txt"
OUTPUT_VOCAB_FILE = "vocab.output.txt"


def save_checkpoint(path, model: Seq2SeqModel, input_vocab: Vocabulary, output_vocab: Vocabulary,
                    domain: str, extra: dict = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "domain": domain,
        "model": model.config.to_dict(),
        "input_vocab_sha256": vocab_hash(input_vocab),
        "output_vocab_sha256": vocab_hash(output_vocab),
        **(extra or {}),
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    params = model.parameters()

    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        f.write(blob)
        f.write(struct.pack("<I", len(params)))
        for name, p in params.items():
            raw = name.encode("utf-8")
            f.write(struct.pack("<H", len(raw)))
            f.write(raw)
            f.write(struct.pack(f"<B{p.data.ndim}I", p.data.ndim, *p.shape))
            f.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())

    input_vocab.save(path.parent / INPUT_VOCAB_FILE)
    output_vocab.save(path.parent / OUTPUT_VOCAB_FILE)
    logger.debug("wrote checkpoint %s (%d tensors)", path, len(params))
    return path


class _Reader:
    def __init__(self, raw: bytes, path):
        self.raw, self.pos, self.path = raw, 0, path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.raw):
            raise DataError(f"{self.path}: truncated checkpoint")
        chunk = self.raw[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    reader = _Reader(raw, path)
    if reader.take(4) != MAGIC:
        raise DataError(f"{path}: not an LLA1 checkpoint")
    version, meta_len = reader.unpack("<II")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    meta = json.loads(reader.take(meta_len).decode("utf-8"))

    arrays = {}
    (count,) = reader.unpack("<I")
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (ndim,) = reader.unpack("<B")
        shape = reader.unpack(f"<{ndim}I")
        size = int(np.prod(shape)) if shape else 1
        arrays[name] = np.frombuffer(reader.take(4 * size), dtype="<f4").reshape(shape).copy()
    return meta, arrays


def load_vocabularies(checkpoint_path, meta: dict) -> tuple[Vocabulary, Vocabulary]:
    """Load the vocabularies stored next to a checkpoint and check them against its digests."""
    folder = Path(checkpoint_path).parent
    input_vocab = Vocabulary.load(folder / INPUT_VOCAB_FILE)
    output_vocab = Vocabulary.load(folder / OUTPUT_VOCAB_FILE)
    for side, vocab in (("input", input_vocab), ("output", output_vocab)):
        if vocab_hash(vocab) != meta.get(f"{side}_vocab_sha256"):
            raise VocabularyError(f"{side} vocabulary in {folder} does not match the checkpoint")
    return input_vocab, output_vocab


def load_checkpoint(path, dtype: str = None):
    """Returns (model, input_vocab, output_vocab, metadata)."""
    meta, arrays = read_checkpoint(path)
    settings = dict(meta["model"])
    if dtype:
        settings["dtype"] = dtype
    model = Seq2SeqModel(ModelConfig(**settings))
    model.load_state(arrays)
    input_vocab, output_vocab = load_vocabularies(path, meta)
    if len(input_vocab) != model.config.input_vocab_size or len(output_vocab) != model.config.output_vocab_size:
        raise VocabularyError(f"{path}: vocabulary sizes disagree with the stored model")
    return model, input_vocab, output_vocab, meta
