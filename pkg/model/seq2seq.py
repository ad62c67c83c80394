"""
Encoder/decoder LSTM with an optional lexicon unit and adversary.

The lexicon unit maps an input sentence to a bag of output tokens
`l = σ(maxpool(rows of the lexicon table))`; the decoder's output distribution
is gated by it (`o' = l ⊙ o`). The adversary tries to predict `l` from the
final encoder state through a gradient reversal layer, which pushes the
encoder away from carrying lexical information.
"""
import copy
import hashlib
import logging
from dataclasses import dataclass, fields
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np

from engine import (
    Tensor,
    add,
    concat,
    grad_reverse,
    matmul,
    maxpool_vectors,
    mul,
    no_tape,
    relu,
    rows,
    sigmoid,
    slice_vector,
    softmax,
    tanh,
)
from errors import ConfigError, PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_MAX_LEN = 1000


class ModelVariant(str, Enum):
    LLA_LSTM = "lla"
    LLA_NO_ADVERSARY = "lla-noadv"
    PLAIN_LSTM = "plain"

    @classmethod
    def parse(cls, value) -> "ModelVariant":
        try:
            return cls(value)
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ConfigError(f"unknown variant '{value}' (expected one of {choices})") from None


@dataclass
class ModelConfig:
    input_vocab_size: int
    output_vocab_size: int
    stop_id: int
    variant: ModelVariant = ModelVariant.LLA_LSTM
    hidden_size: int = 300
    embedding_size: int = 300
    adversary_hidden: int = 1000
    dtype: str = "float32"
    seed: int = 0

    def __post_init__(self):
        self.variant = ModelVariant.parse(self.variant)
        for name in ("input_vocab_size", "output_vocab_size", "hidden_size", "embedding_size", "adversary_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.stop_id < self.output_vocab_size:
            raise ConfigError(f"stop_id {self.stop_id} outside output vocabulary of {self.output_vocab_size}")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError(f"dtype must be float32 or float64, got {self.dtype}")

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["variant"] = self.variant.value
        return out


@dataclass
class EncoderState:
    h: Tensor
    c: Tensor


@dataclass
class DecoderOutput:
    h: Tensor
    o: Tensor
    o_gated: Tensor


class Linear:
    def __init__(self, name: str, in_features: int, out_features: int, dtype):
        self.in_features = in_features
        self.weight = Tensor(np.zeros((in_features, out_features), dtype=dtype), requires_grad=True,
                             name=f"{name}.weight")
        self.bias = Tensor(np.zeros(out_features, dtype=dtype), requires_grad=True, name=f"{name}.bias")

    def reset(self, rng: np.random.Generator):
        k = 1.0 / np.sqrt(self.in_features)
        self.weight.data[...] = rng.uniform(-k, k, self.weight.shape)
        self.bias.data[...] = rng.uniform(-k, k, self.bias.shape)

    def parameters(self) -> dict[str, Tensor]:
        return {self.weight.name: self.weight, self.bias.name: self.bias}

    def __call__(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.weight), self.bias)


class LstmCell:
    """Gates in i, f, g, o order. A cell with input_size 0 runs on its recurrence alone."""

    def __init__(self, name: str, input_size: int, hidden_size: int, dtype):
        self.input_size = input_size
        self.hidden_size = hidden_size
        gates = 4 * hidden_size
        self.w_x = None
        if input_size:
            self.w_x = Tensor(np.zeros((input_size, gates), dtype=dtype), requires_grad=True, name=f"{name}.w_x")
        self.w_h = Tensor(np.zeros((hidden_size, gates), dtype=dtype), requires_grad=True, name=f"{name}.w_h")
        self.bias = Tensor(np.zeros(gates, dtype=dtype), requires_grad=True, name=f"{name}.bias")

    def reset(self, rng: np.random.Generator):
        k = 1.0 / np.sqrt(self.input_size + self.hidden_size)
        for p in self.parameters().values():
            p.data[...] = rng.uniform(-k, k, p.shape)

    def parameters(self) -> dict[str, Tensor]:
        params = [self.w_x, self.w_h, self.bias]
        return {p.name: p for p in params if p is not None}

    def step(self, x: Optional[Tensor], h: Tensor, c: Tensor):
        z = matmul(h, self.w_h)
        if x is not None:
            z = add(z, matmul(x, self.w_x))
        z = add(z, self.bias)
        n = self.hidden_size
        i = sigmoid(slice_vector(z, 0, n))
        f = sigmoid(slice_vector(z, n, 2 * n))
        g = tanh(slice_vector(z, 2 * n, 3 * n))
        o = sigmoid(slice_vector(z, 3 * n, 4 * n))
        c_next = add(mul(f, c), mul(i, g))
        return mul(o, tanh(c_next)), c_next


class Seq2SeqModel:
    def __init__(self, config: ModelConfig):
        self.config = config
        self.variant = config.variant
        dtype = np.dtype(config.dtype)
        self.dtype = dtype
        v_in, v_out = config.input_vocab_size, config.output_vocab_size
        hidden, emb = config.hidden_size, config.embedding_size

        self.embedding = Tensor(np.zeros((v_in, emb), dtype=dtype), requires_grad=True, name="embedding")
        self.encoder = LstmCell("encoder", emb, hidden, dtype)
        # the decoder is fed a zero vector at every step, so it has no input weights
        self.decoder = LstmCell("decoder", 0, hidden, dtype)
        self.output = Linear("output", hidden, v_out, dtype)

        self.lexicon: Optional[Tensor] = None
        if self.variant != ModelVariant.PLAIN_LSTM:
            self.lexicon = Tensor(np.zeros((v_in, v_out), dtype=dtype), requires_grad=True, name="lexicon")

        self.adversary_hidden: Optional[Linear] = None
        self.adversary_out: Optional[Linear] = None
        if self.variant == ModelVariant.LLA_LSTM:
            self.adversary_hidden = Linear("adversary.hidden", 2 * hidden, config.adversary_hidden, dtype)
            self.adversary_out = Linear("adversary.out", config.adversary_hidden, v_out, dtype)

        # core draws come first so every variant built from one seed shares its core weights
        rng = np.random.default_rng(config.seed)
        self.reset_core(rng)
        if self.has_adversary:
            self.reset_adversary(rng)

    # ── Parameters ────────────────────────────────────────────────────────────

    @property
    def uses_lexicon(self) -> bool:
        return self.lexicon is not None

    @property
    def has_adversary(self) -> bool:
        return self.adversary_hidden is not None

    def reset_core(self, rng: np.random.Generator):
        self.embedding.data[...] = rng.standard_normal(self.embedding.shape)
        self.encoder.reset(rng)
        self.decoder.reset(rng)
        self.output.reset(rng)

    def reset_adversary(self, rng: np.random.Generator):
        if not self.has_adversary:
            raise ConfigError(f"variant '{self.variant.value}' has no adversary")
        self.adversary_hidden.reset(rng)
        self.adversary_out.reset(rng)

    def core_parameters(self) -> dict[str, Tensor]:
        params = {"embedding": self.embedding}
        for part in (self.encoder, self.decoder, self.output):
            params.update(part.parameters())
        return params

    def adversary_parameters(self) -> dict[str, Tensor]:
        if not self.has_adversary:
            return {}
        return {**self.adversary_hidden.parameters(), **self.adversary_out.parameters()}

    def parameters(self) -> dict[str, Tensor]:
        params = self.core_parameters()
        if self.uses_lexicon:
            params["lexicon"] = self.lexicon
        params.update(self.adversary_parameters())
        return params

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}

    def load_state(self, arrays: dict[str, np.ndarray]):
        params = self.parameters()
        missing = set(params) - set(arrays)
        extra = set(arrays) - set(params)
        if missing or extra:
            raise ConfigError(f"parameter mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}")
        for name, p in params.items():
            if arrays[name].shape != p.shape:
                raise ConfigError(f"parameter '{name}': stored {arrays[name].shape}, model {p.shape}")
            p.data[...] = arrays[name]

    def zero_grad(self):
        for p in self.parameters().values():
            p.grad = None

    def copy(self) -> "Seq2SeqModel":
        return copy.deepcopy(self)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for name, p in self.parameters().items():
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(p.data).tobytes())
        return digest.hexdigest()

    # ── Forward pieces ────────────────────────────────────────────────────────

    def _zeros(self) -> Tensor:
        return Tensor(np.zeros(self.config.hidden_size, dtype=self.dtype))

    def encode(self, tokens: Sequence[int]) -> EncoderState:
        if len(tokens) == 0:
            raise PreconditionError("encode: empty input sequence")
        h, c = self._zeros(), self._zeros()
        for tok in tokens:
            h, c = self.encoder.step(rows(self.embedding, int(tok)), h, c)
        return EncoderState(h, c)

    def lexicon_forward(self, tokens: Sequence[int]) -> Tensor:
        """Bag of output tokens for an input sentence; independent of token order."""
        if not self.uses_lexicon:
            raise ConfigError(f"variant '{self.variant.value}' has no lexicon unit")
        if len(tokens) == 0:
            raise PreconditionError("lexicon_forward: empty input sequence")
        return sigmoid(maxpool_vectors([rows(self.lexicon, int(t)) for t in tokens]))

    def adversary_forward(self, state: EncoderState, lam: float) -> Tensor:
        if not self.has_adversary:
            raise ConfigError(f"variant '{self.variant.value}' has no adversary")
        joined = concat([state.h, state.c])
        if joined.shape[0] != self.adversary_hidden.in_features:
            raise ConfigError(f"adversary expects a state of {self.adversary_hidden.in_features}, "
                              f"got {joined.shape[0]}")
        hidden = relu(self.adversary_hidden(grad_reverse(joined, lam)))
        return sigmoid(self.adversary_out(hidden))

    def decode_steps(self, state: EncoderState, l: Optional[Tensor]) -> Iterator[DecoderOutput]:
        if (l is None) != (not self.uses_lexicon):
            raise PreconditionError("decode: the lexicon vector must be given exactly when the variant gates")
        h, c = state.h, state.c
        while True:
            h, c = self.decoder.step(None, h, c)
            o = softmax(self.output(h))
            yield DecoderOutput(h, o, o if l is None else mul(l, o))

    def decode(self, state: EncoderState, l: Optional[Tensor], steps: int) -> list[DecoderOutput]:
        if steps < 1:
            raise PreconditionError(f"decode: steps must be at least 1, got {steps}")
        outputs = []
        for out in self.decode_steps(state, l):
            outputs.append(out)
            if len(outputs) == steps:
                return outputs

    def __repr__(self):
        sizes = ", ".join(f"{k}={v}" for k, v in self.config.to_dict().items())
        return f"Seq2SeqModel({sizes})"


def lexicon_target(ids: Sequence[int], vocab_size: int, dtype=np.float64) -> Tensor:
    """Multi-hot vector of the output tokens that occur in a sentence."""
    target = np.zeros(vocab_size, dtype=dtype)
    for i in ids:
        if not 0 <= i < vocab_size:
            raise PreconditionError(f"lexicon_target: id {i} outside [0, {vocab_size})")
        target[i] = 1.0
    return Tensor(target)


def greedy_translate(tokens: Sequence[int], model: Seq2SeqModel, max_len: int = DEFAULT_MAX_LEN) -> list[int]:
    """Argmax decoding of the gated distribution until stop or `max_len` tokens."""
    if max_len < 1:
        raise PreconditionError(f"greedy_translate: max_len must be at least 1, got {max_len}")
    stop = model.config.stop_id
    result = []
    with no_tape():
        state = model.encode(tokens)
        l = model.lexicon_forward(tokens) if model.uses_lexicon else None
        for out in model.decode_steps(state, l):
            k = int(np.argmax(out.o_gated.data))
            if k == stop:
                break
            result.append(k)
            if len(result) == max_len:
                logger.debug("greedy_translate: hit max_len=%d without a stop token", max_len)
                break
    return result
