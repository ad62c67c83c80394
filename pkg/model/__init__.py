from model.checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from model.seq2seq import (
    DEFAULT_MAX_LEN,
    DecoderOutput,
    EncoderState,
    LstmCell,
    ModelConfig,
    ModelVariant,
    Seq2SeqModel,
    greedy_translate,
    lexicon_target,
)
