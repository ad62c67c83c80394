import os
from pathlib import Path

import pytest

from data.datasets import load_dataset
from data.vocab import build_vocab
from model.seq2seq import ModelConfig, ModelVariant, Seq2SeqModel

FIXTURES = Path(__file__).parent / "fixtures"


def pytest_collection_modifyitems(config, items):
    if os.getenv("LLA_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set LLA_RUN_SLOW=1 to run desk-scale training")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def colors_split():
    return load_dataset(FIXTURES / "colors_train.tsv", None, FIXTURES / "colors_test.tsv", "colors")


@pytest.fixture
def colors_vocabs(colors_split):
    pairs = colors_split.all_pairs()
    return build_vocab(pairs, "input"), build_vocab(pairs, "output")


def tiny_model(variant=ModelVariant.LLA_LSTM, v_in=6, v_out=5, stop_id=4, hidden=4, emb=3, adv=5, seed=0,
               dtype="float64"):
    return Seq2SeqModel(ModelConfig(
        input_vocab_size=v_in, output_vocab_size=v_out, stop_id=stop_id, variant=variant,
        hidden_size=hidden, embedding_size=emb, adversary_hidden=adv, dtype=dtype, seed=seed,
    ))


@pytest.fixture
def make_model():
    return tiny_model
