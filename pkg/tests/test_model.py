import numpy as np
import pytest

from engine import ComputationTape, Tensor, bce_loss, concat, relu, sigmoid
from errors import ConfigError, DataError, PreconditionError, VocabularyError
from model.checkpoint import INPUT_VOCAB_FILE, load_checkpoint, read_checkpoint, save_checkpoint
from model.seq2seq import EncoderState, ModelConfig, ModelVariant, greedy_translate, lexicon_target
from tests.conftest import tiny_model
from training.trainer import sequence_loss


def _zero_all(model):
    for p in model.parameters().values():
        p.data[...] = 0.0


def test_encode_with_zero_weights_gives_zero_state(make_model):
    model = make_model()
    _zero_all(model)
    state = model.encode([2])
    np.testing.assert_array_equal(state.h.data, np.zeros(4))
    np.testing.assert_array_equal(state.c.data, np.zeros(4))


def test_encode_is_order_sensitive_and_deterministic(make_model):
    model = make_model()
    assert not np.array_equal(model.encode([1, 2]).h.data, model.encode([2, 1]).h.data)
    assert model.encode([1, 2]).h.data.tobytes() == make_model().encode([1, 2]).h.data.tobytes()


def test_encode_rejects_bad_input(make_model):
    model = make_model()
    with pytest.raises(PreconditionError):
        model.encode([])
    with pytest.raises(VocabularyError):
        model.encode([6])


def test_lexicon_forward_zero_rows_is_half(make_model):
    np.testing.assert_array_equal(make_model().lexicon_forward([0, 3]).data, np.full(5, 0.5))


def test_lexicon_forward_permutation_and_duplication_invariant(make_model):
    model = make_model()
    model.lexicon.data[...] = np.random.default_rng(2).uniform(-3, 3, model.lexicon.shape)
    base = model.lexicon_forward([0, 3, 5]).data
    assert model.lexicon_forward([5, 0, 3]).data.tobytes() == base.tobytes()
    assert model.lexicon_forward([3, 3, 0, 5, 0]).data.tobytes() == base.tobytes()
    assert np.all((base > 0) & (base < 1))


def test_lexicon_target_examples():
    # dictionary r, g, b, y, <s>
    np.testing.assert_array_equal(lexicon_target([2, 1, 4], 5).data, [0, 1, 1, 0, 1])
    np.testing.assert_array_equal(lexicon_target([4], 5).data, [0, 0, 0, 0, 1])
    np.testing.assert_array_equal(lexicon_target([1, 1, 1, 4], 5).data, [0, 1, 0, 0, 1])
    with pytest.raises(PreconditionError):
        lexicon_target([5], 5)


def test_adversary_forward(make_model):
    model = make_model()
    state = model.encode([1, 2])
    first = model.adversary_forward(state, 1e-4).data
    assert model.adversary_forward(state, 0.5).data.tobytes() == first.tobytes()
    assert np.all((first > 0) & (first < 1))
    _zero_all(model)
    np.testing.assert_array_equal(model.adversary_forward(model.encode([1]), 1e-4).data, np.full(5, 0.5))


def test_adversary_rejects_wrong_state_size(make_model):
    model = make_model()
    state = EncoderState(Tensor(np.zeros(3)), Tensor(np.zeros(3)))
    with pytest.raises(ConfigError):
        model.adversary_forward(state, 1e-4)
    with pytest.raises(ConfigError):
        make_model(variant=ModelVariant.LLA_NO_ADVERSARY).adversary_forward(model.encode([1]), 1e-4)


def test_adversary_gradient_reaches_encoder_reversed_and_scaled(make_model):
    lam = 1e-4
    target = np.array([1.0, 0.0, 1.0, 0.0, 1.0])

    reversed_model = make_model()
    with ComputationTape() as tape:
        loss = bce_loss(reversed_model.adversary_forward(reversed_model.encode([1, 4, 2]), lam), target)
    tape.backward(loss)

    plain_model = make_model()
    with ComputationTape() as tape:
        state = plain_model.encode([1, 4, 2])
        joined = concat([state.h, state.c])
        l_a = sigmoid(plain_model.adversary_out(relu(plain_model.adversary_hidden(joined))))
        loss = bce_loss(l_a, target)
    tape.backward(loss)

    for name in ("embedding", "encoder.w_x", "encoder.w_h", "encoder.bias"):
        got = reversed_model.parameters()[name].grad
        want = -lam * plain_model.parameters()[name].grad
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-12 * np.abs(want).max())
    for name in reversed_model.adversary_parameters():
        np.testing.assert_allclose(reversed_model.parameters()[name].grad, plain_model.parameters()[name].grad,
                                   rtol=1e-12)


def test_decode_gating(make_model):
    model = make_model()
    state = model.encode([1, 2])
    for out in model.decode(state, Tensor(np.ones(5)), steps=3):
        np.testing.assert_array_equal(out.o_gated.data, out.o.data)
        assert abs(out.o.data.sum() - 1.0) < 1e-6

    one_hot = Tensor(np.eye(5)[2])
    assert all(int(np.argmax(out.o_gated.data)) == 2 for out in model.decode(state, one_hot, steps=4))

    l = model.lexicon_forward([1, 2])
    for out in model.decode(state, l, steps=3):
        assert np.all(out.o_gated.data <= out.o.data)


def test_decode_preconditions(make_model):
    lla, plain = make_model(), make_model(variant=ModelVariant.PLAIN_LSTM)
    with pytest.raises(PreconditionError):
        lla.decode(lla.encode([1]), None, steps=2)
    with pytest.raises(PreconditionError):
        plain.decode(plain.encode([1]), Tensor(np.ones(5)), steps=2)
    with pytest.raises(PreconditionError):
        lla.decode(lla.encode([1]), lla.lexicon_forward([1]), steps=0)


def test_variants_share_core_weights_and_plain_matches_raw_output():
    lla = tiny_model(variant=ModelVariant.LLA_LSTM, seed=5)
    noadv = tiny_model(variant=ModelVariant.LLA_NO_ADVERSARY, seed=5)
    plain = tiny_model(variant=ModelVariant.PLAIN_LSTM, seed=5)
    for name, p in lla.core_parameters().items():
        assert p.data.tobytes() == plain.core_parameters()[name].data.tobytes()
        assert p.data.tobytes() == noadv.core_parameters()[name].data.tobytes()
    assert "lexicon" not in plain.parameters() and not plain.adversary_parameters()
    assert "lexicon" in noadv.parameters() and not noadv.adversary_parameters()

    lla_out = lla.decode(lla.encode([3, 1]), lla.lexicon_forward([3, 1]), steps=3)
    plain_out = plain.decode(plain.encode([3, 1]), None, steps=3)
    for a, b in zip(lla_out, plain_out):
        assert a.o.data.tobytes() == b.o.data.tobytes()
        assert b.o_gated is b.o


def test_main_stage_backward_leaves_lexicon_without_gradient(make_model):
    model = make_model()
    model.lexicon.data[...] = 1.0
    with ComputationTape() as tape:
        loss = sequence_loss(model, [1, 2], [0, 3, 4], lam=1e-4)
    tape.backward(loss)
    assert model.lexicon.grad is None or not model.lexicon.grad.any()
    assert model.encoder.w_h.grad is not None


def test_greedy_translate_stops_immediately_when_stop_dominates(make_model):
    model = make_model()
    model.output.weight.data[...] = 0.0
    model.output.bias.data[...] = 0.0
    model.output.bias.data[4] = 50.0
    assert greedy_translate([1, 2], model) == []
    with pytest.raises(PreconditionError):
        greedy_translate([1], model, max_len=0)


def test_greedy_translate_honours_max_len(make_model):
    model = make_model()
    model.output.weight.data[...] = 0.0
    model.output.bias.data[...] = 0.0
    model.output.bias.data[0] = 50.0
    assert greedy_translate([1], model, max_len=7) == [0] * 7


def test_copy_and_checksum(make_model):
    model = make_model()
    clone = model.copy()
    assert clone.checksum() == model.checksum()
    clone.lexicon.data[0, 0] = 1.0
    assert clone.checksum() != model.checksum()
    assert model.lexicon.data[0, 0] == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(input_vocab_size=3, output_vocab_size=2, stop_id=2)
    with pytest.raises(ConfigError):
        ModelConfig(input_vocab_size=3, output_vocab_size=2, stop_id=1, variant="transformer")
    assert ModelConfig(input_vocab_size=3, output_vocab_size=2, stop_id=1, variant="plain").variant \
        is ModelVariant.PLAIN_LSTM


# ── Checkpoints ───────────────────────────────────────────────────────────────

def test_checkpoint_round_trip(tmp_path, colors_vocabs):
    input_vocab, output_vocab = colors_vocabs
    model = tiny_model(v_in=len(input_vocab), v_out=len(output_vocab), stop_id=output_vocab.stop_id)
    model.lexicon.data[...] = np.random.default_rng(0).standard_normal(model.lexicon.shape)
    path = save_checkpoint(tmp_path / "best.lla", model, input_vocab, output_vocab, "colors")

    assert path.read_bytes()[:4] == b"LLA1"
    loaded, in_v, out_v, meta = load_checkpoint(path)
    assert meta["domain"] == "colors"
    assert in_v == input_vocab and out_v == output_vocab
    assert loaded.variant is ModelVariant.LLA_LSTM
    for name, p in model.parameters().items():
        np.testing.assert_array_equal(loaded.parameters()[name].data, p.data.astype(np.float32))


def test_checkpoint_refuses_mismatched_vocabulary(tmp_path, colors_vocabs):
    input_vocab, output_vocab = colors_vocabs
    model = tiny_model(v_in=len(input_vocab), v_out=len(output_vocab), stop_id=output_vocab.stop_id)
    path = save_checkpoint(tmp_path / "best.lla", model, input_vocab, output_vocab, "colors")
    vocab_file = tmp_path / INPUT_VOCAB_FILE
    lines = vocab_file.read_text(encoding="utf-8").splitlines()
    lines[1], lines[2] = lines[2], lines[1]
    vocab_file.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(VocabularyError):
        load_checkpoint(path)


def test_read_checkpoint_rejects_foreign_files(tmp_path):
    bogus = tmp_path / "x.lla"
    bogus.write_bytes(b"PK\x03\x04whatever")
    with pytest.raises(DataError):
        read_checkpoint(bogus)
    with pytest.raises(DataError):
        read_checkpoint(tmp_path / "missing.lla")
