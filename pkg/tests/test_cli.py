import io
import json

import pytest

import lla
from data.vocab import Vocabulary
from errors import NumericError
from model.checkpoint import save_checkpoint
from run_history import CHECKPOINT_FILE, LOG_FILE, MANIFEST_FILE
from tests.conftest import FIXTURES, tiny_model

TRAIN = str(FIXTURES / "colors_train.tsv")
TEST = str(FIXTURES / "colors_test.tsv")
PROBES = str(FIXTURES / "colors_probes.txt")

TINY = ["--epochs", "3", "--lexicon-epochs", "1", "--hidden-size", "4", "--embedding-size", "3",
        "--adversary-hidden", "5", "--batch-size", "7", "--max-len", "20"]


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    code = lla.main(["--quiet", "train", "--train", TRAIN, "--test", TEST, "--out", str(out), *TINY])
    assert code == 0
    return out


def test_train_writes_artifacts(run_dir):
    for name in (CHECKPOINT_FILE, MANIFEST_FILE, LOG_FILE, "vocab.input.txt", "vocab.output.txt"):
        assert (run_dir / name).is_file()
    assert (run_dir / "test_metrics.tsv").read_text(encoding="utf-8").startswith("Prec.\tRec.\tAcc.\tExact\n")
    assert len((run_dir / LOG_FILE).read_text(encoding="utf-8").splitlines()) == 4


def test_train_is_byte_identical_across_runs(run_dir, tmp_path):
    again = tmp_path / "again"
    assert lla.main(["--quiet", "train", "--train", TRAIN, "--test", TEST, "--out", str(again), *TINY]) == 0
    for name in (CHECKPOINT_FILE, LOG_FILE, MANIFEST_FILE):
        assert (again / name).read_bytes() == (run_dir / name).read_bytes()


def test_train_plain_variant_has_no_lexicon_stage(tmp_path, capsys):
    out = tmp_path / "plain"
    assert lla.main(["--quiet", "train", "--train", TRAIN, "--variant", "plain", "--out", str(out), *TINY]) == 0
    stages = [line.split("\t")[1] for line in (out / LOG_FILE).read_text(encoding="utf-8").splitlines()[1:]]
    assert stages == ["main", "main"]


def test_train_missing_dataset_exits_with_config_code(tmp_path, capsys):
    missing = tmp_path / "absent.tsv"
    assert lla.main(["--quiet", "train", "--train", str(missing), "--out", str(tmp_path / "x")]) == 2
    assert "absent.tsv" in capsys.readouterr().err


def test_train_numeric_abort_has_its_own_exit_code(monkeypatch, tmp_path):
    def explode(config, progress=True):
        raise NumericError("main stage, epoch 31: loss is nan")

    monkeypatch.setattr(lla, "cmd_train", explode)
    assert lla.main(["--quiet", "train", "--train", TRAIN, "--out", str(tmp_path)]) == 4


def test_eval_prints_a_table_and_writes_reports(run_dir, tmp_path, capsys):
    json_path, pdf_path = tmp_path / "eval.json", tmp_path / "eval.pdf"
    code = lla.main(["--quiet", "eval", str(run_dir), "--test", TEST, "--bleu", "--max-len", "20",
                     "--json", str(json_path), "--pdf", str(pdf_path)])
    assert code == 0
    header, row = capsys.readouterr().out.splitlines()
    assert header == "Prec.\tRec.\tAcc.\tExact\tBLEU"
    assert len(row.split("\t")) == 5
    assert json.loads(json_path.read_text(encoding="utf-8"))["pairs"] == 10
    assert pdf_path.read_bytes().startswith(b"%PDF")


def test_eval_refuses_tampered_vocabulary(run_dir, tmp_path, capsys):
    copy = tmp_path / "copy"
    copy.mkdir()
    for name in (CHECKPOINT_FILE, "vocab.input.txt", "vocab.output.txt"):
        (copy / name).write_bytes((run_dir / name).read_bytes())
    with open(copy / "vocab.output.txt", "a", encoding="utf-8") as f:
        f.write("purple\n")
    assert lla.main(["--quiet", "eval", str(copy / CHECKPOINT_FILE), "--test", TEST]) == 3
    assert "does not match" in capsys.readouterr().err


def test_translate_keeps_line_alignment(run_dir, monkeypatch, capsys):
    monkeypatch.setattr("sys.stdin", io.StringIO("wif kiki lug\n\nwif blorp\n"))
    assert lla.main(["translate", str(run_dir / CHECKPOINT_FILE), "--max-len", "20"]) == 0
    captured = capsys.readouterr()
    lines = captured.out.split("\n")
    assert len(lines) == 4 and lines[1] == "" and lines[3] == ""
    assert "blorp" in captured.err


def test_lexicon_dump(run_dir, capsys):
    assert lla.main(["--quiet", "lexicon-dump", str(run_dir), "dax", "lug", "--threshold", "0"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "word\ttoken\tsigma"
    assert len(lines) == 1 + 2 * 5
    assert lla.main(["--quiet", "lexicon-dump", str(run_dir), "blorp"]) == 3
    assert "blorp" in capsys.readouterr().err


def test_lesion_report(run_dir, tmp_path, capsys):
    pdf_path = tmp_path / "lesion.pdf"
    code = lla.main(["--quiet", "lesion", str(run_dir), "--targets", "lstms", "lexicon", "--seeds", "0", "1",
                     "--probes", PROBES, "--test", TEST, "--max-len", "20", "--pdf", str(pdf_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert out.startswith("lesion\tseed\tprobe\ttranslation\nNone\t0\twif kiki lug\t")
    assert "lesion\tseed\ttest_precision" in out
    assert pdf_path.read_bytes().startswith(b"%PDF")


def test_lesion_without_targets_is_a_usage_error(run_dir, capsys):
    assert lla.main(["--quiet", "lesion", str(run_dir), "--probes", PROBES, "--test", TEST]) == 2
    assert "no lesion targets" in capsys.readouterr().err


def test_translate_skips_lines_with_no_geo_words(tmp_path, monkeypatch, capsys):
    input_vocab = Vocabulary(["what", "is", "utah", "texas"], with_unk=True)
    output_vocab = Vocabulary(["answer", "(", ")", "A"])
    path = save_checkpoint(tmp_path / CHECKPOINT_FILE, tiny_model(), input_vocab, output_vocab, "geo")
    monkeypatch.setattr("sys.stdin", io.StringIO("?\nwhat is utah ?\n"))
    assert lla.main(["translate", str(path), "--max-len", "5"]) == 0
    captured = capsys.readouterr()
    lines = captured.out.split("\n")
    assert len(lines) == 3 and lines[0] == ""
    assert "line 1" in captured.err
