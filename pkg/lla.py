import argparse
import json
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

from data.datasets import load_dataset, load_tsv
from data.tokenize import domain_modes, tokenize
from data.vocab import build_vocab
from errors import ConfigError, DataError, LLAError
from lesion.damage import compare_lesions, format_lesion_tsv, lesion_sweep
from model.checkpoint import load_checkpoint
from model.seq2seq import DEFAULT_MAX_LEN, Seq2SeqModel, greedy_translate
from run_config import RunConfig, resolve_config
from run_history import resolve_checkpoint
from training.evaluate import evaluate_checkpoint
from training.trainer import Trainer
from utils.lexicon_dump import DEFAULT_THRESHOLD, format_lexicon_tsv, lexicon_weights
from utils.metrics import format_report_tsv
from utils.pdf_report import generate_eval_pdf, generate_lesion_pdf

# Load env immediately
load_dotenv()

logger = logging.getLogger("lla")

_LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


def _status(message):
    # stdout carries results only
    print(message, file=sys.stderr)


def _configure_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, format=_LOG_FORMAT, stream=sys.stderr, force=True)


def _load(checkpoint):
    path = resolve_checkpoint(checkpoint)
    model, input_vocab, output_vocab, meta = load_checkpoint(path)
    _status(f"✅ Loaded {model.variant.value} checkpoint {path} ({meta['domain']})")
    return model, input_vocab, output_vocab, meta


def _write_pdf(path, payload):
    Path(path).write_bytes(payload)
    _status(f"✅ Saved PDF report to {path}")


# ── Commands ──────────────────────────────────────────────────────────────────

def cmd_train(config: RunConfig, progress=True) -> int:
    config.validate()
    _status(f"🚀 Training {config.variant} on {config.domain} ({config.train})")
    split = load_dataset(config.train, config.val, config.test, config.domain, config.val_size, config.seed,
                         config.max_input_words)
    pairs = split.all_pairs()
    input_vocab, output_vocab = build_vocab(pairs, "input"), build_vocab(pairs, "output")
    _status(f"📋 Vocabulary: {input_vocab.word_count} input / {output_vocab.word_count} output words")

    model = Seq2SeqModel(config.model_config(input_vocab, output_vocab))
    trainer = Trainer(model, split, input_vocab, output_vocab, config.schedule(), config.policy(),
                      out_dir=config.out, workers=config.workers, progress=progress)
    result = trainer.run()
    _status(f"✅ Best epoch {result.best_epoch}: validation {result.metric} {result.best_score:.2f}")
    _status(f"✅ Saved checkpoint to {result.checkpoint}")

    if split.test:
        report = evaluate_checkpoint(model, split.test, input_vocab, output_vocab, bleu=config.domain == "zh",
                                     max_len=config.max_len, workers=config.workers, progress=progress)
        table = format_report_tsv(report)
        (Path(config.out) / "test_metrics.tsv").write_text(table, encoding="utf-8")
        sys.stdout.write(table)
    return 0


def cmd_eval(checkpoint, test_path, bleu=False, max_len=DEFAULT_MAX_LEN, workers=1, pdf=None,
             json_path=None, progress=True) -> int:
    if not Path(test_path).is_file():
        raise ConfigError(f"test file not found: {test_path}")
    model, input_vocab, output_vocab, meta = _load(checkpoint)
    pairs = load_tsv(test_path, meta["domain"])
    _status(f"🔄 Evaluating {len(pairs)} pairs...")
    report = evaluate_checkpoint(model, pairs, input_vocab, output_vocab, bleu=bleu, max_len=max_len,
                                 workers=workers, progress=progress)
    sys.stdout.write(format_report_tsv(report))

    if json_path:
        with open(json_path, "w", encoding="utf-8") as f:
            json.dump({"checkpoint": str(checkpoint), "test": str(test_path), **report.as_dict()}, f, indent=4)
        _status(f"✅ Saved results to {json_path}")
    if pdf:
        _write_pdf(pdf, generate_eval_pdf(report, {"domain": meta["domain"], "variant": model.variant.value,
                                                   "test": Path(test_path).name}))
    return 0


def cmd_translate(checkpoint, lines, out=None, max_len=DEFAULT_MAX_LEN) -> int:
    out = out or sys.stdout
    model, input_vocab, output_vocab, meta = _load(checkpoint)
    in_mode, _ = domain_modes(meta["domain"])
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            out.write("\n")
            continue
        try:
            tokens = tokenize(line, in_mode, line_no)
        except DataError as exc:
            logger.warning("%s", exc)
            out.write("\n")
            continue
        unknown = input_vocab.unknown(tokens)
        if unknown:
            logger.warning("line %d: unknown words mapped to <unk>: %s", line_no, " ".join(unknown))
        ids = greedy_translate(input_vocab.encode(tokens, allow_unk=True), model, max_len)
        out.write(" ".join(output_vocab.decode(ids)) + "\n")
    return 0


def cmd_lexicon_dump(checkpoint, words, threshold=DEFAULT_THRESHOLD) -> int:
    model, input_vocab, output_vocab, _ = _load(checkpoint)
    rows = lexicon_weights(model, input_vocab, output_vocab, words, threshold)
    sys.stdout.write(format_lexicon_tsv(rows))
    return 0


def cmd_lesion(checkpoint, targets, probes_path, test_path, seeds=(0,), max_len=DEFAULT_MAX_LEN, workers=1,
               pdf=None) -> int:
    if not targets:
        raise ConfigError("no lesion targets given (--targets lstms, lexicon, adversary)")
    for label, path in (("probes", probes_path), ("test", test_path)):
        if not Path(path).is_file():
            raise ConfigError(f"{label} file not found: {path}")
    model, input_vocab, output_vocab, meta = _load(checkpoint)
    in_mode, _ = domain_modes(meta["domain"])
    probe_lines = [ln for ln in Path(probes_path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    probes = [tokenize(ln, in_mode, i) for i, ln in enumerate(probe_lines, start=1)]
    test_pairs = load_tsv(test_path, meta["domain"])

    _status(f"🔄 Lesioning {', '.join(targets)} over seeds {', '.join(map(str, seeds))}...")
    reports = lesion_sweep(model, targets, test_pairs, probes, seeds, input_vocab, output_vocab, max_len, workers)
    sys.stdout.write(format_lesion_tsv(reports))

    verdict = None
    labels = {r.label for r in reports}
    if {"lstms", "lexicon"} <= labels:
        verdict = compare_lesions(reports)
        icon = "✅" if verdict["majority"] else "⚠️"
        _status(f"{icon} LSTM lesion kept >= lexicon-lesion precision on {verdict['held']}/{verdict['seeds']} seeds")
    if pdf:
        _write_pdf(pdf, generate_lesion_pdf(reports, verdict, {"domain": meta["domain"],
                                                                "variant": model.variant.value}))
    return 0


# ── Argument parsing ──────────────────────────────────────────────────────────

def _add_train_flags(p):
    p.add_argument("--config", help="Flat key=value run config file")
    p.add_argument("--domain", choices=["colors", "geo", "wsj", "zh"])
    p.add_argument("--variant", choices=["lla", "lla-noadv", "plain"])
    p.add_argument("--train", help="Training TSV (input<TAB>output)")
    p.add_argument("--val", help="Validation TSV (default: hold out --val-size pairs, or reuse train)")
    p.add_argument("--test", help="Test TSV, evaluated with the best checkpoint after training")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int, help="Last training epoch (default: 1000)")
    p.add_argument("--lexicon-epochs", type=int, help="Epochs of lexicon-only training (default: 30)")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lexicon-lr", type=float)
    p.add_argument("--adversary-lambda", type=float)
    p.add_argument("--hidden-size", type=int)
    p.add_argument("--embedding-size", type=int)
    p.add_argument("--adversary-hidden", type=int)
    p.add_argument("--metric", choices=["exact", "bleu"], help="Stage-2 validation metric")
    p.add_argument("--val-size", type=int)
    p.add_argument("--max-input-words", type=int)
    p.add_argument("--dtype", choices=["float32", "float64"])
    p.add_argument("--max-len", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", help="Run directory for the log, checkpoint and vocabularies")


_TRAIN_KEYS = (
    "domain", "variant", "train", "val", "test", "seed", "epochs", "lexicon_epochs", "batch_size", "lr",
    "lexicon_lr", "adversary_lambda", "hidden_size", "embedding_size", "adversary_hidden", "metric",
    "val_size", "max_input_words", "dtype", "max_len", "workers", "out",
)


def _run_train(args):
    config = resolve_config({k: getattr(args, k) for k in _TRAIN_KEYS}, args.config)
    return cmd_train(config, progress=not args.quiet)


def _run_eval(args):
    return cmd_eval(args.checkpoint, args.test, bleu=args.bleu, max_len=args.max_len, workers=args.workers,
                    pdf=args.pdf, json_path=args.json, progress=not args.quiet)


def _run_translate(args):
    return cmd_translate(args.checkpoint, sys.stdin, max_len=args.max_len)


def _run_lexicon_dump(args):
    return cmd_lexicon_dump(args.checkpoint, args.words, args.threshold)


def _run_lesion(args):
    return cmd_lesion(args.checkpoint, args.targets or [], args.probes, args.test, args.seeds or [0],
                      max_len=args.max_len, workers=args.workers, pdf=args.pdf)


def build_parser():
    parser = argparse.ArgumentParser(prog="lla", description="LLA-LSTM sequence-to-sequence experiments")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    parser.add_argument("--quiet", action="store_true", help="Warnings only, no progress bars")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="Two-stage training; writes best.lla, best.json and train_log.tsv")
    _add_train_flags(p)
    p.set_defaults(handler=_run_train)

    p = sub.add_parser("eval", help="Prec./Rec./Acc./Exact (and BLEU) of a checkpoint on a test file")
    p.add_argument("checkpoint", help="best.lla file or run directory")
    p.add_argument("--test", required=True)
    p.add_argument("--bleu", action="store_true", help="Also report corpus BLEU")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pdf", help="Path to save a PDF report")
    p.add_argument("--json", help="Path to save results as JSON")
    p.set_defaults(handler=_run_eval)

    p = sub.add_parser("translate", help="Greedy translation of stdin lines")
    p.add_argument("checkpoint")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.set_defaults(handler=_run_translate)

    p = sub.add_parser("lexicon-dump", help="σ(w) rows of the lexicon table for some input words")
    p.add_argument("checkpoint")
    p.add_argument("words", nargs="+")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(handler=_run_lexicon_dump)

    p = sub.add_parser("lesion", help="Re-initialize components and report what the model still translates")
    p.add_argument("checkpoint")
    p.add_argument("--targets", nargs="+", help="Target sets, e.g. lstms lexicon lstms,lexicon")
    p.add_argument("--probes", required=True, help="One probe input per line")
    p.add_argument("--test", required=True)
    p.add_argument("--seeds", "--seed", type=int, nargs="+", help="Re-initialization seeds (default: 0)")
    p.add_argument("--max-len", type=int, default=DEFAULT_MAX_LEN)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--pdf", help="Path to save a PDF report")
    p.set_defaults(handler=_run_lesion)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except LLAError as e:
        _status(f"❌ {e}")
        return e.exit_code
    except Exception as e:
        logger.debug("unhandled error", exc_info=True)
        _status(f"❌ Fatal Error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
