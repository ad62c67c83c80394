import csv
import json
from pathlib import Path

from errors import ConfigError, DataError

LOG_FILE = "train_log.tsv"
MANIFEST_FILE = "best.json"
CHECKPOINT_FILE = "best.lla"
LOG_COLUMNS = ("epoch", "stage", "train_loss", "val_score")


def start_run_log(out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / LOG_FILE).write_text("\t".join(LOG_COLUMNS) + "\n", encoding="utf-8")


def save_epoch(out_dir, epoch, stage, train_loss, val_score):
    with open(Path(out_dir) / LOG_FILE, "a", encoding="utf-8") as f:
        f.write(f"{epoch}\t{stage}\t{train_loss:.6f}\t{val_score:.6f}\n")


def get_run_history(out_dir):
    path = Path(out_dir) / LOG_FILE
    try:
        with open(path, encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f, delimiter="\t")
            return [
                {
                    "epoch": int(row["epoch"]),
                    "stage": row["stage"],
                    "train_loss": float(row["train_loss"]),
                    "val_score": float(row["val_score"]),
                }
                for row in reader
            ]
    except OSError as exc:
        raise DataError(f"cannot read training log {path}: {exc}") from exc


def save_best_manifest(out_dir, epoch, stage, metric, score, checkpoint=CHECKPOINT_FILE):
    entry = {
        "epoch": epoch,
        "stage": stage,
        "metric": metric,
        "score": score,
        "checkpoint": checkpoint,
    }
    (Path(out_dir) / MANIFEST_FILE).write_text(json.dumps(entry, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return entry


def get_best_manifest(out_dir):
    path = Path(out_dir) / MANIFEST_FILE
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def resolve_checkpoint(path):
    """A checkpoint file, or a run directory whose best.json points at one."""
    path = Path(path)
    if path.is_dir():
        path = path / get_best_manifest(path)["checkpoint"]
    if not path.is_file():
        raise ConfigError(f"checkpoint not found: {path}")
    return path
