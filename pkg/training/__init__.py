from training.evaluate import evaluate_checkpoint, translate_all, validation_score
from training.schedule import STAGE_LEXICON, STAGE_MAIN, TrainSchedule, ValidationPolicy, select_best
from training.trainer import (
    EpochRecord,
    Trainer,
    TrainingResult,
    encode_pairs,
    lexicon_loss,
    sequence_loss,
    train_lexicon,
    train_main,
)
