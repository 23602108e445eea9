"""Experiment harness: datasets, canned studies, reporting, and the CLI."""

from .config import ExperimentConfig, config_from_dict, load_config
from .experiments import (
    ExperimentResult,
    run_benchmark,
    run_learning_curve,
    run_noise_sweep,
    select_lambda,
)
from .ingest import IngestResult, IngestSchema, ingest_csv, write_synthetic_dataset
from .report import read_rows, write_result
from .tictactoe import (
    ALL_BUT_TWO_CORNERS,
    FULL_BOARD,
    MIDDLE_COLUMN,
    UPPER_LEFT_2X2,
    board_feature,
    corpus_split,
    endgame_corpus,
    inject_noise,
    tictactoe_generate,
    window_projection,
    window_space,
)

__all__ = [name for name in dir() if not name.startswith("_")]
