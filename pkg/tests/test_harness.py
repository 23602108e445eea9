import json

import numpy as np
import pytest

from grrm.harness import (
    ALL_BUT_TWO_CORNERS,
    FULL_BOARD,
    MIDDLE_COLUMN,
    UPPER_LEFT_2X2,
    ExperimentConfig,
    IngestSchema,
    board_feature,
    config_from_dict,
    corpus_split,
    endgame_corpus,
    ingest_csv,
    inject_noise,
    load_config,
    run_benchmark,
    run_learning_curve,
    run_noise_sweep,
    select_lambda,
    tictactoe_generate,
    window_projection,
    window_space,
    write_result,
    write_synthetic_dataset,
)
from grrm.harness.report import read_rows
from grrm.harness.tictactoe import _winner


class TestCorpus:
    def test_size_and_label_counts(self):
        corpus = endgame_corpus()
        assert len(corpus) == 958
        labels = [y for _, y in corpus]
        assert labels.count("positive") == 626
        assert labels.count("negative") == 332

    def test_boards_are_terminal_and_sorted(self):
        corpus = endgame_corpus()
        boards = [b for b, _ in corpus]
        assert boards == sorted(boards)
        for board, label in corpus:
            winner = _winner(board)
            assert winner is not None or "b" not in board
            assert label == ("positive" if winner == "x" else "negative")

    def test_windows(self):
        assert len(window_space(UPPER_LEFT_2X2)) == 81
        assert len(window_space(MIDDLE_COLUMN)) == 27
        board = tuple("xoxoxoxob"[i] for i in range(9))
        assert board_feature(board, MIDDLE_COLUMN) == ("o", "x", "o")
        project = window_projection(ALL_BUT_TWO_CORNERS, UPPER_LEFT_2X2)
        feature = board_feature(board, ALL_BUT_TWO_CORNERS)
        assert project(feature) == board_feature(board, UPPER_LEFT_2X2)
        with pytest.raises(ValueError):
            window_projection(MIDDLE_COLUMN, UPPER_LEFT_2X2)

    def test_generate_is_seeded(self):
        a = tictactoe_generate(3, 25, window=UPPER_LEFT_2X2)
        b = tictactoe_generate(3, 25, window=UPPER_LEFT_2X2)
        assert a == b
        assert len(a) == 25
        assert all(len(x) == 4 for x, _ in a)

    def test_corpus_split(self):
        train, test = corpus_split(0, 500)
        assert len(train) == 500 and len(test) == 458
        full = {x for x, _ in train} | {x for x, _ in test}
        assert len(full) == 958
        with pytest.raises(ValueError):
            corpus_split(0, 0)
        with pytest.raises(ValueError):
            corpus_split(0, 958)


class TestInjectNoise:
    SAMPLES = [(("x", "o", "b"), "positive"), (("o", "o", "x"), "negative")] * 10

    def test_zero_noise_is_identity(self):
        assert inject_noise(self.SAMPLES) == self.SAMPLES
        assert inject_noise([]) == []

    def test_full_label_flip(self):
        out = inject_noise(self.SAMPLES, rho_minus=1.0, rho_plus=1.0, seed=1)
        for (_, y), (_, y_orig) in zip(out, self.SAMPLES):
            assert y != y_orig

    def test_asymmetric_rates_touch_only_matching_labels(self):
        out = inject_noise(self.SAMPLES, rho_plus=1.0, seed=2)
        for (x, y), (x_orig, y_orig) in zip(out, self.SAMPLES):
            assert x == x_orig
            if y_orig == "positive":
                assert y == "negative"
            else:
                assert y == "negative"

    def test_full_cell_noise_changes_every_cell(self):
        out = inject_noise(self.SAMPLES, cell_rate=1.0, seed=3)
        for (x, y), (x_orig, y_orig) in zip(out, self.SAMPLES):
            assert y == y_orig
            assert all(a != b for a, b in zip(x, x_orig))
            assert all(s in ("x", "o", "b") for s in x)

    def test_seeded_determinism(self):
        kwargs = dict(rho_minus=0.2, rho_plus=0.4, cell_rate=0.3, seed=7)
        assert inject_noise(self.SAMPLES, **kwargs) == inject_noise(
            self.SAMPLES, **kwargs
        )


class TestIngest:
    def write_table(self, path):
        rows = ["color,score,outcome"]
        scores = [0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6]
        for i, s in enumerate(scores):
            color = "red" if i % 2 else "blue"
            label = "yes" if s > 0.5 else "no"
            rows.append(f"{color},{s},{label}")
        path.write_text("\n".join(rows) + "\n")

    def test_schema_and_spaces(self, tmp_path):
        path = tmp_path / "data.csv"
        self.write_table(path)
        schema = IngestSchema(label="outcome", categorical=("color",), numeric={"score": 2})
        result = ingest_csv(path, schema)
        assert result.label_space.elements == ("no", "yes")
        assert result.feature_space.factor_sizes == (2, 2)
        assert result.fallback_count == 0
        assert len(result.samples) == 8
        x, y = result.samples[0]
        assert x == ("blue", "b1") and y == "no"
        assert list(result.bin_edges) == ["score"]

    def test_fit_indices_and_fallback(self, tmp_path):
        path = tmp_path / "data.csv"
        self.write_table(path)
        schema = IngestSchema(label="outcome", categorical=("color",), numeric={"score": 2})
        # fit only on even rows (all blue): red becomes out-of-vocabulary
        result = ingest_csv(path, schema, fit_indices=[0, 2, 4, 6])
        assert result.feature_space.factor_sizes == (1, 2)
        assert result.fallback_count == 4
        assert all(x[0] == "blue" for x, _ in result.samples)

    def test_single_component_unwrapped(self, tmp_path):
        path = tmp_path / "data.csv"
        self.write_table(path)
        schema = IngestSchema(label="outcome", numeric={"score": 4})
        result = ingest_csv(path, schema)
        assert all(isinstance(x, str) for x, _ in result.samples)

    def test_errors(self, tmp_path):
        path = tmp_path / "data.csv"
        self.write_table(path)
        with pytest.raises(ValueError):
            ingest_csv(path, IngestSchema(label="missing", numeric={"score": 2}))
        with pytest.raises(ValueError):
            ingest_csv(path, IngestSchema(label="outcome"), fit_indices=[])
        empty = tmp_path / "empty.csv"
        empty.write_text("color,score,outcome\n")
        with pytest.raises(ValueError):
            ingest_csv(empty, IngestSchema(label="outcome", numeric={"score": 2}))

    def test_from_columns_helper(self):
        schema = IngestSchema.from_columns("y", categorical=["a"], numeric=["b"], bins=5)
        assert schema.feature_columns == ("a", "b")
        assert schema.numeric == {"b": 5}

    def test_synthetic_dataset_deterministic(self, tmp_path):
        p1 = write_synthetic_dataset(tmp_path / "a.csv", n=50)
        p2 = write_synthetic_dataset(tmp_path / "b.csv", n=50)
        assert p1.read_bytes() == p2.read_bytes()
        lines = p1.read_text().strip().splitlines()
        assert lines[0] == "u1,u2,outcome"
        assert len(lines) == 51


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(kind="mystery")
        with pytest.raises(ValueError):
            ExperimentConfig(kind="benchmark", lambda_grid=())
        with pytest.raises(ValueError):
            ExperimentConfig(kind="benchmark", lambda_grid=(0.0,))
        with pytest.raises(ValueError):
            ExperimentConfig(kind="benchmark", repetitions=0)
        with pytest.raises(ValueError):
            ExperimentConfig(kind="benchmark", labeled_fraction=0.0)
        with pytest.raises(ValueError):
            ExperimentConfig(kind="benchmark", rho_minus=0.6, rho_plus=0.5)
        with pytest.raises(ValueError):
            ExperimentConfig(kind="noise-sweep", noise_grid=(1.0,))

    def test_fingerprint_tracks_content(self):
        a = ExperimentConfig(kind="benchmark")
        b = ExperimentConfig(kind="benchmark")
        c = ExperimentConfig(kind="benchmark", seed=5)
        assert a.fingerprint() == b.fingerprint()
        assert a.fingerprint() != c.fingerprint()

    def test_override_ignores_none(self):
        a = ExperimentConfig(kind="benchmark")
        assert a.override(seed=None) is a
        assert a.override(seed=9).seed == 9

    def test_dict_round_trip(self, tmp_path):
        a = ExperimentConfig(kind="noise-sweep", noise_grid=(0.0, 0.2), seed=3)
        b = config_from_dict(a.to_dict())
        assert a == b
        with pytest.raises(ValueError):
            config_from_dict({"kind": "benchmark", "surprise": 1})
        path = tmp_path / "config.json"
        path.write_text(json.dumps(a.to_dict()))
        assert load_config(path) == a


def test_select_lambda_prefers_smallest_on_ties():
    assert select_lambda([0.5, 0.1, 0.3], lambda lam: 1.0) == 0.1
    assert select_lambda([0.5, 0.1, 0.3], lambda lam: -lam) == 0.1
    assert select_lambda([0.5, 0.1, 0.3], lambda lam: lam) == 0.5
    with pytest.raises(ValueError):
        select_lambda([], lambda lam: 0.0)


class TestExperimentsSmall:
    def test_noise_sweep_shape_and_zero_point(self):
        config = ExperimentConfig(
            kind="noise-sweep", noise_grid=(0.0, 0.2), repetitions=2, train_boards=80
        )
        result = run_noise_sweep(config)
        assert len(result.per_rep) == 2 * 2 * 3
        assert len(result.aggregate) == 2 * 3
        assert all(0.0 <= r["accuracy"] <= 1.0 for r in result.per_rep)
        # with no noise the oracle and the naive fit are the same rule; the
        # robust solve may deviate on exactly-tied cells (solver roundoff
        # breaks those ties arbitrarily) but stays within a couple of points
        zero_rows = [r for r in result.per_rep if r["rho_plus"] == 0.0]
        by_rep = {}
        for r in zero_rows:
            by_rep.setdefault(r["rep"], {})[r["method"]] = r["accuracy"]
        for accs in by_rep.values():
            assert accs["benchmark"] == pytest.approx(accs["naive"], abs=1e-12)
            assert accs["benchmark"] == pytest.approx(accs["grrm"], abs=0.02)

    def test_noise_sweep_deterministic(self):
        config = ExperimentConfig(
            kind="noise-sweep", noise_grid=(0.1,), repetitions=1, train_boards=60
        )
        assert run_noise_sweep(config).per_rep == run_noise_sweep(config).per_rep

    def test_learning_curve_shape_and_shared_base(self):
        config = ExperimentConfig(
            kind="learning-curve",
            base_samples=12,
            growth_step=12,
            growth_steps=1,
            repetitions=1,
        )
        result = run_learning_curve(config)
        assert len(result.per_rep) == 4 * 2
        base = {r["grown"]: r["accuracy"] for r in result.per_rep if r["added_samples"] == 0}
        # the all-base point is one shared solve, whatever curve it anchors
        assert len(set(base.values())) == 1

    def test_benchmark_summary_and_tasks(self, tmp_path):
        dataset = write_synthetic_dataset(tmp_path / "synth.csv", n=400)
        config = ExperimentConfig(kind="benchmark", repetitions=2, train_rows=200)
        result = run_benchmark(config, dataset)
        tasks = {(r["task"], r["method"]) for r in result.per_rep}
        assert tasks == {
            ("noisy-labels", "clean-erm"),
            ("noisy-labels", "naive"),
            ("noisy-labels", "grrm"),
            ("semi-supervised", "labeled-erm"),
            ("semi-supervised", "grrm"),
        }
        summary = result.summary
        assert set(summary) == {"noisy_grrm_minus_naive", "semi_grrm_minus_labeled"}
        for entry in summary.values():
            assert entry["ci95_low"] <= entry["mean"] <= entry["ci95_high"]


class TestReport:
    def test_write_result_files(self, tmp_path):
        config = ExperimentConfig(
            kind="noise-sweep", noise_grid=(0.0,), repetitions=2, train_boards=60
        )
        result = run_noise_sweep(config)
        paths = write_result(result, tmp_path / "out")
        for key in ("aggregate", "samples", "figure", "summary"):
            assert paths[key].exists(), key
        first = paths["aggregate"].read_text().splitlines()[0]
        assert first == f"# config {config.fingerprint()}"
        rows = read_rows(paths["aggregate"])
        assert len(rows) == len(result.aggregate)
        assert rows[0]["method"] == result.aggregate[0]["method"]
        summary = json.loads(paths["summary"].read_text())
        assert summary["kind"] == "noise-sweep"
        assert summary["fingerprint"] == config.fingerprint()
        assert paths["figure"].stat().st_size > 0
