"""Canned experiments: noise sweeps, learning curves, and a tabular benchmark.

Each experiment is a pure function of its configuration: random draws come
from generators seeded by (config.seed, grid point, repetition), so reruns
with the same config reproduce every number bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as scipy_stats

from .. import transitions as tr
from ..classify import evaluate, posterior_rule
from ..objective import NormChoice, resolve_statistic
from ..schemes import (
    BridgeTriple,
    SupervisionScheme,
    combined,
    default_weights,
    noisy_labels,
    privileged,
    representation_adaptation,
    semi_supervised,
    standard,
)
from ..solver import GrrmProblem, SolveStatus, solve
from ..spaces import (
    LossMatrix,
    empirical_distribution,
    make_space,
    product_space,
)
from .config import ExperimentConfig
from .ingest import IngestSchema, ingest_csv
from .tictactoe import (
    ALL_BUT_TWO_CORNERS,
    FULL_BOARD,
    MIDDLE_COLUMN,
    UPPER_LEFT_2X2,
    board_feature,
    endgame_corpus,
    corpus_split,
    inject_noise,
    label_space,
    tictactoe_generate,
    window_projection,
    window_space,
)

CURVE_TYPES = ("standard", "noisy-labels", "domain-adaptation", "privileged")

SHARED_CELLS = (1, 4)


@dataclass
class ExperimentResult:
    kind: str
    config: ExperimentConfig
    per_rep: list
    aggregate: list
    summary: dict


def select_lambda(lambda_grid, score) -> float:
    """Pick the grid value with the best score; ties go to the smallest."""
    if not lambda_grid:
        raise ValueError("empty lambda grid")
    best_lam = None
    best = -math.inf
    for lam in sorted(float(v) for v in lambda_grid):
        value = score(lam)
        if value > best:
            best, best_lam = value, lam
    return best_lam


def _erm_rule(samples, labels, loss):
    features = sorted({x for x, _ in samples})
    space = product_space(make_space(features), labels)
    return posterior_rule(empirical_distribution(samples, space), loss)


def _solved_rule(problem, loss):
    solution = solve(problem)
    if solution.status is not SolveStatus.OPTIMAL:
        raise RuntimeError(f"solver returned status {solution.status.value}")
    return posterior_rule(solution.q_star, loss)


def _triple_statistic(triple, config: ExperimentConfig, labels):
    # Named statistics assume a feature-label bridge; marginal-only bridges
    # (such as the unlabeled triple) always get plain indicators.
    bridge = triple.bridge_space
    joint = len(bridge.factors) == 2 and bridge.factors[1].matches(labels)
    if joint:
        return resolve_statistic(config.statistic, bridge)
    return resolve_statistic("indicator", bridge)


def _grrm_problem(scheme, config: ExperimentConfig, lam: float) -> GrrmProblem:
    _, labels = scheme.test_space.factors
    stats = tuple(
        _triple_statistic(t, config, labels) for t in scheme.triples
    )
    return GrrmProblem(scheme, lam, stats, NormChoice.from_name(config.norm))


def _aggregate(rows, keys, extra=()):
    grouped: dict = {}
    for row in rows:
        grouped.setdefault(tuple(row[k] for k in keys), []).append(row["accuracy"])
    out = []
    for key in sorted(grouped):
        values = np.array(grouped[key])
        entry = dict(zip(keys, key))
        entry["mean_accuracy"] = float(values.mean())
        entry["std_accuracy"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
        entry["repetitions"] = len(values)
        out.append(entry)
    for e in extra:
        out.append(e)
    return out


def _paired_interval(deltas, level: float = 0.95):
    """Mean difference with a two-sided t confidence interval."""
    deltas = np.asarray(deltas, dtype=float)
    n = len(deltas)
    mean = float(deltas.mean())
    if n < 2:
        return mean, mean, mean
    half = float(
        scipy_stats.t.ppf(0.5 + level / 2, n - 1) * deltas.std(ddof=1) / math.sqrt(n)
    )
    return mean, mean - half, mean + half


# ---------------------------------------------------------------------------
# Noise sweep


def _sweep_grrm_rule(config, train, labels, loss, rho_minus, rho_plus, eta, lam):
    if eta > 0:
        feature_space = window_space(UPPER_LEFT_2X2)
        feature_kernel = tr.parallel(
            *(tr.symbol_noise(f, eta) for f in feature_space.factors)
        )
    else:
        feature_space = make_space(sorted({x for x, _ in train}))
        feature_kernel = tr.identity(feature_space)
    test_space = product_space(feature_space, labels)
    label_kernel = tr.label_noise(rho_minus, rho_plus, labels)
    triple = combined(test_space, label_kernel, feature_kernel, train)
    scheme = SupervisionScheme(test_space, (triple,), loss)
    return _solved_rule(_grrm_problem(scheme, config, lam), loss)


def _noise_sweep_cell(config: ExperimentConfig, grid_index: int, rep: int) -> dict:
    rho_plus = config.noise_grid[grid_index]
    rho_minus = rho_plus / 2.0
    eta = rho_plus
    rng = np.random.default_rng([config.seed, grid_index, rep])
    labels = label_space()
    loss = LossMatrix.zero_one(labels)
    train, test = corpus_split(rng, config.train_boards, window=UPPER_LEFT_2X2)
    noisy_train = inject_noise(train, rho_minus=rho_minus, rho_plus=rho_plus, seed=rng)
    noisy_test = inject_noise(test, cell_rate=eta, seed=rng)

    benchmark_acc = evaluate(_erm_rule(train, labels, loss), test, loss).accuracy
    naive_acc = evaluate(_erm_rule(noisy_train, labels, loss), noisy_test, loss).accuracy

    if len(config.lambda_grid) > 1:
        n_val = max(1, round(config.validation_fraction * len(noisy_train)))
        fit, val = noisy_train[:-n_val], noisy_train[-n_val:]
        lam = select_lambda(
            config.lambda_grid,
            lambda l: evaluate(
                _sweep_grrm_rule(config, fit, labels, loss, rho_minus, rho_plus, eta, l),
                val,
                loss,
            ).accuracy,
        )
    else:
        lam = config.lambda_grid[0]
    grrm_rule = _sweep_grrm_rule(
        config, noisy_train, labels, loss, rho_minus, rho_plus, eta, lam
    )
    grrm_acc = evaluate(grrm_rule, noisy_test, loss).accuracy
    return {"benchmark": benchmark_acc, "naive": naive_acc, "grrm": grrm_acc}


def run_noise_sweep(config: ExperimentConfig) -> ExperimentResult:
    """Joint label/feature noise on tic-tac-toe endgames.

    Training labels are flipped at (rho/2, rho); test features pass through
    per-cell symbol noise at the same rho.  Compared: an oracle trained and
    tested clean, a naive fit on the noisy data, and the robust solve.
    """
    per_rep = []
    for grid_index, rho_plus in enumerate(config.noise_grid):
        for rep in range(config.repetitions):
            accs = _noise_sweep_cell(config, grid_index, rep)
            for method, acc in accs.items():
                per_rep.append(
                    {
                        "rho_plus": rho_plus,
                        "eta": rho_plus,
                        "method": method,
                        "rep": rep,
                        "accuracy": acc,
                    }
                )
    aggregate = _aggregate(per_rep, ("rho_plus", "eta", "method"))
    return ExperimentResult("noise-sweep", config, per_rep, aggregate, {})


# ---------------------------------------------------------------------------
# Learning curves


def _curve_scheme(config, labels, loss, std, noisy, domain, priv):
    to_test = window_projection(ALL_BUT_TWO_CORNERS, UPPER_LEFT_2X2)
    test_features = sorted(
        {x for x, _ in std} | {x for x, _ in noisy} | {to_test(x) for x, _ in priv}
    )
    feature_space = make_space(test_features)
    test_space = product_space(feature_space, labels)

    t_standard = standard(test_space, std)
    t_noisy = noisy_labels(test_space, config.rho_minus, config.rho_plus, noisy)

    domain_features = window_space(MIDDLE_COLUMN)
    training_space = product_space(domain_features, labels)
    shared = window_space(SHARED_CELLS)
    test_repr = tr.parallel(
        tr.deterministic(
            feature_space, shared, window_projection(UPPER_LEFT_2X2, SHARED_CELLS)
        ),
        tr.identity(labels),
    )
    train_repr = tr.parallel(
        tr.deterministic(
            domain_features, shared, window_projection(MIDDLE_COLUMN, SHARED_CELLS)
        ),
        tr.identity(labels),
    )
    t_domain = representation_adaptation(
        test_space, training_space, test_repr, train_repr, domain
    )

    # The extended feature space is trimmed to what can actually occur:
    # observed extended features plus blank-padded lifts of test features.
    # The projection onto test features is onto either way, so the bridge
    # constraint is unchanged.
    lifts = {x + ("b", "b", "b") for x in test_features}
    extended = make_space(sorted({x for x, _ in priv} | lifts))
    t_priv = privileged(test_space, extended, priv, to_test_features=to_test)

    scheme = SupervisionScheme(
        test_space, (t_standard, t_noisy, t_domain, t_priv), loss
    )
    return default_weights(scheme)


def _learning_rep(config: ExperimentConfig, rep: int) -> list:
    rng = np.random.default_rng([config.seed, rep])
    labels = label_space()
    loss = LossMatrix.zero_one(labels)
    total = config.base_samples + config.growth_step * config.growth_steps

    pools = {}
    for name, window in (
        ("standard", UPPER_LEFT_2X2),
        ("noisy-labels", UPPER_LEFT_2X2),
        ("domain-adaptation", MIDDLE_COLUMN),
        ("privileged", ALL_BUT_TWO_CORNERS),
    ):
        boards = tictactoe_generate(rng, total, window=FULL_BOARD)
        pools[name] = [(board_feature(b, window), y) for b, y in boards]
    pools["noisy-labels"] = inject_noise(
        pools["noisy-labels"],
        rho_minus=config.rho_minus,
        rho_plus=config.rho_plus,
        seed=rng,
    )
    test_set = [
        (board_feature(board, UPPER_LEFT_2X2), y) for board, y in endgame_corpus()
    ]

    cache: dict = {}

    def accuracy_at(counts: dict) -> float:
        key = tuple(counts[t] for t in CURVE_TYPES)
        if key not in cache:
            scheme = _curve_scheme(
                config,
                labels,
                loss,
                pools["standard"][: counts["standard"]],
                pools["noisy-labels"][: counts["noisy-labels"]],
                pools["domain-adaptation"][: counts["domain-adaptation"]],
                pools["privileged"][: counts["privileged"]],
            )
            rule = _solved_rule(
                _grrm_problem(scheme, config, config.lambda_grid[0]), loss
            )
            cache[key] = evaluate(rule, test_set, loss).accuracy
        return cache[key]

    rows = []
    for grown in CURVE_TYPES:
        for step in range(config.growth_steps + 1):
            counts = {t: config.base_samples for t in CURVE_TYPES}
            counts[grown] += step * config.growth_step
            rows.append(
                {
                    "grown": grown,
                    "added_samples": step * config.growth_step,
                    "rep": rep,
                    "accuracy": accuracy_at(counts),
                }
            )
    return rows


def run_learning_curve(config: ExperimentConfig) -> ExperimentResult:
    """Grow one supervision type at a time and watch the test accuracy.

    Four sample pools (clean, label-noisy, shifted-domain, privileged) start
    at the same base size; each curve adds samples to a single pool.  The
    regularization weight stays fixed across the curve so growth effects are
    not confounded by model selection.
    """
    per_rep = []
    for rep in range(config.repetitions):
        per_rep.extend(_learning_rep(config, rep))
    aggregate = _aggregate(per_rep, ("grown", "added_samples"))
    return ExperimentResult("learning-curve", config, per_rep, aggregate, {})


# ---------------------------------------------------------------------------
# Tabular benchmark


def _benchmark_split(config, ingest_result, order):
    samples = ingest_result.samples
    train_idx = order[: config.train_rows]
    test_idx = order[config.train_rows :]
    train = [samples[i] for i in train_idx]
    test = [samples[i] for i in test_idx]
    return train, test


def _noisy_task(config, rng, train, test, labels, loss):
    noisy_train = inject_noise(
        train,
        rho_minus=config.rho_minus,
        rho_plus=config.rho_plus,
        seed=rng,
        labels=labels.elements,
    )
    clean_acc = evaluate(_erm_rule(train, labels, loss), test, loss).accuracy
    naive_acc = evaluate(_erm_rule(noisy_train, labels, loss), test, loss).accuracy

    def grrm_rule(samples, lam):
        features = sorted({x for x, _ in samples})
        test_space = product_space(make_space(features), labels)
        triple = noisy_labels(
            test_space, config.rho_minus, config.rho_plus, samples
        )
        scheme = SupervisionScheme(test_space, (triple,), loss)
        return _solved_rule(_grrm_problem(scheme, config, lam), loss)

    if len(config.lambda_grid) > 1:
        n_val = max(1, round(config.validation_fraction * len(noisy_train)))
        fit, val = noisy_train[:-n_val], noisy_train[-n_val:]
        lam = select_lambda(
            config.lambda_grid,
            lambda l: evaluate(grrm_rule(fit, l), val, loss).accuracy,
        )
    else:
        lam = config.lambda_grid[0]
    grrm_acc = evaluate(grrm_rule(noisy_train, lam), test, loss).accuracy
    return {"clean-erm": clean_acc, "naive": naive_acc, "grrm": grrm_acc}


def _semi_task(config, train, test, labels, loss):
    n_labeled = max(1, round(config.labeled_fraction * len(train)))
    n_unlabeled = round(config.unlabeled_fraction * len(train))
    labeled = train[:n_labeled]
    unlabeled = [x for x, _ in train[n_labeled : n_labeled + n_unlabeled]]
    baseline_acc = evaluate(_erm_rule(labeled, labels, loss), test, loss).accuracy
    features = sorted({x for x, _ in labeled} | set(unlabeled))
    test_space = product_space(make_space(features), labels)
    scheme = default_weights(semi_supervised(test_space, labeled, unlabeled, loss))
    rule = _solved_rule(
        _grrm_problem(scheme, config, config.lambda_grid[0]), loss
    )
    grrm_acc = evaluate(rule, test, loss).accuracy
    return {"labeled-erm": baseline_acc, "grrm": grrm_acc}


def run_benchmark(config: ExperimentConfig, dataset_path) -> ExperimentResult:
    """Noisy-label and semi-supervised comparisons on a binarized table."""
    # Coarser second feature keeps enough samples per induced cell.
    schema = IngestSchema(label="outcome", numeric={"u1": 8, "u2": 2})
    n_rows = len(ingest_csv(dataset_path, schema).samples)
    per_rep = []
    noisy_deltas = []
    semi_deltas = []
    for split in range(config.repetitions):
        rng = np.random.default_rng([config.seed, 1, split])
        order = rng.permutation(n_rows)
        ingest_result = ingest_csv(
            dataset_path, schema, fit_indices=order[: config.train_rows]
        )
        labels = ingest_result.label_space
        loss = LossMatrix.zero_one(labels)
        train, test = _benchmark_split(config, ingest_result, order)

        noisy = _noisy_task(config, rng, train, test, labels, loss)
        semi = _semi_task(config, train, test, labels, loss)
        noisy_deltas.append(noisy["grrm"] - noisy["naive"])
        semi_deltas.append(semi["grrm"] - semi["labeled-erm"])
        for method, acc in noisy.items():
            per_rep.append(
                {"task": "noisy-labels", "method": method, "rep": split, "accuracy": acc}
            )
        for method, acc in semi.items():
            per_rep.append(
                {"task": "semi-supervised", "method": method, "rep": split, "accuracy": acc}
            )
    aggregate = _aggregate(per_rep, ("task", "method"))
    noisy_mean, noisy_lo, noisy_hi = _paired_interval(noisy_deltas)
    semi_mean, semi_lo, semi_hi = _paired_interval(semi_deltas)
    summary = {
        "noisy_grrm_minus_naive": {
            "mean": noisy_mean,
            "ci95_low": noisy_lo,
            "ci95_high": noisy_hi,
        },
        "semi_grrm_minus_labeled": {
            "mean": semi_mean,
            "ci95_low": semi_lo,
            "ci95_high": semi_hi,
        },
    }
    return ExperimentResult("benchmark", config, per_rep, aggregate, summary)
