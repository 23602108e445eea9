"""End-to-end acceptance checks.

One test per criterion, run in numeric order.  Each prints a single
pass/fail line with the measured quantities so a captured run reads as a
checklist; the assert fires on the same condition the line reports.
"""

import itertools
import json
import time
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as scipy_stats

from grrm import (
    BridgeTriple,
    Distribution,
    GrrmProblem,
    LossMatrix,
    NormChoice,
    SolveStatus,
    SupervisionScheme,
    apply,
    default_weights,
    empirical_distribution,
    erm_backprojection,
    from_matrix,
    general_entropy,
    identity,
    make_space,
    noisy_labels,
    parallel,
    product_space,
    serial,
    solve,
    solve_rrm,
    standard,
    zero_one_entropy,
)
from grrm.harness.cli import main as cli_main
from grrm.harness.config import ExperimentConfig
from grrm.harness.experiments import (
    CURVE_TYPES,
    run_benchmark,
    run_learning_curve,
    run_noise_sweep,
)
from grrm.harness.ingest import write_synthetic_dataset


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def _random_space(rng, size, tag):
    return make_space([f"{tag}{i}" for i in range(size)])


def _random_transition(rng, source, target):
    kernel = rng.random((len(source), len(target))) + 1e-3
    kernel /= kernel.sum(axis=1, keepdims=True)
    return from_matrix(source, target, kernel)


def _random_distribution(rng, space):
    return Distribution(space, rng.dirichlet(np.ones(len(space))))


# ---------------------------------------------------------------------------
# 1. Composition algebra


def test_criterion_01_composition_algebra():
    rng = np.random.default_rng(11)
    worst_row = 0.0
    worst_fun = 0.0
    start = time.perf_counter()
    for _ in range(200):
        a, b, c, d, e = (int(rng.integers(1, 6)) for _ in range(5))
        sp_a = _random_space(rng, a, "a")
        sp_b = _random_space(rng, b, "b")
        sp_c = _random_space(rng, c, "c")
        sp_d = _random_space(rng, d, "d")
        sp_e = _random_space(rng, e, "e")
        s = _random_transition(rng, sp_a, sp_b)
        t = _random_transition(rng, sp_b, sp_c)
        u = _random_transition(rng, sp_d, sp_e)

        chain = serial(s, t)
        side = parallel(s, u)
        for kernel in (chain.kernel, side.kernel):
            worst_row = max(worst_row, float(np.abs(kernel.sum(axis=1) - 1.0).max()))
            worst_row = max(worst_row, max(0.0, float(-kernel.min())))

        q = _random_distribution(rng, sp_a)
        p = _random_distribution(rng, sp_d)
        nested = apply(t, apply(s, q))
        worst_fun = max(
            worst_fun, float(np.abs(apply(chain, q).mass - nested.mass).max())
        )
        joint = Distribution(product_space(sp_a, sp_d), np.kron(q.mass, p.mass))
        factored = np.kron(apply(s, q).mass, apply(u, p).mass)
        worst_fun = max(
            worst_fun, float(np.abs(apply(side, joint).mass - factored).max())
        )
    elapsed = time.perf_counter() - start
    ok = worst_row <= 1e-10 and worst_fun <= 1e-12 and elapsed < 1.0
    _report(
        1,
        ok,
        f"row stochastic {worst_row:.1e}, functoriality {worst_fun:.1e}, "
        f"{elapsed:.2f}s over 200 pairs",
    )


# ---------------------------------------------------------------------------
# 2. Entropy oracle


def _rule_minimum(shaped, loss_values, n_labels):
    # Exhaustive scan over deterministic prediction rules, pure python.
    best = None
    for rule in itertools.product(range(n_labels), repeat=shaped.shape[0]):
        risk = 0.0
        for i, pred in enumerate(rule):
            for j in range(n_labels):
                risk += loss_values[pred][j] * shaped[i, j]
        if best is None or risk < best:
            best = risk
    return best


def test_criterion_02_entropy_oracle():
    rng = np.random.default_rng(22)
    worst = 0.0
    exact_matches = 0
    start = time.perf_counter()
    for trial in range(500):
        nx = int(rng.integers(1, 5))
        ny = int(rng.integers(2, 4))
        space = product_space(_random_space(rng, nx, "x"), _random_space(rng, ny, "y"))
        mass = rng.dirichlet(np.ones(nx * ny))
        if trial % 5 == 0 and nx * ny > 2:
            # Sparse supports hit the zero-mass branches too.
            mass[: nx * ny // 2] = 0.0
            mass /= mass.sum()
        dist = Distribution(space, mass)
        labels = space.factors[1]
        loss = LossMatrix.zero_one(labels)
        shaped = dist.mass.reshape(nx, ny)

        brute = _rule_minimum(shaped, loss.values.tolist(), ny)
        worst = max(worst, abs(general_entropy(dist, loss) - brute))

        # Closed-form check: one minus the summed per-feature maxima,
        # accumulated left to right so the float arithmetic is identical.
        total = 0.0
        for i in range(nx):
            total += float(shaped[i].max())
        if zero_one_entropy(dist) == 1.0 - total:
            exact_matches += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and exact_matches == 500 and elapsed < 5.0
    _report(
        2,
        ok,
        f"brute-force gap {worst:.1e}, sum form exact {exact_matches}/500, "
        f"{elapsed:.2f}s",
    )


# ---------------------------------------------------------------------------
# 3. Plug-in inversion goes negative


def test_criterion_03_erm_backprojection_entry():
    features = make_space(["x1", "x2"])
    labels = make_space([-1, 1])
    space = product_space(features, labels)
    worst = 0.0
    for n in (10, 100):
        # One lone instance at x2 among n samples; the rest sit at x1.
        negatives = 2 * (n - 1) // 3
        samples = (
            [("x1", -1)] * negatives
            + [("x1", 1)] * (n - 1 - negatives)
            + [("x2", 1)]
        )
        assert len(samples) == n
        triple = noisy_labels(space, 0.1, 0.3, samples)
        _, report = erm_backprojection(triple)
        expected = -0.3 / (n * (1.0 - 0.1 - 0.3))
        worst = max(worst, abs(report.minimum_entry - expected))
        assert report.minimum_element == ("x2", -1)
    ok = worst <= 1e-12
    _report(3, ok, f"entries -0.05 and -0.005 reproduced, max error {worst:.1e}")


# ---------------------------------------------------------------------------
# 4. Solver versus exhaustive grid


_GRID_STEPS = 50  # resolution 0.02


@lru_cache(maxsize=None)
def _compositions(total, parts):
    if parts == 1:
        return np.array([[total]], dtype=np.int16)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        lead = np.full((len(rest), 1), first, dtype=np.int16)
        blocks.append(np.hstack([lead, rest]))
    return np.vstack(blocks)


def _grid_minimum(nx, ny, loss_values, mats, shifts, weights, lam):
    """Exhaustive objective minimum over the step-0.02 simplex grid."""
    grid = _compositions(_GRID_STEPS, nx * ny)
    best = np.inf
    chunk = 400_000
    for lo in range(0, len(grid), chunk):
        g = grid[lo : lo + chunk].astype(float) / _GRID_STEPS
        obj = np.zeros(len(g))
        for a_mat, b_vec, w in zip(mats, shifts, weights):
            obj += w * np.abs(g @ a_mat.T - b_vec).max(axis=1)
        scores = g.reshape(len(g), nx, ny) @ loss_values.T
        obj -= lam * scores.min(axis=2).sum(axis=1)
        best = min(best, float(obj.min()))
    return best


def test_criterion_04_solver_matches_grid_search():
    rng = np.random.default_rng(2024)
    sizes = [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)]
    worst_gap = 0.0
    worst_excess = 0.0
    start = time.perf_counter()
    for _ in range(50):
        nx, ny = sizes[rng.integers(0, len(sizes))]
        joint = product_space(
            _random_space(rng, nx, "f"), _random_space(rng, ny, "y")
        )
        nz = nx * ny
        triples = []
        for i in range(int(rng.integers(1, 3))):
            kernel = rng.random((nz, nz)) + 0.05
            kernel /= kernel.sum(axis=1, keepdims=True)
            counts = rng.multinomial(_GRID_STEPS, np.full(nz, 1.0 / nz))
            # Identity on the training side keeps the feasible set equal to
            # the whole simplex, so the grid scan is a true oracle.
            triples.append(
                BridgeTriple(
                    f"tr{i}",
                    from_matrix(joint, joint, kernel),
                    identity(joint),
                    Distribution(joint, counts / _GRID_STEPS),
                    float(rng.uniform(0.5, 1.5)),
                    1,
                )
            )
        loss = LossMatrix.zero_one(joint.factors[1])
        scheme = SupervisionScheme(joint, tuple(triples), loss)
        lam = float(rng.uniform(0.05, 0.4))
        sol = solve(GrrmProblem(scheme, lam, norm=NormChoice.MAX_ABS))
        assert sol.status is SolveStatus.OPTIMAL

        grid_min = _grid_minimum(
            nx,
            ny,
            loss.values,
            [t.test_to_bridge.kernel.T for t in triples],
            [t.empirical.mass for t in triples],
            [t.weight for t in triples],
            lam,
        )
        worst_excess = max(worst_excess, sol.objective - grid_min)
        worst_gap = max(worst_gap, grid_min - sol.objective)
    elapsed = time.perf_counter() - start
    ok = worst_excess <= 1e-8 and worst_gap <= 1e-2 and elapsed < 120.0
    _report(
        4,
        ok,
        f"grid gap {worst_gap:.2e} (cap 1e-2), solver excess {worst_excess:.1e}, "
        f"{elapsed:.1f}s over 50 instances",
    )


# ---------------------------------------------------------------------------
# 5. Reduction to the standard-supervision solver


def test_criterion_05_single_standard_triple_reduces():
    rng = np.random.default_rng(55)
    norms = (NormChoice.MAX_ABS, NormChoice.EUCLIDEAN, NormChoice.SUM_ABS)
    worst = 0.0
    for instance in range(50):
        nx = int(rng.integers(1, 4))
        ny = int(rng.integers(2, 4))
        space = product_space(_random_space(rng, nx, "x"), _random_space(rng, ny, "y"))
        n = int(rng.integers(20, 120))
        samples = [space.elements[i] for i in rng.integers(0, len(space), size=n)]
        lam = float(rng.uniform(0.01, 1.0))
        norm = norms[instance % 3]

        scheme = SupervisionScheme(
            space, (standard(space, samples),), LossMatrix.zero_one(space.factors[1])
        )
        general = solve(GrrmProblem(scheme, lam, norm=norm))
        reduced = solve_rrm(empirical_distribution(samples, space), lam, norm=norm)
        assert general.status is SolveStatus.OPTIMAL
        assert reduced.status is SolveStatus.OPTIMAL
        worst = max(worst, abs(general.objective - reduced.objective))
    ok = worst <= 1e-8
    _report(5, ok, f"max objective difference {worst:.1e} over 50 instances")


# ---------------------------------------------------------------------------
# 6. Feasibility certificates


def _check_distribution(dist, space):
    assert isinstance(dist, Distribution)
    assert dist.space.matches(space)
    assert float(dist.mass.min()) >= 0.0
    assert abs(float(dist.mass.sum()) - 1.0) <= 1e-9
    assert not dist.mass.flags.writeable


def test_criterion_06_feasibility_certificates():
    rng = np.random.default_rng(66)
    norms = (NormChoice.MAX_ABS, NormChoice.EUCLIDEAN, NormChoice.SUM_ABS)
    worst_residual = 0.0
    solved = 0
    for round_idx in range(8):
        nx = int(rng.integers(2, 4))
        space = product_space(_random_space(rng, nx, "x"), make_space(["n", "p"]))
        draw = lambda n: [
            space.elements[i] for i in rng.integers(0, len(space), size=n)
        ]
        schemes = [
            SupervisionScheme(
                space, (standard(space, draw(40)),), LossMatrix.zero_one(space.factors[1])
            ),
            SupervisionScheme(
                space,
                (noisy_labels(space, 0.1, 0.3, draw(40)),),
                LossMatrix.zero_one(space.factors[1]),
            ),
            default_weights(
                SupervisionScheme(
                    space,
                    (standard(space, draw(30)), noisy_labels(space, 0.1, 0.3, draw(50))),
                    LossMatrix.zero_one(space.factors[1]),
                )
            ),
        ]
        for scheme_idx, scheme in enumerate(schemes):
            sol = solve(
                GrrmProblem(scheme, 0.05, norm=norms[(round_idx + scheme_idx) % 3])
            )
            assert sol.status is SolveStatus.OPTIMAL
            solved += 1
            _check_distribution(sol.q_star, space)
            assert len(sol.witnesses) == len(scheme.triples)
            for triple, witness in zip(scheme.triples, sol.witnesses):
                _check_distribution(witness, triple.train_to_bridge.source)
                # Residual recomputed from kernels, not trusted from the solver.
                pushed_q = apply(triple.test_to_bridge, sol.q_star).mass
                pushed_w = apply(triple.train_to_bridge, witness).mass
                worst_residual = max(
                    worst_residual, float(np.abs(pushed_q - pushed_w).max())
                )
            assert sol.feasibility_residual <= 1e-6
    ok = worst_residual <= 1e-6
    _report(
        6,
        ok,
        f"max recomputed bridge residual {worst_residual:.1e} over {solved} solves",
    )


# ---------------------------------------------------------------------------
# 7. Noise sweep, directional


def test_criterion_07_noise_sweep_directional():
    start = time.perf_counter()
    result = run_noise_sweep(ExperimentConfig(kind="noise-sweep"))
    elapsed = time.perf_counter() - start
    means = {
        (row["eta"], row["method"]): row["mean_accuracy"] for row in result.aggregate
    }
    zero = [means[(0.0, m)] for m in ("benchmark", "naive", "grrm")]
    spread = max(zero) - min(zero)
    directional = all(
        means[(eta, "grrm")] >= means[(eta, "naive")]
        and means[(eta, "benchmark")] >= means[(eta, "grrm")]
        for eta in (0.2, 0.3, 0.4)
    )
    ok = spread <= 0.02 and directional and elapsed < 900.0
    _report(
        7,
        ok,
        f"zero-noise spread {spread:.4f} (cap 0.02), ordering holds at "
        f"eta>=0.2: {directional}, {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# 8. Learning curves, directional


def test_criterion_08_learning_curves_directional():
    start = time.perf_counter()
    result = run_learning_curve(ExperimentConfig(kind="learning-curve"))
    elapsed = time.perf_counter() - start
    acc = {
        (row["grown"], row["added_samples"], row["rep"]): row["accuracy"]
        for row in result.per_rep
    }
    steps = sorted({row["added_samples"] for row in result.per_rep})
    reps = sorted({row["rep"] for row in result.per_rep})

    min_p = 1.0
    gains = {}
    for curve in CURVE_TYPES:
        for prev, nxt in zip(steps, steps[1:]):
            deltas = np.array(
                [acc[(curve, nxt, rep)] - acc[(curve, prev, rep)] for rep in reps]
            )
            if np.abs(deltas).max() > 1e-15:
                # One-sided paired test: a mean decrease must not be
                # significant at the 5% level.
                p = float(
                    scipy_stats.ttest_1samp(deltas, 0.0, alternative="less").pvalue
                )
                min_p = min(min_p, p)
        gains[curve] = float(
            np.mean(
                [acc[(curve, steps[-1], r)] - acc[(curve, steps[0], r)] for r in reps]
            )
        )
    informative = gains["standard"] + gains["privileged"]
    weak = gains["noisy-labels"] + gains["domain-adaptation"]
    ok = min_p >= 0.05 and informative > weak and elapsed < 1800.0
    _report(
        8,
        ok,
        f"smallest step p-value {min_p:.3f} (floor 0.05), gains "
        f"{informative:.4f} > {weak:.4f}, {elapsed:.0f}s",
    )


# ---------------------------------------------------------------------------
# 9. Tabular benchmark margin


def test_criterion_09_benchmark_margin(tmp_path):
    dataset = write_synthetic_dataset(tmp_path / "synthetic.csv")
    result = run_benchmark(ExperimentConfig(kind="benchmark"), dataset)
    interval = result.summary["noisy_grrm_minus_naive"]
    ok = interval["ci95_low"] > 0.0
    _report(
        9,
        ok,
        f"noisy-label accuracy margin {interval['mean']:.4f}, 95% CI "
        f"[{interval['ci95_low']:.4f}, {interval['ci95_high']:.4f}] excludes 0",
    )


# ---------------------------------------------------------------------------
# 10. Byte-identical reruns


def test_criterion_10_deterministic_outputs(tmp_path):
    configs = {
        "noise-sweep": {
            "kind": "noise-sweep",
            "noise_grid": [0.0, 0.2],
            "repetitions": 2,
            "train_boards": 60,
            "seed": 3,
        },
        "learning-curve": {
            "kind": "learning-curve",
            "repetitions": 2,
            "base_samples": 20,
            "growth_step": 20,
            "growth_steps": 1,
            "seed": 3,
        },
        "benchmark": {
            "kind": "benchmark",
            "dataset_rows": 600,
            "train_rows": 200,
            "repetitions": 2,
            "seed": 3,
        },
    }
    compared = 0
    for kind, payload in configs.items():
        config_path = tmp_path / f"{kind}.json"
        config_path.write_text(json.dumps(payload))
        out_a = tmp_path / f"{kind}-a"
        out_b = tmp_path / f"{kind}-b"
        for out in (out_a, out_b):
            code = cli_main(
                ["experiment", kind, "--config", str(config_path), "--out", str(out)]
            )
            assert code == 0
        names_a = sorted(p.name for p in out_a.iterdir())
        names_b = sorted(p.name for p in out_b.iterdir())
        assert names_a == names_b and names_a
        for name in names_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), (
                f"{kind}/{name} differs between reruns"
            )
            compared += 1
    _report(
        10,
        True,
        f"{compared} output files byte-identical across reruns of all three kinds",
    )
