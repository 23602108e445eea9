"""Writing experiment outputs: delimited tables, JSON summaries, figures.

Output files carry the config fingerprint and no timestamps, so rerunning
the same configuration reproduces them byte for byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiments import CURVE_TYPES, ExperimentResult


def _format(value):
    if isinstance(value, float):
        return f"{value:.12g}"
    return value


def _write_rows(path: Path, fingerprint: str, header, rows) -> None:
    with path.open("w", newline="") as handle:
        handle.write(f"# config {fingerprint}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format(row[k]) for k in header])


def read_rows(path) -> list:
    """Read back a table written by this module, skipping the fingerprint."""
    with Path(path).open(newline="") as handle:
        lines = [l for l in handle if not l.startswith("#")]
    reader = csv.DictReader(lines)
    return list(reader)


def _render_noise_sweep(result: ExperimentResult, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, marker in (("benchmark", "s"), ("naive", "^"), ("grrm", "o")):
        points = [r for r in result.aggregate if r["method"] == method]
        xs = [r["rho_plus"] for r in points]
        ys = [r["mean_accuracy"] for r in points]
        errs = [r["std_accuracy"] for r in points]
        ax.errorbar(xs, ys, yerr=errs, marker=marker, capsize=3, label=method)
    ax.set_xlabel("label flip rate rho+ (= cell noise eta)")
    ax.set_ylabel("test accuracy")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_learning_curve(result: ExperimentResult, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for grown, marker in zip(CURVE_TYPES, "os^d"):
        points = [r for r in result.aggregate if r["grown"] == grown]
        xs = [r["added_samples"] for r in points]
        ys = [r["mean_accuracy"] for r in points]
        errs = [r["std_accuracy"] for r in points]
        ax.errorbar(xs, ys, yerr=errs, marker=marker, capsize=3, label=grown)
    ax.set_xlabel("samples added to one supervision type")
    ax.set_ylabel("test accuracy")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_benchmark(result: ExperimentResult, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    labels = [f"{r['task']}\n{r['method']}" for r in result.aggregate]
    means = [r["mean_accuracy"] for r in result.aggregate]
    errs = [r["std_accuracy"] for r in result.aggregate]
    positions = range(len(labels))
    ax.bar(positions, means, yerr=errs, capsize=3, color="#4878a8")
    ax.set_xticks(list(positions))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("test accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


_HEADERS = {
    "noise-sweep": (
        ("rho_plus", "eta", "method", "mean_accuracy", "std_accuracy", "repetitions"),
        ("rho_plus", "eta", "method", "rep", "accuracy"),
        _render_noise_sweep,
    ),
    "learning-curve": (
        ("grown", "added_samples", "mean_accuracy", "std_accuracy", "repetitions"),
        ("grown", "added_samples", "rep", "accuracy"),
        _render_learning_curve,
    ),
    "benchmark": (
        ("task", "method", "mean_accuracy", "std_accuracy", "repetitions"),
        ("task", "method", "rep", "accuracy"),
        _render_benchmark,
    ),
}


def write_result(result: ExperimentResult, out_dir) -> dict:
    """Write aggregate CSV, per-repetition CSV, summary JSON, and figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = result.kind.replace("-", "_")
    agg_header, rep_header, render = _HEADERS[result.kind]
    fingerprint = result.config.fingerprint()

    paths = {
        "aggregate": out_dir / f"{stem}.csv",
        "samples": out_dir / f"{stem}_samples.csv",
        "figure": out_dir / f"{stem}.png",
        "summary": out_dir / "summary.json",
    }
    _write_rows(paths["aggregate"], fingerprint, agg_header, result.aggregate)
    _write_rows(paths["samples"], fingerprint, rep_header, result.per_rep)
    render(result, paths["figure"])
    summary = {
        "kind": result.kind,
        "fingerprint": fingerprint,
        "config": result.config.to_dict(),
        "aggregate": result.aggregate,
        **result.summary,
    }
    with paths["summary"].open("w") as handle:
        json.dump(summary, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return paths
