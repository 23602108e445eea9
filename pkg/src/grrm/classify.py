"""Turning solved joints into classifiers and scoring them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import transitions as tr
from .spaces import Distribution, FiniteSpace, LossMatrix, feature_label_split

# Feature rows with no more mass than this fall back to the marginal rule.
ZERO_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PosteriorRule:
    """Deterministic classifier derived from a joint distribution.

    ``decision`` is total over the feature space; features outside the
    space get the fallback label.
    """

    feature_space: FiniteSpace
    label_space: FiniteSpace
    decision: dict
    fallback: object

    def __call__(self, x):
        if x in self.feature_space:
            return self.decision[x]
        return self.fallback


def posterior_rule(q: Distribution, loss: LossMatrix) -> PosteriorRule:
    """Minimize conditional expected loss per feature; ties take the first
    label in prediction order, zero-mass features the marginal minimizer."""
    feature_space, label_space = feature_label_split(q.space)
    if not loss.true_space.matches(label_space):
        raise ValueError("loss matrix is over a different label space")
    shaped = q.mass.reshape(len(feature_space), len(label_space))
    predicted = loss.predicted_space.elements
    marginal_scores = loss.values @ shaped.sum(axis=0)
    fallback = predicted[int(np.argmin(marginal_scores))]
    decision = {}
    for i, x in enumerate(feature_space.elements):
        row = shaped[i]
        if float(row.sum()) > ZERO_MASS_TOL:
            scores = loss.values @ row
            decision[x] = predicted[int(np.argmin(scores))]
        else:
            decision[x] = fallback
    return PosteriorRule(feature_space, loss.predicted_space, decision, fallback)


@dataclass(frozen=True)
class EvaluationReport:
    sample_count: int
    correct: int
    accuracy: float
    average_loss: float


def evaluate(rule, samples: Sequence, loss: LossMatrix) -> EvaluationReport:
    """Exact-count accuracy and average loss of a rule on labeled samples."""
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample sequence")
    correct = 0
    total_loss = 0.0
    for x, y in samples:
        if callable(rule):
            y_hat = rule(x)
        elif isinstance(rule, Mapping):
            y_hat = rule[x]
        else:
            raise TypeError("rule must be a mapping or callable")
        if y_hat == y:
            correct += 1
        total_loss += loss.loss(y_hat, y)
    n = len(samples)
    return EvaluationReport(n, correct, correct / n, total_loss / n)


@dataclass(frozen=True, eq=False)
class WeightTable:
    """Per-sample importance weights, mean one over the nonzero entries."""

    weights: np.ndarray
    zero_count: int

    def rows(self):
        return list(enumerate(self.weights.tolist()))


def export_weights(
    q: Distribution, samples: Sequence, bridge: tr.Transition | None = None
) -> WeightTable:
    """Weights proportional to the solved mass at each sample.

    When the samples live in a different space than ``q``, pass the
    transition that pushes ``q`` onto that space.  Samples with zero solved
    mass get weight zero and are counted, not dropped.
    """
    reference = q if bridge is None else tr.apply(bridge, q)
    raw = np.array([reference(z) for z in samples], dtype=float)
    nonzero = raw > 0
    table = np.zeros_like(raw)
    if nonzero.any():
        table[nonzero] = raw[nonzero] / raw[nonzero].mean()
    return WeightTable(table, int((~nonzero).sum()))


def write_weights_csv(table: WeightTable, path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["sample_index", "weight"])
        for i, w in table.rows():
            writer.writerow([i, f"{w:.12g}"])
