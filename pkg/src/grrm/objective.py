"""Objective ingredients: entropies, statistics, and discrepancies.

The robust objective trades off a discrepancy between transformed
distributions, measured through the means of finite statistics, against a
generalized entropy that rewards uncertain conditionals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .spaces import Distribution, FiniteSpace, LossMatrix, feature_label_split


class NormChoice(Enum):
    """Norm applied to statistic-mean differences.

    max-abs and sum-abs keep the whole program a linear program; euclidean
    needs second-order machinery.
    """

    MAX_ABS = "max-abs"
    SUM_ABS = "sum-abs"
    EUCLIDEAN = "euclidean"

    @classmethod
    def from_name(cls, name: str) -> "NormChoice":
        for choice in cls:
            if choice.value == name:
                return choice
        names = ", ".join(c.value for c in cls)
        raise ValueError(f"unknown norm {name!r}; expected one of {names}")

    def value_of(self, vector: np.ndarray) -> float:
        vector = np.asarray(vector, dtype=float)
        if self is NormChoice.MAX_ABS:
            return float(np.abs(vector).max())
        if self is NormChoice.SUM_ABS:
            return float(np.abs(vector).sum())
        return float(np.sqrt((vector * vector).sum()))


@dataclass(frozen=True, eq=False)
class Statistic:
    """A vector-valued statistic tabulated over a finite space.

    ``values`` has one row per space element and one column per coordinate.
    """

    space: FiniteSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != len(self.space):
            raise ValueError(
                f"statistic table has shape {values.shape}, expected ({len(self.space)}, k)"
            )
        if values.shape[1] < 1:
            raise ValueError("statistic needs at least one coordinate")
        if not np.all(np.isfinite(values)):
            raise ValueError("statistic table has non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])


def zero_one_entropy(q: Distribution) -> float:
    """One minus the total mass of the most likely label per feature."""
    feature_space, label_space = feature_label_split(q.space)
    shaped = q.mass.reshape(len(feature_space), len(label_space))
    return float(1.0 - shaped.max(axis=1).sum())


def general_entropy(q: Distribution, loss: LossMatrix) -> float:
    """Minimal pointwise risk summed over features.

    For the zero-one loss this reduces to :func:`zero_one_entropy`.
    """
    feature_space, label_space = feature_label_split(q.space)
    if not loss.true_space.matches(label_space):
        raise ValueError("loss matrix is over a different label space")
    shaped = q.mass.reshape(len(feature_space), len(label_space))
    scores = shaped @ loss.values.T
    return float(scores.min(axis=1).sum())


def statistic_mean(q: Distribution, statistic: Statistic) -> np.ndarray:
    if not statistic.space.matches(q.space):
        raise ValueError("statistic is tabulated over a different space")
    return statistic.values.T @ q.mass


def discrepancy(
    q1: Distribution,
    q2: Distribution,
    statistic: Statistic,
    norm: NormChoice = NormChoice.MAX_ABS,
) -> float:
    """Norm of the statistic-mean difference between two distributions."""
    return norm.value_of(statistic_mean(q1, statistic) - statistic_mean(q2, statistic))


def indicator_statistic(space: FiniteSpace) -> Statistic:
    """One indicator coordinate per element; its mean recovers the masses."""
    return Statistic(space, np.eye(len(space)))


def one_hot_statistic(space: FiniteSpace, feature_embedding=None) -> Statistic:
    """Label-gated affine feature statistic for binary labels.

    Per label value y the coordinates are (1{y}, 1{y} * phi(x)) where phi is
    the feature embedding, by default the concatenated one-hot encoding of
    the feature components.  The dimension is 2 * (1 + d).
    """
    feature_space, label_space = feature_label_split(space)
    if len(label_space) != 2:
        raise ValueError("one-hot statistic needs a binary label space")
    if feature_embedding is None:
        if feature_space.is_factorized:
            blocks = []
            for f in feature_space.factors:
                eye = np.eye(len(f))
                blocks.append({e: eye[i] for i, e in enumerate(f.elements)})

            def embed(x):
                return np.concatenate([blocks[i][c] for i, c in enumerate(x)])

        else:
            eye = np.eye(len(feature_space))

            def embed(x):
                return eye[feature_space.index(x)]

    else:
        embed = feature_embedding
    first = embed(feature_space.elements[0])
    d = int(np.asarray(first, dtype=float).shape[0])
    table = np.zeros((len(space), 2 * (1 + d)))
    for i, (x, y) in enumerate(space.elements):
        phi = np.asarray(embed(x), dtype=float)
        if phi.shape != (d,):
            raise ValueError("feature embedding has inconsistent dimension")
        if y == label_space.elements[0]:
            table[i, 0] = 1.0
            table[i, 1 : 1 + d] = phi
        else:
            table[i, 1 + d] = 1.0
            table[i, 2 + d :] = phi
    return Statistic(space, table)


def statistic_from_csv(path, space: FiniteSpace) -> Statistic:
    """Read a statistic table: one row per element, matched by string form."""
    path = Path(path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0][0] != "element":
        raise ValueError(f"{path} is not a statistic table")
    width = len(rows[0]) - 1
    names = {str(e): i for i, e in enumerate(space.elements)}
    table = np.full((len(space), width), np.nan)
    for row in rows[1:]:
        if not row:
            continue
        if row[0] not in names:
            raise ValueError(f"unknown element {row[0]!r}")
        table[names[row[0]]] = [float(v) for v in row[1:]]
    if np.isnan(table).any():
        raise ValueError("statistic table does not cover the full space")
    return Statistic(space, table)


def resolve_statistic(name: str, space: FiniteSpace) -> Statistic:
    """Look up a statistic by config name: a builtin or a CSV path."""
    if name == "indicator":
        return indicator_statistic(space)
    if name == "one-hot-affine":
        return one_hot_statistic(space)
    if name.endswith(".csv"):
        return statistic_from_csv(name, space)
    raise ValueError(f"unknown statistic {name!r}")
