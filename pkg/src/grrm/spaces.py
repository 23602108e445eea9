"""Finite supports, probability distributions, and loss matrices.

Everything downstream works over explicitly enumerated finite spaces:
feature alphabets, label sets, and their ordered Cartesian products.
Vectors and matrices are always indexed by the construction order of the
space elements, which for products is lexicographic in the factor order
(first factor slowest).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

# Construction-time tolerance for probability mass vectors.
MASS_TOL = 1e-12

# Signed measures keep normalization only, and only loosely.
SIGNED_TOL = 1e-9


@dataclass(frozen=True)
class FiniteSpace:
    """An ordered finite support set, optionally a product of factors.

    Elements must be hashable and pairwise distinct.  When ``factors`` is
    nonempty the elements must be exactly the lexicographic product of the
    factor elements; this is what :func:`product_space` builds.
    """

    elements: tuple
    factors: tuple["FiniteSpace", ...] = ()
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        elements = tuple(self.elements)
        object.__setattr__(self, "elements", elements)
        if not elements:
            raise ValueError("a finite space needs at least one element")
        index: dict = {}
        for i, e in enumerate(elements):
            if e in index:
                raise ValueError(f"duplicate element {e!r}")
            index[e] = i
        object.__setattr__(self, "_index", index)
        factors = tuple(self.factors)
        object.__setattr__(self, "factors", factors)
        if factors:
            expected = tuple(itertools.product(*(f.elements for f in factors)))
            if elements != expected:
                raise ValueError("elements do not match the factor product order")

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, element) -> bool:
        return element in self._index

    def index(self, element) -> int:
        try:
            return self._index[element]
        except (KeyError, TypeError):
            raise ValueError(f"{element!r} is not an element of the space") from None

    @property
    def is_factorized(self) -> bool:
        return bool(self.factors)

    @property
    def factor_sizes(self) -> tuple[int, ...]:
        return tuple(len(f) for f in self.factors)

    def matches(self, other: "FiniteSpace") -> bool:
        """True when both spaces carry the same elements in the same order.

        Factorization metadata is deliberately ignored; it only affects
        reshaping, not what the space is.
        """
        return self.elements == other.elements


@dataclass(frozen=True, eq=False)
class Distribution:
    """A probability vector over a finite space.

    Entries must be nonnegative and sum to one within ``MASS_TOL``; anything
    further off is rejected rather than silently repaired.  Roundoff-scale
    negatives are clamped to zero and the vector is renormalized exactly.
    """

    space: FiniteSpace
    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.array(self.mass, dtype=float)
        if mass.shape != (len(self.space),):
            raise ValueError(
                f"mass vector has shape {mass.shape}, expected ({len(self.space)},)"
            )
        if not np.all(np.isfinite(mass)):
            raise ValueError("mass vector has non-finite entries")
        if float(mass.min()) < -MASS_TOL:
            raise ValueError(f"negative probability mass {float(mass.min())!r}")
        np.clip(mass, 0.0, None, out=mass)
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"mass sums to {total!r}, not 1")
        if total != 1.0:
            mass = mass / total
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    def __call__(self, element) -> float:
        return float(self.mass[self.space.index(element)])

    @classmethod
    def uniform(cls, space: FiniteSpace) -> "Distribution":
        return cls(space, np.full(len(space), 1.0 / len(space)))

    @classmethod
    def point(cls, space: FiniteSpace, element) -> "Distribution":
        mass = np.zeros(len(space))
        mass[space.index(element)] = 1.0
        return cls(space, mass)

    def support(self) -> tuple:
        return tuple(e for e, m in zip(self.space.elements, self.mass) if m > 0)


@dataclass(frozen=True, eq=False)
class SignedMeasure:
    """A signed vector over a finite space, normalized to total mass one.

    Unlike :class:`Distribution` the entries may be negative; only the
    normalization is checked, and only within ``SIGNED_TOL``.  Used for
    back-projections of empirical data that need not stay on the simplex.
    """

    space: FiniteSpace
    mass: np.ndarray

    def __post_init__(self) -> None:
        mass = np.array(self.mass, dtype=float)
        if mass.shape != (len(self.space),):
            raise ValueError(
                f"mass vector has shape {mass.shape}, expected ({len(self.space)},)"
            )
        if not np.all(np.isfinite(mass)):
            raise ValueError("mass vector has non-finite entries")
        total = float(mass.sum())
        if abs(total - 1.0) > SIGNED_TOL:
            raise ValueError(f"signed measure sums to {total!r}, not 1")
        mass.flags.writeable = False
        object.__setattr__(self, "mass", mass)

    def __call__(self, element) -> float:
        return float(self.mass[self.space.index(element)])


@dataclass(frozen=True, eq=False)
class LossMatrix:
    """Loss values indexed by (predicted label, true label)."""

    predicted_space: FiniteSpace
    true_space: FiniteSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        shape = (len(self.predicted_space), len(self.true_space))
        if values.shape != shape:
            raise ValueError(f"loss matrix has shape {values.shape}, expected {shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("loss matrix has non-finite entries")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zero_one(cls, labels: FiniteSpace) -> "LossMatrix":
        n = len(labels)
        return cls(labels, labels, np.ones((n, n)) - np.eye(n))

    def loss(self, predicted, true) -> float:
        return float(
            self.values[self.predicted_space.index(predicted), self.true_space.index(true)]
        )


def make_space(elements: Sequence) -> FiniteSpace:
    """Build a finite space from an ordered element sequence."""
    return FiniteSpace(tuple(elements))


def product_space(*spaces: FiniteSpace) -> FiniteSpace:
    """Ordered Cartesian product; the first factor varies slowest.

    A single argument is returned unchanged (no tuple wrapping).
    """
    if not spaces:
        raise ValueError("product of zero spaces")
    if len(spaces) == 1:
        return spaces[0]
    elements = tuple(itertools.product(*(s.elements for s in spaces)))
    return FiniteSpace(elements, factors=tuple(spaces))


def feature_label_split(space: FiniteSpace) -> tuple[FiniteSpace, FiniteSpace]:
    """Split a two-factor product space into (features, labels).

    The convention throughout is that the first factor carries features and
    the second carries labels.
    """
    if len(space.factors) != 2:
        raise ValueError("expected a two-factor feature-label product space")
    return space.factors[0], space.factors[1]


def empirical_distribution(samples: Sequence, space: FiniteSpace) -> Distribution:
    """Relative frequencies of the samples, all of which must lie in the space."""
    samples = list(samples)
    if not samples:
        raise ValueError("empty sample sequence")
    counts = np.zeros(len(space))
    for s in samples:
        counts[space.index(s)] += 1.0
    return Distribution(space, counts / len(samples))


def marginal(q: Distribution, component: int) -> Distribution:
    """Marginal of a distribution over one factor of its product space."""
    space = q.space
    if not space.is_factorized:
        raise ValueError("the space carries no factorization")
    k = len(space.factors)
    if not 0 <= component < k:
        raise ValueError(f"component {component} out of range for {k} factors")
    shaped = q.mass.reshape(space.factor_sizes)
    axes = tuple(i for i in range(k) if i != component)
    return Distribution(space.factors[component], shaped.sum(axis=axes))


def _rule_label(rule, x):
    if callable(rule):
        label = rule(x)
    elif isinstance(rule, Mapping):
        try:
            label = rule[x]
        except KeyError:
            raise ValueError(f"classification rule undefined at {x!r}") from None
    else:
        raise TypeError("rule must be a mapping or callable")
    if label is None:
        raise ValueError(f"classification rule undefined at {x!r}")
    return label


def expected_loss(q: Distribution, rule, loss: LossMatrix) -> float:
    """Risk of a deterministic rule under the joint distribution ``q``.

    ``rule`` maps features to predicted labels and must be defined on every
    feature of the space, mass or no mass.
    """
    feature_space, label_space = feature_label_split(q.space)
    if not loss.true_space.matches(label_space):
        raise ValueError("loss matrix is over a different label space")
    shaped = q.mass.reshape(len(feature_space), len(label_space))
    total = 0.0
    for i, x in enumerate(feature_space.elements):
        y_hat = _rule_label(rule, x)
        total += float(loss.values[loss.predicted_space.index(y_hat)] @ shaped[i])
    return total
