"""Probabilistic transformations between finite spaces.

A transition is a row-stochastic kernel: rows are indexed by source
elements, columns by target elements.  Transitions compose serially by
matrix product and in parallel by Kronecker product, which matches the
lexicographic order of :func:`grrm.spaces.product_space`.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import reduce
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .spaces import Distribution, FiniteSpace, product_space

# Row sums may be off by this much on input; rows are then renormalized.
ROW_TOL = 1e-9

# Entries may dip below zero by at most this much (clamped).
ENTRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Transition:
    """Row-stochastic kernel from ``source`` to ``target``."""

    source: FiniteSpace
    target: FiniteSpace
    kernel: np.ndarray

    def __post_init__(self) -> None:
        kernel = np.array(self.kernel, dtype=float)
        shape = (len(self.source), len(self.target))
        if kernel.shape != shape:
            raise ValueError(f"kernel has shape {kernel.shape}, expected {shape}")
        if not np.all(np.isfinite(kernel)):
            raise ValueError("kernel has non-finite entries")
        if float(kernel.min()) < -ENTRY_TOL:
            raise ValueError(f"negative kernel entry {float(kernel.min())!r}")
        np.clip(kernel, 0.0, None, out=kernel)
        rows = kernel.sum(axis=1)
        bad = np.abs(rows - 1.0) > ROW_TOL
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(f"row {i} sums to {float(rows[i])!r}, not 1")
        if not np.all(rows == 1.0):
            kernel = kernel / rows[:, None]
        kernel.flags.writeable = False
        object.__setattr__(self, "kernel", kernel)

    def __call__(self, source_element, target_element) -> float:
        return float(
            self.kernel[self.source.index(source_element), self.target.index(target_element)]
        )


def identity(space: FiniteSpace) -> Transition:
    return Transition(space, space, np.eye(len(space)))


def from_matrix(source: FiniteSpace, target: FiniteSpace, kernel) -> Transition:
    """Wrap an explicit matrix; validation happens in the constructor."""
    return Transition(source, target, kernel)


def apply(transition: Transition, q: Distribution) -> Distribution:
    """Push a distribution through a transition."""
    if not transition.source.matches(q.space):
        raise ValueError("distribution lives on a different space than the source")
    return Distribution(transition.target, transition.kernel.T @ q.mass)


def serial(first: Transition, second: Transition) -> Transition:
    """Compose two transitions: first, then second."""
    if not first.target.matches(second.source):
        raise ValueError("inner spaces do not match for serial composition")
    return Transition(first.source, second.target, first.kernel @ second.kernel)


def parallel(*transitions: Transition) -> Transition:
    """Independent product of transitions over the product spaces.

    The Kronecker order matches product_space: the first factor varies
    slowest in both the source and the target enumeration.
    """
    if not transitions:
        raise ValueError("parallel composition of zero transitions")
    if len(transitions) == 1:
        return transitions[0]
    source = product_space(*(t.source for t in transitions))
    target = product_space(*(t.target for t in transitions))
    kernel = reduce(np.kron, (t.kernel for t in transitions))
    return Transition(source, target, kernel)


def deterministic(source: FiniteSpace, target: FiniteSpace, func) -> Transition:
    """Point-mass rows given by a function or mapping from source to target."""
    kernel = np.zeros((len(source), len(target)))
    for i, v in enumerate(source.elements):
        w = func[v] if isinstance(func, Mapping) else func(v)
        kernel[i, target.index(w)] = 1.0
    return Transition(source, target, kernel)


def set_valued(source: FiniteSpace, target: FiniteSpace, func) -> Transition:
    """Uniform rows over a nonempty target set per source element.

    ``func`` maps each source element to an iterable of target elements.
    """
    kernel = np.zeros((len(source), len(target)))
    for i, v in enumerate(source.elements):
        values = func[v] if isinstance(func, Mapping) else func(v)
        cols = [target.index(w) for w in values]
        if not cols:
            raise ValueError(f"empty target set at {v!r}")
        kernel[i, cols] = 1.0 / len(cols)
    return Transition(source, target, kernel)


def label_noise(
    rho_minus: float, rho_plus: float, labels: FiniteSpace | None = None
) -> Transition:
    """Asymmetric binary label flipping.

    ``rho_minus`` is the probability that the first label is recorded as the
    second; ``rho_plus`` the reverse.  Requires ``rho_minus + rho_plus < 1``
    so the kernel stays invertible.
    """
    if labels is None:
        labels = FiniteSpace((-1, +1))
    if len(labels) != 2:
        raise ValueError("label noise needs a binary label space")
    if rho_minus < 0 or rho_plus < 0:
        raise ValueError("noise rates must be nonnegative")
    if rho_minus + rho_plus >= 1:
        raise ValueError("noise rates must satisfy rho_minus + rho_plus < 1")
    kernel = np.array([[1.0 - rho_minus, rho_minus], [rho_plus, 1.0 - rho_plus]])
    return Transition(labels, labels, kernel)


def symbol_noise(space: FiniteSpace, flip_prob: float) -> Transition:
    """Uniform symbol corruption: keep with probability 1 - flip_prob,
    otherwise move to one of the other symbols uniformly."""
    k = len(space)
    if not 0.0 <= flip_prob <= 1.0:
        raise ValueError("flip probability must lie in [0, 1]")
    if k == 1:
        if flip_prob > 0:
            raise ValueError("cannot flip symbols in a one-element space")
        return identity(space)
    off = flip_prob / (k - 1)
    kernel = np.full((k, k), off) + (1.0 - flip_prob - off) * np.eye(k)
    return Transition(space, space, kernel)


def conditional(
    q: Distribution,
    target_component: int,
    given_component: int,
    fallback: str | Distribution = "uniform",
) -> Transition:
    """Conditional distribution of one factor given another, as a transition.

    Rows whose conditioning marginal carries no mass get the fallback row:
    uniform by default, or an explicit distribution over the target factor.
    """
    space = q.space
    if not space.is_factorized:
        raise ValueError("the space carries no factorization")
    k = len(space.factors)
    if target_component == given_component:
        raise ValueError("target and given components must differ")
    for c in (target_component, given_component):
        if not 0 <= c < k:
            raise ValueError(f"component {c} out of range for {k} factors")
    given_space = space.factors[given_component]
    target_space = space.factors[target_component]
    shaped = q.mass.reshape(space.factor_sizes)
    moved = np.moveaxis(shaped, (given_component, target_component), (0, 1))
    joint = moved.reshape(len(given_space), len(target_space), -1).sum(axis=2)
    row_mass = joint.sum(axis=1)
    if isinstance(fallback, Distribution):
        if not fallback.space.matches(target_space):
            raise ValueError("fallback distribution is over the wrong space")
        fallback_row = fallback.mass
    elif fallback == "uniform":
        fallback_row = np.full(len(target_space), 1.0 / len(target_space))
    else:
        raise ValueError(f"unknown fallback {fallback!r}")
    kernel = np.empty_like(joint)
    for i in range(len(given_space)):
        if row_mass[i] > 0:
            kernel[i] = joint[i] / row_mass[i]
        else:
            kernel[i] = fallback_row
    return Transition(given_space, target_space, kernel)


def kernel_to_csv(transition: Transition, path) -> None:
    """Write a kernel with stringified element labels on both axes."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["source"] + [str(e) for e in transition.target.elements])
        for i, v in enumerate(transition.source.elements):
            writer.writerow([str(v)] + [f"{x:.17g}" for x in transition.kernel[i]])


def kernel_from_csv(path, source: FiniteSpace, target: FiniteSpace) -> Transition:
    """Read a kernel written by :func:`kernel_to_csv`.

    Rows and columns are matched to the given spaces by the string form of
    their elements, so arbitrary orderings in the file are accepted.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0][0] != "source":
        raise ValueError(f"{path} is not a kernel table")
    header = rows[0][1:]
    target_names = {str(e): j for j, e in enumerate(target.elements)}
    source_names = {str(e): i for i, e in enumerate(source.elements)}
    if sorted(header) != sorted(target_names):
        raise ValueError("column labels do not match the target space")
    col_of = [target_names[name] for name in header]
    kernel = np.full((len(source), len(target)), np.nan)
    for row in rows[1:]:
        if not row:
            continue
        if row[0] not in source_names:
            raise ValueError(f"unknown source element {row[0]!r}")
        i = source_names[row[0]]
        for j, value in zip(col_of, row[1:]):
            kernel[i, j] = float(value)
    if np.isnan(kernel).any():
        raise ValueError("kernel table does not cover the full source space")
    return Transition(source, target, kernel)
