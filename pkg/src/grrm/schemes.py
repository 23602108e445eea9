"""Supervision schemes: how training data relates to the test domain.

Each supervision type is captured by a bridge triple.  Training samples are
drawn from a training space, and two transitions map the test joint and the
training joint into a common bridge space where their statistics are
compared.  A scheme bundles one or more triples over a shared test space.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import transitions as tr
from .spaces import (
    Distribution,
    FiniteSpace,
    LossMatrix,
    empirical_distribution,
    feature_label_split,
    make_space,
    product_space,
)


@dataclass(frozen=True, eq=False)
class BridgeTriple:
    """One source of supervision.

    ``test_to_bridge`` maps the test joint into the bridge space and
    ``train_to_bridge`` maps the training joint into the same bridge space;
    ``empirical`` is the observed training distribution.
    """

    name: str
    test_to_bridge: tr.Transition
    train_to_bridge: tr.Transition
    empirical: Distribution
    weight: float = 1.0
    sample_count: int = 1

    def __post_init__(self) -> None:
        if not self.test_to_bridge.target.matches(self.train_to_bridge.target):
            raise ValueError("test and training transitions target different bridges")
        if not self.empirical.space.matches(self.train_to_bridge.source):
            raise ValueError("empirical distribution is not over the training space")
        if not (math.isfinite(self.weight) and self.weight > 0):
            raise ValueError("triple weight must be positive")
        if self.sample_count < 1:
            raise ValueError("sample count must be at least one")

    @property
    def training_space(self) -> FiniteSpace:
        return self.train_to_bridge.source

    @property
    def bridge_space(self) -> FiniteSpace:
        return self.test_to_bridge.target


@dataclass(frozen=True, eq=False)
class SupervisionScheme:
    """A test space, a loss, and the bridge triples tying data to it."""

    test_space: FiniteSpace
    triples: tuple[BridgeTriple, ...]
    loss: LossMatrix

    def __post_init__(self) -> None:
        object.__setattr__(self, "triples", tuple(self.triples))
        if not self.triples:
            raise ValueError("a scheme needs at least one bridge triple")
        feature_label_split(self.test_space)
        for t in self.triples:
            if not t.test_to_bridge.source.matches(self.test_space):
                raise ValueError(
                    f"triple {t.name!r} does not start from the test space"
                )
        _, label_space = feature_label_split(self.test_space)
        if not self.loss.true_space.matches(label_space):
            raise ValueError("loss matrix is over a different label space")

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(t.weight for t in self.triples)


def _empirical(samples: Sequence, space: FiniteSpace) -> tuple[Distribution, int]:
    samples = list(samples)
    return empirical_distribution(samples, space), len(samples)


def _scheme(test_space, triples, loss=None) -> SupervisionScheme:
    if loss is None:
        _, label_space = feature_label_split(test_space)
        loss = LossMatrix.zero_one(label_space)
    return SupervisionScheme(test_space, tuple(triples), loss)


def standard(test_space: FiniteSpace, samples: Sequence, weight: float = 1.0) -> BridgeTriple:
    """Clean labeled samples from the test distribution itself."""
    ident = tr.identity(test_space)
    emp, n = _empirical(samples, test_space)
    return BridgeTriple("standard", ident, ident, emp, weight, n)


def noisy_labels(
    test_space: FiniteSpace,
    rho_minus: float,
    rho_plus: float,
    samples: Sequence,
    weight: float = 1.0,
    name: str = "noisy-labels",
) -> BridgeTriple:
    """Labels flipped with known asymmetric rates; features untouched."""
    feature_space, label_space = feature_label_split(test_space)
    flip = tr.label_noise(rho_minus, rho_plus, label_space)
    test_to_bridge = tr.parallel(tr.identity(feature_space), flip)
    train_to_bridge = tr.identity(test_to_bridge.target)
    emp, n = _empirical(samples, train_to_bridge.source)
    return BridgeTriple(name, test_to_bridge, train_to_bridge, emp, weight, n)


def coarse_labels(
    test_space: FiniteSpace,
    label_map,
    coarse_space: FiniteSpace,
    samples: Sequence,
    weight: float = 1.0,
) -> BridgeTriple:
    """Labels observed only through a coarsening.

    ``label_map`` sends each fine label to the nonempty set of coarse labels
    it may be recorded as; a singleton set per label is plain relabeling.
    """
    feature_space, label_space = feature_label_split(test_space)
    coarsen = tr.set_valued(label_space, coarse_space, label_map)
    test_to_bridge = tr.parallel(tr.identity(feature_space), coarsen)
    train_to_bridge = tr.identity(test_to_bridge.target)
    emp, n = _empirical(samples, train_to_bridge.source)
    return BridgeTriple("coarse-labels", test_to_bridge, train_to_bridge, emp, weight, n)


def label_powerset(labels: FiniteSpace) -> FiniteSpace:
    """All nonempty label subsets, as tuples in label order."""
    subsets = []
    for r in range(1, len(labels) + 1):
        subsets.extend(itertools.combinations(labels.elements, r))
    return make_space(subsets)


def multiple_labels_map(labels: FiniteSpace) -> Callable:
    """Send each label to every subset containing it (candidate-set labels)."""
    power = label_powerset(labels)

    def func(y):
        return [s for s in power.elements if y in s]

    return func


def privileged(
    test_space: FiniteSpace,
    extended_features: FiniteSpace,
    samples: Sequence,
    to_test_features=None,
    weight: float = 1.0,
) -> BridgeTriple:
    """Training features are richer than what is available at test time.

    ``to_test_features`` maps an extended feature to the test feature it
    projects to; when omitted, extended features must be tuples whose leading
    components spell out the test feature.
    """
    feature_space, label_space = feature_label_split(test_space)
    if to_test_features is None:
        if feature_space.is_factorized:
            width = len(feature_space.factors)

            def to_test_features(v):
                return tuple(v[:width])

        else:

            def to_test_features(v):
                return v[0]

    if isinstance(to_test_features, tr.Transition):
        drop = to_test_features
    else:
        drop = tr.deterministic(extended_features, feature_space, to_test_features)
    test_to_bridge = tr.identity(test_space)
    train_to_bridge = tr.parallel(drop, tr.identity(label_space))
    emp, n = _empirical(samples, train_to_bridge.source)
    return BridgeTriple("privileged", test_to_bridge, train_to_bridge, emp, weight, n)


def trs_corrupted(
    test_space: FiniteSpace,
    corruption: tr.Transition,
    samples: Sequence,
    weight: float = 1.0,
) -> BridgeTriple:
    """Training features passed through a known corruption kernel."""
    feature_space, label_space = feature_label_split(test_space)
    if not corruption.source.matches(feature_space):
        raise ValueError("corruption must start from the test feature space")
    test_to_bridge = tr.parallel(corruption, tr.identity(label_space))
    train_to_bridge = tr.identity(test_to_bridge.target)
    emp, n = _empirical(samples, train_to_bridge.source)
    return BridgeTriple("trs-corrupted", test_to_bridge, train_to_bridge, emp, weight, n)


def representation_adaptation(
    test_space: FiniteSpace,
    training_space: FiniteSpace,
    test_repr: tr.Transition,
    train_repr: tr.Transition,
    samples: Sequence,
    weight: float = 1.0,
) -> BridgeTriple:
    """Test and training domains share only a common representation.

    Both transitions must land in the same bridge space.
    """
    if not test_repr.source.matches(test_space):
        raise ValueError("test representation must start from the test space")
    if not train_repr.source.matches(training_space):
        raise ValueError("training representation must start from the training space")
    if not test_repr.target.matches(train_repr.target):
        raise ValueError("representations land in different bridge spaces")
    emp, n = _empirical(samples, training_space)
    return BridgeTriple("representation-adaptation", test_repr, train_repr, emp, weight, n)


def combined(
    test_space: FiniteSpace,
    label_kernel: tr.Transition,
    feature_kernel: tr.Transition,
    samples: Sequence,
    weight: float = 1.0,
) -> BridgeTriple:
    """Noisy labels and corrupted features at once.

    ``label_kernel`` noises test labels into training labels;
    ``feature_kernel`` maps clean training features into test features.  The
    bridge carries test features with training labels.
    """
    feature_space, label_space = feature_label_split(test_space)
    if not label_kernel.source.matches(label_space):
        raise ValueError("label kernel must start from the test label space")
    if not feature_kernel.target.matches(feature_space):
        raise ValueError("feature kernel must land in the test feature space")
    test_to_bridge = tr.parallel(tr.identity(feature_space), label_kernel)
    train_to_bridge = tr.parallel(feature_kernel, tr.identity(label_kernel.target))
    emp, n = _empirical(samples, train_to_bridge.source)
    return BridgeTriple("combined", test_to_bridge, train_to_bridge, emp, weight, n)


def precise_labels(
    test_space: FiniteSpace,
    refinement: tr.Transition,
    samples: Sequence,
    weight: float = 1.0,
) -> BridgeTriple:
    """Training labels are finer than test labels, related by a refinement
    kernel from training labels to test labels."""
    feature_space, label_space = feature_label_split(test_space)
    if not refinement.target.matches(label_space):
        raise ValueError("refinement must land in the test label space")
    test_to_bridge = tr.identity(test_space)
    train_to_bridge = tr.parallel(tr.identity(feature_space), refinement)
    emp, n = _empirical(samples, train_to_bridge.source)
    return BridgeTriple("precise-labels", test_to_bridge, train_to_bridge, emp, weight, n)


def semi_supervised(
    test_space: FiniteSpace,
    labeled_samples: Sequence,
    unlabeled_samples: Sequence,
    loss: LossMatrix | None = None,
) -> SupervisionScheme:
    """A labeled triple plus, when present, a feature-only triple."""
    feature_space, _ = feature_label_split(test_space)
    triples = [standard(test_space, labeled_samples)]
    unlabeled_samples = list(unlabeled_samples)
    if unlabeled_samples:
        project = tr.deterministic(test_space, feature_space, lambda z: z[0])
        emp, n = _empirical(unlabeled_samples, feature_space)
        triples.append(
            BridgeTriple(
                "unlabeled", project, tr.identity(feature_space), emp, 1.0, n
            )
        )
    return _scheme(test_space, triples, loss)


def missing_features(
    test_space: FiniteSpace,
    complete_samples: Sequence,
    missing: Sequence[tuple[int, Sequence]],
    loss: LossMatrix | None = None,
) -> SupervisionScheme:
    """Some subsets of samples lack one feature component each.

    ``missing`` pairs a feature-component index with the samples observed
    without it; those samples must be (reduced feature tuple, label) pairs.
    """
    feature_space, label_space = feature_label_split(test_space)
    if not feature_space.is_factorized:
        raise ValueError("missing features need a factorized feature space")
    triples = [standard(test_space, complete_samples)]
    k = len(feature_space.factors)
    for component, samples in missing:
        if not 0 <= component < k:
            raise ValueError(f"component {component} out of range for {k} factors")
        kept = [j for j in range(k) if j != component]
        if len(kept) > 1:
            reduced = product_space(*(feature_space.factors[j] for j in kept))

            def drop(x, kept=tuple(kept)):
                return tuple(x[j] for j in kept)

        else:
            reduced = feature_space.factors[kept[0]]

            def drop(x, kept=tuple(kept)):
                return x[kept[0]]

        project = tr.parallel(
            tr.deterministic(feature_space, reduced, drop), tr.identity(label_space)
        )
        training_space = project.target
        emp, n = _empirical(samples, training_space)
        triples.append(
            BridgeTriple(
                f"missing-component-{component}",
                project,
                tr.identity(training_space),
                emp,
                1.0,
                n,
            )
        )
    return _scheme(test_space, triples, loss)


def variable_quality(
    test_space: FiniteSpace,
    rates: Sequence[tuple[float, float]],
    sample_subsets: Sequence[Sequence],
    loss: LossMatrix | None = None,
) -> SupervisionScheme:
    """Label noise at a different known rate per sample subset."""
    if len(rates) != len(sample_subsets):
        raise ValueError("need one rate pair per sample subset")
    if not rates:
        raise ValueError("need at least one sample subset")
    triples = []
    for i, ((rho_minus, rho_plus), samples) in enumerate(zip(rates, sample_subsets)):
        triples.append(
            noisy_labels(
                test_space, rho_minus, rho_plus, samples, name=f"quality-{i}"
            )
        )
    return _scheme(test_space, triples, loss)


def default_weights(scheme: SupervisionScheme) -> SupervisionScheme:
    """Reweight triples proportionally to the square root of sample counts."""
    roots = [math.sqrt(t.sample_count) for t in scheme.triples]
    total = sum(roots)
    triples = tuple(
        replace(t, weight=r / total) for t, r in zip(scheme.triples, roots)
    )
    return SupervisionScheme(scheme.test_space, triples, scheme.loss)


# ---------------------------------------------------------------------------
# Config-file loading


def _space_from_config(spec) -> FiniteSpace:
    if isinstance(spec, Mapping):
        if "components" in spec:
            parts = [make_space(tuple(c)) for c in spec["components"]]
            return product_space(*parts)
        if "values" in spec:
            return make_space(tuple(spec["values"]))
        raise ValueError("space config needs 'components' or 'values'")
    return make_space(tuple(spec))


def _parse_feature(text_fields: Sequence[str], feature_space: FiniteSpace):
    if feature_space.is_factorized:
        return tuple(text_fields)
    if len(text_fields) != 1:
        raise ValueError("expected a single feature column")
    return text_fields[0]


def read_labeled_samples(path, feature_space: FiniteSpace, label_space: FiniteSpace) -> list:
    """Read (feature, label) rows: feature columns first, label column last."""
    width = len(feature_space.factors) if feature_space.is_factorized else 1
    samples = []
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) != width + 1:
            raise ValueError(f"{path}: expected {width} feature columns and a label")
        for row in reader:
            if not row:
                continue
            x = _parse_feature(row[:width], feature_space)
            samples.append((x, row[width]))
    for x, y in samples:
        if x not in feature_space or y not in label_space:
            raise ValueError(f"sample ({x!r}, {y!r}) is outside the declared spaces")
    return samples


def read_feature_samples(path, feature_space: FiniteSpace) -> list:
    """Read feature-only rows (no label column)."""
    width = len(feature_space.factors) if feature_space.is_factorized else 1
    samples = []
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or len(header) != width:
            raise ValueError(f"{path}: expected {width} feature columns")
        for row in reader:
            if not row:
                continue
            samples.append(_parse_feature(row, feature_space))
    for x in samples:
        if x not in feature_space:
            raise ValueError(f"feature {x!r} is outside the declared space")
    return samples


def scheme_from_config(config: Mapping, base_dir=None) -> SupervisionScheme:
    """Build a scheme from a parsed JSON config.

    Required keys: ``features``, ``labels``, ``kind``, ``samples``.  Optional:
    ``parameters`` (kind-specific), ``weights`` (list or ``"auto"``).  Sample
    paths are resolved relative to ``base_dir``.
    """
    base = Path(base_dir) if base_dir is not None else Path(".")
    feature_space = _space_from_config(config["features"])
    label_space = _space_from_config(config["labels"])
    test_space = product_space(feature_space, label_space)
    kind = config["kind"]
    params = dict(config.get("parameters", {}))
    samples_spec = config["samples"]

    def labeled(path, fspace=feature_space, lspace=label_space):
        return read_labeled_samples(base / path, fspace, lspace)

    if kind == "standard":
        scheme = _scheme(test_space, [standard(test_space, labeled(samples_spec))])
    elif kind == "noisy-labels":
        triple = noisy_labels(
            test_space,
            float(params["rho_minus"]),
            float(params["rho_plus"]),
            labeled(samples_spec),
        )
        scheme = _scheme(test_space, [triple])
    elif kind == "trs-corrupted":
        if "kernel" in params:
            corruption = tr.kernel_from_csv(base / params["kernel"], feature_space, feature_space)
        else:
            flip = float(params["flip_prob"])
            if not feature_space.is_factorized:
                corruption = tr.symbol_noise(feature_space, flip)
            else:
                corruption = tr.parallel(
                    *(tr.symbol_noise(f, flip) for f in feature_space.factors)
                )
        scheme = _scheme(
            test_space, [trs_corrupted(test_space, corruption, labeled(samples_spec))]
        )
    elif kind == "combined":
        flip = float(params.get("flip_prob", 0.0))
        if not feature_space.is_factorized:
            feature_kernel = tr.symbol_noise(feature_space, flip)
        else:
            feature_kernel = tr.parallel(
                *(tr.symbol_noise(f, flip) for f in feature_space.factors)
            )
        label_kernel = tr.label_noise(
            float(params["rho_minus"]), float(params["rho_plus"]), label_space
        )
        scheme = _scheme(
            test_space,
            [combined(test_space, label_kernel, feature_kernel, labeled(samples_spec))],
        )
    elif kind == "precise-labels":
        fine_space = _space_from_config(params["fine_labels"])
        refinement = tr.kernel_from_csv(base / params["kernel"], fine_space, label_space)
        samples = read_labeled_samples(base / samples_spec, feature_space, fine_space)
        scheme = _scheme(test_space, [precise_labels(test_space, refinement, samples)])
    elif kind == "coarse-labels":
        groups = {name: tuple(fine) for name, fine in params["groups"].items()}
        coarse_space = make_space(tuple(groups))

        def label_map(y):
            return [name for name, fine in groups.items() if y in fine]

        samples = read_labeled_samples(base / samples_spec, feature_space, coarse_space)
        scheme = _scheme(
            test_space,
            [coarse_labels(test_space, label_map, coarse_space, samples)],
        )
    elif kind == "privileged":
        extra = [make_space(tuple(c)) for c in params["extra_components"]]
        base_factors = (
            list(feature_space.factors) if feature_space.is_factorized else [feature_space]
        )
        extended = product_space(*base_factors, *extra)
        samples = read_labeled_samples(base / samples_spec, extended, label_space)
        width = len(base_factors)
        triple = privileged(
            test_space,
            extended,
            samples,
            to_test_features=(
                (lambda v: tuple(v[:width])) if feature_space.is_factorized
                else (lambda v: v[0])
            ),
        )
        scheme = _scheme(test_space, [triple])
    elif kind == "semi-supervised":
        scheme = semi_supervised(
            test_space,
            labeled(samples_spec["labeled"]),
            read_feature_samples(base / samples_spec["unlabeled"], feature_space)
            if samples_spec.get("unlabeled")
            else [],
        )
    elif kind == "missing-features":
        missing = []
        for entry in samples_spec.get("missing", []):
            component = int(entry["component"])
            kept = [
                j
                for j in range(len(feature_space.factors))
                if j != component
            ]
            if len(kept) > 1:
                reduced = product_space(*(feature_space.factors[j] for j in kept))
            else:
                reduced = feature_space.factors[kept[0]]
            missing.append(
                (component, read_labeled_samples(base / entry["path"], reduced, label_space))
            )
        scheme = missing_features(test_space, labeled(samples_spec["complete"]), missing)
    elif kind == "variable-quality":
        rates = [(float(e["rho_minus"]), float(e["rho_plus"])) for e in samples_spec]
        subsets = [labeled(e["path"]) for e in samples_spec]
        scheme = variable_quality(test_space, rates, subsets)
    else:
        raise ValueError(f"unknown scheme kind {kind!r}")

    weights = config.get("weights", "auto")
    if weights == "auto":
        scheme = default_weights(scheme)
    else:
        if len(weights) != len(scheme.triples):
            raise ValueError("need one weight per triple")
        triples = tuple(
            replace(t, weight=float(w)) for t, w in zip(scheme.triples, weights)
        )
        scheme = SupervisionScheme(scheme.test_space, triples, scheme.loss)
    return scheme


def load_scheme(path) -> SupervisionScheme:
    """Read a JSON scheme config from disk."""
    path = Path(path)
    with path.open() as handle:
        config = json.load(handle)
    return scheme_from_config(config, base_dir=path.parent)
