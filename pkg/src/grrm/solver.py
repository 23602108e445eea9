"""Robust risk minimization: problem statement, solve entry points, and
empirical-risk diagnostics.

The solved program minimizes the weighted sum of statistic-mean
discrepancies between the candidate joint (pushed to each bridge) and the
observed training data (pushed to the same bridge), minus a concave entropy
term scaled by the regularization weight.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import transitions as tr
from .lpsolve import SolveCertificate, solve_linear, solve_second_order
from .objective import (
    NormChoice,
    Statistic,
    discrepancy,
    general_entropy,
    indicator_statistic,
)
from .program import assemble_program, dump_lp
from .schemes import BridgeTriple, SupervisionScheme
from .spaces import (
    Distribution,
    FiniteSpace,
    LossMatrix,
    SignedMeasure,
    feature_label_split,
)

# Solver outputs may dip this far below zero before they are distrusted.
EXTRACTION_SLACK = 1e-6


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    TOLERANCE_NOT_MET = "tolerance-not-met"


@dataclass(frozen=True, eq=False)
class GrrmProblem:
    """A supervision scheme plus the objective knobs.

    ``statistics`` holds one statistic per triple (defaults to indicators
    over each bridge).  ``marginal_pin`` optionally fixes the feature
    marginal of the solution.
    """

    scheme: SupervisionScheme
    lam: float
    statistics: tuple | None = None
    norm: NormChoice = NormChoice.MAX_ABS
    marginal_pin: Distribution | None = None
    tolerance: float = 1e-6

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError("regularization weight must be positive")
        if self.lam < 1e-9:
            warnings.warn(
                "regularization weight is effectively zero; the argmin may be degenerate",
                stacklevel=2,
            )
        if not (math.isfinite(self.tolerance) and self.tolerance > 0):
            raise ValueError("solver tolerance must be positive")
        if self.statistics is not None:
            stats = tuple(self.statistics)
            if len(stats) != len(self.scheme.triples):
                raise ValueError("need one statistic per bridge triple")
            for stat, triple in zip(stats, self.scheme.triples):
                if not stat.space.matches(triple.bridge_space):
                    raise ValueError(
                        f"statistic for triple {triple.name!r} is over the wrong space"
                    )
            object.__setattr__(self, "statistics", stats)
        if self.marginal_pin is not None:
            feature_space, _ = feature_label_split(self.scheme.test_space)
            if not self.marginal_pin.space.matches(feature_space):
                raise ValueError("marginal pin is not over the test feature space")

    def resolved_statistics(self) -> tuple:
        if self.statistics is not None:
            return self.statistics
        return tuple(indicator_statistic(t.bridge_space) for t in self.scheme.triples)


@dataclass(frozen=True)
class UncertaintySpec:
    """Radius of the data-driven uncertainty set around the observations."""

    radius: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError("uncertainty radius must be positive")


@dataclass(frozen=True, eq=False)
class GrrmSolution:
    status: SolveStatus
    q_star: Distribution | None
    witnesses: tuple
    objective: float
    discrepancy_terms: tuple
    entropy: float
    feasibility_residual: float
    certificate: SolveCertificate
    note: str = ""


def _extract_distribution(vector: np.ndarray, space: FiniteSpace) -> Distribution:
    vector = np.asarray(vector, dtype=float)
    if float(vector.min()) < -EXTRACTION_SLACK:
        raise RuntimeError(
            f"solver returned mass {float(vector.min())!r}; not a simplex point"
        )
    vector = np.clip(vector, 0.0, None)
    total = float(vector.sum())
    if abs(total - 1.0) > EXTRACTION_SLACK:
        raise RuntimeError(f"solver returned total mass {total!r}; not a simplex point")
    return Distribution(space, vector / total)


def feasibility_probe(problem: GrrmProblem, q: Distribution | None = None) -> float:
    """Smallest worst-case bridge residual achievable for a fixed test joint.

    With the default uniform joint this is a quick diagnostic for infeasible
    programs: a strictly positive value means no witness family can meet the
    bridge constraints for that joint.
    """
    from scipy.optimize import linprog

    scheme = problem.scheme
    if q is None:
        q = Distribution.uniform(scheme.test_space)
    sizes = [len(t.training_space) for t in scheme.triples]
    n = sum(sizes) + 1
    t_col = n - 1
    c = np.zeros(n)
    c[t_col] = 1.0
    a_ub_rows = []
    b_ub = []
    a_eq_rows = []
    b_eq = []
    offset = 0
    for triple, size in zip(scheme.triples, sizes):
        target = triple.test_to_bridge.kernel.T @ q.mass
        k_train = triple.train_to_bridge.kernel
        for j in range(k_train.shape[1]):
            row = np.zeros(n)
            row[offset : offset + size] = k_train[:, j]
            row[t_col] = -1.0
            a_ub_rows.append(row.copy())
            b_ub.append(float(target[j]))
            row2 = np.zeros(n)
            row2[offset : offset + size] = -k_train[:, j]
            row2[t_col] = -1.0
            a_ub_rows.append(row2)
            b_ub.append(-float(target[j]))
        row = np.zeros(n)
        row[offset : offset + size] = 1.0
        a_eq_rows.append(row)
        b_eq.append(1.0)
        offset += size
    result = linprog(
        c,
        A_ub=np.array(a_ub_rows),
        b_ub=np.array(b_ub),
        A_eq=np.array(a_eq_rows),
        b_eq=np.array(b_eq),
        bounds=[(0, None)] * (n - 1) + [(0, None)],
        method="highs",
    )
    if result.status != 0:
        return float("nan")
    return float(result.fun)


def solve(problem: GrrmProblem) -> GrrmSolution:
    """Assemble and solve the program, then verify what came back."""
    program = assemble_program(problem)
    if problem.norm is NormChoice.EUCLIDEAN:
        x, cert = solve_second_order(program, problem.tolerance)
    else:
        x, cert = solve_linear(program, problem.tolerance)
    status = SolveStatus(cert.status)
    if x is None:
        note = ""
        if status is SolveStatus.INFEASIBLE:
            probe = feasibility_probe(problem)
            note = (
                "bridge constraints admit no common joint"
                f" (uniform-joint probe residual {probe:.3g})"
            )
            if problem.marginal_pin is not None:
                note += "; a marginal pin is active"
        return GrrmSolution(
            status, None, (), float("nan"), (), float("nan"), float("nan"), cert, note
        )

    scheme = problem.scheme
    q_star = _extract_distribution(x[program.blocks["q"]], scheme.test_space)
    witnesses = tuple(
        _extract_distribution(x[program.blocks[f"witness{i}"]], t.training_space)
        for i, t in enumerate(scheme.triples)
    )
    residual = 0.0
    for triple, witness in zip(scheme.triples, witnesses):
        pushed_q = triple.test_to_bridge.kernel.T @ q_star.mass
        pushed_w = triple.train_to_bridge.kernel.T @ witness.mass
        residual = max(residual, float(np.abs(pushed_q - pushed_w).max()))
    stats = problem.resolved_statistics()
    terms = tuple(
        discrepancy(
            tr.apply(triple.test_to_bridge, q_star),
            tr.apply(triple.train_to_bridge, triple.empirical),
            stat,
            problem.norm,
        )
        for triple, stat in zip(scheme.triples, stats)
    )
    entropy = general_entropy(q_star, scheme.loss)
    if status is SolveStatus.OPTIMAL and residual > problem.tolerance:
        status = SolveStatus.TOLERANCE_NOT_MET
    return GrrmSolution(
        status=status,
        q_star=q_star,
        witnesses=witnesses,
        objective=cert.objective,
        discrepancy_terms=terms,
        entropy=entropy,
        feasibility_residual=residual,
        certificate=cert,
    )


def solve_rrm(
    empirical: Distribution,
    lam: float,
    statistic: Statistic | None = None,
    norm: NormChoice = NormChoice.MAX_ABS,
    loss: LossMatrix | None = None,
    tolerance: float = 1e-6,
) -> GrrmSolution:
    """Plain robust risk minimization around one standard empirical sample."""
    space = empirical.space
    _, label_space = feature_label_split(space)
    ident = tr.identity(space)
    triple = BridgeTriple("standard", ident, ident, empirical, 1.0, 1)
    scheme = SupervisionScheme(
        space, (triple,), loss if loss is not None else LossMatrix.zero_one(label_space)
    )
    problem = GrrmProblem(
        scheme,
        lam,
        statistics=(statistic,) if statistic is not None else None,
        norm=norm,
        tolerance=tolerance,
    )
    return solve(problem)


def uncertainty_membership(
    q: Distribution, problem: GrrmProblem, spec: UncertaintySpec
) -> bool:
    """Whether the weighted discrepancy of ``q`` stays inside the radius."""
    stats = problem.resolved_statistics()
    total = 0.0
    for triple, stat in zip(problem.scheme.triples, stats):
        total += triple.weight * discrepancy(
            tr.apply(triple.test_to_bridge, q),
            tr.apply(triple.train_to_bridge, triple.empirical),
            stat,
            problem.norm,
        )
    return total < spec.radius


@dataclass(frozen=True)
class BackprojectionReport:
    """Negative-mass diagnosis of the plug-in inverse estimate."""

    negative_entries: tuple
    minimum_entry: float
    minimum_element: object
    is_distribution: bool


def erm_backprojection(triple: BridgeTriple) -> tuple[SignedMeasure, BackprojectionReport]:
    """Invert the test transition through the empirical distribution.

    Requires the training transition to be the identity and the test
    transition kernel to be square and invertible.  The result is the
    signed measure the plug-in inverse estimator would use; its negative
    entries are exactly what the robust formulation avoids.
    """
    k_train = triple.train_to_bridge
    if not k_train.source.matches(k_train.target) or not np.allclose(
        k_train.kernel, np.eye(len(k_train.source)), atol=1e-12
    ):
        raise ValueError("back-projection needs an identity training transition")
    k_test = triple.test_to_bridge.kernel
    if k_test.shape[0] != k_test.shape[1]:
        raise ValueError("test transition must be square to invert")
    try:
        mass = np.linalg.solve(k_test.T, triple.empirical.mass)
    except np.linalg.LinAlgError:
        raise ValueError("test transition is not invertible") from None
    measure = SignedMeasure(triple.test_to_bridge.source, mass)
    space = measure.space
    negatives = tuple(
        (e, float(v)) for e, v in zip(space.elements, mass) if v < -1e-12
    )
    min_idx = int(np.argmin(mass))
    report = BackprojectionReport(
        negative_entries=negatives,
        minimum_entry=float(mass[min_idx]),
        minimum_element=space.elements[min_idx],
        is_distribution=not negatives,
    )
    return measure, report


def dump_problem(problem: GrrmProblem) -> str:
    """LP-format text of the assembled program."""
    return dump_lp(assemble_program(problem))
