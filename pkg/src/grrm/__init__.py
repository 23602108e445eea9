"""Generalized robust risk minimization over finite domains.

The package builds classifiers from non-standard supervision: noisy or
coarse labels, corrupted or privileged features, shifted domains, and
mixtures of all of these, by minimizing a worst-case risk over a
data-consistent set of joint distributions.
"""

from .classify import (
    EvaluationReport,
    PosteriorRule,
    WeightTable,
    evaluate,
    export_weights,
    posterior_rule,
    write_weights_csv,
)
from .objective import (
    NormChoice,
    Statistic,
    discrepancy,
    general_entropy,
    indicator_statistic,
    one_hot_statistic,
    resolve_statistic,
    statistic_from_csv,
    statistic_mean,
    zero_one_entropy,
)
from .schemes import (
    BridgeTriple,
    SupervisionScheme,
    coarse_labels,
    combined,
    default_weights,
    label_powerset,
    load_scheme,
    missing_features,
    multiple_labels_map,
    noisy_labels,
    precise_labels,
    privileged,
    read_feature_samples,
    read_labeled_samples,
    representation_adaptation,
    scheme_from_config,
    semi_supervised,
    standard,
    trs_corrupted,
    variable_quality,
)
from .solver import (
    BackprojectionReport,
    GrrmProblem,
    GrrmSolution,
    SolveStatus,
    UncertaintySpec,
    dump_problem,
    erm_backprojection,
    feasibility_probe,
    solve,
    solve_rrm,
    uncertainty_membership,
)
from .spaces import (
    Distribution,
    FiniteSpace,
    LossMatrix,
    SignedMeasure,
    empirical_distribution,
    expected_loss,
    feature_label_split,
    make_space,
    marginal,
    product_space,
)
from .transitions import (
    Transition,
    apply,
    conditional,
    deterministic,
    from_matrix,
    identity,
    kernel_from_csv,
    kernel_to_csv,
    label_noise,
    parallel,
    serial,
    set_valued,
    symbol_noise,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
