"""Multiple importance sampling laboratory.

Weighting schemes for sampling from a set of proposals (standard, full
deterministic mixture, partial mixture over a-priori random partitions,
and partial mixture over weight-driven a-posteriori partitions), the
associated moment estimators, and a reproducible MSE experiment harness.
"""

from .clustering import (
    EvalCounter,
    HereticalConfig,
    Partition,
    closest_proposal,
    hdm_weights,
    heretical_partition,
    random_partition,
)
from .core import (
    EstimateRecord,
    MomentFunction,
    ProposalSet,
    SampleSet,
    WeightVector,
    draw_mis_samples,
    estimate_record,
    estimate_self_normalized,
    estimate_unnormalized,
    estimate_z,
    max_normalized_weight,
    normalize_weights,
    weights_dm,
    weights_partial,
    weights_standard,
)
from .distributions import (
    GaussianParams,
    MixtureSpec,
    StudentTParams,
    TargetSpec,
    eval_gaussian,
    eval_mixture,
    eval_student_t,
    reference_mean,
    sample,
)
from .experiments import (
    SCHEMES,
    ExperimentConfig,
    ProposalGrid,
    RunResult,
    SummaryRow,
    builtin_example1,
    builtin_example2,
    get_example,
    load_config,
    print_table,
    run_cell,
    run_experiment,
    run_experiment_detailed,
    run_seed,
    run_single,
    write_csv,
    write_runs_csv,
)

__version__ = "0.1.0"
