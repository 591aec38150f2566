"""Hierarchical semi-Markov CRF inference and benchmarking."""

from ._version import __version__
from .configurations import (
    Configuration,
    SegmentationTree,
    enumerate_configurations,
    enumerate_transition_sequences,
    is_valid_configuration,
    minimal_configuration,
    segmentation_from_e,
    transition_levels_from_segmentation,
)
from .exact import (
    SLICE_STATE_CAP,
    BrutePosterior,
    MarginalSet,
    SliceChain,
    TreeEngine,
    brute_force_posterior,
    exact_marginals,
    read_marginals,
    sample_states_given_e,
    tree_log_sum,
    tree_state_marginals,
    write_marginals,
)
from .experiments import (
    CONVERGENCE_CHECKPOINTS,
    ExperimentPlan,
    budget_iterations,
    run_convergence_study,
    run_scaling_study,
)
from .metrics import (
    ComparisonReport,
    avg_kl,
    avg_l1,
    compare_marginals,
    decode_match,
)
from .model import (
    FeatureVector,
    ModelParams,
    ObservationSequence,
    feature_counts,
    log_joint_potential,
    read_params,
    write_params,
)
from .sampler import (
    GibbsChain,
    SamplerReport,
    decode,
    gibbs_conditional,
    run_rbgs,
    sweep_incremental,
    sweep_naive,
)
from .simulator import (
    GenerativeParams,
    LabeledSequence,
    make_dataset,
    random_generative_params,
    read_dataset,
    sample_sequence,
    write_dataset,
)
from .topology import (
    Topology,
    fully_connected_topology,
    read_topology,
    require_valid_topology,
    validate_topology,
    write_topology,
)
from .training import (
    TrainConfig,
    fit,
    gradient,
    log_likelihood,
)

__all__ = [
    "__version__",
    "Configuration",
    "SegmentationTree",
    "enumerate_configurations",
    "enumerate_transition_sequences",
    "is_valid_configuration",
    "minimal_configuration",
    "segmentation_from_e",
    "transition_levels_from_segmentation",
    "SLICE_STATE_CAP",
    "BrutePosterior",
    "MarginalSet",
    "SliceChain",
    "TreeEngine",
    "brute_force_posterior",
    "exact_marginals",
    "read_marginals",
    "sample_states_given_e",
    "tree_log_sum",
    "tree_state_marginals",
    "write_marginals",
    "CONVERGENCE_CHECKPOINTS",
    "ExperimentPlan",
    "budget_iterations",
    "run_convergence_study",
    "run_scaling_study",
    "ComparisonReport",
    "avg_kl",
    "avg_l1",
    "compare_marginals",
    "decode_match",
    "FeatureVector",
    "ModelParams",
    "ObservationSequence",
    "feature_counts",
    "log_joint_potential",
    "read_params",
    "write_params",
    "GibbsChain",
    "SamplerReport",
    "decode",
    "gibbs_conditional",
    "run_rbgs",
    "sweep_incremental",
    "sweep_naive",
    "GenerativeParams",
    "LabeledSequence",
    "make_dataset",
    "random_generative_params",
    "read_dataset",
    "sample_sequence",
    "write_dataset",
    "Topology",
    "fully_connected_topology",
    "read_topology",
    "require_valid_topology",
    "validate_topology",
    "write_topology",
    "TrainConfig",
    "fit",
    "gradient",
    "log_likelihood",
]
