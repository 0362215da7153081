"""Decentralized sparse GP classification of communication success.

Agents summarize the events inside a locality region with one or two inducing
points chosen to minimize the Nystrom residual trace, broadcast the resulting
Gaussian over those inducing values, and fuse received summaries
block-diagonally to predict the probability of a successful link.
"""
from ._accel import USE_NUMBA, backend_name
from .data import (
    CommEvent,
    DataFormatError,
    SplitPlan,
    Standardizer,
    SynthSpec,
    accuracy,
    fit_standardizer,
    ingest_csv,
    negative_log_likelihood,
    permutation_split,
    synthesize_dataset,
    write_csv,
)
from .experiments import (
    ExperimentConfig,
    GridSpec,
    emit_map_grid,
    run_decentralized_experiment,
    run_local_experiment,
)
from .fusion import AgentState, FusedPosterior, FusionError, decentralized_predict, fuse
from .kernel import (
    ConditioningError,
    KernelParams,
    LocalityRegion,
    cross_gram,
    gram,
    kernel_eval,
    locality_radius,
    region_filter,
)
from .policy import InducingPackage, PolicyKind, SelectionError, build_package, select_inducing
from .polyagamma import PGState, gibbs_sample_w, kappa, pg_mean, pg_sample
from .sgpc import (
    BoundReport,
    LatentPosterior,
    VariationalPosterior,
    bounds_report,
    full_conditional_posterior,
    log_marginal_conditioned,
    predict_latent,
    predict_probability,
    sparse_variational_posterior,
    trace_tilde,
)
from .wire import WireFormatError, decode_package, encode_package, read_container, write_container

__version__ = "0.1.0"
