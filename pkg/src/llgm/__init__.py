"""Sparse Poisson graphical models for count data.

Each variable is regressed on all others with an l1-penalized log-linear
(Poisson) model; the neighborhoods are combined into an undirected graph and
the penalty is chosen by subsampling stability (StARS).
"""

from .core import (
    AdjacencyMatrix,
    CountMatrix,
    DegenerateSampleError,
    EmptyResultError,
    InvalidArgumentError,
    LLGMError,
    LLGMWarning,
    ParameterMatrix,
    ParseError,
    RegularizationPath,
    RngSpec,
    make_path,
)
from .evaluate import (
    DegreeReport,
    RocCurve,
    degree_stats,
    permutation_null_auc,
    roc_from_graphs,
    roc_from_path,
    tpr_fpr,
)
from .io import ingest, read_edge_list, write_counts, write_edge_list
from .network import (
    LlgmConfig,
    LlgmFit,
    StabilityConfig,
    StabilityResult,
    assemble_adjacency,
    fit_llgm,
    instability,
    stars_select,
    subsample,
)
from .normalize import (
    NormalizationConfig,
    NormalizationReport,
    adjust_depth,
    estimate_alpha,
    filter_low_variance,
    normalize_pipeline,
    power_transform,
)
from .simulate import (
    SimulationConfig,
    gen_hub_graph,
    gen_random_graph,
    gen_scale_free,
    simulate,
    simulate_counts,
)
from .solver import (
    PathSolution,
    SolverConfig,
    compute_rho_max,
    fit_node,
    fit_node_path,
    gradient,
    objective,
)

__version__ = "0.1.0"
