"""splitlab: simulation and verification laboratory for random split trees.

Exact and Monte Carlo tooling for the path length and Wiener index of random
split trees: tree construction, subtree-size laws, mean recursions with
second-order constant extraction, the size-biased depth chain with renewal
stopping rules, and distributional fixed points with contraction certificates.
"""

from ._backend import backend_name
from .chain import (
    limit_increment_cdf,
    nu_pmf,
    representation_check,
    run_chain,
    sandwich_run,
    stop_after_climb,
    stop_at_level,
    stop_at_size,
    stopped_state_pmf,
    tv_stopped,
)
from .errors import (
    ConfigInvalid,
    DimMismatch,
    FitUnstable,
    IoError,
    QuadratureNotConverged,
    RootNotSplit,
    SplitLabError,
    StepBudgetExceeded,
    TooLarge,
    UnsupportedSplitter,
)
from .fixedpoint import (
    contraction_certificate,
    fixed_point_1d,
    fixed_point_2d,
    w2_distance,
)
from .means import (
    exact_mean_path,
    exact_mean_wiener,
    extract_constants,
    leading_coefficient,
    mean_table,
    toll_functions,
)
from .splitters import (
    SplitterMoments,
    SplitterSpec,
    bary_search_tree,
    beta_binary,
    binary_search_tree,
    check_general_assumption,
    dirichlet,
    make_splitter,
    median_of,
    sample_split_vector,
    sample_split_vectors,
    splitter_moments,
)
from .subtree_law import subtree_pmf
from .trees import (
    SplitTree,
    SplitTreeParams,
    build_tree,
    default_params,
    path_length,
    simulate_stats,
    wiener_bruteforce,
    wiener_index,
)
from .verify import run_checks

__version__ = "0.1.0"

__all__ = [
    "ConfigInvalid",
    "DimMismatch",
    "FitUnstable",
    "IoError",
    "QuadratureNotConverged",
    "RootNotSplit",
    "SplitLabError",
    "SplitTree",
    "SplitTreeParams",
    "SplitterMoments",
    "SplitterSpec",
    "StepBudgetExceeded",
    "TooLarge",
    "UnsupportedSplitter",
    "backend_name",
    "bary_search_tree",
    "beta_binary",
    "binary_search_tree",
    "build_tree",
    "check_general_assumption",
    "contraction_certificate",
    "default_params",
    "dirichlet",
    "exact_mean_path",
    "exact_mean_wiener",
    "extract_constants",
    "fixed_point_1d",
    "fixed_point_2d",
    "leading_coefficient",
    "limit_increment_cdf",
    "make_splitter",
    "mean_table",
    "median_of",
    "nu_pmf",
    "path_length",
    "representation_check",
    "run_chain",
    "run_checks",
    "sample_split_vector",
    "sample_split_vectors",
    "sandwich_run",
    "simulate_stats",
    "splitter_moments",
    "stop_after_climb",
    "stop_at_level",
    "stop_at_size",
    "stopped_state_pmf",
    "subtree_pmf",
    "toll_functions",
    "tv_stopped",
    "w2_distance",
    "wiener_bruteforce",
    "wiener_index",
    "__version__",
]
