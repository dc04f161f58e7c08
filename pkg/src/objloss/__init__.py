"""objloss: how much is lost when the wrong linear objective gets optimized.

The library measures, bounds and Monte-Carlo-verifies the loss in true
objective value incurred by maximizing a misspecified ("nominal") linear
objective over a compact feasible region.  See the README for the library
tour; the ``objloss`` command line drives the experiment sweeps.
"""

__version__ = "0.1.0"

from .analysis import (
    DegenerateRangeError,
    ExperimentResult,
    IdentityCheck,
    IdentityReport,
    WorstCaseParams,
    check_expectation_identities,
    loss,
    mean_zero_diagnostic,
    model_case_value,
    perturb_binary_experiment,
    run_experiment,
    scaled_loss,
    worst_case_bound,
)
from .lp import (
    EQ,
    GE,
    LE,
    LpModel,
    LpSolution,
    LpStatus,
    NumericalFailureError,
    box,
    enumerate_vertices,
    solve_lp,
    solve_second_stage,
)
from .mps import MpsParseError, MpsProblem, parse_mps, parse_mps_file, to_region, write_mps
from .regions import (
    Ball,
    BinarySet,
    HullSegmentBall,
    PointSet,
    Polytope,
    Region,
    SupportResult,
    UnboundedRegionError,
    image_point_set,
    make_worst_case_instance,
)
from .sampling import (
    ObjectivePair,
    RngStream,
    angle_between,
    pd1_sampler,
    pd2_sampler,
    point_alpha,
    random_alpha_sampler,
    sample_pd1,
    sample_pd2,
    sample_random_alpha,
    sample_swap,
    standard_gaussian_vector,
    swap_sampler,
    uniform_alpha,
)

__all__ = [
    "__version__",
    # feasible regions
    "Region", "Ball", "PointSet", "Polytope", "HullSegmentBall", "BinarySet",
    "SupportResult", "UnboundedRegionError",
    "make_worst_case_instance", "image_point_set",
    # LP kernel
    "LpModel", "LpSolution", "LpStatus", "NumericalFailureError",
    "solve_lp", "solve_second_stage", "enumerate_vertices", "box",
    "LE", "GE", "EQ",
    # samplers
    "RngStream", "ObjectivePair", "standard_gaussian_vector",
    "sample_pd1", "sample_pd2", "sample_random_alpha", "sample_swap",
    "pd1_sampler", "pd2_sampler", "random_alpha_sampler", "swap_sampler",
    "point_alpha", "uniform_alpha", "angle_between",
    # loss analysis
    "loss", "scaled_loss", "model_case_value", "worst_case_bound",
    "WorstCaseParams", "ExperimentResult", "run_experiment",
    "check_expectation_identities", "IdentityCheck", "IdentityReport",
    "mean_zero_diagnostic", "perturb_binary_experiment", "DegenerateRangeError",
    # MPS ingestion
    "MpsProblem", "MpsParseError", "parse_mps", "parse_mps_file",
    "to_region", "write_mps",
]
