"""Solver and verifier toolkit for multi-dimensional Bayesian persuasion."""

from ._kernels import backend_name
from .curves import ScalarCurve
from .errors import (
    ConfigurationError,
    DegenerateCellError,
    NumericDomainError,
    PersuadeError,
    PreconditionError,
    SolverError,
)
from .linearized import (
    InfoRelevance,
    first_order_action,
    info_relevance,
    solve_limit_partition,
    steady_state,
)
from .manifold import (
    Graph1D,
    Hyperplane,
    PointCloudManifold,
    Sphere,
    apply_policy,
    hyperplane_policy,
    solve_curve_2d,
    sphere_policy,
)
from .model import (
    ComponentwisePolyMap,
    CustomUtility,
    GaussianPrior,
    GeneralReceiver,
    IdentityMap,
    LinearMap,
    MixturePrior,
    MomentReceiver,
    MultiProductUtility,
    ParticleCloud,
    ProblemSpec,
    ProductAcceptanceUtility,
    QuadraticUtility,
    RadialScaledMap,
    RadialUtility,
    TabulatedPrior,
    UniformBoxPrior,
    build_cloud,
    eval_W,
    eval_g,
    full_info_action,
)
from .oracle import OracleResult, convex_majorant_value_1d, enumerate_partitions
from .partition import (
    PartitionState,
    assign_cells,
    lloyd_iterate,
    optimize_partition,
    policy_value,
)
from .receiver import ActionSolveResult, solve_action
from .transport import (
    MultiplierRecord,
    bregman_divergence,
    bregman_project,
    bregman_project_many,
    min_cost_to_set,
    multiplier,
    transport_cost,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
