"""Online sparse + low-rank separation from compressive measurements."""

from .bounds import (
    BoundInputs,
    bound_l1,
    bound_l1l1,
    bound_nl1,
    compute_alpha_eta,
    noisy_bound,
)
from .linalg import ThinSvd, inc_svd, svt, thin_svd
from .prox import SideInfoSet, prox_nl1, soft_threshold, update_weights
from .solvers import (
    DivergenceError,
    LowRankPrior,
    MeasurementModel,
    SeparationResult,
    SolverConfig,
    batch_pcp,
    bootstrap_prior,
    corpca_step,
    data_gradient,
    ramsia_solve,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "DivergenceError",
    "LowRankPrior",
    "MeasurementModel",
    "SeparationResult",
    "SideInfoSet",
    "SolverConfig",
    "ThinSvd",
    "batch_pcp",
    "bootstrap_prior",
    "bound_l1",
    "bound_l1l1",
    "bound_nl1",
    "compute_alpha_eta",
    "corpca_step",
    "data_gradient",
    "inc_svd",
    "noisy_bound",
    "prox_nl1",
    "ramsia_solve",
    "soft_threshold",
    "svt",
    "thin_svd",
    "update_weights",
]
