from .distributions import (
    ClaimFamily,
    ClaimMixture,
    Exponential,
    JumpLaw,
    MixedDensity,
    TabulatedDensity,
    TabulatedOn01,
    UniformOn01,
    get_claim_family,
    get_jump_law,
    jump_mgf,
    tilted_mean,
    tilted_moment,
    tilted_tail_mass,
)
from .filter import (
    FilterState,
    PriorSpec,
    batch_posterior,
    filter_path,
    jump_update,
)
from .market import ModelParams, StrategyPoint, check_admissible
from .foc_full import (
    FullInfoSolution,
    Regime,
    gamma_full,
    solve_foc_full,
    v1_full,
    v2_full,
)
from .hjb_bayes import (
    BayesStrategy,
    GridSpec,
    ValueGrid,
    apriori_bounds,
    mean_model_upper_bound,
    solve_foc_bayes,
    value_iteration,
)
from .simulator import (
    ConstantStrategy,
    DeterministicStrategy,
    estimate_g,
    estimate_utility,
    simulate_path,
)
from .config import RunConfig, load_config

__all__ = [
    "ClaimFamily",
    "ClaimMixture",
    "Exponential",
    "JumpLaw",
    "MixedDensity",
    "TabulatedDensity",
    "TabulatedOn01",
    "UniformOn01",
    "get_claim_family",
    "get_jump_law",
    "jump_mgf",
    "tilted_mean",
    "tilted_moment",
    "tilted_tail_mass",
    "FilterState",
    "PriorSpec",
    "batch_posterior",
    "filter_path",
    "jump_update",
    "ModelParams",
    "StrategyPoint",
    "check_admissible",
    "FullInfoSolution",
    "Regime",
    "gamma_full",
    "solve_foc_full",
    "v1_full",
    "v2_full",
    "BayesStrategy",
    "GridSpec",
    "ValueGrid",
    "apriori_bounds",
    "mean_model_upper_bound",
    "solve_foc_bayes",
    "value_iteration",
    "ConstantStrategy",
    "DeterministicStrategy",
    "estimate_g",
    "estimate_utility",
    "simulate_path",
    "RunConfig",
    "load_config",
]

from ._version import __version__  # noqa: E402
