"""Optimal investment and proportional reinsurance under forward exponential
preferences in a regime-switching CEV market, with the fixed-horizon benchmark
and Monte Carlo verification harnesses."""

from .backward import (
    BackwardSolution,
    backward_investment,
    investment_gap,
    j1,
    j2_at,
    solve_j2,
    stationary_market_averages,
    value_gap_delta,
)
from .claims import ClaimModel, ClaimPath, claim_moment, intensity, simulate_claims
from .config import (
    ConfigError,
    DomainError,
    MarketParams,
    ModelConfig,
    ParseError,
    ValidationReport,
    apply_overrides,
    default_config,
    load_config,
    save_config,
    validate_assumptions,
    with_seed,
)
from .forward import accumulate_h, forward_utility, g_rate, optimal_investment, phi
from .premiums import PremiumSpec, gross_premium_a, reins_premium_b, reins_premium_db
from .regimes import (
    RegimePath,
    RegimeSpec,
    ReducibleChainError,
    simulate_chain,
    state_at,
    stationary_distribution,
)
from .retention import (
    Region,
    RetentionSolution,
    classify_region,
    retention_curve,
    retention_on_grid,
    solve_retention,
)
from .simulate import (
    DensityReport,
    MarketPath,
    MartingaleReport,
    Strategy,
    WealthPath,
    canned_perturbations,
    density_check,
    martingale_check,
    martingale_suite,
    optimal_strategy,
    simulate_joint,
    simulate_market,
    simulate_wealth,
)

__version__ = "0.1.0"
