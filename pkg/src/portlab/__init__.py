"""Portfolio construction and backtesting: hierarchical risk parity vs eigen portfolios."""

from .backtest import (
    BacktestReport,
    ComparisonSummary,
    evaluate,
    portfolio_daily_returns,
    report_from_json,
    report_to_json,
    summarize,
)
from .config import ExperimentConfig, load_config, load_sector_constituents, validate_config
from .eigen import (
    EigenCandidate,
    PCAModel,
    candidate_portfolio,
    fit_pca,
    min_components_for_variance,
    select_best_eigen,
)
from .hrp import (
    DistanceMatrix,
    HrpResult,
    LinkageTree,
    SeriationOrder,
    build_hrp_portfolio,
    cluster_variance,
    correlation_distance,
    dendrogram_dict,
    inverse_variance_weights,
    quasi_diagonalize,
    recursive_bisection,
    ward_linkage,
)
from .market_data import (
    PeriodSpec,
    PricePanel,
    PriceSeries,
    align_panel,
    load_price_csv,
    parse_price_csv,
    parse_wide_csv,
    slice_period,
)
from .portfolio import PortfolioWeights, weights_from_csv
from .returns_stats import (
    TRADING_DAYS_PER_YEAR,
    CorrelationMatrix,
    CovarianceMatrix,
    ReturnsMatrix,
    RiskMetrics,
    annualize_volatility,
    correlation,
    daily_returns,
    sample_covariance,
    sharpe_ratio,
)

__version__ = "0.1.0"

__all__ = [
    "BacktestReport",
    "ComparisonSummary",
    "CorrelationMatrix",
    "CovarianceMatrix",
    "DistanceMatrix",
    "EigenCandidate",
    "ExperimentConfig",
    "HrpResult",
    "LinkageTree",
    "PCAModel",
    "PeriodSpec",
    "PortfolioWeights",
    "PricePanel",
    "PriceSeries",
    "ReturnsMatrix",
    "RiskMetrics",
    "SeriationOrder",
    "TRADING_DAYS_PER_YEAR",
    "align_panel",
    "annualize_volatility",
    "build_hrp_portfolio",
    "candidate_portfolio",
    "cluster_variance",
    "correlation",
    "correlation_distance",
    "daily_returns",
    "dendrogram_dict",
    "evaluate",
    "fit_pca",
    "inverse_variance_weights",
    "load_config",
    "load_price_csv",
    "load_sector_constituents",
    "min_components_for_variance",
    "parse_price_csv",
    "parse_wide_csv",
    "portfolio_daily_returns",
    "quasi_diagonalize",
    "recursive_bisection",
    "report_from_json",
    "report_to_json",
    "sample_covariance",
    "select_best_eigen",
    "sharpe_ratio",
    "slice_period",
    "summarize",
    "validate_config",
    "ward_linkage",
    "weights_from_csv",
]
