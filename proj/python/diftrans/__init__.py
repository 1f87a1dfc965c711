"""Thresholded optimal transport estimators of unobserved trade."""

from ._core import (
    ConfigError,
    CsvSchema,
    DomainError,
    EmptyDistributionError,
    Error,
    IdentificationError,
    InfeasibleError,
    MarketConfig,
    ParseError,
    PeriodFilter,
    PricePMF,
    SalesRecord,
    SchemaError,
    SelectionError,
    SingularDesignError,
    SizeError,
    ValidationError,
    WtpCurve,
    bounds_table,
    build_pmf,
    comparative_statics,
    did_ols,
    diff_in_transports,
    ingest_csv,
    invert_from_volume,
    max_trade_share,
    ot_cost,
    placebo_costs,
    select_bandwidth,
    solve_no_tc,
    solve_ot,
    strassen_certificate,
    subsample_ci,
)

__all__ = [name for name in dir() if not name.startswith("_")]
