"""Detecting informed trading from option deltas and underlying returns.

The package simulates a market in which an informed trader hides volume
inside noise flow, reduces the resulting return process to ARMA(1,1),
maps observed option deltas to return-scale quantile increments, and
applies sign-based criteria to rolling-window coefficient estimates.
"""

from .errors import (
    ConfigError,
    CsvParseError,
    DataInputError,
    DegenerateDataError,
    DegenerateMarketError,
    DomainBoundsError,
    ExpiredContractError,
    InsufficientDataError,
    NonstationaryError,
    OptinformedError,
    SingularFormulaError,
)
from .gaussian import std_normal_cdf, std_normal_pdf, std_normal_quantile
from .option_math import (
    DEFAULT_STEP_YEARS,
    DRIFT_MODES,
    DeltaObservation,
    OptionSpec,
    approx_delta_d1,
    d1,
    d2,
    delta,
    delta_q_series,
    price,
    q_transform,
    time_to_expiry,
)
from .market_model import (
    LAMBDA_VARIANTS,
    REDUCTION_METHODS,
    ArmaParams,
    ArmaReduction,
    SimulatedMarket,
    StructuralParams,
    arma_from_structural,
    gamma_from_structural,
    market_depth_lambda,
    simulate,
    simulate_arma11,
    theoretical_autocovariance,
)
from .arma import (
    ArmaFit,
    fit_arma11,
    ljung_box,
    rolling_fit,
    sample_autocovariance,
)
from .detector import (
    DetectionDiagnostics,
    DetectionReport,
    Eq9Coefficients,
    StationarityResult,
    VarmaModel,
    WindowDecision,
    build_varma,
    decisive_criterion,
    estimate_eq9,
    pointwise_criterion,
    run_detection,
    stationarity_check,
)
from .market_data import (
    CSV_HEADER,
    LoadedData,
    MarketDataRow,
    RejectedRow,
    RunConfig,
    SimulationSetup,
    load_config,
    load_csv,
    load_structural_params,
    read_columns,
    rows_to_detection_inputs,
    write_market_csv,
    write_simulation_csv,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
