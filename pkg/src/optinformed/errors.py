"""Exception types shared across the package."""


class OptinformedError(Exception):
    """Base class for every error this package raises on purpose."""


class DomainBoundsError(OptinformedError, ValueError):
    """A probability or delta sits at or outside its open interval."""


class ExpiredContractError(OptinformedError, ValueError):
    """Valuation time at or past expiry."""


class NonstationaryError(OptinformedError, ValueError):
    """An autoregressive coefficient violates |rho| < 1 where stationarity is required."""


class DegenerateMarketError(OptinformedError, ValueError):
    """Structural noise scales leave a market quantity undefined (for example 0/0)."""


class DegenerateDataError(OptinformedError, ValueError):
    """A series carries no usable variation (constant input)."""


class SingularFormulaError(OptinformedError, ArithmeticError):
    """A closed-form denominator is zero at the given parameters."""


class DataInputError(OptinformedError, ValueError):
    """Malformed, misaligned, or non-finite input data."""


class InsufficientDataError(DataInputError):
    """Fewer observations than the operation needs."""


class CsvParseError(DataInputError):
    """Structurally invalid CSV row; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(OptinformedError, ValueError):
    """Invalid run configuration value."""
