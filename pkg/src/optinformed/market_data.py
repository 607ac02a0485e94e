"""Market data CSV ingestion, run configuration, and table round trips.

One file describes one option contract: every row carries the underlying
price and the contract terms, and optionally the quoted delta and implied
vol.  Rows that cannot feed the detector (delta pinned at a bound, expired
timestamps, contradictory contract terms) are collected with their line
numbers instead of aborting the load; structural problems in the file
itself (bad header, unparseable fields, timestamps running backwards)
abort with a parse error that names the offending line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, time, timezone
from pathlib import Path

import numpy as np

from . import option_math
from .errors import (
    ConfigError,
    CsvParseError,
    DataInputError,
    InsufficientDataError,
)
from .market_model import LAMBDA_VARIANTS, StructuralParams
from .option_math import DRIFT_MODES, DeltaObservation, OptionSpec

CSV_HEADER = "timestamp,underlying_price,option_type,strike,expiry,rate,implied_vol,option_delta"

SIMULATION_HEADER = "timestamp_index,psi,order_flow,log_price,return"

DAY_COUNTS = (360, 365)

_KIND_BY_CODE = {"C": "call", "P": "put"}
_CODE_BY_KIND = {"call": "C", "put": "P"}

_SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class MarketDataRow:
    """One parsed and accepted data row.

    ``option_delta`` is always populated: taken from the file when quoted,
    otherwise computed from the implied vol.  ``line`` is the 1-based line
    number in the source file.
    """

    line: int
    timestamp: datetime
    underlying_price: float
    kind: str
    strike: float
    expiry: date
    rate: float
    implied_vol: float | None
    option_delta: float


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass(frozen=True)
class LoadedData:
    rows: tuple[MarketDataRow, ...]
    rejected: tuple[RejectedRow, ...]


@dataclass(frozen=True)
class RunConfig:
    window: int = 50
    day_count: int = 360
    drift_mode: str = "per_step"
    lambda_variant: str = "theorem"
    gamma_tolerance: float = 1.0e-12
    seed: int = 0

    def __post_init__(self):
        if not (isinstance(self.window, int) and self.window >= 20):
            raise ConfigError(f"window must be an integer >= 20, got {self.window!r}")
        if self.day_count not in DAY_COUNTS:
            raise ConfigError(f"day_count must be one of {DAY_COUNTS}, got {self.day_count!r}")
        if self.drift_mode not in DRIFT_MODES:
            raise ConfigError(f"drift_mode must be one of {DRIFT_MODES}, got {self.drift_mode!r}")
        if self.lambda_variant not in LAMBDA_VARIANTS:
            raise ConfigError(
                f"lambda_variant must be one of {LAMBDA_VARIANTS}, got {self.lambda_variant!r}")
        if not (isinstance(self.gamma_tolerance, float)
                and math.isfinite(self.gamma_tolerance) and self.gamma_tolerance > 0.0):
            raise ConfigError(
                f"gamma_tolerance must be a positive real, got {self.gamma_tolerance!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")


@dataclass(frozen=True)
class SimulationSetup:
    """Structural parameters plus the depth conventions for one simulation."""

    params: StructuralParams
    lambda_variant: str = "theorem"
    lambda_override: float | None = None


def _parse_timestamp(text: str, line: int) -> datetime:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError:
        raise CsvParseError(line, f"invalid ISO-8601 timestamp {text!r}") from None
    if ts.tzinfo is not None:
        # Normalize to naive UTC so rows with mixed offsets stay comparable.
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


def _parse_date(text: str, line: int) -> date:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise CsvParseError(line, f"invalid ISO date {text!r}") from None


def _parse_float(text: str, field: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(line, f"field {field} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise CsvParseError(line, f"field {field} is not finite: {text!r}")
    return value


def _parse_optional_float(text: str, field: str, line: int) -> float | None:
    if text.strip() == "":
        return None
    return _parse_float(text, field, line)


def _years_between(start: datetime, end: datetime, day_count: int) -> float:
    return (end - start).total_seconds() / _SECONDS_PER_DAY / day_count


def _expiry_instant(expiry: date) -> datetime:
    return datetime.combine(expiry, time.min)


def _delta_in_bounds(value: float, kind: str) -> bool:
    if kind == "call":
        return 0.0 < value < 1.0
    return -1.0 < value < 0.0


def load_csv(path, day_count: int = 360) -> LoadedData:
    """Parse one contract's market data file.

    Rows are accepted in file order; a row is rejected (with reason and
    line number) when its values cannot feed detection.  The delta is
    computed from the implied vol when the file leaves it blank.
    """
    if day_count not in DAY_COUNTS:
        raise ConfigError(f"day_count must be one of {DAY_COUNTS}, got {day_count!r}")
    raw = Path(path).read_text()
    lines = raw.splitlines()
    if not lines:
        raise CsvParseError(1, "empty file")
    if lines[0].strip() != CSV_HEADER:
        raise CsvParseError(1, f"header must be exactly {CSV_HEADER!r}")

    rows: list[MarketDataRow] = []
    rejected: list[RejectedRow] = []
    contract: tuple[str, float, date] | None = None
    prev_raw_ts: datetime | None = None

    for line_no, line in enumerate(lines[1:], start=2):
        if line.strip() == "":
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise CsvParseError(line_no, f"expected 8 fields, got {len(fields)}")
        ts = _parse_timestamp(fields[0], line_no)
        price = _parse_float(fields[1], "underlying_price", line_no)
        code = fields[2].strip().upper()
        if code not in _KIND_BY_CODE:
            raise CsvParseError(line_no, f"option_type must be C or P, got {fields[2]!r}")
        kind = _KIND_BY_CODE[code]
        strike = _parse_float(fields[3], "strike", line_no)
        expiry = _parse_date(fields[4], line_no)
        rate = _parse_float(fields[5], "rate", line_no)
        iv = _parse_optional_float(fields[6], "implied_vol", line_no)
        delta = _parse_optional_float(fields[7], "option_delta", line_no)

        if prev_raw_ts is not None and ts < prev_raw_ts:
            raise CsvParseError(line_no, "timestamps must be monotone nondecreasing")
        prev_raw_ts = ts

        reason = _row_problem(ts, price, kind, strike, expiry, iv, delta,
                              rows, contract)
        if reason is not None:
            rejected.append(RejectedRow(line=line_no, reason=reason))
            continue

        if delta is None:
            tau = _years_between(ts, _expiry_instant(expiry), day_count)
            spec = OptionSpec(kind=kind, strike=strike, expiry=tau, rate=rate,
                              implied_vol=iv)
            delta = option_math.delta(price, spec, 0.0)
            if not _delta_in_bounds(delta, kind):
                rejected.append(RejectedRow(line=line_no, reason="computed delta at bound"))
                continue

        if contract is None:
            contract = (kind, strike, expiry)
        rows.append(MarketDataRow(line=line_no, timestamp=ts, underlying_price=price,
                                  kind=kind, strike=strike, expiry=expiry, rate=rate,
                                  implied_vol=iv, option_delta=delta))
    return LoadedData(rows=tuple(rows), rejected=tuple(rejected))


def _row_problem(ts, price, kind, strike, expiry, iv, delta, rows, contract):
    """Reason the row cannot be used, or None when it can."""
    if price <= 0.0:
        return "nonpositive underlying price"
    if strike <= 0.0:
        return "nonpositive strike"
    if iv is not None and iv <= 0.0:
        return "nonpositive implied vol"
    if contract is not None and (kind, strike, expiry) != contract:
        return "contract terms differ from first row"
    if rows and ts == rows[-1].timestamp:
        return "duplicate timestamp"
    if ts >= _expiry_instant(expiry):
        return "at or past expiry"
    if delta is not None:
        if kind == "call" and delta in (0.0, 1.0) or kind == "put" and delta in (-1.0, 0.0):
            return "delta at bound"
        if not _delta_in_bounds(delta, kind):
            return "delta outside bounds"
    elif iv is None:
        return "neither delta nor implied vol present"
    return None


def rows_to_detection_inputs(loaded: LoadedData, day_count: int = 360):
    """Convert accepted rows to the detector's series.

    Returns (times, prices, delta observations, contract spec).  Times are
    years since the first row; the contract expiry becomes the spec's
    horizon in the same clock.  The spec's vol is the first implied vol
    seen in the file (quoted deltas alone cannot anchor the scale).
    """
    if day_count not in DAY_COUNTS:
        raise ConfigError(f"day_count must be one of {DAY_COUNTS}, got {day_count!r}")
    rows = loaded.rows
    if len(rows) < 2:
        raise InsufficientDataError(
            f"need at least 2 usable rows, got {len(rows)} "
            f"({len(loaded.rejected)} rejected)")
    iv = next((r.implied_vol for r in rows if r.implied_vol is not None), None)
    if iv is None:
        raise DataInputError("implied_vol missing from every row; the quantile "
                             "scale sigma*sqrt(T-t) cannot be formed")
    origin = rows[0].timestamp
    expiry_years = _years_between(origin, _expiry_instant(rows[0].expiry), day_count)
    spec = OptionSpec(kind=rows[0].kind, strike=rows[0].strike, expiry=expiry_years,
                      rate=rows[0].rate, implied_vol=iv)
    times = np.array([_years_between(origin, r.timestamp, day_count) for r in rows])
    prices = np.array([r.underlying_price for r in rows])
    deltas = [DeltaObservation(t=float(t), delta=r.option_delta,
                               underlying_price=r.underlying_price)
              for t, r in zip(times, rows)]
    return times, prices, deltas, spec


def _format(value: float) -> str:
    # repr of a Python float is the shortest digits that round-trip exactly.
    return repr(float(value))


def write_market_csv(rows, path) -> None:
    out = [CSV_HEADER]
    for r in rows:
        out.append(",".join([
            r.timestamp.isoformat(),
            _format(r.underlying_price),
            _CODE_BY_KIND[r.kind],
            _format(r.strike),
            r.expiry.isoformat(),
            _format(r.rate),
            "" if r.implied_vol is None else _format(r.implied_vol),
            "" if r.option_delta is None else _format(r.option_delta),
        ]))
    Path(path).write_text("\n".join(out) + "\n")


def write_simulation_csv(market, path) -> None:
    """Export a simulated path, one row per step, full float precision."""
    out = [SIMULATION_HEADER]
    for t in range(market.returns.shape[0]):
        out.append(",".join([
            str(t + 1),
            _format(market.psi[t]),
            _format(market.order_flow[t]),
            _format(market.log_prices[t + 1]),
            _format(market.returns[t]),
        ]))
    Path(path).write_text("\n".join(out) + "\n")


def read_columns(path) -> dict[str, np.ndarray]:
    """Read any headed CSV of numeric columns into float arrays."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise CsvParseError(1, "empty file")
    names = [n.strip() for n in lines[0].split(",")]
    if any(n == "" for n in names):
        raise CsvParseError(1, "blank column name in header")
    columns: dict[str, list[float]] = {n: [] for n in names}
    if len(columns) != len(names):
        raise CsvParseError(1, "duplicate column name in header")
    for line_no, line in enumerate(lines[1:], start=2):
        if line.strip() == "":
            continue
        fields = line.split(",")
        if len(fields) != len(names):
            raise CsvParseError(
                line_no, f"expected {len(names)} fields, got {len(fields)}")
        for name, field in zip(names, fields):
            columns[name].append(_parse_float(field, name, line_no))
    return {n: np.array(v) for n, v in columns.items()}


def _parse_kv_file(path) -> dict[str, str]:
    text = Path(path).read_text()
    pairs: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped == "" or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected key=value, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in pairs:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def _config_int(pairs, key, default):
    if key not in pairs:
        return default
    try:
        return int(pairs[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {pairs[key]!r}") from None


def _config_float(pairs, key, default):
    if key not in pairs:
        return default
    try:
        return float(pairs[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {pairs[key]!r}") from None


def load_config(path) -> RunConfig:
    """Plain key=value run configuration; unknown keys are errors."""
    pairs = _parse_kv_file(path)
    known = {"window", "day_count", "drift_mode", "lambda_variant",
             "gamma_tolerance", "seed"}
    unknown = sorted(set(pairs) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    defaults = RunConfig()
    return RunConfig(
        window=_config_int(pairs, "window", defaults.window),
        day_count=_config_int(pairs, "day_count", defaults.day_count),
        drift_mode=pairs.get("drift_mode", defaults.drift_mode),
        lambda_variant=pairs.get("lambda_variant", defaults.lambda_variant),
        gamma_tolerance=_config_float(pairs, "gamma_tolerance", defaults.gamma_tolerance),
        seed=_config_int(pairs, "seed", defaults.seed),
    )


def load_structural_params(path, default_horizon: int | None = None) -> SimulationSetup:
    """Structural parameter file for the simulator.

    Required keys: psi_bar, rho, beta, sigma_z, sigma_u, s0.  Optional:
    horizon (falls back to ``default_horizon``, normally the step count),
    lambda_variant, lambda_override.
    """
    pairs = _parse_kv_file(path)
    required = ("psi_bar", "rho", "beta", "sigma_z", "sigma_u", "s0")
    optional = {"horizon", "lambda_variant", "lambda_override"}
    unknown = sorted(set(pairs) - set(required) - optional)
    if unknown:
        raise ConfigError(f"unknown parameter keys: {', '.join(unknown)}")
    missing = sorted(set(required) - set(pairs))
    if missing:
        raise ConfigError(f"missing parameter keys: {', '.join(missing)}")
    horizon = _config_int(pairs, "horizon", default_horizon)
    if horizon is None:
        raise ConfigError("horizon missing and no step count to fall back on")
    variant = pairs.get("lambda_variant", "theorem")
    if variant not in LAMBDA_VARIANTS:
        raise ConfigError(
            f"lambda_variant must be one of {LAMBDA_VARIANTS}, got {variant!r}")
    override = _config_float(pairs, "lambda_override", None)
    try:
        params = StructuralParams(
            psi_bar=_config_float(pairs, "psi_bar", None),
            rho=_config_float(pairs, "rho", None),
            beta=_config_float(pairs, "beta", None),
            sigma_z=_config_float(pairs, "sigma_z", None),
            sigma_u=_config_float(pairs, "sigma_u", None),
            s0=_config_float(pairs, "s0", None),
            horizon=horizon,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return SimulationSetup(params=params, lambda_variant=variant,
                           lambda_override=override)
