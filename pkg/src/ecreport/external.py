"""External data for the specialist agents.

Quarterly earnings come from the AlphaVantage ``EARNINGS`` endpoint (or a
fixture file in the same shape). Acoustic features are precomputed
per-utterance statistics stored as a JSON array.
"""

from __future__ import annotations

import datetime as dt
import json
import logging
import os
import warnings
from dataclasses import dataclass, fields
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any

import httpx
from filelock import FileLock

from ecreport.model import EcReportError
from ecreport.storage import atomic_write_text

logger = logging.getLogger(__name__)

EARNINGS_API_KEY_ENV = "ALPHAVANTAGE_API_KEY"
EARNINGS_URL = "https://www.alphavantage.co/query"

EARNINGS_FIELDS = (
    "fiscalDateEnding",
    "reportedDate",
    "reportedEPS",
    "estimatedEPS",
    "surprise",
    "surprisePercentage",
)

SURPRISE_TOLERANCE = Decimal("0.005")


class ExternalDataError(EcReportError):
    pass


class SymbolNotFound(ExternalDataError):
    pass


class QuotaExceeded(ExternalDataError):
    pass


class MalformedPayload(ExternalDataError):
    pass


class InvariantViolation(ExternalDataError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NoPriorQuarter(ExternalDataError):
    pass


def calendar_quarter(d: dt.date) -> tuple[int, int]:
    return (d.year, (d.month - 1) // 3 + 1)


def preceding_quarter(year: int, quarter: int) -> tuple[int, int]:
    return (year - 1, 4) if quarter == 1 else (year, quarter - 1)


@dataclass(frozen=True)
class EarningsRecord:
    fiscalDateEnding: dt.date
    reportedDate: dt.date
    reportedEPS: Decimal
    estimatedEPS: Decimal
    surprise: Decimal
    surprisePercentage: Decimal

    def __post_init__(self) -> None:
        if self.reportedDate < self.fiscalDateEnding:
            raise InvariantViolation("reportedDate", "earlier than fiscalDateEnding")
        if abs(self.reportedEPS - self.estimatedEPS - self.surprise) > SURPRISE_TOLERANCE:
            raise InvariantViolation(
                "surprise",
                f"{self.surprise} != reportedEPS - estimatedEPS ({self.reportedEPS - self.estimatedEPS})",
            )

    @classmethod
    def from_payload(cls, entry: dict[str, Any]) -> EarningsRecord:
        missing = [f for f in EARNINGS_FIELDS if f not in entry]
        if missing:
            raise MalformedPayload(f"earnings entry lacks {missing}")
        try:
            dates = {f: dt.date.fromisoformat(str(entry[f])) for f in EARNINGS_FIELDS[:2]}
        except ValueError as exc:
            raise MalformedPayload(f"bad date in earnings entry: {exc}") from exc
        numbers = {}
        for f in EARNINGS_FIELDS[2:]:
            try:
                value = Decimal(str(entry[f]))
            except InvalidOperation:
                raise MalformedPayload(f"{f} is not numeric: {entry[f]!r}") from None
            if not value.is_finite():
                raise MalformedPayload(f"{f} is not numeric: {entry[f]!r}")
            numbers[f] = value
        return cls(**dates, **numbers)

    def to_payload(self) -> dict[str, str]:
        """Upstream field names and string encoding, ready for ``json.dumps``."""
        return {
            "fiscalDateEnding": self.fiscalDateEnding.isoformat(),
            "reportedDate": self.reportedDate.isoformat(),
            "reportedEPS": str(self.reportedEPS),
            "estimatedEPS": str(self.estimatedEPS),
            "surprise": str(self.surprise),
            "surprisePercentage": str(self.surprisePercentage),
        }


def parse_earnings_payload(payload: Any, symbol: str) -> list[EarningsRecord]:
    if not isinstance(payload, dict):
        raise MalformedPayload("earnings payload must be a JSON object")
    if "Error Message" in payload:
        raise SymbolNotFound(f"{symbol}: {payload['Error Message']}")
    for key in ("Note", "Information"):
        if key in payload and "quarterlyEarnings" not in payload:
            raise QuotaExceeded(f"{symbol}: {payload[key]}")
    entries = payload.get("quarterlyEarnings")
    if entries is None:
        raise MalformedPayload(f"{symbol}: payload has no quarterlyEarnings")
    if not entries and not payload.get("symbol"):
        raise SymbolNotFound(f"{symbol}: no earnings data")
    records = [EarningsRecord.from_payload(e) for e in entries]
    return sorted(records, key=lambda r: r.fiscalDateEnding)


@dataclass(frozen=True)
class Fixture:
    """Offline earnings source: a payload file, or a directory of ``<SYMBOL>.json``."""

    path: Path


REMOTE = "remote"


def fetch_quarterly_earnings(
    symbol: str,
    source: Fixture | str = REMOTE,
    cache_dir: str | os.PathLike | None = None,
    client: httpx.Client | None = None,
    today: dt.date | None = None,
) -> list[EarningsRecord]:
    """All quarterly earnings records for ``symbol``, oldest first.

    Remote payloads are cached under ``cache_dir`` keyed by symbol and day.
    """
    if not symbol:
        raise ValueError("symbol must be non-empty")
    if isinstance(source, Fixture):
        path = Path(source.path)
        if path.is_dir():
            path = path / f"{symbol}.json"
        if not path.exists():
            raise SymbolNotFound(f"no earnings fixture for {symbol} at {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise MalformedPayload(f"{path}: invalid JSON ({exc.msg})") from exc
        return parse_earnings_payload(payload, symbol)

    if source != REMOTE:
        raise ValueError(f"unknown earnings source {source!r}")
    day = (today or dt.date.today()).isoformat()
    cache_path = Path(cache_dir) / f"{symbol}_{day}.json" if cache_dir else None
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(cache_path) + ".lock"):
            if cache_path.exists():
                return parse_earnings_payload(json.loads(cache_path.read_text(encoding="utf-8")), symbol)
            payload = _download(symbol, client)
            records = parse_earnings_payload(payload, symbol)
            atomic_write_text(cache_path, json.dumps(payload, indent=2))
            return records
    return parse_earnings_payload(_download(symbol, client), symbol)


def _download(symbol: str, client: httpx.Client | None) -> Any:
    key = os.environ.get(EARNINGS_API_KEY_ENV)
    if not key:
        raise ExternalDataError(f"environment variable {EARNINGS_API_KEY_ENV} is not set")
    client = client or httpx.Client(timeout=60.0)
    try:
        resp = client.get(EARNINGS_URL, params={"function": "EARNINGS", "symbol": symbol, "apikey": key})
    except httpx.TransportError as exc:
        raise ExternalDataError(f"earnings request for {symbol} failed: {exc}") from exc
    if resp.status_code == 429:
        raise QuotaExceeded(f"{symbol}: HTTP 429")
    if resp.status_code >= 400:
        raise ExternalDataError(f"earnings request for {symbol} failed: HTTP {resp.status_code}")
    try:
        return resp.json()
    except ValueError as exc:
        raise MalformedPayload(f"{symbol}: response is not JSON") from exc


def previous_quarter_record(records: list[EarningsRecord], call_quarter: tuple[int, int]) -> EarningsRecord:
    """Record whose fiscal period ends in the calendar quarter before ``call_quarter``."""
    target = preceding_quarter(*call_quarter)
    matches = [r for r in records if calendar_quarter(r.fiscalDateEnding) == target]
    if not matches:
        raise NoPriorQuarter(f"no earnings record ending in {target[0]} Q{target[1]}")
    return matches[-1]


# --------------------------------------------------------------------------
# Acoustic features
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AcousticFeatureRecord:
    utterance_index: int
    minimum_intensity: float
    maximum_intensity: float
    mean_intensity: float
    minimum_pitch: float
    maximum_pitch: float
    mean_pitch: float
    num_pulses: int
    num_periods: int
    mean_periods: float
    stddev_periods: float
    fraction_unvoiced: float
    degree_of_voice_breaks: float
    jitter_local: float
    jitter_local_absolute: float
    jitter_rap: float
    jitter_ppq5: float
    jitter_ddp: float
    shimmer_local: float
    shimmer_localdb: float
    shimmer_apq3: float
    shimmer_aqpq5: float
    shimmer_dda: float
    hnr: float

    def __post_init__(self) -> None:
        if self.utterance_index < 0:
            raise InvariantViolation("utterance_index", "must be >= 0")
        for low, mean, high in (
            ("minimum_pitch", "mean_pitch", "maximum_pitch"),
            ("minimum_intensity", "mean_intensity", "maximum_intensity"),
        ):
            lo, mu, hi = getattr(self, low), getattr(self, mean), getattr(self, high)
            if mu > hi:
                raise InvariantViolation(mean, f"{mu} exceeds {high} {hi}")
            if lo > mu:
                raise InvariantViolation(mean, f"{mu} is below {low} {lo}")
        for name in ("fraction_unvoiced", "degree_of_voice_breaks"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvariantViolation(name, f"{value} outside [0, 1]")
        if self.num_periods != self.num_pulses - 1:
            warnings.warn(
                f"utterance {self.utterance_index}: num_periods {self.num_periods} != num_pulses - 1",
                stacklevel=3,
            )

    def features(self) -> dict[str, float | int]:
        """Feature values keyed by their upstream names, utterance index excluded."""
        return {f: getattr(self, f) for f in FEATURE_FIELDS}


FEATURE_FIELDS = tuple(f.name for f in fields(AcousticFeatureRecord) if f.name != "utterance_index")
_INT_FIELDS = {"utterance_index", "num_pulses", "num_periods"}


def parse_feature_record(entry: Any) -> AcousticFeatureRecord:
    if not isinstance(entry, dict):
        raise MalformedPayload("feature record must be a JSON object")
    values: dict[str, Any] = {}
    for name in ("utterance_index",) + FEATURE_FIELDS:
        if name not in entry:
            raise MalformedPayload(f"feature record lacks {name}")
        raw = entry[name]
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise MalformedPayload(f"{name} is not numeric: {raw!r}")
        if name in _INT_FIELDS:
            if raw != int(raw):
                raise MalformedPayload(f"{name} must be an integer: {raw!r}")
            raw = int(raw)
        values[name] = raw
    return AcousticFeatureRecord(**values)


def load_acoustic_features(path: str | os.PathLike) -> list[AcousticFeatureRecord]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedPayload(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(payload, list):
        raise MalformedPayload(f"{path}: expected a JSON array of feature records")
    records = [parse_feature_record(e) for e in payload]
    return sorted(records, key=lambda r: r.utterance_index)
