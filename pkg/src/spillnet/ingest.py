"""OHLC ingestion, cleaning, and log-volatility panel construction.

Turns raw per-firm OHLC bars into an aligned dates x firms matrix of
log range-based variances: share-class filtering, trading-calendar
restriction, Garman-Klass estimation, and LOCF gap imputation.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

REGIONS = ("north", "south", "east", "northeast", "northwest", "southwest")
SHARE_CLASSES = ("A", "B", "H")

# 2*ln(2) - 1, the close/open coefficient of the Garman-Klass estimator
_GK_K = 2.0 * math.log(2.0) - 1.0

# Gap/zero runs longer than this drop the firm instead of being filled.
MAX_FILL_RUN = 9

PANEL_HEADER = "# spillnet-panel v1"

_OHLC_FIELDS = ("date", "ticker", "open", "high", "low", "close", "volume")


@dataclass(frozen=True)
class OhlcBar:
    """One daily bar. Prices strictly positive, low/high bracket open/close."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int


@dataclass(frozen=True)
class FirmMeta:
    ticker: str
    name: str
    region: str
    state_owned: bool
    parent_ticker: str | None = None
    share_class: str = "A"


@dataclass(frozen=True)
class TradingCalendar:
    """Ordered set of trading days; the panel is restricted to these."""

    included_dates: tuple[dt.date, ...]

    def __post_init__(self):
        for a, b in zip(self.included_dates, self.included_dates[1:]):
            if a >= b:
                raise ValueError(f"calendar dates not strictly increasing at {a} -> {b}")

    def __contains__(self, date: dt.date) -> bool:
        return date in set(self.included_dates)

    @classmethod
    def from_file(cls, path: str | Path) -> "TradingCalendar":
        """Read one ISO-8601 date per line; blank lines and # comments skipped."""
        dates = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            dates.append(dt.date.fromisoformat(line))
        return cls(tuple(dates))


@dataclass(frozen=True)
class Diagnostic:
    """One row of the exclusion/diagnostic report: (ticker, rule, detail)."""

    ticker: str
    rule: str
    detail: str


@dataclass
class FilterRules:
    drop_b_shares: bool = True
    dedupe_listings: bool = True


@dataclass
class VolatilityPanel:
    """Dates x firms matrix of log range-based variances (the VAR input)."""

    dates: list[dt.date]
    firms: list[str]
    values: np.ndarray  # T x N, float64, every entry finite

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        T, N = self.values.shape
        if T != len(self.dates) or N != len(self.firms):
            raise ValueError(
                f"panel shape {self.values.shape} does not match "
                f"{len(self.dates)} dates x {len(self.firms)} firms"
            )

    def validate(self) -> None:
        if not np.all(np.isfinite(self.values)):
            bad = int(np.count_nonzero(~np.isfinite(self.values)))
            raise ValueError(f"panel has {bad} non-finite entries")

    def window(self, start: int, end: int) -> np.ndarray:
        """Values for rows start..end inclusive."""
        return self.values[start : end + 1]

    def to_csv(self, path: str | Path) -> None:
        lines = [PANEL_HEADER, "date," + ",".join(self.firms)]
        for t, date in enumerate(self.dates):
            lines.append(date.isoformat() + "," + ",".join(repr(v) for v in self.values[t]))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "VolatilityPanel":
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0].strip() != PANEL_HEADER:
            raise ValueError(f"{path}: not a spillnet panel file (missing '{PANEL_HEADER}')")
        header = lines[1].split(",")
        if header[0] != "date":
            raise ValueError(f"{path}: malformed panel header row")
        firms = header[1:]
        dates, rows = [], []
        for line in lines[2:]:
            if not line.strip():
                continue
            parts = line.split(",")
            dates.append(dt.date.fromisoformat(parts[0]))
            rows.append([float(x) for x in parts[1:]])
        panel = cls(dates=dates, firms=firms, values=np.array(rows, dtype=float))
        panel.validate()
        return panel


@dataclass
class CalendarResult:
    series: dict[str, list[OhlcBar]]
    gaps: dict[str, list[dt.date]]
    diagnostics: list[Diagnostic] = field(default_factory=list)


def load_ohlc(
    path: str | Path, schema: dict[str, str] | None = None
) -> tuple[dict[str, list[OhlcBar]], list[Diagnostic]]:
    """Load an OHLC CSV into per-ticker bar series sorted by date.

    ``schema`` maps the canonical field names (date, ticker, open, high,
    low, close, volume) to the file's column names; by default the columns
    are expected to carry the canonical names. Rows violating the bar
    invariants are rejected and reported, not raised.
    """
    colmap = dict(zip(_OHLC_FIELDS, _OHLC_FIELDS))
    if schema:
        colmap.update(schema)
    df = pd.read_csv(path, dtype=str)
    missing = [colmap[f] for f in _OHLC_FIELDS if colmap[f] not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")

    series: dict[str, list[OhlcBar]] = {}
    seen_dates: dict[str, set[dt.date]] = {}
    diagnostics: list[Diagnostic] = []

    for row in df.itertuples(index=False):
        rec = {f: getattr(row, colmap[f]) for f in _OHLC_FIELDS}
        ticker = str(rec["ticker"]).strip()
        try:
            date = dt.date.fromisoformat(str(rec["date"]).strip())
        except ValueError:
            diagnostics.append(Diagnostic(ticker, "unparseable_date", str(rec["date"])))
            continue
        try:
            o, h, l, c = (float(rec[k]) for k in ("open", "high", "low", "close"))
            vol = float(rec["volume"])
        except (TypeError, ValueError):
            diagnostics.append(Diagnostic(ticker, "unparseable_number", date.isoformat()))
            continue
        if min(o, h, l, c) <= 0.0:
            diagnostics.append(Diagnostic(ticker, "non_positive_price", date.isoformat()))
            continue
        if l > min(o, c) or h < max(o, c):
            diagnostics.append(
                Diagnostic(ticker, "range_violation", f"{date.isoformat()} o={o} h={h} l={l} c={c}")
            )
            continue
        if vol < 0 or vol != int(vol):
            diagnostics.append(Diagnostic(ticker, "bad_volume", f"{date.isoformat()} volume={vol}"))
            continue
        if date in seen_dates.setdefault(ticker, set()):
            diagnostics.append(Diagnostic(ticker, "duplicate_date", date.isoformat()))
            continue
        seen_dates[ticker].add(date)
        series.setdefault(ticker, []).append(
            OhlcBar(date=date, open=o, high=h, low=l, close=c, volume=int(vol))
        )

    for bars in series.values():
        bars.sort(key=lambda b: b.date)
    return series, diagnostics


def read_metadata_csv(path: str | Path) -> list[FirmMeta]:
    """Read firm metadata: ticker, name, region, state_owned, parent_ticker, share_class."""
    df = pd.read_csv(path, dtype=str).fillna("")
    required = ["ticker", "name", "region", "state_owned", "share_class"]
    missing = [c for c in required if c not in df.columns]
    if missing:
        raise ValueError(f"{path}: missing metadata columns {missing}")
    metas = []
    for row in df.itertuples(index=False):
        region = row.region.strip().lower()
        if region not in REGIONS:
            raise ValueError(f"{path}: unknown region {region!r} for {row.ticker}")
        share = row.share_class.strip().upper()
        if share not in SHARE_CLASSES:
            raise ValueError(f"{path}: unknown share class {share!r} for {row.ticker}")
        owned = row.state_owned.strip().lower()
        if owned not in ("true", "false"):
            raise ValueError(f"{path}: state_owned must be true/false, got {owned!r}")
        parent = getattr(row, "parent_ticker", "").strip() or None
        metas.append(
            FirmMeta(
                ticker=row.ticker.strip(),
                name=row.name.strip(),
                region=region,
                state_owned=owned == "true",
                parent_ticker=parent,
                share_class=share,
            )
        )
    tickers = {m.ticker for m in metas}
    if len(tickers) != len(metas):
        raise ValueError(f"{path}: duplicate tickers in metadata")
    for m in metas:
        if m.parent_ticker is not None and m.parent_ticker not in tickers:
            raise ValueError(f"{path}: {m.ticker} references unknown parent {m.parent_ticker}")
    return metas


def filter_universe(
    firms: dict[str, list[OhlcBar]],
    meta: list[FirmMeta],
    rules: FilterRules | None = None,
) -> tuple[dict[str, list[OhlcBar]], list[Diagnostic]]:
    """Apply the share-class filters: drop B shares, dedupe A/H twins by volume.

    Listings of the same enterprise are identified by an identical metadata
    ``name``; among duplicates the listing with the higher total traded volume
    is kept. Parent/child firms have distinct names and are both retained.
    """
    rules = rules or FilterRules()
    by_ticker = {m.ticker: m for m in meta}
    for ticker in firms:
        if ticker not in by_ticker:
            raise ValueError(f"ticker {ticker} has no metadata")

    exclusions: list[Diagnostic] = []
    kept = dict(firms)

    if rules.drop_b_shares:
        for ticker in sorted(kept):
            if by_ticker[ticker].share_class == "B":
                exclusions.append(Diagnostic(ticker, "b_share", "B-share listing removed"))
                del kept[ticker]

    if rules.dedupe_listings:
        groups: dict[str, list[str]] = {}
        for ticker in kept:
            groups.setdefault(by_ticker[ticker].name, []).append(ticker)
        for name, tickers in sorted(groups.items()):
            if len(tickers) < 2:
                continue
            volumes = {t: sum(b.volume for b in kept[t]) for t in tickers}
            winner = max(sorted(tickers), key=lambda t: volumes[t])
            for t in tickers:
                if t != winner:
                    exclusions.append(
                        Diagnostic(
                            t,
                            "duplicate_listing",
                            f"lower volume than {winner} for {name} "
                            f"({volumes[t]} vs {volumes[winner]})",
                        )
                    )
                    del kept[t]

    return kept, exclusions


def apply_calendar(
    series: dict[str, list[OhlcBar]], calendar: TradingCalendar
) -> CalendarResult:
    """Restrict each firm's bars to calendar days, marking missing days as gaps."""
    if not calendar.included_dates:
        raise ValueError("calendar is empty")
    allowed = set(calendar.included_dates)
    out: dict[str, list[OhlcBar]] = {}
    gaps: dict[str, list[dt.date]] = {}
    diagnostics: list[Diagnostic] = []
    for ticker, bars in series.items():
        restricted = [b for b in bars if b.date in allowed]
        have = {b.date for b in restricted}
        out[ticker] = restricted
        gaps[ticker] = [d for d in calendar.included_dates if d not in have]
        if not restricted:
            diagnostics.append(
                Diagnostic(ticker, "empty_after_calendar", "no bars on calendar days")
            )
    return CalendarResult(series=out, gaps=gaps, diagnostics=diagnostics)


def garman_klass_raw(open_: float, high: float, low: float, close: float) -> float:
    """The classic Garman-Klass daily variance: 0.5*ln(H/L)^2 - (2ln2-1)*ln(C/O)^2."""
    log_hl = math.log(high / low)
    log_co = math.log(close / open_)
    return 0.5 * log_hl * log_hl - _GK_K * log_co * log_co


def garman_klass(bar: OhlcBar) -> float:
    """Garman-Klass variance for one bar, clamped to stay non-negative.

    For bars satisfying the OHLC invariants the raw value is already >= 0;
    the clamp (to the smallest positive normal float) only guards inputs
    that slipped past validation, so the later log transform stays defined.
    """
    raw = garman_klass_raw(bar.open, bar.high, bar.low, bar.close)
    if raw < 0.0:
        return float(np.finfo(np.float64).tiny)
    return raw


def build_variance_panel(
    series: dict[str, list[OhlcBar]], calendar: TradingCalendar
) -> tuple[np.ndarray, list[dt.date], list[str], list[Diagnostic]]:
    """Assemble the T x N Garman-Klass variance matrix; gaps become NaN.

    Firms are ordered alphabetically for determinism. Negative raw estimator
    values (possible only for invariant-violating bars) are clamped and
    counted per firm.
    """
    result = apply_calendar(series, calendar)
    dates = list(calendar.included_dates)
    firms = sorted(result.series)
    index = {d: t for t, d in enumerate(dates)}
    values = np.full((len(dates), len(firms)), np.nan)
    diagnostics = list(result.diagnostics)
    for j, ticker in enumerate(firms):
        clamped = 0
        for bar in result.series[ticker]:
            raw = garman_klass_raw(bar.open, bar.high, bar.low, bar.close)
            if raw < 0.0:
                clamped += 1
                raw = float(np.finfo(np.float64).tiny)
            values[index[bar.date], j] = raw
        if clamped:
            diagnostics.append(
                Diagnostic(ticker, "negative_variance_clamped", f"{clamped} bars")
            )
    return values, dates, firms, diagnostics


def impute_and_log(
    values: np.ndarray,
    dates: list[dt.date],
    firms: list[str],
    max_fill_run: int = MAX_FILL_RUN,
) -> tuple[VolatilityPanel, list[Diagnostic]]:
    """LOCF-fill short zero/gap runs, drop firms with extended runs, take logs.

    A "missing" entry is a NaN gap or a zero variance. Runs of up to
    ``max_fill_run`` missing days are filled with the most recent positive
    variance; firms with a longer run, or with no leading value to carry,
    are dropped and reported.
    """
    values = np.asarray(values, dtype=float)
    if np.any(values[np.isfinite(values)] < 0):
        raise ValueError("variance panel has negative entries")
    T, N = values.shape
    keep: list[int] = []
    diagnostics: list[Diagnostic] = []
    filled = values.copy()
    for j, ticker in enumerate(firms):
        col = values[:, j]
        missing = ~np.isfinite(col) | (col == 0.0)
        if missing[0]:
            diagnostics.append(Diagnostic(ticker, "leading_gap", "no value to carry forward"))
            continue
        run, longest = 0, 0
        for t in range(T):
            run = run + 1 if missing[t] else 0
            longest = max(longest, run)
        if longest > max_fill_run:
            diagnostics.append(
                Diagnostic(ticker, "extended_gap", f"run of {longest} missing days")
            )
            continue
        last = col[0]
        out = filled[:, j]
        for t in range(T):
            if missing[t]:
                out[t] = last
            else:
                last = col[t]
        keep.append(j)

    panel = VolatilityPanel(
        dates=list(dates),
        firms=[firms[j] for j in keep],
        values=np.log(filled[:, keep]) if keep else np.empty((T, 0)),
    )
    panel.validate()
    return panel, diagnostics


def write_diagnostics_csv(diagnostics: list[Diagnostic], path: str | Path) -> None:
    lines = ["ticker,rule,detail"]
    for d in diagnostics:
        detail = d.detail.replace('"', "'")
        lines.append(f'{d.ticker},{d.rule},"{detail}"')
    Path(path).write_text("\n".join(lines) + "\n")


def clean_pipeline(
    ohlc_path: str | Path,
    meta: list[FirmMeta],
    calendar: TradingCalendar,
    rules: FilterRules | None = None,
    schema: dict[str, str] | None = None,
) -> tuple[VolatilityPanel, list[Diagnostic]]:
    """Full cleaning pass: load, filter, align to calendar, impute, log."""
    series, diagnostics = load_ohlc(ohlc_path, schema=schema)
    filtered, exclusions = filter_universe(series, meta, rules)
    diagnostics.extend(exclusions)
    values, dates, firms, build_diags = build_variance_panel(filtered, calendar)
    diagnostics.extend(build_diags)
    panel, impute_diags = impute_and_log(values, dates, firms)
    diagnostics.extend(impute_diags)
    return panel, diagnostics
