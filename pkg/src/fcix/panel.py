"""Price panels and lag-l gross returns."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from os import PathLike
from typing import IO, Iterable

import numpy as np
from numpy.typing import NDArray

from .errors import DataError, EmptyPanel, IncompletePanel, LagTooLarge, NonPositivePrice


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PricePanel:
    """Dense adjusted-close matrix, one row per date and one column per ticker.

    Dates are opaque labels; ordering is the only thing relied upon.
    """

    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    prices: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        prices = _frozen(self.prices)
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 2 or prices.size == 0:
            raise EmptyPanel("price panel has no cells")
        if prices.shape != (len(self.dates), len(self.tickers)):
            raise DataError(
                f"prices shape {prices.shape} does not match "
                f"{len(self.dates)} dates x {len(self.tickers)} tickers"
            )
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("dates must be strictly increasing")
        if len(set(self.tickers)) != len(self.tickers):
            raise DataError("duplicate tickers")
        if not np.all(np.isfinite(prices)):
            raise IncompletePanel("panel contains missing or non-finite prices")
        if np.any(prices <= 0):
            t, i = np.argwhere(prices <= 0)[0]
            raise NonPositivePrice(
                f"non-positive price {prices[t, i]} for {self.tickers[i]} on {self.dates[t]}"
            )

    @property
    def n_assets(self) -> int:
        return len(self.tickers)

    @property
    def n_dates(self) -> int:
        return len(self.dates)


@dataclass(frozen=True)
class ReturnsPanel:
    lag: int
    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    returns: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        object.__setattr__(self, "returns", _frozen(self.returns))
        if np.any(~(self.returns > 0)):
            raise NonPositivePrice("gross returns must be strictly positive")

    @property
    def horizon(self) -> int:
        return self.returns.shape[0]


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, PathLike)):
        return open(source, newline="", encoding="utf-8"), True
    return source, False


def _parse_price(raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"unparseable price {raw!r} at {where}") from None
    if math.isnan(value) or math.isinf(value):
        raise DataError(f"non-finite price {raw!r} at {where}")
    if value <= 0:
        raise NonPositivePrice(f"non-positive price {value} at {where}")
    return value


def load_prices(
    source: str | PathLike | IO[str],
    *,
    delimiter: str = ",",
    drop_incomplete: bool = False,
) -> PricePanel:
    """Read long-format ``date,ticker,price`` rows and pivot them to a dense panel.

    Tickers lacking a price on any date in the union of dates raise
    :class:`IncompletePanel`, or are dropped when ``drop_incomplete`` is set.
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise EmptyPanel("input has no header row")
        header = [h.strip().lower() for h in reader.fieldnames]
        missing = {"date", "ticker", "price"} - set(header)
        if missing:
            raise DataError(f"header lacks column(s): {', '.join(sorted(missing))}")
        reader.fieldnames = header
        cells: dict[tuple[str, str], float] = {}
        for lineno, row in enumerate(reader, start=2):
            date, ticker = row["date"].strip(), row["ticker"].strip()
            key = (date, ticker)
            if key in cells:
                raise DataError(f"duplicate row for {ticker} on {date} (line {lineno})")
            cells[key] = _parse_price(row["price"].strip(), f"line {lineno}")
    finally:
        if owned:
            fh.close()
    if not cells:
        raise EmptyPanel("input contains no price rows")

    dates = sorted({d for d, _ in cells})
    tickers = sorted({t for _, t in cells})
    complete = [t for t in tickers if all((d, t) in cells for d in dates)]
    if len(complete) < len(tickers):
        incomplete = [t for t in tickers if t not in complete]
        if not drop_incomplete:
            raise IncompletePanel(
                f"{len(incomplete)} ticker(s) have missing dates: {', '.join(incomplete[:10])}"
            )
        tickers = complete
    if not tickers:
        raise EmptyPanel("no complete tickers remain")
    prices = np.array([[cells[(d, t)] for t in tickers] for d in dates])
    return PricePanel(dates, tickers, prices)


def load_wide_prices(
    source: str | PathLike | IO[str], *, delimiter: str = ",", drop_incomplete: bool = False
) -> PricePanel:
    """Convenience reader for a dense ``date,<ticker>,<ticker>,...`` table.

    Empty cells count as missing and follow the same completeness policy.
    """
    fh, owned = _open_text(source)
    try:
        rows = list(csv.reader(fh, delimiter=delimiter))
    finally:
        if owned:
            fh.close()
    if not rows or len(rows[0]) < 2:
        raise EmptyPanel("wide table needs a date column and at least one ticker")
    tickers = [t.strip() for t in rows[0][1:]]
    long = io.StringIO()
    w = csv.writer(long)
    w.writerow(["date", "ticker", "price"])
    for row in rows[1:]:
        if not row:
            continue
        for t, cell in zip(tickers, row[1:]):
            if cell.strip():
                w.writerow([row[0].strip(), t, cell.strip()])
    long.seek(0)
    return load_prices(long, drop_incomplete=drop_incomplete)


def lag_returns(panel: PricePanel, lag: int) -> ReturnsPanel:
    """Gross returns ``prices[t + lag] / prices[t]``, labelled by the later date."""
    if not isinstance(lag, (int, np.integer)) or lag < 1:
        raise DataError(f"lag must be a positive integer, got {lag!r}")
    if lag >= panel.n_dates:
        raise LagTooLarge(f"lag {lag} needs more than {panel.n_dates} dates")
    p = panel.prices
    return ReturnsPanel(int(lag), panel.dates[lag:], panel.tickers, p[lag:] / p[:-lag])


def write_long_prices(panel: PricePanel, fh: IO[str], delimiter: str = ",") -> None:
    w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
    w.writerow(["date", "ticker", "price"])
    for t, date in enumerate(panel.dates):
        for i, ticker in enumerate(panel.tickers):
            w.writerow([date, ticker, repr(float(panel.prices[t, i]))])


def synthetic_panel(
    n_assets: int,
    n_days: int,
    *,
    seed: int = 0,
    vol: float = 0.02,
    start: str = "2020-01-01",
    tickers: Iterable[str] | None = None,
) -> PricePanel:
    """Geometric random-walk panel on consecutive business days."""
    rng = np.random.default_rng(seed)
    steps = rng.normal(0.0, vol, size=(n_days - 1, n_assets))
    log_p = np.vstack([np.log(rng.uniform(20.0, 200.0, n_assets)), steps]).cumsum(axis=0)
    dates = np.busday_offset(np.datetime64(start, "D"), np.arange(n_days), roll="forward")
    names = list(tickers) if tickers is not None else [f"A{i:03d}" for i in range(n_assets)]
    return PricePanel([str(d) for d in dates], names, np.round(np.exp(log_p), 6))
