"""Statistics over exported chain data.

Two CSV schemas are ingested:

    blocks: height,timestamp,tx_count,size_bytes
    txs:    id,first_seen,confirmed_at,size_bytes,fee_btc

Timestamps are unix seconds. Fees are parsed as exact decimals with at
most 8 fractional digits so that threshold classification never falls
to binary-float rounding. Block-generation intervals are successive
timestamp differences in height order; measured timestamps are not
monotone, so negative differences are clamped to zero rather than
rejected.

Reported conventions: variance is the population variance, the median
of an even count is the lower middle value, and arrival rates are per
second (counts divided by the span in seconds).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation

BLOCKS_HEADER = ["height", "timestamp", "tx_count", "size_bytes"]
TXS_HEADER = ["id", "first_seen", "confirmed_at", "size_bytes", "fee_btc"]

DEFAULT_THRESHOLD = Decimal("0.0001")
FEE_THRESHOLDS = (
    Decimal("0"),
    Decimal("0.00001"),
    Decimal("0.0001"),
    Decimal("0.001"),
    Decimal("0.01"),
    Decimal("0.1"),
    Decimal("1"),
    Decimal("10"),
)
MALFORMED_FRACTION_LIMIT = 0.01


class DataFormatError(ValueError):
    """The file as a whole is unusable (schema or error-rate failure)."""


@dataclass(frozen=True)
class BlockRecord:
    height: int
    timestamp: int
    tx_count: int
    size_bytes: int


@dataclass(frozen=True)
class TxRecord:
    id: str
    first_seen: int
    confirmed_at: int
    size_bytes: int
    fee_btc: Decimal

    @property
    def confirmation_time(self) -> int:
        return self.confirmed_at - self.first_seen


@dataclass(frozen=True)
class ClassRule:
    """High priority means fee at or above the threshold (inclusive)."""

    threshold_btc: Decimal = DEFAULT_THRESHOLD

    def __post_init__(self) -> None:
        if not isinstance(self.threshold_btc, Decimal):
            object.__setattr__(self, "threshold_btc", Decimal(str(self.threshold_btc)))
        if self.threshold_btc <= 0:
            raise ValueError("threshold must be positive")

    def is_high(self, tx: TxRecord) -> bool:
        return tx.fee_btc >= self.threshold_btc


@dataclass(frozen=True)
class RowError:
    path: str
    line: int
    message: str


@dataclass(frozen=True)
class LoadResult:
    blocks: tuple
    txs: tuple
    errors: tuple


def _parse_int(text: str, name: str, minimum: int | None = None) -> int:
    value = int(text)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}")
    return value


def _parse_fee(text: str) -> Decimal:
    try:
        fee = Decimal(text)
    except InvalidOperation as exc:
        raise ValueError(f"unparseable fee {text!r}") from exc
    if not fee.is_finite():
        raise ValueError(f"non-finite fee {text!r}")
    if fee < 0:
        raise ValueError("negative fee")
    if -fee.as_tuple().exponent > 8:
        raise ValueError("fee has more than 8 fractional digits")
    return fee


def _read_rows(path, header):
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file, expected header {header}")
        if first != header:
            raise DataFormatError(f"{path}: header {first} does not match {header}")
        return list(reader)


def load(blocks_csv_path, txs_csv_path) -> LoadResult:
    """Parse both files, collecting row-level errors.

    A malformed row is skipped and reported with its line number. If
    more than 1% of a file's data rows are malformed the whole load is
    rejected with DataFormatError.
    """
    errors: list = []

    blocks: list = []
    seen_heights: set = set()
    rows = _read_rows(blocks_csv_path, BLOCKS_HEADER)
    for line_no, row in enumerate(rows, start=2):
        try:
            if len(row) != len(BLOCKS_HEADER):
                raise ValueError(f"expected {len(BLOCKS_HEADER)} fields, got {len(row)}")
            height = _parse_int(row[0], "height")
            if height in seen_heights:
                raise ValueError(f"duplicate height {height}")
            record = BlockRecord(
                height=height,
                timestamp=_parse_int(row[1], "timestamp"),
                tx_count=_parse_int(row[2], "tx_count", minimum=0),
                size_bytes=_parse_int(row[3], "size_bytes", minimum=0),
            )
        except ValueError as exc:
            errors.append(RowError(str(blocks_csv_path), line_no, str(exc)))
            continue
        seen_heights.add(height)
        blocks.append(record)
    _check_error_rate(blocks_csv_path, len(rows), errors)

    txs: list = []
    block_error_count = len(errors)
    rows = _read_rows(txs_csv_path, TXS_HEADER)
    for line_no, row in enumerate(rows, start=2):
        try:
            if len(row) != len(TXS_HEADER):
                raise ValueError(f"expected {len(TXS_HEADER)} fields, got {len(row)}")
            if not row[0]:
                raise ValueError("empty transaction id")
            first_seen = _parse_int(row[1], "first_seen")
            confirmed_at = _parse_int(row[2], "confirmed_at")
            if confirmed_at < first_seen:
                raise ValueError("confirmed_at precedes first_seen")
            record = TxRecord(
                id=row[0],
                first_seen=first_seen,
                confirmed_at=confirmed_at,
                size_bytes=_parse_int(row[3], "size_bytes", minimum=1),
                fee_btc=_parse_fee(row[4]),
            )
        except ValueError as exc:
            errors.append(RowError(str(txs_csv_path), line_no, str(exc)))
            continue
        txs.append(record)
    _check_error_rate(txs_csv_path, len(rows), errors[block_error_count:])

    return LoadResult(blocks=tuple(blocks), txs=tuple(txs), errors=tuple(errors))


def _check_error_rate(path, total_rows: int, errors: list) -> None:
    if total_rows > 0 and len(errors) > MALFORMED_FRACTION_LIMIT * total_rows:
        raise DataFormatError(
            f"{path}: {len(errors)} of {total_rows} rows malformed "
            f"(over {MALFORMED_FRACTION_LIMIT:.0%}); first: {errors[0].message}"
        )


@dataclass(frozen=True)
class Summary:
    count: int
    mean: float
    variance: float
    minimum: float
    maximum: float
    median: float


def _summarize_values(values) -> Summary:
    if not values:
        raise ValueError("nothing to summarize")
    ordered = sorted(values)
    n = len(ordered)
    mean = sum(ordered) / n
    variance = sum((v - mean) ** 2 for v in ordered) / n
    median = ordered[(n - 1) // 2]
    return Summary(
        count=n,
        mean=mean,
        variance=variance,
        minimum=ordered[0],
        maximum=ordered[-1],
        median=median,
    )


def block_generation_times(blocks) -> list:
    """Successive timestamp differences in height order, clamped at 0."""
    ordered = sorted(blocks, key=lambda blk: blk.height)
    return [
        max(0, nxt.timestamp - cur.timestamp)
        for cur, nxt in zip(ordered, ordered[1:])
    ]


def summarize(blocks) -> Summary:
    """Summary of block-generation times; needs at least two blocks."""
    times = block_generation_times(blocks)
    if not times:
        raise ValueError("need at least two blocks to form an interval")
    return _summarize_values(times)


@dataclass(frozen=True)
class ClassSummary:
    label: str
    count: int
    mean_tct: float | None
    variance_tct: float | None
    median_tct: float | None
    arrival_rate: float

    @property
    def defined(self) -> bool:
        return self.count > 0


@dataclass(frozen=True)
class ClassifiedStats:
    high: ClassSummary
    low: ClassSummary
    total_count: int
    span_seconds: float
    fee_cumulative: tuple  # ((threshold, count), ...) nondecreasing


def _class_summary(label: str, txs, span_seconds: float) -> ClassSummary:
    if not txs:
        return ClassSummary(
            label=label,
            count=0,
            mean_tct=None,
            variance_tct=None,
            median_tct=None,
            arrival_rate=0.0,
        )
    summary = _summarize_values([tx.confirmation_time for tx in txs])
    return ClassSummary(
        label=label,
        count=summary.count,
        mean_tct=summary.mean,
        variance_tct=summary.variance,
        median_tct=summary.median,
        arrival_rate=summary.count / span_seconds,
    )


def classify_and_rates(txs, rule: ClassRule, span_seconds: float) -> ClassifiedStats:
    """Split by fee threshold, summarize each side, count fee deciles."""
    if not span_seconds > 0:
        raise ValueError("span_seconds must be positive")
    high = [tx for tx in txs if rule.is_high(tx)]
    low = [tx for tx in txs if not rule.is_high(tx)]
    fees = sorted(tx.fee_btc for tx in txs)
    cumulative = []
    for threshold in FEE_THRESHOLDS:
        # fees is sorted, count of fee <= threshold by bisection
        lo, hi = 0, len(fees)
        while lo < hi:
            mid = (lo + hi) // 2
            if fees[mid] <= threshold:
                lo = mid + 1
            else:
                hi = mid
        cumulative.append((threshold, lo))
    return ClassifiedStats(
        high=_class_summary("H", high, span_seconds),
        low=_class_summary("L", low, span_seconds),
        total_count=len(txs),
        span_seconds=float(span_seconds),
        fee_cumulative=tuple(cumulative),
    )


@dataclass(frozen=True)
class BucketRow:
    """One class in one time bucket; shares are None in empty buckets."""

    bucket_start: int
    label: str
    count: int
    share_pct: float | None
    fee_share_pct: float | None
    arrival_rate: float


def time_series(txs, rule: ClassRule, bucket_seconds: int = 86_400) -> list:
    """Per-bucket class counts, shares, and rates over first_seen time.

    Buckets cover the whole observed range; buckets with no traffic are
    emitted with zero counts and absent shares so gaps stay visible.
    """
    if bucket_seconds <= 0:
        raise ValueError("bucket_seconds must be positive")
    if not txs:
        return []
    start = min(tx.first_seen for tx in txs) // bucket_seconds
    end = max(tx.first_seen for tx in txs) // bucket_seconds
    counts: dict = {}
    fee_sums: dict = {}
    for tx in txs:
        bucket = tx.first_seen // bucket_seconds
        label = "H" if rule.is_high(tx) else "L"
        counts[(bucket, label)] = counts.get((bucket, label), 0) + 1
        fee_sums[(bucket, label)] = fee_sums.get((bucket, label), Decimal(0)) + tx.fee_btc

    rows: list = []
    for bucket in range(start, end + 1):
        h_count = counts.get((bucket, "H"), 0)
        l_count = counts.get((bucket, "L"), 0)
        total = h_count + l_count
        h_fee = fee_sums.get((bucket, "H"), Decimal(0))
        l_fee = fee_sums.get((bucket, "L"), Decimal(0))
        total_fee = h_fee + l_fee
        for label, count, fee in (("H", h_count, h_fee), ("L", l_count, l_fee)):
            rows.append(
                BucketRow(
                    bucket_start=bucket * bucket_seconds,
                    label=label,
                    count=count,
                    share_pct=100.0 * count / total if total else None,
                    fee_share_pct=float(100 * fee / total_fee) if total_fee else None,
                    arrival_rate=count / bucket_seconds,
                )
            )
    return rows


def write_summary_csv(summary: Summary, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["metric", "value"])
        writer.writerow(["count", summary.count])
        writer.writerow(["mean_s", repr(float(summary.mean))])
        writer.writerow(["variance_s2", repr(float(summary.variance))])
        writer.writerow(["min_s", repr(float(summary.minimum))])
        writer.writerow(["max_s", repr(float(summary.maximum))])
        writer.writerow(["median_s", repr(float(summary.median))])


def write_classes_csv(stats: ClassifiedStats, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["class", "count", "mean_tct_s", "variance_tct_s2", "median_tct_s", "arrival_rate_per_s"]
        )
        for cls in (stats.high, stats.low):
            writer.writerow(
                [
                    cls.label,
                    cls.count,
                    "" if cls.mean_tct is None else repr(float(cls.mean_tct)),
                    "" if cls.variance_tct is None else repr(float(cls.variance_tct)),
                    "" if cls.median_tct is None else repr(float(cls.median_tct)),
                    repr(float(cls.arrival_rate)),
                ]
            )


def write_cumulative_csv(stats: ClassifiedStats, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["threshold_btc", "cumulative_count"])
        for threshold, count in stats.fee_cumulative:
            writer.writerow([format(threshold, "f"), count])


def write_timeseries_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["bucket_start", "class", "count", "share_pct", "fee_share_pct", "rate_per_s"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.bucket_start,
                    row.label,
                    row.count,
                    "" if row.share_pct is None else repr(float(row.share_pct)),
                    "" if row.fee_share_pct is None else repr(float(row.fee_share_pct)),
                    repr(float(row.arrival_rate)),
                ]
            )
