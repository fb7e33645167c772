"""Regenerate the bundled chain-data fixtures.

Everything is deterministic and chosen so the summary statistics have
closed forms a test can assert exactly:

blocks (1000 rows, heights 700000..700999):
  inter-block gaps cycle 300, 600, 900 over the 999 gaps, so
  mean 600, population variance 60000, median 600, min 300, max 900.

txs (2000 rows, 1500 high-fee + 500 low-fee at threshold 0.0001 BTC):
  high confirmation times cycle 60, 120, 600, 1200, 3000
    -> mean 996, population variance 1171584, median 600
  low confirmation times cycle 100, 200, 300, 400, 500
    -> mean 300, population variance 20000, median 300
  fees are fixed multisets; counting fee <= t at thresholds
  0, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1, 10 gives
  100, 300, 800, 1400, 1700, 1850, 1950, 2000.
  first_seen = t0 + 997*i never wraps, so the observed span is
  997 * 1999 = 1993003 s; with an explicit span of 2000000 s the
  arrival rates are exactly 0.001 (all), 0.00075 (high), 0.00025 (low).

Run from the repository root:  python3 tools/make_fixtures.py
"""

from __future__ import annotations

import csv
from pathlib import Path

T0 = 1_600_000_000
DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "blockqueue" / "data"

GAP_CYCLE = (300, 600, 900)
HIGH_TCT_CYCLE = (60, 120, 600, 1200, 3000)
LOW_TCT_CYCLE = (100, 200, 300, 400, 500)

HIGH_FEES = ["0.0001"] * 300 + ["0.0005"] * 300 + ["0.001"] * 300 \
    + ["0.01"] * 300 + ["0.1"] * 150 + ["1"] * 100 + ["10"] * 50
LOW_FEES = ["0"] * 100 + ["0.00001"] * 200 + ["0.00005"] * 200


def write_blocks(path: Path) -> None:
    rows = []
    t = T0
    for i in range(1000):
        if i > 0:
            t += GAP_CYCLE[(i - 1) % 3]
        rows.append((700_000 + i, t, 1200 + (i % 7) * 50, 900_000 + (i % 11) * 1000))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["height", "timestamp", "tx_count", "size_bytes"])
        w.writerows(rows)


def write_txs(path: Path) -> None:
    assert len(HIGH_FEES) == 1500 and len(LOW_FEES) == 500
    rows = []
    n_high = n_low = 0
    for i in range(2000):
        first_seen = T0 + 997 * i
        if i % 4 != 3:
            tct = HIGH_TCT_CYCLE[n_high % 5]
            fee = HIGH_FEES[(n_high * 7) % 1500]
            n_high += 1
        else:
            tct = LOW_TCT_CYCLE[n_low % 5]
            fee = LOW_FEES[(n_low * 3) % 500]
            n_low += 1
        rows.append((f"tx{i:05d}", first_seen, first_seen + tct, 250 + (i % 13) * 10, fee))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "first_seen", "confirmed_at", "size_bytes", "fee_btc"])
        w.writerows(rows)


def main() -> None:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    write_blocks(DATA_DIR / "sample_blocks.csv")
    write_txs(DATA_DIR / "sample_txs.csv")
    print(f"wrote fixtures under {DATA_DIR}")


if __name__ == "__main__":
    main()
