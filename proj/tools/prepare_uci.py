#!/usr/bin/env python3
"""Convert the UCI concrete and bike-sharing downloads into the CSVs read by configs/.

    python3 tools/prepare_uci.py --concrete Concrete_Data.xls --bike day.csv --out data

Concrete columns are renamed to short names. Bike weather fields are
rescaled from the normalized values shipped in day.csv back to degrees C,
percent humidity and km/h, since the calipers are stated in those units.
"""
import argparse
from pathlib import Path

import pandas as pd

CONCRETE_COLUMNS = [
    "cement", "slag", "flyash", "water", "superplasticizer",
    "coarse_aggregate", "fine_aggregate", "age", "strength",
]


def concrete(src: Path, dst: Path) -> None:
    if src.suffix.lower() in (".xls", ".xlsx"):
        df = pd.read_excel(src)
    else:
        df = pd.read_csv(src)
    if df.shape[1] != len(CONCRETE_COLUMNS):
        raise SystemExit(f"{src}: expected {len(CONCRETE_COLUMNS)} columns, found {df.shape[1]}")
    df.columns = CONCRETE_COLUMNS
    df.to_csv(dst, index=False)
    print(f"{dst}: {len(df)} rows")


def bike(src: Path, dst: Path) -> None:
    df = pd.read_csv(src)
    # day.csv stores t/41, hum/100 and windspeed/67.
    df["temp_c"] = df["temp"] * 41
    df["hum_pct"] = df["hum"] * 100
    df["windspeed_kmh"] = df["windspeed"] * 67
    df.to_csv(dst, index=False)
    print(f"{dst}: {len(df)} rows")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--concrete", type=Path, help="Concrete_Data.xls (or an equivalent CSV)")
    ap.add_argument("--bike", type=Path, help="day.csv from the bike-sharing archive")
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = ap.parse_args()
    if not args.concrete and not args.bike:
        ap.error("nothing to do: pass --concrete and/or --bike")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.concrete:
        concrete(args.concrete, args.out / "concrete.csv")
    if args.bike:
        bike(args.bike, args.out / "bike.csv")


if __name__ == "__main__":
    main()
