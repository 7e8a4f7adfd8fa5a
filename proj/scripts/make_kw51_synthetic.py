#!/usr/bin/env python3
"""Writes data/kw51_synthetic.csv: hourly bridge monitoring data with the KW51
column layout (steel temperature, relative humidity, 14 tracked frequencies).

The frequencies share a common component whose strength grows when the steel
is below freezing and the air is humid, so pairwise correlations are highest
in the cold/humid corner. Gaps of a few hours are punched into every column
and a handful of timestamps are absent altogether.
"""
import argparse
import numpy as np
import pandas as pd

BASE = [1.9, 2.4, 2.7, 3.4, 4.0, 4.4, 5.3, 6.1, 6.4, 7.3, 8.5, 9.6, 10.8, 12.5]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data/kw51_synthetic.csv")
    ap.add_argument("--seed", type=int, default=51)
    ap.add_argument("--start", default="2018-10-02 00:00:00")
    ap.add_argument("--end", default="2019-07-01 00:00:00")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    t = pd.date_range(args.start, args.end, freq="h", inclusive="left")
    n = len(t)
    doy = t.dayofyear.to_numpy()
    hod = t.hour.to_numpy()
    seasonal = 10.0 - 9.0 * np.cos(2 * np.pi * (doy - 20) / 365.0)
    daily = 3.0 * np.sin(2 * np.pi * (hod - 9) / 24.0)
    weather = np.zeros(n)
    for i in range(1, n):
        weather[i] = 0.995 * weather[i - 1] + rng.normal(0, 0.35)
    temp = seasonal + daily + weather
    rh = np.clip(95 - 1.6 * (temp - 5) - 2.5 * daily + rng.normal(0, 6, n), 25, 100)

    cold = 1 / (1 + np.exp(temp / 1.5))
    humid = 1 / (1 + np.exp(-(rh - 82) / 4))
    strength = 0.15 + 1.4 * cold * humid
    common = np.zeros(n)
    for i in range(1, n):
        common[i] = 0.6 * common[i - 1] + rng.normal(0, 0.8)

    cols = {"timestamp": t.strftime("%Y-%m-%d %H:%M:%S"), "tBD31A": temp.round(3), "rhBD31A": rh.round(2)}
    for m, base in enumerate(BASE, start=1):
        trend = base * (1 - 0.0008 * temp + 0.02 * cold * humid)
        shared = base * 0.004 * strength * common
        own = base * 0.004 * rng.normal(0, 1, n)
        cols[f"mode{m}"] = (trend + shared + own).round(5)
    df = pd.DataFrame(cols)

    for c in df.columns[1:]:
        for _ in range(12):
            s = rng.integers(1, n - 10)
            df.loc[s:s + rng.integers(1, 6), c] = np.nan
    df.loc[0:1, "mode7"] = np.nan  # leading gap: dropped, never extrapolated
    absent = rng.choice(np.arange(5, n - 5), size=6, replace=False)
    df = df.drop(index=absent)
    df.to_csv(args.out, index=False, na_rep="")


if __name__ == "__main__":
    main()
