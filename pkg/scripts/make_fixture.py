"""Regenerate the bundled synthetic JHU-style deaths file.

Cumulative deaths come from the reference two-wave parameter set on a
population of 1.38e9, rounded to whole people and split across two
province rows so that parsing has to aggregate them.
"""
import datetime as dt
from pathlib import Path

import numpy as np

from seirwave.core import FixedRates, PopulationConfig
from seirwave.fitting import TABLE_I_FITTED, params_from_values
from seirwave.ingest import JHU_FIXED_COLUMNS
from seirwave.integrate import simulate

OUT = Path(__file__).resolve().parents[1] / "src" / "seirwave" / "data" / "synthetic_deaths.csv"
START = dt.date(2020, 1, 22)
N_DAYS = 585


def main():
    traj = simulate(params_from_values(TABLE_I_FITTED), FixedRates(), PopulationConfig(1.38e9),
                    horizon_days=N_DAYS - 1)
    total = np.rint(traj.d).astype(np.int64)
    north = total * 3 // 5
    south = total - north
    dates = [START + dt.timedelta(days=k) for k in range(N_DAYS)]
    header = [*JHU_FIXED_COLUMNS, *(f"{d.month}/{d.day}/{d.year % 100:02d}" for d in dates)]
    lines = [",".join(header)]
    lines.append(",".join(["North", "Synthetic", "10.0", "70.0", *map(str, north)]))
    lines.append(",".join(["South", "Synthetic", "20.0", "80.0", *map(str, south)]))
    lines.append(",".join(["", "Elsewhere", "0.0", "0.0", *(["0"] * N_DAYS)]))
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({total[-1]} deaths by day {N_DAYS - 1})")


if __name__ == "__main__":
    main()
