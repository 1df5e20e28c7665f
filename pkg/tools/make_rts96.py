"""Build the bundled three-area RTS-96 network and hourly profile files.

Per-area data follow the one-area reliability test system tables
(branches, loads, unit mix and reliability data); the three areas are
joined by the five interconnections, with bus 325 attached to area 3.
Run from the repository root:  python tools/make_rts96.py
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "gridmc" / "data"

# from, to, x (pu), rating (MW), outages per year, repair hours.
# Ratings are the short-term emergency values; with them the intact system
# at peak demand first overloads a line at a loading level of about 1.37.
BRANCHES = [
    (1, 2, 0.014, 220, 0.24, 16), (1, 3, 0.211, 220, 0.51, 10), (1, 5, 0.085, 220, 0.33, 10),
    (2, 4, 0.127, 220, 0.39, 10), (2, 6, 0.192, 220, 0.48, 10), (3, 9, 0.119, 220, 0.38, 10),
    (3, 24, 0.084, 600, 0.02, 768), (4, 9, 0.104, 220, 0.36, 10), (5, 10, 0.088, 220, 0.34, 10),
    (6, 10, 0.061, 200, 0.33, 35), (7, 8, 0.061, 220, 0.30, 10), (8, 9, 0.165, 220, 0.44, 10),
    (8, 10, 0.165, 220, 0.44, 10), (9, 11, 0.084, 600, 0.02, 768), (9, 12, 0.084, 600, 0.02, 768),
    (10, 11, 0.084, 600, 0.02, 768), (10, 12, 0.084, 600, 0.02, 768), (11, 13, 0.048, 625, 0.40, 11),
    (11, 14, 0.042, 625, 0.39, 11), (12, 13, 0.048, 625, 0.40, 11), (12, 23, 0.097, 625, 0.52, 11),
    (13, 23, 0.087, 625, 0.49, 11), (14, 16, 0.059, 625, 0.38, 11), (15, 16, 0.017, 625, 0.33, 11),
    (15, 21, 0.049, 625, 0.41, 11), (15, 21, 0.049, 625, 0.41, 11), (15, 24, 0.052, 625, 0.41, 11),
    (16, 17, 0.026, 625, 0.35, 11), (16, 19, 0.023, 625, 0.34, 11), (17, 18, 0.014, 625, 0.32, 11),
    (17, 22, 0.105, 625, 0.54, 11), (18, 21, 0.026, 625, 0.35, 11), (18, 21, 0.026, 625, 0.35, 11),
    (19, 20, 0.040, 625, 0.38, 11), (19, 20, 0.040, 625, 0.38, 11), (20, 23, 0.022, 625, 0.34, 11),
    (20, 23, 0.022, 625, 0.34, 11), (21, 22, 0.068, 625, 0.45, 11),
]

# id, from, to, x, rating, outages per year, repair hours
INTERCONNECTIONS = [
    ("AB1", 107, 203, 0.161, 220, 0.30, 10),
    ("AB2", 113, 215, 0.075, 625, 0.40, 11),
    ("AB3", 123, 217, 0.074, 625, 0.40, 11),
    ("CA1", 325, 121, 0.097, 625, 0.52, 11),
    ("CB1", 318, 223, 0.104, 625, 0.52, 11),
]
BUS_325_LINK = ("C39", 321, 325, 0.097, 625, 0.52, 11)

LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
         13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# bus: unit sizes (MW)
UNITS = {1: [20, 20, 76, 76], 2: [20, 20, 76, 76], 7: [100, 100, 100], 13: [197, 197, 197],
         15: [12, 12, 12, 12, 12, 155], 16: [155], 18: [400], 21: [400], 22: [50] * 6,
         23: [155, 155, 350]}

# size: (MTTF hours, MTTR hours, dispatch priority)
UNIT_DATA = {12: (2940, 60, 8), 20: (450, 50, 9), 50: (1980, 20, 1), 76: (1960, 40, 5),
             100: (1200, 50, 7), 155: (960, 40, 4), 197: (950, 50, 6), 350: (1150, 100, 3),
             400: (1100, 150, 2)}

WEEKLY = [86.2, 90.0, 87.8, 83.4, 88.0, 84.1, 83.2, 80.6, 74.0, 73.7, 71.5, 72.7, 70.4, 75.0, 72.1,
          80.0, 75.4, 83.7, 87.0, 88.0, 85.6, 81.1, 90.0, 88.7, 89.6, 86.1, 75.5, 81.6, 80.1, 88.0,
          72.2, 77.6, 80.0, 72.9, 72.6, 70.5, 78.0, 69.5, 72.4, 72.4, 74.3, 74.4, 80.0, 88.1, 88.5,
          90.9, 94.0, 89.0, 94.2, 97.0, 100.0, 95.2]
DAILY = [93, 100, 98, 96, 94, 77, 75]  # Monday first
# hour: winter wkdy, winter wknd, summer wkdy, summer wknd, spring/fall wkdy, spring/fall wknd
HOURLY = [
    (67, 78, 64, 74, 63, 75), (63, 72, 60, 70, 62, 73), (60, 68, 58, 66, 60, 69), (59, 66, 56, 65, 58, 66),
    (59, 64, 56, 64, 59, 65), (60, 65, 58, 62, 65, 65), (74, 66, 64, 62, 72, 68), (86, 70, 76, 66, 85, 74),
    (95, 80, 87, 81, 95, 83), (96, 88, 95, 86, 99, 89), (96, 90, 99, 91, 100, 92), (95, 91, 100, 93, 99, 94),
    (95, 90, 99, 93, 93, 91), (95, 88, 100, 92, 92, 90), (93, 87, 100, 91, 90, 90), (94, 87, 97, 91, 88, 86),
    (99, 91, 96, 92, 90, 85), (100, 100, 96, 94, 92, 88), (100, 99, 93, 95, 96, 92), (96, 97, 92, 95, 98, 100),
    (91, 94, 92, 100, 96, 97), (83, 92, 93, 93, 90, 95), (73, 87, 87, 88, 80, 90), (63, 81, 72, 80, 70, 85),
]


def season(week: int) -> int:
    if week <= 8 or week >= 44:
        return 0
    if 18 <= week <= 30:
        return 1
    return 2


def profile() -> np.ndarray:
    rows = []
    for w, wk in enumerate(WEEKLY, 1):
        s = season(w)
        for d, day in enumerate(DAILY):
            col = 2 * s + (1 if d >= 5 else 0)
            for h in range(24):
                rows.append(wk * day * HOURLY[h][col] / 1e6)
    return np.array(rows)


def network_text() -> str:
    out = ["FORMAT v1", "# Three-area IEEE RTS-96: 73 buses, 120 lines, 96 units", "BASE_MVA 100"]
    for a in (1, 2, 3):
        out.append(f"AREA {a} 2 15")
    for a in (1, 2, 3):
        for b in range(1, 25):
            out.append(f"BUS {a}{b:02d} {a}")
    out.append("BUS 325 3")
    for a, tag in zip((1, 2, 3), "ABC"):
        for n, (f, t, x, r, lam, mttr) in enumerate(BRANCHES, 1):
            out.append(f"LINE {tag}{n} {a}{f:02d} {a}{t:02d} {x} {r} {lam} {1 / mttr:.10g} 1 -")
    lid, f, t, x, r, lam, mttr = BUS_325_LINK
    out.append(f"LINE {lid} {f} {t} {x} {r} {lam} {1 / mttr:.10g} 1 -")
    for lid, f, t, x, r, lam, mttr in INTERCONNECTIONS:
        out.append(f"LINE {lid} {f} {t} {x} {r} {lam} {1 / mttr:.10g} 1 -")
    for a in (1, 2, 3):
        for b, sizes in UNITS.items():
            for n, size in enumerate(sizes, 1):
                mttf, mttr, prio = UNIT_DATA[size]
                out.append(f"GEN G{a}{b:02d}_{n} {a}{b:02d} {size} {prio} {8760 / mttf:.10g} {1 / mttr:.10g}")
    for a in (1, 2, 3):
        for b, mw in LOADS.items():
            out.append(f"LOAD L{a}{b:02d} {a}{b:02d} {mw}")
    out.append("PARAMS beta=1.4 eta=0.9 xi=0.8 W=10000 sigma=0.0192")
    return "\n".join(out) + "\n"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "rts96.net").write_text(network_text())
    prof = profile()
    lines = ["FORMAT v1", "# RTS hourly demand factors, 52 weeks x 168 h, identical for the three areas", "AREAS 1 2 3"]
    lines += [f"{v:.6g} {v:.6g} {v:.6g}" for v in prof]
    (OUT / "rts96_profile.txt").write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
