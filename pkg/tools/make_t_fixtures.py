"""Regenerate the frozen t-test oracle fixtures.

Uses scipy as the independent reference implementation; the shipped tests
compare our continued-fraction implementation against these frozen numbers,
so scipy is a build-time tool here, never a runtime dependency.

Run from the repository root:  python tools/make_t_fixtures.py
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy import stats

OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "t_test_cases.json"


def main() -> None:
    rng = np.random.default_rng(987654321)
    paired = []
    while len(paired) < 100:
        n = int(rng.integers(2, 41))
        scale = float(rng.uniform(0.5, 20.0))
        shift = float(rng.uniform(-5.0, 5.0))
        a = rng.normal(shift, scale, n)
        kind = len(paired) % 4
        if kind == 0:
            b = a + rng.normal(0.0, scale * 0.3, n)
        elif kind == 1:
            b = rng.normal(shift + rng.uniform(-2, 2), scale, n)
        elif kind == 2:
            b = rng.uniform(shift - scale, shift + scale, n)
        else:
            b = a * rng.uniform(0.5, 1.5) + rng.normal(0.0, 0.1, n)
        d = a - b
        if np.std(d, ddof=1) <= 1e-9:
            continue
        res = stats.ttest_rel(a, b)
        paired.append(
            {
                "a": [float(v) for v in a],
                "b": [float(v) for v in b],
                "t": float(res.statistic),
                "df": int(n - 1),
                "p": float(res.pvalue),
            }
        )

    welch = []
    while len(welch) < 25:
        na, nb = int(rng.integers(2, 30)), int(rng.integers(2, 30))
        a = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 5.0), na)
        b = rng.normal(rng.uniform(-3, 3), rng.uniform(0.5, 5.0), nb)
        if np.std(a, ddof=1) <= 1e-12 and np.std(b, ddof=1) <= 1e-12:
            continue
        res = stats.ttest_ind(a, b, equal_var=False)
        welch.append(
            {
                "a": [float(v) for v in a],
                "b": [float(v) for v in b],
                "t": float(res.statistic),
                "p": float(res.pvalue),
            }
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"paired": paired, "welch": welch}, indent=1) + "\n")
    print(f"wrote {len(paired)} paired + {len(welch)} welch cases to {OUT}")


if __name__ == "__main__":
    main()
