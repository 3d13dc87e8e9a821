"""Finds per-tool patched sets consistent with the reported overlap counts.

Solves an integer program over the 2^11 Venn regions: every pairwise
intersection, every per-tool total, every per-tool unique count and the
size of the union must match the reported numbers. The solution is frozen
into tests/data/overlap_regions.txt (one line per non-empty region:
`<count> <tool,tool,...>`).
"""
import itertools
import sys

import numpy as np
from scipy.optimize import LinearConstraint, milp

TOOLS = ["ARJA", "GenProg-A", "Kali-A", "RSRepair-A", "Cardumen", "jGenProg",
         "jKali", "jMutRepair", "Nopol", "DynaMoth", "NPEFix"]
TOTALS = [146, 77, 118, 95, 46, 65, 52, 65, 213, 206, 15]
# Absolute counts; diagonal is the unique count.
MATRIX = [
    [20, 66, 82, 81, 23, 44, 40, 29, 53, 48, 4],
    [66, 3, 49, 63, 17, 31, 29, 18, 33, 31, 2],
    [82, 49, 11, 55, 20, 34, 44, 28, 56, 54, 2],
    [81, 63, 55, 5, 17, 37, 30, 20, 36, 35, 2],
    [23, 17, 20, 17, 12, 30, 21, 15, 10, 12, 2],
    [44, 31, 34, 37, 30, 6, 36, 27, 19, 24, 2],
    [40, 29, 44, 30, 21, 36, 0, 30, 28, 35, 1],
    [29, 18, 28, 20, 15, 27, 30, 10, 38, 20, 1],
    [53, 33, 56, 36, 10, 19, 28, 38, 57, 114, 2],
    [48, 31, 54, 35, 12, 24, 35, 20, 114, 75, 1],
    [4, 2, 2, 2, 2, 2, 1, 1, 2, 1, 8],
]
UNION = 459


def main(out_path):
    n = len(TOOLS)
    regions = [r for k in range(1, n + 1) for r in itertools.combinations(range(n), k)]
    rows, rhs = [], []
    for i in range(n):
        rows.append([1 if i in r else 0 for r in regions]); rhs.append(TOTALS[i])
        rows.append([1 if r == (i,) else 0 for r in regions]); rhs.append(MATRIX[i][i])
    for i, j in itertools.combinations(range(n), 2):
        assert MATRIX[i][j] == MATRIX[j][i]
        rows.append([1 if (i in r and j in r) else 0 for r in regions]); rhs.append(MATRIX[i][j])
    rows.append([1] * len(regions)); rhs.append(UNION)
    a = np.array(rows, dtype=float)
    b = np.array(rhs, dtype=float)
    # Prefer few elements in high-order regions.
    cost = np.array([len(r) for r in regions], dtype=float)
    res = milp(cost, constraints=LinearConstraint(a, b, b),
               integrality=np.ones(len(regions)), bounds=(0, UNION),
               options={"time_limit": 600})
    if res.x is None:
        print("infeasible:", res.message)
        return 1
    with open(out_path, "w") as f:
        for r, x in zip(regions, res.x):
            c = int(round(x))
            if c:
                f.write(f"{c} {','.join(TOOLS[i] for i in r)}\n")
    print("ok", res.message)
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1] if len(sys.argv) > 1 else "overlap_regions.txt"))
