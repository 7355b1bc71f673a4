"""Estimated BMO norm of the plateau staircase f_j = sum_k 1_{B(0, 2^k S)}.

Prints the norms for j = 1..J on the frozen family and on a denser one.
The increments shrink geometrically, so the sequence is bounded, but
the early transient gives a positive least-squares slope over j <= 12.

    python scripts/staircase_sweep.py [J]
"""
import sys

import numpy as np

from vmolab import constructions as C
from vmolab.funcspace import Grid
from vmolab.geometry import Box, cube_family
from vmolab.oscillation import bmo_norm

J = int(sys.argv[1]) if len(sys.argv) > 1 else 12
P = C.ApproxParams((0.0,), 2.0 ** -4)
half = 2.0 ** -4 * 2 ** (J + 1) + 64
half = float(2 ** int(np.ceil(np.log2(half))))
grid = Grid(Box((-half,), (half,)), int(2 * half * 64))
levels = int(np.log2(2 * half)) + 5
fams = {"frozen (shifts=2)": cube_family(grid.domain, levels, shifts=2),
        "dense (shifts=8)": cube_family(grid.domain, levels, shifts=8)}
for name, fam in fams.items():
    norms = [bmo_norm(C.plateau_sequence(P, j, grid), fam).value for j in range(1, J + 1)]
    slope = np.polyfit(np.arange(1, J + 1), norms, 1)[0]
    print(f"{name}: slope {slope:.4f}")
    print("  norms      ", " ".join(f"{v:.4f}" for v in norms))
    print("  increments ", " ".join(f"{v:+.4f}" for v in np.diff(norms)))
