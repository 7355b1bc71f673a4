"""Commutator-norm table for the frozen symbol catalogue, written as CSV.

    python scripts/correlation_table.py [out.csv]
"""
import sys

from vmolab.experiments import CORRELATION_CATALOGUE
from vmolab.geometry import Box, cube_family
from vmolab.singular import KernelSpec
from vmolab.spectra import correlation_experiment

box = Box((-4.0,), (4.0,))
tab = correlation_experiment([s for _, s in CORRELATION_CATALOGUE], KernelSpec("riesz-neumann", 1),
                             box, 512, cube_family(box, 8, shifts=2),
                             [k for k, _ in CORRELATION_CATALOGUE])
for r in sorted(tab.rows, key=lambda r: r["bmo_neumann"]):
    print(f"{r['symbol']:22s} bmo_N {r['bmo_neumann']:9.4g}  |[b,R]| {r['comm_l2']:9.4g}  "
          f"frac lower {r['frac_lower']:9.4g}")
print(f"Spearman {tab.spearman:.4f}")
tab.to_csv(sys.argv[1] if len(sys.argv) > 1 else "correlation.csv")
