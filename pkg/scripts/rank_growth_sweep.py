"""eps-rank of [b, T] along a refinement ladder.

For log|x| the top singular value grows like log N (the sampled symbol
is unbounded near 0), which raises the relative cut eps * sigma_1 as fast
as new singular values appear, so the eps-rank stays flat under
refinement. Pass --abs to also count values above a fixed absolute level.

    python scripts/rank_growth_sweep.py [eps]
"""
import sys

from vmolab.funcspace import Grid, SymbolSpec, sample
from vmolab.geometry import Box
from vmolab.singular import KernelSpec, assemble, commutator_matrix
from vmolab.spectra import eps_rank, full_svd

args = [a for a in sys.argv[1:] if a != "--abs"]
eps = float(args[0]) if args else 1e-2
absolute = "--abs" in sys.argv
box = Box((-4.0,), (4.0,))
symbols = {"gaussian": SymbolSpec("gaussian", (1.0, 1.0)), "log-abs": SymbolSpec("log-abs")}
kernels = (KernelSpec("riesz-neumann", 1), KernelSpec("frac-neumann", alpha=0.5))
print(f"eps = {eps:g} ({'absolute level' if absolute else 'relative to sigma_1'})")
print(f"{'kernel':28s} {'symbol':10s} " + " ".join(f"N={N:<5d}" for N in (128, 256, 512, 1024, 2048)))
for spec in kernels:
    for name, s in symbols.items():
        ranks = []
        for N in (128, 256, 512, 1024, 2048):
            A = assemble(spec, Grid(box, N))
            sigma = full_svd(commutator_matrix(sample(s, box, N), A)).sigma
            ranks.append(int((sigma > eps).sum()) if absolute else eps_rank(sigma, eps))
        print(f"{spec.label():28s} {name:10s} " + " ".join(f"{r:<7d}" for r in ranks))
