"""Run every frozen experiment and write one report bundle per id.

    python scripts/reproduce_suite.py [out_dir]
"""
import sys
import time

from vmolab.cli import write_bundle
from vmolab.experiments import REGISTRY, run_experiment

out = sys.argv[1] if len(sys.argv) > 1 else "vmolab-out/suite"
status = 0
for eid in sorted(REGISTRY, key=lambda k: REGISTRY[k].criterion):
    t0 = time.perf_counter()
    res = run_experiment(eid)
    write_bundle(res, {}, (), f"{out}/{eid}")
    bad = [c["name"] for c in res["checks"] if not c["passed"]]
    print(f"[{REGISTRY[eid].criterion}] {eid:24s} {'PASS' if not bad else 'FAIL'} "
          f"{time.perf_counter() - t0:6.1f} s" + (f"  failing: {bad}" if bad else ""))
    status |= bool(bad)
sys.exit(status)
