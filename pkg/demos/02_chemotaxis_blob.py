"""Bacteria chasing oxygen in a 2D periodic box.

A bacterial blob sits next to an oxygen blob; the oxygen gradient pulls the
bacteria over while buoyancy stirs the fluid.  Mass of n is conserved, c
stays within its initial range and never grows in L2.

Run: python3 demos/02_chemotaxis_blob.py
"""

from pathlib import Path

from chemns.config import load_config
from chemns.timestep import run

cfg = load_config(Path(__file__).parent / "configs" / "blob2d.cfg")
grid = cfg.grid.build()
params = cfg.model.build(grid)
state0 = cfg.initial.build(grid)
result = run(state0, params, cfg.stepper, diagnostics=cfg.diagnostics.build(cfg.model.alpha))

print(f"{grid!r}, {result.accepted} steps accepted, {result.rejected} rejected")
print(f"{'t':>6} {'mass_n':>12} {'c_max':>10} {'c:L2':>10} {'u:L2':>10} {'B1':>10}")
recs = result.records
shown = recs[:: max(1, len(recs) // 8)]
for r in shown + ([recs[-1]] if shown[-1] is not recs[-1] else []):
    print(
        f"{r.t:6.3f} {r.extrema['mass_n']:12.8f} {r.extrema['c_max']:10.6f} "
        f"{r.norms['c:L2']:10.6f} {r.norms['u:L2']:10.3e} {r.B1:10.4f}"
    )
print("monitor failures:", result.failures or "none")
