"""
Magnetization versus temperature against the exact curve
========================================================

Parallel simulations at a ladder of temperatures, equilibration detected
automatically, and the equilibrated |M| compared with the closed-form
spontaneous magnetization (zero above the critical temperature near
2.269 J).  Desk-scale lattice, about a minute of runtime.
"""

from multispin.engine import Engine
from multispin.lattice import LatticeDims, TC_OVER_J
from multispin.observables import summarize

dims = LatticeDims(64, 64)
temps = [1.2, 1.6, 2.0, 2.2, 2.4, 2.8, 3.5]

eng = Engine(dims, temps, seed=11, init="all-up")
traj = eng.run(4000, measure_interval=20)

print(f"{dims.m}x{dims.n} lattice, 4000 sweeps, {len(temps)} parallel simulations")
print(f"{'T/J':>6} {'<|M|>':>8} {'stderr':>8} {'exact':>8} {'deviation':>10} {'t0':>4}")
for s, T in enumerate(temps):
    summ = summarize(traj.series(s), T)
    print(f"{T:6.2f} {summ.mean_abs_m:8.4f} {summ.stderr:8.4f} "
          f"{summ.onsager_abs_m:8.4f} {summ.deviation:+10.4f} {summ.t0:4d}")

print(f"\ncritical temperature (exact): {TC_OVER_J:.6f} J")
print("finite lattices round the transition off; the deviation grows near Tc")
