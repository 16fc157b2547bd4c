"""
Lid-driven cavity over a porous block
=====================================

Compare the first-order SAV scheme with a fully implicit backward-Euler
solver that iterates the convection with Picard. A coarse mesh keeps this
quick; the acceptance suite repeats it at h = 1/32.
"""

from pathlib import Path

import numpy as np

from nsdsav import io
from nsdsav.scenarios.diagnostics import centerline_profiles
from nsdsav.scenarios.library import cavity
from nsdsav.scenarios.reference import reference_implicit_solve
from nsdsav.stepper import Discretization, run

sc = cavity(T=0.5, dt=0.01, h=1 / 16)
disc = Discretization(sc, sc.mesh())
n = 50

sav = run(disc, "be-sav", sc.dt, n, stride=n, T=sc.final_time)
print("SAV factorizations:", sav.n_factorizations)
ref = reference_implicit_solve(sc, sc.dt, n, disc=disc, stride=n)
print("Picard iterations per step:", min(ref.iterations), "to", max(ref.iterations))

(ys, a1), (xs, a2) = centerline_profiles(disc, sav.final, 17)
(_, b1), (_, b2) = centerline_profiles(disc, ref.final, 17)
print(f"{'y':>6} {'U1 sav':>10} {'U1 ref':>10}")
for y, s, r in zip(ys, a1, b1):
    print(f"{y:6.3f} {s:10.5f} {r:10.5f}")
scale = max(np.abs(a1).max(), np.abs(a2).max())
print("max difference / max|U| =", max(np.abs(a1 - b1).max(), np.abs(a2 - b2).max()) / scale)

out = Path(__file__).parent / "output"
out.mkdir(exist_ok=True)
io.write_state_vtk(out / "cavity_sav.vtk", disc, sav.final)
io.write_state_vtk(out / "cavity_ref.vtk", disc, ref.final)
