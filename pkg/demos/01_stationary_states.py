#!/usr/bin/env python3
"""Construct the explicit standing waves and check their closed-form data.

Walks through the bump/tail families on a three-edge star graph: the two
attractive states (all tails, one bump), the two repulsive ones (two bumps,
all bumps), and the Kirchhoff glued half-solitons.  Prints quadrature mass and
energy against the cubic closed forms and draws the profile panels.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from starnls import (
    StationarySpec,
    build_kirchhoff,
    build_state,
    bump_offset,
    cubic_energy_spectrum,
    cubic_mass,
    make_grid,
)
from starnls.core import VertexCoupling, energy, mass

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

grid = make_grid(3, 20.0, 4000)

print("=== attractive vertex (alpha = -1, omega = 1.3) ===")
print(f"{'j':>3} {'offset':>10} {'mass':>12} {'2N*sqrt(w)+2a':>14} {'energy':>12} {'closed form':>12}")
alpha, omega = -1.0, 1.3
attractive = {}
for j in (0, 1):
    spec = StationarySpec.delta_state(alpha, omega, 1.0, 3, j)
    fld = build_state(spec, grid)
    attractive[j] = fld
    print(
        f"{j:>3} {bump_offset(spec):>10.6f} {mass(fld):>12.8f} "
        f"{cubic_mass(3, omega, alpha):>14.8f} "
        f"{energy(fld, VertexCoupling(alpha), 1.0):>12.8f} "
        f"{cubic_energy_spectrum(3, omega, alpha, j):>12.8f}"
    )

print()
print("=== repulsive vertex (alpha = +1, omega = 1.3) ===")
repulsive = {}
for j in (2, 3):
    spec = StationarySpec.delta_state(1.0, omega, 1.0, 3, j)
    fld = build_state(spec, grid)
    repulsive[j] = fld
    print(
        f"{j:>3} {bump_offset(spec):>10.6f} {mass(fld):>12.8f} "
        f"{cubic_mass(3, omega, 1.0):>14.8f} "
        f"{energy(fld, VertexCoupling(1.0), 1.0):>12.8f} "
        f"{cubic_energy_spectrum(3, omega, 1.0, j):>12.8f}"
    )

print()
print("=== Kirchhoff (alpha = 0) ===")
sym = build_kirchhoff(StationarySpec.kirchhoff_odd(omega, 1.0, 3), grid)
print(f"three glued half-solitons: mass = {mass(sym):.8f} (closed form {cubic_mass(3, omega, 0.0):.8f})")

fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
x = grid.x
for ax, (j, fld), title in zip(
    axes.ravel(),
    list(attractive.items()) + list(repulsive.items()),
    ["all tails (j=0)", "one bump (j=1)", "two bumps (j=2)", "all bumps (j=3)"],
):
    for k in range(3):
        ax.plot(x, np.abs(fld.edge_values(k)), label=f"edge {k + 1}")
    ax.set_title(title)
    ax.set_xlim(0, 8)
    ax.legend(fontsize=8)
for ax in axes[1]:
    ax.set_xlabel("x along edge")
for ax in axes[:, 0]:
    ax.set_ylabel(r"$|\psi_k(x)|$")
fig.suptitle("Standing waves on the three-edge star graph")
fig.tight_layout()
fig.savefig(OUT / "stationary_states.png", dpi=150)
print(f"\nwrote {OUT / 'stationary_states.png'}")
