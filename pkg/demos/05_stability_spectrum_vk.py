#!/usr/bin/env python3
"""Orbital stability: spectra of the linearization and the mass criterion.

Assembles the two linearization operators at a strongly attractive ground
state and verifies the spectral conditions (kernel of one, a single negative
eigenvalue of the other).  Sweeps the mass derivative in omega for several
nonlinearity powers: positive throughout for mu <= 2, one sign change above,
whose location is bisected.  Finishes with a perturbed evolution showing the
deviation staying bounded.
"""

import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from starnls import StationarySpec, build_state, make_grid
from starnls.core import VertexCoupling
from starnls.dynamics import EvolutionConfig, orbital_stability_experiment
from starnls.spectral import (
    assemble_linearization,
    find_omega_star,
    lowest_eigenpairs,
    vk_derivative,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

alpha, omega = -5.0, 4.0
coupling = VertexCoupling(alpha)
grid = make_grid(3, 6.0, 480)
ground = build_state(StationarySpec.delta_state(alpha, omega, 1.0, 3, 0), grid)

for which in ("Lplus", "Lminus"):
    op = assemble_linearization(ground, omega, 1.0, coupling, which)
    rep = lowest_eigenpairs(op, 3)
    print(
        f"{which}: lowest eigenvalues {np.round(rep.lowest_eigenvalues, 6)}, "
        f"negative count {rep.negative_count}, kernel overlap "
        f"{rep.kernel_candidate_overlap:.6f}"
    )

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
omegas = np.geomspace(0.13, 20.0, 80)
for mu in (0.5, 1.0, 2.0, 3.0):
    values = [vk_derivative(-1.0, w, mu, 3) for w in omegas]
    axes[0].semilogx(omegas, values, label=f"mu = {mu}")
axes[0].axhline(0.0, color="k", lw=0.8)
axes[0].set_ylim(-1, 12)
axes[0].set_xlabel("omega")
axes[0].set_ylabel("d(mass)/d(omega)")
axes[0].legend()
star = find_omega_star(-1.0, 3.0, 3, bracket_tolerance=1e-8)
axes[0].axvline(star, color="C3", ls=":", lw=1)
axes[0].set_title(f"stability criterion; threshold at omega* = {star:.4f} for mu = 3")
print(f"omega* (mu = 3, alpha = -1, N = 3) = {star:.8f}")

report = orbital_stability_experiment(
    ground, 0.01, coupling, 1.0,
    EvolutionConfig(dt=1e-3, t_final=20.0, observables_stride=100), seed=7,
)
axes[1].plot(report.times, report.deviation)
axes[1].axhline(report.initial_deviation, color="gray", lw=0.8, ls="--")
axes[1].set_xlabel("t")
axes[1].set_ylabel("H1 deviation mod phase")
axes[1].set_title(
    f"1% perturbation: max/initial = {report.amplification:.3f}"
)
print(
    f"perturbed run: initial deviation {report.initial_deviation:.4f}, "
    f"max {report.max_deviation:.4f} (amplification {report.amplification:.3f})"
)
fig.tight_layout()
fig.savefig(OUT / "stability_vk.png", dpi=150)
print(f"wrote {OUT / 'stability_vk.png'}")
