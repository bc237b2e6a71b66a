"""Numerical laboratory for the focusing NLS on a star graph with delta coupling."""

from .core import (
    GraphField,
    StarGrid,
    VertexCoupling,
    apply_hamiltonian,
    energy,
    h1_distance_mod_phase,
    h1_norm,
    make_grid,
    mass,
)
from .stationary import (
    StationarySpec,
    admissible_bump_counts,
    build,
    build_kirchhoff,
    build_state,
    bump_offset,
    cubic_energy_spectrum,
    cubic_mass,
    soliton_profile,
)

__version__ = "0.1.0"
