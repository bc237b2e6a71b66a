import numpy as np
import pytest

from starnls import StationarySpec, build_state, make_grid
from starnls.core import GraphField, VertexCoupling


@pytest.fixture(scope="session")
def flagship_grid():
    # the (L=20, M=4000) grid pinned by the mass criterion
    return make_grid(3, 20.0, 4000)


@pytest.fixture(scope="session")
def flagship_state(flagship_grid):
    # j = 0 cubic tail state at alpha = -1, omega = 1
    spec = StationarySpec.delta_state(-1.0, 1.0, 1.0, 3, 0)
    return build_state(spec, flagship_grid)


@pytest.fixture(scope="session")
def flagship_coupling():
    return VertexCoupling(-1.0)


@pytest.fixture(scope="session")
def deep_well_grid():
    # resolution used for the (alpha=-5, omega=4) ground-state experiments
    return make_grid(3, 6.0, 480)


@pytest.fixture(scope="session")
def deep_well_state(deep_well_grid):
    spec = StationarySpec.delta_state(-5.0, 4.0, 1.0, 3, 0)
    return build_state(spec, deep_well_grid)


@pytest.fixture(scope="session")
def deep_well_coupling():
    return VertexCoupling(-5.0)


def smooth_random_complex_field(grid, seed):
    """Mesh-independent smooth complex field for gradient/symmetry checks."""
    rng = np.random.default_rng(seed)
    x = grid.x
    rows = []
    for _ in range(grid.n_edges):
        row = np.zeros_like(x, dtype=complex)
        for _ in range(3):
            c = rng.uniform(0.1, 0.6) * grid.edge_length
            wdt = rng.uniform(0.4, 1.5)
            amp = rng.normal() + 1j * rng.normal()
            row += amp * np.exp(-((x - c) ** 2) / (2 * wdt**2))
        rows.append(row)
    vertex = np.mean([r[0] for r in rows])
    return GraphField(grid, vertex, np.stack([r[1:] for r in rows]))
