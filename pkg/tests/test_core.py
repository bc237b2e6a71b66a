import math

import numpy as np
import pytest

from starnls import StationarySpec, build_state, make_grid
from starnls.core import (
    GraphField,
    VertexCoupling,
    apply_hamiltonian,
    cell_weight_vector,
    energy,
    h1_distance_mod_phase,
    h1_norm,
    hamiltonian_matrix,
    kinetic,
    mass,
    nonlinear_integral,
    simpson_weight_vector,
    vertex_flux_residual,
)
from starnls.errors import InvalidParameterError

from conftest import smooth_random_complex_field


class TestMakeGrid:
    def test_spacing(self):
        assert make_grid(3, 20.0, 400).spacing == pytest.approx(0.05)
        assert make_grid(2, 10.0, 100).spacing == pytest.approx(0.1)

    def test_rejects_single_edge(self):
        with pytest.raises(InvalidParameterError):
            make_grid(1, 20.0, 400)

    def test_rejects_bad_resolution(self):
        with pytest.raises(InvalidParameterError):
            make_grid(3, 20.0, 8)
        with pytest.raises(InvalidParameterError):
            make_grid(3, 20.0, 401)  # odd: Simpson needs even M

    def test_rejects_nonpositive_length(self):
        with pytest.raises(InvalidParameterError):
            make_grid(3, 0.0, 400)


class TestApplyHamiltonian:
    def test_exponential_interior_rows(self):
        # -psi'' for e^{-x} is -e^{-x}; interior rows are standard stencils
        grid = make_grid(2, 10.0, 400)
        fld = GraphField.from_edge_function(grid, [lambda x: np.exp(-x)] * 2)
        out = apply_hamiltonian(fld, VertexCoupling(0.0))
        x = grid.x[1:-1]
        got = out.interior[0][:-1].real
        err = np.max(np.abs(got - (-np.exp(-x))))
        assert err < 1e-4  # O(h^2) with h = 0.025

    def test_interior_second_order(self):
        errs = []
        for m in (400, 800):
            grid = make_grid(2, 10.0, m)
            fld = GraphField.from_edge_function(grid, [lambda x: np.exp(-x)] * 2)
            out = apply_hamiltonian(fld, VertexCoupling(0.0))
            x = grid.x[1:-1]
            errs.append(np.max(np.abs(out.interior[0][:-1].real + np.exp(-x))))
        assert 3.2 < errs[0] / errs[1] < 4.8

    def test_zero_field(self):
        grid = make_grid(3, 10.0, 64)
        out = apply_hamiltonian(GraphField.zeros(grid), VertexCoupling(-1.0))
        assert out.max_abs() == 0.0

    def test_stationarity_residual(self, flagship_state, flagship_coupling):
        # H psi - |psi|^2 psi + omega psi = 0 up to O(h^2), vertex included
        v = flagship_state.as_vector()
        out = apply_hamiltonian(flagship_state, flagship_coupling).as_vector()
        res = out - np.abs(v) ** 2 * v + v
        assert np.max(np.abs(res)) < 5e-4

    def test_symmetric_on_flux_satisfying_fields(self):
        # fields obeying the discrete flux condition see the exact form matrix
        grid = make_grid(3, 12.0, 300)
        coupling = VertexCoupling(-1.5)
        w = cell_weight_vector(grid)

        def flux_projected(seed):
            fld = smooth_random_complex_field(grid, seed)
            h = grid.spacing
            n = grid.n_edges
            psi1 = fld.interior[:, 0].sum()
            psi2 = fld.interior[:, 1].sum()
            c0 = -3.0 * n / (2 * h) - coupling.alpha
            vertex = -(4.0 * psi1 - psi2) / (2 * h) / c0
            return GraphField(grid, vertex, fld.interior)

        f, g = flux_projected(1), flux_projected(2)
        hf = apply_hamiltonian(f, coupling).as_vector()
        hg = apply_hamiltonian(g, coupling).as_vector()
        lhs = np.sum(w * np.conj(hf) * g.as_vector())
        rhs = np.sum(w * np.conj(f.as_vector()) * hg)
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) / scale < 1e-12


class TestMass:
    def test_zero(self):
        grid = make_grid(3, 10.0, 64)
        assert mass(GraphField.zeros(grid)) == 0.0

    def test_cubic_ground_state(self, flagship_state):
        # closed form 2 N sqrt(omega) + 2 alpha = 4
        assert mass(flagship_state) == pytest.approx(4.0, abs=1e-6)

    def test_kirchhoff_three_edges(self, flagship_grid):
        spec = StationarySpec.kirchhoff_odd(1.0, 1.0, 3)
        from starnls import build_kirchhoff

        fld = build_kirchhoff(spec, flagship_grid)
        assert mass(fld) == pytest.approx(6.0, abs=1e-6)

    def test_scaling_exact(self, flagship_state):
        # quadrature homogeneity: mass(c psi) = |c|^2 mass(psi) to roundoff
        c = 0.731 - 0.2j
        assert mass(c * flagship_state) == pytest.approx(
            abs(c) ** 2 * mass(flagship_state), rel=1e-14
        )


class TestEnergy:
    def test_zero(self):
        grid = make_grid(3, 10.0, 64)
        assert energy(GraphField.zeros(grid), VertexCoupling(-1.0), 1.0) == 0.0

    def test_ground_state_energy(self, flagship_state, flagship_coupling):
        assert energy(flagship_state, flagship_coupling, 1.0) == pytest.approx(
            -26.0 / 27.0, abs=1e-5
        )

    def test_one_bump_energy_at_admissible_omega(self):
        # j=1 exists only above omega = alpha^2/(N-2j)^2 = 1; cross-check the
        # closed form -(N/3) omega^{3/2} - alpha^3/(3 (2j-N)^2) by quadrature
        from starnls import cubic_energy_spectrum

        omega = 1.21
        grid = make_grid(3, 20.0, 4000)
        fld = build_state(StationarySpec.delta_state(-1.0, omega, 1.0, 3, 1), grid)
        expected = cubic_energy_spectrum(3, omega, -1.0, 1)
        assert energy(fld, VertexCoupling(-1.0), 1.0) == pytest.approx(
            expected, abs=1e-5
        )

    def test_homogeneity_per_term(self, flagship_state, flagship_coupling):
        # kinetic & vertex scale by |c|^2, the focusing term by |c|^{2mu+2}
        mu = 1.0
        c = 1.37
        f, cf = flagship_state, c * flagship_state
        kin_f = kinetic(f) + flagship_coupling.alpha * abs(f.vertex) ** 2
        kin_cf = kinetic(cf) + flagship_coupling.alpha * abs(cf.vertex) ** 2
        assert kin_cf == pytest.approx(c**2 * kin_f, rel=1e-13)
        assert nonlinear_integral(cf, mu) == pytest.approx(
            c**4 * nonlinear_integral(f, mu), rel=1e-13
        )


class TestH1Distance:
    def test_self_distance(self, flagship_state):
        assert h1_distance_mod_phase(flagship_state, flagship_state) < 1e-12

    def test_phase_invariance(self, flagship_state):
        rotated = np.exp(1.234j) * flagship_state
        assert h1_distance_mod_phase(rotated, flagship_state) < 1e-10

    def test_distance_to_zero(self, flagship_state):
        zero = GraphField.zeros(flagship_state.grid)
        assert h1_distance_mod_phase(flagship_state, zero) == pytest.approx(
            h1_norm(flagship_state), rel=1e-12
        )


def test_flux_residual_second_order():
    errs = []
    for m in (1000, 2000):
        grid = make_grid(3, 20.0, m)
        fld = build_state(StationarySpec.delta_state(-1.0, 1.0, 1.0, 3, 0), grid)
        errs.append(abs(vertex_flux_residual(fld, VertexCoupling(-1.0))))
    assert 3.2 < errs[0] / errs[1] < 4.8


def test_hamiltonian_matrix_weighted_symmetry():
    grid = make_grid(4, 8.0, 120)
    a = hamiltonian_matrix(grid, VertexCoupling(2.0)).toarray()
    w = cell_weight_vector(grid)
    wa = w[:, None] * a
    assert np.max(np.abs(wa - wa.T)) < 1e-12


def test_simpson_weights_sum_to_length():
    grid = make_grid(3, 12.0, 96)
    assert np.sum(simpson_weight_vector(grid)) == pytest.approx(3 * 12.0)
