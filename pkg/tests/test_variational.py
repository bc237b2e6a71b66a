import math

import numpy as np
import pytest

from starnls import (
    StationarySpec,
    build_kirchhoff,
    build_state,
    cubic_energy_spectrum,
    cubic_mass,
    make_grid,
)
from starnls.core import (
    GraphField,
    VertexCoupling,
    h1_distance_mod_phase,
    l2_overlap,
    mass,
)
from starnls.errors import (
    BoundaryProximityError,
    ConvergenceError,
    NonpositiveQuadraticFormError,
)
from starnls.variational import (
    MinimizationOptions,
    action,
    action_gradient,
    minimize_action_on_nehari,
    minimize_energy_fixed_mass,
    nehari,
    one_edge_trial,
    project_to_nehari,
)

from conftest import smooth_random_complex_field


class TestAction:
    def test_zero_field(self):
        grid = make_grid(3, 10.0, 64)
        assert action(GraphField.zeros(grid), 1.0, VertexCoupling(-1.0), 1.0) == 0.0

    def test_ground_state_value(self, flagship_state, flagship_coupling):
        # E + (omega/2) M = -26/27 + 2 = 28/27
        assert action(flagship_state, 1.0, flagship_coupling, 1.0) == pytest.approx(
            28.0 / 27.0, abs=1e-5
        )

    def test_one_bump_action_larger(self):
        # at omega = 4 both j = 0, 1 exist; closed forms order the actions
        omega = 4.0
        s = {}
        for j in (0, 1):
            s[j] = cubic_energy_spectrum(3, omega, -1.0, j) + 0.5 * omega * cubic_mass(
                3, omega, -1.0
            )
        grid = make_grid(3, 15.0, 3000)
        for j in (0, 1):
            fld = build_state(StationarySpec.delta_state(-1.0, omega, 1.0, 3, j), grid)
            assert action(fld, omega, VertexCoupling(-1.0), 1.0) == pytest.approx(
                s[j], abs=1e-4
            )
        assert s[0] < s[1]


class TestNehari:
    def test_stationary_states_on_constraint(self, flagship_state, flagship_coupling):
        val = nehari(flagship_state, 1.0, flagship_coupling, 1.0)
        assert abs(val) < 5e-5  # O(h^2) discretization defect

    def test_zero_field(self):
        grid = make_grid(3, 10.0, 64)
        assert nehari(GraphField.zeros(grid), 1.0, VertexCoupling(-1.0), 1.0) == 0.0

    def test_doubled_state_negative(self, flagship_state, flagship_coupling):
        # quadratic terms scale by 4, the quartic term by 16
        assert nehari(2.0 * flagship_state, 1.0, flagship_coupling, 1.0) < -1.0


class TestProjectToNehari:
    def test_stationary_state_fixed(self, flagship_state, flagship_coupling):
        out = project_to_nehari(flagship_state, 1.0, flagship_coupling, 1.0)
        lam = out.vertex.real / flagship_state.vertex.real
        assert lam == pytest.approx(1.0, abs=1e-4)

    def test_scaling_killed(self, flagship_state, flagship_coupling):
        a = project_to_nehari(flagship_state, 1.0, flagship_coupling, 1.0)
        b = project_to_nehari(3.7 * flagship_state, 1.0, flagship_coupling, 1.0)
        assert h1_distance_mod_phase(a, b) < 1e-10

    def test_gaussian_bump_lands_on_constraint(self):
        grid = make_grid(3, 12.0, 600)
        x = grid.x
        rows = [np.exp(-((x - 3.0) ** 2)), 0.0 * x, 0.0 * x]
        rows = [r + np.exp(-x) * rows[0][0] * 0 for r in rows]  # keep vertex 0-ish
        fld = GraphField(grid, rows[0][0], np.stack([r[1:] for r in rows]))
        out = project_to_nehari(fld, 1.0, VertexCoupling(0.0), 1.0)
        assert abs(nehari(out, 1.0, VertexCoupling(0.0), 1.0)) < 1e-10

    def test_nonpositive_quadratic_form(self):
        # concentrate everything at the vertex with a very attractive alpha
        grid = make_grid(3, 12.0, 600)
        x = grid.x
        rows = [np.exp(-8 * x**2)] * 3
        fld = GraphField(grid, rows[0][0], np.stack([r[1:] for r in rows]))
        with pytest.raises(NonpositiveQuadraticFormError):
            project_to_nehari(fld, 0.05, VertexCoupling(-40.0), 1.0)


class TestGradient:
    def test_pairing_equals_nehari(self, flagship_state, flagship_coupling):
        g = action_gradient(flagship_state, 1.0, flagship_coupling, 1.0)
        pairing = float(
            np.real(np.conj(g.as_vector()) @ flagship_state.as_vector())
        )
        assert pairing == pytest.approx(
            nehari(flagship_state, 1.0, flagship_coupling, 1.0), abs=1e-8
        )

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_directional_derivative(self, seed):
        grid = make_grid(3, 10.0, 200)
        coupling = VertexCoupling(-1.0)
        fld = smooth_random_complex_field(grid, seed).real_part()
        direction = smooth_random_complex_field(grid, seed + 10).real_part()
        g = action_gradient(fld, 1.0, coupling, 1.0)
        analytic = float(np.real(np.conj(g.as_vector()) @ direction.as_vector()))
        eps = 1e-6
        plus = action(fld + eps * direction, 1.0, coupling, 1.0)
        minus = action(fld + (-eps) * direction, 1.0, coupling, 1.0)
        fd = (plus - minus) / (2 * eps)
        assert fd == pytest.approx(analytic, rel=1e-6)

    def test_scaling_law(self, flagship_state, flagship_coupling):
        # d/dc action(c psi) at c = 1 equals nehari(psi), by homogeneity
        eps = 1e-6
        sp = action((1 + eps) * flagship_state, 1.0, flagship_coupling, 1.0)
        sm = action((1 - eps) * flagship_state, 1.0, flagship_coupling, 1.0)
        assert (sp - sm) / (2 * eps) == pytest.approx(
            nehari(flagship_state, 1.0, flagship_coupling, 1.0), abs=1e-6
        )


class TestActionMinimization:
    def test_finds_ground_state(self, deep_well_grid, deep_well_state, deep_well_coupling):
        res = minimize_action_on_nehari(
            4.0,
            deep_well_coupling,
            1.0,
            deep_well_grid,
            MinimizationOptions(max_iterations=3000, tolerance=1e-7, seed=1),
        )
        assert res.converged
        assert h1_distance_mod_phase(res.field, deep_well_state) < 1e-2

    def test_action_below_one_bump_state(self, deep_well_grid, deep_well_coupling):
        res = minimize_action_on_nehari(
            4.0,
            deep_well_coupling,
            1.0,
            deep_well_grid,
            MinimizationOptions(max_iterations=3000, tolerance=1e-7, seed=2),
        )
        # at alpha=-5, omega=4 the one-bump state does not exist (bound
        # omega > 25); its closed-form action value still upper-bounds ours
        omega = 4.0
        action_j1 = (
            -(3.0 / 3.0) * omega**1.5
            - (-5.0) ** 3 / 3.0
            + 0.5 * omega * (2 * 3 * math.sqrt(omega) + 2 * (-5.0))
        )
        assert res.objective < action_j1 - 1.0

    def test_kirchhoff_saddle_escape(self):
        # alpha = 0: descent breaks symmetry, concentrates on one edge, and
        # beats the symmetric stationary state
        grid = make_grid(3, 12.0, 360)
        coupling = VertexCoupling(0.0)
        sym = build_kirchhoff(StationarySpec.kirchhoff_odd(4.0, 1.0, 3), grid)
        sym_action = action(sym, 4.0, coupling, 1.0)
        try:
            res = minimize_action_on_nehari(
                4.0,
                coupling,
                1.0,
                grid,
                MinimizationOptions(max_iterations=600, tolerance=1e-7, seed=1),
            )
        except ConvergenceError as exc:  # metastable drift is acceptable here
            res = exc.result
        assert res.objective < sym_action - 1.0
        maxima = np.sort([np.max(np.abs(res.field.interior[k])) for k in range(3)])
        assert maxima[-1] > 10 * maxima[-2]


class TestFixedMassFlow:
    def test_reproduces_ground_state(self, deep_well_grid, deep_well_state, deep_well_coupling):
        target = cubic_mass(3, 4.0, -5.0)
        res = minimize_energy_fixed_mass(
            target,
            deep_well_coupling,
            1.0,
            deep_well_grid,
            MinimizationOptions(max_iterations=3000, tolerance=1e-7, seed=3),
            omega_guess=4.0,
        )
        assert res.converged
        assert mass(res.field) == pytest.approx(target, abs=1e-10)
        assert l2_overlap(res.field, deep_well_state) > 0.999

    def test_mass_pinned_every_iterate(self, deep_well_grid, deep_well_coupling):
        target = cubic_mass(3, 4.0, -5.0)
        res = minimize_energy_fixed_mass(
            target,
            deep_well_coupling,
            1.0,
            deep_well_grid,
            MinimizationOptions(max_iterations=500, tolerance=1e-7, seed=4),
            omega_guess=4.0,
        )
        for _, _, _, m in res.history:
            assert m == pytest.approx(target, abs=1e-10)

    def test_energy_monotone(self, deep_well_grid, deep_well_coupling):
        target = cubic_mass(3, 4.0, -5.0)
        res = minimize_energy_fixed_mass(
            target,
            deep_well_coupling,
            1.0,
            deep_well_grid,
            MinimizationOptions(max_iterations=500, tolerance=1e-7, seed=5),
            omega_guess=4.0,
        )
        objectives = [row[1] for row in res.history]
        assert all(b <= a + 1e-12 for a, b in zip(objectives, objectives[1:]))

    def test_supercritical_warning(self, deep_well_grid, deep_well_coupling, caplog):
        import logging

        with caplog.at_level(logging.WARNING, logger="starnls.variational"):
            try:
                minimize_energy_fixed_mass(
                    1.0,
                    deep_well_coupling,
                    2.5,
                    deep_well_grid,
                    MinimizationOptions(max_iterations=2, tolerance=1e-7, seed=0),
                )
            except ConvergenceError:
                pass
        assert any("supercritical" in rec.message for rec in caplog.records)


class TestOneEdgeTrial:
    def test_vertex_value(self):
        grid = make_grid(3, 16.0, 480)
        trial = one_edge_trial(1.0, 1.0, 8.0, grid)
        assert abs(trial.vertex) == pytest.approx(
            math.sqrt(2.0) / math.cosh(8.0), rel=1e-12
        )

    def test_beats_symmetric_state(self):
        grid = make_grid(3, 16.0, 480)
        coupling = VertexCoupling(0.0)
        trial = project_to_nehari(one_edge_trial(1.0, 1.0, 8.0, grid), 1.0, coupling, 1.0)
        sym = build_kirchhoff(StationarySpec.kirchhoff_odd(1.0, 1.0, 3), grid)
        margin = action(sym, 1.0, coupling, 1.0) - action(trial, 1.0, coupling, 1.0)
        assert margin > 0.5

    def test_continuity_structural(self):
        grid = make_grid(3, 16.0, 480)
        trial = one_edge_trial(1.0, 1.0, 8.0, grid)
        assert isinstance(trial.vertex, complex)  # single shared vertex value

    def test_boundary_proximity(self):
        grid = make_grid(3, 16.0, 480)
        with pytest.raises(BoundaryProximityError):
            one_edge_trial(1.0, 1.0, 2.0, grid)
        with pytest.raises(BoundaryProximityError):
            one_edge_trial(1.0, 1.0, 14.5, grid)
