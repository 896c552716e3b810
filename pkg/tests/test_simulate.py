"""Implicit stepping, measurement forcing, series validation."""

import math

import numpy as np
import pytest

from thermodiag.model import (
    INPUT_CHANNELS,
    StateMatrices,
    assemble,
    build_mesh,
    single_node_matrices,
)
from thermodiag.simulate import (
    MeasurementSeries,
    SingularSystemError,
    WeatherSeries,
    apply_forcing,
    build_step_system,
    initial_state,
    simulate,
    step,
)
from thermodiag.testcell import example_cell, synthetic_weather


def constant_weather(t_ae: float, n: int, dt: float = 900.0,
                     t_sky: float | None = None) -> WeatherSeries:
    values = np.zeros((n, len(INPUT_CHANNELS)))
    values[:, 0] = t_ae
    values[:, 1] = t_ae if t_sky is None else t_sky
    return WeatherSeries(dt=dt, values=values)


def cell_setup():
    desc = example_cell()
    model = build_mesh(desc)
    return model, assemble(model, desc)


class TestBuildStepSystem:
    def test_identity_step_when_uncoupled(self):
        sm = StateMatrices(
            capacity=np.array([100.0, 50.0]),
            exchange=np.zeros((2, 2)),
            input_coupling=np.zeros((2, len(INPUT_CHANNELS))),
        )
        t_prev = np.array([12.0, -3.0])
        M, V = build_step_system(sm, 10.0, t_prev, np.zeros(len(INPUT_CHANNELS)))
        assert np.array_equal(M, np.diag([10.0, 5.0]))
        assert np.array_equal(V, np.array([120.0, -15.0]))
        assert np.linalg.solve(M, V) == pytest.approx(t_prev)

    def test_zero_capacity_row_has_no_time_term(self):
        model, sm = cell_setup()
        radiant = model.mean_radiant_node - 1
        M, _ = build_step_system(sm, 900.0, np.zeros(sm.n_nodes),
                                 np.zeros(len(INPUT_CHANNELS)))
        assert np.array_equal(M[radiant], -sm.exchange[radiant])

    def test_convergence_to_independent_steady_state(self):
        model, sm = cell_setup()
        u = np.zeros(len(INPUT_CHANNELS))
        u[0] = 25.0
        u[1] = 15.0
        u[4] = 300.0
        # oracle: the steady state solves exchange @ T = -coupling @ u
        expected = np.linalg.solve(sm.exchange, -(sm.input_coupling @ u))
        T = np.full(sm.n_nodes, 5.0)
        for _ in range(40000):
            T = step(sm, 900.0, T, u)
        assert T == pytest.approx(expected, abs=1e-9)

    def test_rejects_nonpositive_dt(self):
        _, sm = cell_setup()
        with pytest.raises(ValueError):
            build_step_system(sm, 0.0, np.zeros(sm.n_nodes),
                              np.zeros(len(INPUT_CHANNELS)))


class TestApplyForcing:
    def test_unit_row_and_value(self):
        M = np.arange(9.0).reshape(3, 3) + 1.0
        V = np.array([1.0, 2.0, 3.0])
        M2, V2 = apply_forcing(M, V, 2, 21.5)
        assert np.array_equal(M2[1], [0.0, 1.0, 0.0])
        assert V2[1] == 21.5
        assert np.array_equal(M2[0], M[0]) and np.array_equal(M2[2], M[2])
        assert V2[0] == V[0] and V2[2] == V[2]
        # inputs untouched
        assert M[1, 1] == 5.0 and V[1] == 2.0

    def test_forced_solution_is_exact(self):
        model, sm = cell_setup()
        u = np.full(len(INPUT_CHANNELS), 0.0)
        u[0] = u[1] = 20.0
        M, V = build_step_system(sm, 900.0, np.full(sm.n_nodes, 20.0), u)
        M2, V2 = apply_forcing(M, V, 16, 33.25)
        T = np.linalg.solve(M2, V2)
        assert T[15] == pytest.approx(33.25, abs=1e-12)

    def test_reinjection_leaves_solution_unchanged(self):
        # forcing with the value the unforced system produces is a no-op
        model, sm = cell_setup()
        u = np.zeros(len(INPUT_CHANNELS))
        u[0], u[1], u[6] = 28.0, 18.0, 500.0
        M, V = build_step_system(sm, 900.0, np.full(sm.n_nodes, 21.0), u)
        free = np.linalg.solve(M, V)
        M2, V2 = apply_forcing(M, V, 3, free[2])
        assert np.linalg.solve(M2, V2) == pytest.approx(free, abs=1e-9)

    def test_node_out_of_range(self):
        M = np.eye(3)
        V = np.zeros(3)
        with pytest.raises(ValueError):
            apply_forcing(M, V, 0, 1.0)
        with pytest.raises(ValueError):
            apply_forcing(M, V, 4, 1.0)


class TestStep:
    def test_missing_measurement_for_forced_node(self):
        _, sm = cell_setup()
        with pytest.raises(ValueError, match="forced node"):
            step(sm, 900.0, np.zeros(sm.n_nodes), np.zeros(len(INPUT_CHANNELS)),
                 forcing=frozenset({3}), meas_at_step={})

    def test_singular_system_detected(self):
        # a zero-capacity node with no couplings makes the step matrix singular
        sm = StateMatrices(
            capacity=np.array([100.0, 0.0]),
            exchange=np.zeros((2, 2)),
            input_coupling=np.zeros((2, len(INPUT_CHANNELS))),
        )
        with pytest.raises(SingularSystemError):
            step(sm, 10.0, np.zeros(2), np.zeros(len(INPUT_CHANNELS)))

    def test_forced_value_is_bit_exact(self):
        _, sm = cell_setup()
        value = 24.700000000000003
        T = step(sm, 900.0, np.full(sm.n_nodes, 20.0),
                 np.zeros(len(INPUT_CHANNELS)),
                 forcing=frozenset({16}), meas_at_step={16: value})
        assert T[15] == value


class TestSimulate:
    def test_empty_forcing_is_pure_prediction(self):
        model, sm = cell_setup()
        weather = synthetic_weather(days=1)
        traj = simulate(sm, weather)
        assert traj.values.shape == (23, weather.n_records)
        assert np.all(np.isfinite(traj.values))

    def test_forced_rows_reproduce_measurements_bit_for_bit(self):
        model, sm = cell_setup()
        weather = synthetic_weather(days=1)
        rng = np.random.default_rng(11)
        nodes = (3, 14, 16)
        meas = MeasurementSeries(dt=weather.dt, series={
            n: rng.uniform(15.0, 30.0, size=weather.n_records) for n in nodes})
        traj = simulate(sm, weather, frozenset(nodes), meas)
        for n in nodes:
            assert np.array_equal(traj.node_series(n), meas.node_series(n))

    def test_constant_weather_reaches_steady_state(self):
        model, sm = cell_setup()
        weather = constant_weather(25.0, 6000, t_sky=15.0)
        expected = np.linalg.solve(sm.exchange, -(sm.input_coupling @ weather.values[0]))
        traj = simulate(sm, weather, T0=np.full(sm.n_nodes, 5.0))
        assert traj.values[:, -1] == pytest.approx(expected, abs=1e-6)

    def test_all_nodes_converge_to_uniform_boundary(self):
        model, sm = cell_setup()
        weather = constant_weather(20.0, 6000)
        traj = simulate(sm, weather, T0=np.full(sm.n_nodes, 35.0))
        assert np.max(np.abs(traj.values[:, -1] - 20.0)) < 1e-6

    def test_matches_analytic_single_rc_exponential(self):
        # tau = C/K = 18000 s, dt = 900 s: first-order scheme stays within 2 %
        capacity, conductance = 180000.0, 10.0
        tau = capacity / conductance
        sm = single_node_matrices(capacity, conductance)
        weather = constant_weather(0.0, 200)
        traj = simulate(sm, weather, T0=np.array([10.0]))
        t = np.arange(200) * weather.dt
        analytic = 10.0 * np.exp(-t / tau)
        assert np.max(np.abs(traj.values[0] - analytic)) / 10.0 < 0.02

    def test_halving_dt_shrinks_analytic_error(self):
        capacity, conductance = 180000.0, 10.0
        tau = capacity / conductance
        sm = single_node_matrices(capacity, conductance)
        errors = {}
        for dt in (900.0, 450.0):
            n = int(36000.0 / dt) + 1
            weather = constant_weather(0.0, n, dt=dt)
            traj = simulate(sm, weather, T0=np.array([10.0]))
            analytic = 10.0 * math.exp(-(n - 1) * dt / tau)
            errors[dt] = abs(traj.values[0, -1] - analytic)
        # first-order scheme: halving dt roughly halves the error
        assert errors[450.0] < 0.7 * errors[900.0]

    def test_forcing_without_measurements_rejected(self):
        _, sm = cell_setup()
        with pytest.raises(ValueError, match="measurement"):
            simulate(sm, synthetic_weather(days=1), frozenset({3}))

    def test_measurement_length_mismatch_rejected(self):
        _, sm = cell_setup()
        weather = synthetic_weather(days=1)
        meas = MeasurementSeries(dt=900.0, series={3: np.zeros(10)})
        with pytest.raises(ValueError, match="length"):
            simulate(sm, weather, frozenset({3}), meas)

    def test_measurement_dt_mismatch_rejected(self):
        _, sm = cell_setup()
        weather = synthetic_weather(days=1)
        meas = MeasurementSeries(dt=600.0, series={3: np.zeros(weather.n_records)})
        with pytest.raises(ValueError, match="dt"):
            simulate(sm, weather, frozenset({3}), meas)

    def test_deterministic(self):
        _, sm = cell_setup()
        weather = synthetic_weather(days=1)
        a = simulate(sm, weather)
        b = simulate(sm, weather)
        assert np.array_equal(a.values, b.values)


class TestInitialState:
    def test_zero_input_falls_back_to_uniform_ambient(self):
        # all-zero exchange matrix is singular, so the fallback applies
        sm = StateMatrices(
            capacity=np.array([100.0, 50.0]),
            exchange=np.zeros((2, 2)),
            input_coupling=np.zeros((2, len(INPUT_CHANNELS))),
        )
        u = np.zeros(len(INPUT_CHANNELS))
        u[0] = 17.5
        assert np.array_equal(initial_state(sm, u), [17.5, 17.5])

    def test_constant_input_gives_fixed_point_of_step(self):
        _, sm = cell_setup()
        u = np.zeros(len(INPUT_CHANNELS))
        u[0], u[1], u[2] = 30.0, 20.0, 100.0
        T = initial_state(sm, u)
        assert step(sm, 900.0, T, u) == pytest.approx(T, abs=1e-9)

    def test_symmetric_two_boundary_ladder_by_hand(self):
        # node1 -G- ambient, node1 -K- node2, node2 -G- sky:
        # with G=2, K=1 and a 20 degree gap the drop splits 5/10/5
        exchange = np.array([[-3.0, 1.0], [1.0, -3.0]])
        coupling = np.zeros((2, len(INPUT_CHANNELS)))
        coupling[0, 0] = 2.0  # T_ae
        coupling[1, 1] = 2.0  # T_sky
        sm = StateMatrices(capacity=np.array([10.0, 10.0]),
                           exchange=exchange, input_coupling=coupling)
        u = np.zeros(len(INPUT_CHANNELS))
        u[0], u[1] = 30.0, 10.0
        assert initial_state(sm, u) == pytest.approx([25.0, 15.0])


class TestSeriesValidation:
    def test_weather_rejects_negative_flux(self):
        values = np.zeros((3, len(INPUT_CHANNELS)))
        values[1, 4] = -1.0
        with pytest.raises(ValueError, match="flux"):
            WeatherSeries(dt=900.0, values=values)

    def test_weather_rejects_short_series(self):
        with pytest.raises(ValueError, match="2 records"):
            WeatherSeries(dt=900.0, values=np.zeros((1, len(INPUT_CHANNELS))))

    def test_weather_rejects_wrong_width(self):
        with pytest.raises(ValueError, match="columns"):
            WeatherSeries(dt=900.0, values=np.zeros((3, 5)))

    def test_measurements_reject_ragged_lengths(self):
        with pytest.raises(ValueError, match="length"):
            MeasurementSeries(dt=900.0, series={1: np.zeros(5), 2: np.zeros(6)})

    def test_measurements_reject_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            MeasurementSeries(dt=900.0, series={1: np.array([1.0, np.nan])})

    def test_weather_channel_accessor(self):
        weather = synthetic_weather(days=1)
        assert np.array_equal(weather.channel("T_ae"), weather.values[:, 0])
