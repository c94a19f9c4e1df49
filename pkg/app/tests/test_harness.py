"""Tests for configuration, initial data, sweeps, CSV output, checkpoints and oracle checks."""

import math
from pathlib import Path

import numpy as np
import pytest

from app.errors import CheckpointFormatError, ConfigError, PositivityError
from app.harness import oracle_check
from app.harness import sweep as sweep_module
from app.harness.acceptance import (
    check_layer_envelope,
    check_layer_rate,
    check_layer_width,
    check_strong_convergence,
    check_uniform_energy,
    check_velocity_after_layer,
    check_well_prepared_plateau,
    evaluate_acceptance,
    offset_sup,
)
from app.harness.checkpoint import HEADER, read_checkpoint, write_checkpoint
from app.harness.config import config_hash, load_scenario, scenario_from_mapping
from app.harness.csv_writer import ERRORS_HEADER, LAYER_TRAJECTORY_HEADER, emit_csv, fmt, read_csv, render_csv
from app.harness.oracle_check import run_oracle_checks
from app.harness.registry import SweepRegistry, SweepStatus
from app.harness.scenario import build_initial_state, build_relaxed_state, synthesize_modes
from app.harness.sweep import SweepRunner, run_sweep
from app.models.base import GasConstants, IntegrationScheme, Preparation, TorusGrid
from app.models.scenario import ModeSpec, SweepResult, TauRunRecord, default_scenario
from app.models.state import PerturbationState, StepControl
from app.numerics.spectral import SpectralField
from app.solvers.relaxing import RelaxingSolver

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


class TestConfig:
    def test_load_from_toml(self, tiny_toml, tiny_scenario):
        scenario = load_scenario(tiny_toml)
        assert scenario == tiny_scenario
        assert scenario.preparation == Preparation.ILL
        assert scenario.tau_list == [0.5, 0.25]
        assert scenario.grid.n_per_dim == 16

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_scenario(tmp_path / "absent.toml")

    def test_invalid_toml(self, tmp_path):
        path = tmp_path / "broken.toml"
        path.write_text("[grid\nn_per_dim = ", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_scenario(path)

    @pytest.mark.parametrize(
        "data",
        [
            {"solver": {"dt": 1.0}},
            {"scenario": {"t_end": 1.0}, "sweep": {"t_end": 2.0}},
            {"scenario": {"grid": {"n_per_dim": 16}}},
            {"sweep": 3},
            {"scenario": {"preparation": "ill"}},
            {"sweep": {"tau_list": [0.25, 0.5]}},
            {"grid": {"n_per_dim": 48}},
            {"scenario": {"unknown_knob": 1}},
        ],
    )
    def test_rejects_bad_config(self, data):
        with pytest.raises(ConfigError):
            scenario_from_mapping(data)

    def test_hash_is_stable_and_sensitive(self, tiny_config, tiny_scenario):
        assert config_hash(tiny_scenario) == config_hash(scenario_from_mapping(tiny_config))
        assert len(config_hash(tiny_scenario)) == 64
        tiny_config["sweep"]["tau_list"] = [0.5, 0.125]
        assert config_hash(scenario_from_mapping(tiny_config)) != config_hash(tiny_scenario)


class TestInitialData:
    def test_modes_in_2d(self):
        grid = TorusGrid(dim=2, n_per_dim=16)
        values = synthesize_modes(grid, [ModeSpec(k=[1, 2], amplitude=0.3, phase=math.pi / 2)])
        x, y = grid.coordinates()
        np.testing.assert_allclose(values, 0.3 * np.cos(x + 2 * y), atol=1e-14)

    def test_profiles_do_not_depend_on_tau(self, tiny_scenario):
        a = build_initial_state(tiny_scenario, 0.5)
        b = build_initial_state(tiny_scenario, 0.25)
        assert np.array_equal(a.xi.values, b.xi.values)
        assert np.array_equal(a.vel[0].values, b.vel[0].values)
        with pytest.raises(ValueError):
            build_initial_state(tiny_scenario, 0.0)

    def test_relaxed_data_share_the_profiles(self, tiny_scenario):
        state = build_initial_state(tiny_scenario, 0.5)
        relaxed = build_relaxed_state(tiny_scenario)
        assert np.array_equal(state.xi.values, relaxed.xi.values)
        assert np.array_equal(state.phi.values, relaxed.phi.values)

    def test_default_scenarios(self):
        assert default_scenario().preparation == Preparation.ILL
        well = default_scenario(Preparation.WELL)
        assert well.offset == []
        assert well.grid.n_per_dim == 256


class TestSweep:
    @pytest.fixture
    def result(self, tiny_scenario) -> SweepResult:
        return run_sweep(tiny_scenario)

    def test_records_are_sorted_and_complete(self, result):
        assert result.success
        assert [r.tau for r in result.records] == [0.5, 0.25]
        assert result.sample_times == [0.0, 0.0078125, 0.015625, 0.0234375, 0.03125]
        for record in result.records:
            assert [s.t for s in record.errors] == result.sample_times
            assert len(record.eta) == len(record.energy) == len(record.int_e_v) == 5
            assert record.final.t == pytest.approx(0.03125)
            assert record.layer is not None
        assert len(result.relaxed_energy) == 5

    def test_initial_errors(self, result):
        """Same profiles at t = 0; the velocity differs by the offset 0.05 sin x."""
        for record in result.records:
            first = record.errors[0]
            assert first.err_xi_l2 == 0.0
            assert first.err_phi_l2 == 0.0
            assert first.err_v_l2 == pytest.approx(0.05 * math.sqrt(math.pi), rel=1e-10)
            assert record.eta0_h2_sq == pytest.approx(4 * math.pi * 0.05**2, rel=1e-10)

    def test_integrals_start_at_zero(self, result):
        for record in result.records:
            assert record.int_e_v[0] == 0.0
            assert record.eta_rate[0].int_eta_t_h1_sq_to_t == 0.0
            assert record.int_e_v == sorted(record.int_e_v)

    def test_convergence_fits(self, result):
        assert {"xi", "phi", "zeta", "v_after_layer"} >= set(result.fits)
        assert "xi" in result.fits
        assert len(result.fits["xi"].points) == 2

    def test_parallel_matches_serial(self, tiny_scenario, result):
        parallel = SweepRunner(max_workers=2).run(tiny_scenario)
        assert render_csv(parallel) == render_csv(result)

    def test_failed_tau_is_recorded(self, tiny_scenario, monkeypatch):
        original = sweep_module.build_initial_state

        def flaky(sc, tau):
            if tau == 0.25:
                raise PositivityError("pressure fell below 0.1 p_bar", min_pressure=0.05)
            return original(sc, tau)

        monkeypatch.setattr(sweep_module, "build_initial_state", flaky)
        result = run_sweep(tiny_scenario)
        ok, failed = result.records
        assert ok.success
        assert not failed.success
        assert "pressure" in failed.error
        assert not result.success
        assert result.fits == {}

    def test_relaxed_failure_fails_every_tau(self, tiny_config):
        tiny_config["scenario"]["xi0"] = [{"k": [1], "amplitude": 0.95}]
        result = run_sweep(scenario_from_mapping(tiny_config))
        assert result.relaxed_error
        assert all(not r.success for r in result.records)

    def test_layer_trajectory_covers_every_step(self, result):
        for record in result.records:
            times = [s.t for s in record.layer_trajectory]
            assert all(b > a for a, b in zip(times, times[1:]))
            assert set(result.sample_times) <= set(times)
            assert record.layer_dt <= record.tau**2 / sweep_module.LAYER_STEPS_PER_TAU2 * (1 + 1e-12)
            assert record.layer_dt <= record.dt
            assert record.layer.metric == sweep_module.LAYER_METRIC
            for sample in record.layer_trajectory:
                assert sample.layer_h2 <= sample.eta_h2 + sample.quasi_steady_h2 + 1e-12

    def test_layer_resolution_ends_after_the_layer(self, tiny_config):
        tiny_config["sweep"]["tau_list"] = [0.03125]
        result = run_sweep(scenario_from_mapping(tiny_config))
        (record,) = result.records
        assert record.success
        split = sweep_module.LAYER_SPAN * record.tau**2
        assert split == pytest.approx(0.015625)
        times = [s.t for s in record.layer_trajectory]
        early = [t for t in times if t <= split]
        assert len(early) == round(split / record.layer_dt) + 1
        assert all(b - a <= record.tau**2 / 8 * (1 + 1e-9) for a, b in zip(early, early[1:]))
        assert [t for t in times if t > split] == [0.0234375, 0.03125]
        assert record.final.t == pytest.approx(0.03125)

    def test_energy_integral_after_the_layer(self, result):
        # t_layer = 0: the window is the whole run
        for record in result.records:
            assert record.int_e_v_after_layer == pytest.approx(record.int_e_v[-1], rel=1e-12)

    def test_final_states_kept(self, tiny_scenario):
        runner = SweepRunner()
        runner.run(tiny_scenario)
        assert set(runner.final_states) == {0.5, 0.25}
        assert runner.relaxed_final.t == pytest.approx(0.03125)

    def test_worker_count_validated(self):
        with pytest.raises(ValueError):
            SweepRunner(max_workers=0)


class TestCsv:
    def test_round_trip(self, tmp_path, tiny_scenario):
        result = run_sweep(tiny_scenario)
        paths = emit_csv(result, tmp_path)
        assert {p.name for p in paths} == {
            "errors.csv",
            "eta.csv",
            "energy.csv",
            "layer.csv",
            "layer_trajectory.csv",
            "eta_dt.csv",
            "relaxed_energy.csv",
        }
        comments, rows = read_csv(tmp_path / "errors.csv")
        assert comments["config_hash"] == result.config_hash
        assert list(rows[0]) == ERRORS_HEADER
        assert len(rows) == 10
        assert float(rows[6]["err_xi_l2"]) == result.records[1].errors[1].err_xi_l2

        _, layer_rows = read_csv(tmp_path / "layer.csv")
        assert [float(r["tau"]) for r in layer_rows] == [0.5, 0.25]

        _, trajectory_rows = read_csv(tmp_path / "layer_trajectory.csv")
        assert list(trajectory_rows[0]) == LAYER_TRAJECTORY_HEADER
        assert len(trajectory_rows) == sum(len(r.layer_trajectory) for r in result.records)

    def test_identical_runs_give_identical_files(self, tiny_scenario):
        assert render_csv(run_sweep(tiny_scenario)) == render_csv(run_sweep(tiny_scenario))

    def test_empty_result(self, tmp_path):
        emit_csv(SweepResult(scenario_name="empty", config_hash="abc"), tmp_path)
        comments, rows = read_csv(tmp_path / "eta.csv")
        assert comments == {"config_hash": "abc"}
        assert rows == []
        lines = (tmp_path / "eta.csv").read_text(encoding="utf-8").splitlines()
        assert lines[-1] == "tau,t,eta_h2_sq,eta_sup"

    def test_formatting(self):
        assert fmt(None) == ""
        assert fmt(True) == "1"
        assert fmt(0.1) == "0.10000000000000001"
        assert float(fmt(1.0 / 3.0)) == 1.0 / 3.0


class TestCheckpoint:
    @pytest.fixture
    def grid(self):
        return TorusGrid(dim=1, n_per_dim=32)

    @pytest.fixture
    def state(self, grid):
        return PerturbationState(
            t=0.125,
            xi=SpectralField.from_function(grid, lambda x: 0.05 * np.sin(x)),
            vel=(SpectralField.from_function(grid, lambda x: 0.04 * np.cos(x)),),
            phi=SpectralField.from_function(grid, lambda x: 0.02 * np.sin(2 * x)),
        )

    def test_round_trip(self, tmp_path, state, grid):
        path = write_checkpoint(state, 0.25, {"config_hash": "abc"}, tmp_path / "c.rlxc")
        loaded, tau, meta = read_checkpoint(path, grid=grid)
        assert tau == 0.25
        assert loaded.t == 0.125
        assert meta == {"config_hash": "abc"}
        for a, b in zip((state.xi, *state.vel, state.phi), (loaded.xi, *loaded.vel, loaded.phi)):
            assert np.array_equal(a.values, b.values)

    def test_file_size(self, tmp_path, state):
        path = write_checkpoint(state, 0.25, None, tmp_path / "c.rlxc")
        assert path.stat().st_size == HEADER.size + 3 * 32 * 8
        assert read_checkpoint(path)[2] == {}

    def test_bad_magic(self, tmp_path, state):
        path = write_checkpoint(state, 0.25, None, tmp_path / "c.rlxc")
        path.write_bytes(b"XXXX" + path.read_bytes()[4:])
        with pytest.raises(CheckpointFormatError) as exc:
            read_checkpoint(path)
        assert exc.value.block == "header"

    def test_truncated_block_is_named(self, tmp_path, state):
        path = write_checkpoint(state, 0.25, None, tmp_path / "c.rlxc")
        path.write_bytes(path.read_bytes()[: HEADER.size + 32 * 8 + 100])
        with pytest.raises(CheckpointFormatError) as exc:
            read_checkpoint(path)
        assert exc.value.block == "v0"

    def test_trailing_bytes(self, tmp_path, state):
        path = write_checkpoint(state, 0.25, None, tmp_path / "c.rlxc")
        path.write_bytes(path.read_bytes() + b"\0" * 8)
        with pytest.raises(CheckpointFormatError):
            read_checkpoint(path)

    def test_grid_mismatch(self, tmp_path, state):
        path = write_checkpoint(state, 0.25, None, tmp_path / "c.rlxc")
        with pytest.raises(CheckpointFormatError) as exc:
            read_checkpoint(path, grid=TorusGrid(dim=1, n_per_dim=64))
        assert exc.value.block == "header"

    def test_resume_is_bit_identical(self, tmp_path, grid):
        constants = GasConstants(gamma=1.4)
        state0 = PerturbationState(
            t=0.0,
            xi=SpectralField.from_function(grid, lambda x: 0.05 * np.sin(x)),
            vel=(SpectralField.from_function(grid, lambda x: 0.05 * np.sin(x)),),
            phi=SpectralField.from_function(grid, lambda x: 0.02 * np.cos(x)),
        )
        ctrl = StepControl(dt=1.0 / 512.0, scheme=IntegrationScheme.ETDRK4)

        straight = RelaxingSolver(grid, constants, 0.5, ctrl).evolve(state0, 1.0 / 16.0).final

        half = RelaxingSolver(grid, constants, 0.5, ctrl).evolve(state0, 1.0 / 32.0).final
        path = write_checkpoint(half, 0.5, None, tmp_path / "half.rlxc")
        loaded, tau, _ = read_checkpoint(path, grid=grid)
        resumed = RelaxingSolver(grid, constants, tau, ctrl).evolve(loaded, 1.0 / 16.0).final

        assert resumed.t == straight.t
        for a, b in zip((straight.xi, *straight.vel, straight.phi), (resumed.xi, *resumed.vel, resumed.phi)):
            assert np.array_equal(a.values, b.values)


class TestOracleChecks:
    def test_all_checks_pass(self):
        checks = run_oracle_checks(TorusGrid(dim=1, n_per_dim=32), GasConstants(gamma=1.4))
        assert [c.name for c in checks] == ["linear_mode", "exact_damping", "heat_mode", "rescaling"]
        for check in checks:
            assert check.passed, f"{check.name}: {check.error:.3e} > {check.tolerance:.0e}"

    def test_raising_check_is_reported_failed(self, monkeypatch):
        def boom(grid, c):
            raise RuntimeError("boom")

        monkeypatch.setattr(oracle_check, "CHECKS", [("boom", "always raises", boom, 1.0)])
        (check,) = run_oracle_checks(TorusGrid(dim=1, n_per_dim=16), GasConstants(gamma=1.4))
        assert not check.passed
        assert math.isinf(check.error)

    def test_results_are_builtin_types(self, monkeypatch):
        grid, c = TorusGrid(dim=1, n_per_dim=16), GasConstants(gamma=1.4)
        assert type(oracle_check.check_heat_mode(grid, c)) is float
        assert type(oracle_check.check_exact_damping(grid, c)) is float

        def numpy_error(grid, c):
            return np.float64(1e-9)

        monkeypatch.setattr(oracle_check, "CHECKS", [("numpy", "numpy scalar error", numpy_error, 1e-6)])
        (check,) = run_oracle_checks(grid, c)
        assert type(check.error) is float
        assert type(check.passed) is bool
        assert check.model_dump()["passed"] is True


class TestRegistry:
    def test_submit_and_execute(self, tiny_scenario):
        registry = SweepRegistry()
        entry = registry.submit(tiny_scenario)
        assert entry.status == SweepStatus.PENDING
        assert registry.list() == [entry]

        finished = registry.execute(entry.id)
        assert finished.status == SweepStatus.COMPLETED
        assert finished.result.config_hash == entry.config_hash
        assert finished.finished_at is not None

    def test_failed_sweep_carries_error(self, tiny_config):
        tiny_config["scenario"]["xi0"] = [{"k": [1], "amplitude": 0.95}]
        registry = SweepRegistry()
        entry = registry.execute(registry.submit(scenario_from_mapping(tiny_config)).id)
        assert entry.status == SweepStatus.FAILED
        assert entry.error

    def test_unknown_id(self):
        registry = SweepRegistry()
        assert registry.get("missing") is None
        with pytest.raises(KeyError):
            registry.execute("missing")


class TestPureLayer:
    """Velocity offset on a uniform background: the layer in isolation."""

    @pytest.fixture(scope="class")
    def result(self) -> SweepResult:
        config = Path(__file__).resolve().parents[2] / "configs" / "pure_layer.toml"
        return run_sweep(load_scenario(config))

    def test_decay_rate_is_one_over_tau_squared(self, result):
        for record in result.records:
            assert record.layer.fit_available
            assert 0.9 <= record.layer.fitted_rate * record.tau**2 <= 1.1

    def test_layer_width(self, result):
        record = next(r for r in result.records if r.tau == 0.0625)
        assert record.layer.crossed
        assert 0.8 <= record.layer.t_star / (record.tau**2 * math.log(100.0)) <= 1.5

    def test_initial_velocity_error_is_the_offset(self, result):
        for record in result.records:
            assert record.v_err_sup_initial >= 0.9 * 0.05


def _energy_record(tau: float, integral: float) -> TauRunRecord:
    return TauRunRecord(tau=tau, config_hash="synthetic", int_e_v_after_layer=integral)


class TestAcceptanceChecks:
    """Check logic on hand-built sweep results."""

    def test_uniform_energy_spread(self):
        well = SweepResult(
            scenario_name="synthetic",
            config_hash="synthetic",
            records=[_energy_record(0.25, 2.0), _energy_record(0.125, 1.1), _energy_record(0.0625, 1.0)],
        )
        check = check_uniform_energy(well)
        assert check.passed
        assert check.values["spread"] == pytest.approx(0.1)

    def test_uniform_energy_rejects_growth(self):
        well = SweepResult(
            scenario_name="synthetic",
            config_hash="synthetic",
            records=[_energy_record(0.25, 2.0), _energy_record(0.125, 1.0), _energy_record(0.0625, 4.0)],
        )
        check = check_uniform_energy(well)
        assert not check.passed
        assert type(check.passed) is bool

    def test_strong_convergence_needs_two_runs(self):
        check = check_strong_convergence(SweepResult(scenario_name="synthetic", config_hash="synthetic"))
        assert not check.passed


class TestAcceptance:
    """Sweep-level criteria on the shipped ill- and well-prepared configs."""

    @pytest.fixture(scope="class")
    def ill_scenario(self):
        return load_scenario(CONFIG_DIR / "default.toml")

    @pytest.fixture(scope="class")
    def ill(self, ill_scenario) -> SweepResult:
        return SweepRunner(max_workers=4).run(ill_scenario)

    @pytest.fixture(scope="class")
    def well(self) -> SweepResult:
        return SweepRunner(max_workers=4).run(load_scenario(CONFIG_DIR / "well_prepared.toml"))

    def test_sweeps_finish(self, ill, well):
        assert ill.success
        assert well.success

    def test_layer_is_resolved(self, ill):
        for record in ill.records:
            assert record.layer_dt <= record.tau**2 / 8 * (1 + 1e-12)
            early = [s.t for s in record.layer_trajectory if s.t <= 10 * record.tau**2]
            assert all(b - a <= record.tau**2 / 8 * (1 + 1e-9) for a, b in zip(early, early[1:]))

    @pytest.mark.parametrize("tau", [0.125, 0.0625, 0.03125])
    def test_layer_decay_rate(self, ill, tau):
        record = next(r for r in ill.records if r.tau == tau)
        assert record.layer.fit_available
        assert 0.9 <= record.layer.fitted_rate * tau**2 <= 1.1

    @pytest.mark.parametrize("tau", [0.125, 0.0625, 0.03125])
    def test_layer_width(self, ill, ill_scenario, tau):
        record = next(r for r in ill.records if r.tau == tau)
        assert record.layer.crossed
        width = record.layer.t_star / (tau**2 * math.log(1.0 / ill_scenario.threshold_ratio))
        assert 0.8 <= width <= 1.5

    def test_quarter_tau_is_plateau_dominated(self, ill, ill_scenario):
        layer = next(r for r in ill.records if r.tau == 0.25).layer
        assert layer.threshold > ill_scenario.threshold_ratio * layer.eta0_norm
        assert layer.threshold == pytest.approx(4.0 * layer.plateau)

    def test_rate_and_width_checks(self, ill, ill_scenario):
        rate = check_layer_rate(ill)
        width = check_layer_width(ill, ill_scenario.threshold_ratio)
        assert set(rate.values) == set(width.values) == {"tau=0.125", "tau=0.0625", "tau=0.03125"}
        assert rate.passed
        assert width.passed

    def test_layer_envelope(self, ill):
        check = check_layer_envelope(ill)
        assert len(check.values) == 4
        assert check.passed, check.values

    def test_well_prepared_plateau_scales_like_tau_squared(self, well):
        check = check_well_prepared_plateau(well)
        assert len(check.values) == 3
        assert check.passed, check.values

    def test_strong_convergence(self, ill):
        check = check_strong_convergence(ill)
        assert check.passed, check.values
        errors = [r.errors[-1].err_xi_l2 for r in ill.records]
        assert all(b < a for a, b in zip(errors, errors[1:]))

    def test_velocity_after_layer(self, ill, ill_scenario):
        check = check_velocity_after_layer(ill_scenario, ill)
        assert check.passed, check.values
        assert offset_sup(ill_scenario) == pytest.approx(0.05, rel=1e-6)

    def test_uniform_energy(self, well):
        check = check_uniform_energy(well)
        assert check.passed, check.values
        assert check.values["spread"] <= 0.25

    def test_evaluate_acceptance(self, ill, well, ill_scenario):
        checks = evaluate_acceptance(ill_scenario, ill, well)
        assert [c.name for c in checks] == [
            "layer_envelope",
            "layer_decay_rate",
            "layer_width",
            "well_prepared_plateau",
            "strong_convergence",
            "velocity_after_layer",
            "uniform_energy",
        ]
        assert all(type(c.passed) is bool for c in checks)
        assert all(c.passed for c in checks)


def test_shipped_configs_load():
    configs = sorted((Path(__file__).resolve().parents[2] / "configs").glob("*.toml"))
    assert configs
    for path in configs:
        scenario = load_scenario(path)
        assert scenario.name
