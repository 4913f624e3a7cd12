import numpy as np
import pytest
from hypothesis import given, strategies as st

from heterotune.energy import (
    RunMeasurement,
    power_from,
    static_energy,
    static_power_mw,
    total_energy,
    total_energy_row,
)
from heterotune.platforms import NativeConfig, PlatformKind

from conftest import tiny_system


class TestPowerFrom:
    def test_arithmetic(self):
        assert power_from(1000, 2) == 500

    def test_zero_energy(self):
        assert power_from(0, 5) == 0

    @given(st.floats(1e-6, 1e9), st.floats(1e-6, 1e6))
    def test_round_trip(self, energy, time):
        assert power_from(energy, time) * time == pytest.approx(energy, rel=1e-12)

    def test_non_positive_time_rejected(self):
        with pytest.raises(ValueError):
            power_from(10, 0)
        with pytest.raises(ValueError):
            power_from(10, -1)


class TestStaticEnergy:
    def test_zero_power(self):
        cpu, _ = tiny_system(cpu_static=0.0)
        assert static_energy(cpu, 12.5) == 0

    def test_zero_duration(self):
        cpu, _ = tiny_system(cpu_static=7.0)
        assert static_energy(cpu, 0) == 0

    def test_unit_conversion(self):
        # 10 W for 2 s is 20 J, i.e. 20000 mJ
        cpu, _ = tiny_system(cpu_static=10.0)
        assert static_energy(cpu, 2) == 20000

    def test_negative_duration_rejected(self):
        cpu, _ = tiny_system()
        with pytest.raises(ValueError):
            static_energy(cpu, -0.1)


class TestTotalEnergy:
    def test_zero_statics_total_is_dynamic(self):
        system = tiny_system(cpu_static=0.0, gpu_static=0.0)
        bd = total_energy(system, "tiny-cpu", dynamic_mj=123.0, duration_s=9.0)
        assert bd.total_mj == 123.0

    def test_hand_sum_two_platform(self):
        # dynamic 100 mJ; statics 0.02 W and 0.03 W over 1 s are 20 and 30 mJ
        system = tiny_system(cpu_static=0.02, gpu_static=0.03)
        bd = total_energy(system, "tiny-cpu", dynamic_mj=100.0, duration_s=1.0)
        assert bd.total_mj == pytest.approx(150.0)

    def test_symmetry_when_roles_swap(self):
        system = tiny_system(cpu_static=0.02, gpu_static=0.03)
        cpu_run = total_energy(system, "tiny-cpu", 100.0, 1.0)
        gpu_run = total_energy(system, "tiny-gpu", 100.0, 1.0)
        assert cpu_run.total_mj == pytest.approx(gpu_run.total_mj)
        by_name = {p.platform: p for p in gpu_run.platforms}
        assert by_name["tiny-cpu"].dynamic_mj == 0.0
        assert by_name["tiny-gpu"].dynamic_mj == 100.0

    def test_idle_platforms_have_zero_dynamic_and_appear_once(self):
        system = tiny_system()
        bd = total_energy(system, "tiny-gpu", 50.0, 2.0)
        assert sorted(p.platform for p in bd.platforms) == ["tiny-cpu", "tiny-gpu"]
        assert {p.platform for p in bd.platforms if p.dynamic_mj > 0} == {"tiny-gpu"}

    def test_unknown_active_platform_rejected(self):
        with pytest.raises(ValueError):
            total_energy(tiny_system(), "nope", 1.0, 1.0)

    def test_additivity_in_each_term(self):
        system = tiny_system(cpu_static=0.02, gpu_static=0.03)
        base = total_energy(system, "tiny-cpu", 100.0, 1.0).total_mj
        for delta in (1.0, 17.5):
            less = total_energy(system, "tiny-cpu", 100.0 - delta, 1.0).total_mj
            assert base - less == pytest.approx(delta, rel=1e-12)


class TestDynamicVsTotalDivergence:
    def test_argmin_crossover_is_representable(self):
        # GPU wins on dynamic energy but loses once the idle CPU's static
        # draw is charged for its longer run.
        system = tiny_system(cpu_static=0.03, gpu_static=0.02)
        cpu_dyn, cpu_t = 100.0, 1.0
        gpu_dyn, gpu_t = 80.0, 1.6
        assert gpu_dyn < cpu_dyn
        cpu_total = total_energy(system, "tiny-cpu", cpu_dyn, cpu_t).total_mj
        gpu_total = total_energy(system, "tiny-gpu", gpu_dyn, gpu_t).total_mj
        assert cpu_total == pytest.approx(150.0)
        assert gpu_total == pytest.approx(160.0)
        assert cpu_total < gpu_total


class TestTotalEnergyRow:
    def test_matches_scalar_route(self):
        system = tiny_system(cpu_static=0.02, gpu_static=0.03)
        power = np.array([100.0, 50.0, 75.0])
        time = np.array([1.0, 2.0, 0.5])
        row = total_energy_row(power, time, system)
        for j in range(3):
            scalar = total_energy(system, "tiny-cpu", power[j] * time[j], time[j]).total_mj
            assert row[j] == pytest.approx(scalar, rel=1e-12)

    def test_static_power_sum(self):
        system = tiny_system(cpu_static=0.25, gpu_static=0.75)
        assert static_power_mw(system) == pytest.approx(1000.0)


class TestRunMeasurement:
    def test_mean_power(self):
        cfg = NativeConfig("tiny-cpu", PlatformKind.CPU, 1, 1.0, 1)
        m = RunMeasurement(app_id=1, config=cfg, mean_time=2.0, mean_energy=1000.0, runs=5)
        assert m.mean_power == 500.0

    def test_validation(self):
        cfg = NativeConfig("tiny-cpu", PlatformKind.CPU, 1, 1.0, 1)
        with pytest.raises(ValueError):
            RunMeasurement(1, cfg, mean_time=0.0, mean_energy=1.0)
        with pytest.raises(ValueError):
            RunMeasurement(1, cfg, mean_time=1.0, mean_energy=1.0, runs=0)
