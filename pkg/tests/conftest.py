import numpy as np
import pytest

from heterotune.platforms import PlatformKind, PlatformSpec
from heterotune.synthetic import PROFILES, SyntheticSpec, generate_system


@pytest.fixture(scope="session")
def ci_system():
    """Small noisy synthetic system shared by the slower integration tests."""
    return generate_system(PROFILES["ci"])


@pytest.fixture(scope="session")
def ci_noiseless():
    spec = SyntheticSpec(
        n_apps=PROFILES["ci"].n_apps,
        platforms=PROFILES["ci"].platforms,
        rank=PROFILES["ci"].rank,
        noise_sd=0.0,
        seed=PROFILES["ci"].seed,
    )
    return generate_system(spec)


def tiny_system(cpu_static=0.02, gpu_static=0.03):
    """Three-configuration system for hand-computed oracles."""
    cpu = PlatformSpec(
        name="tiny-cpu",
        kind=PlatformKind.CPU,
        total_cores=1,
        peak_gflops=4.8,
        peak_bandwidth=34.0,
        mem_controllers=1,
        frequencies=(1.0, 1.5),
        static_power=cpu_static,
    )
    gpu = PlatformSpec(
        name="tiny-gpu",
        kind=PlatformKind.GPU,
        total_cores=2,
        peak_gflops=4.8,
        peak_bandwidth=17.0,
        mem_controllers=1,
        frequencies=(1.2,),
        static_power=gpu_static,
        workgroup_sizes=(2,),
    )
    return (cpu, gpu)
