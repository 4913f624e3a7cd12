#!/usr/bin/env python3
"""Walk through the unified configuration coordinate system.

A CPU knob is (cores, frequency, memory controllers); a GPU knob is a
workgroup size.  To train one model over both platforms, every native
setting is mapped into CPU-equivalent coordinates via peak-rate ratios.
"""

from heterotune import (
    DEFAULT_CPU,
    DEFAULT_GPU,
    DEFAULT_SYSTEM,
    build_frequency_index,
    enumerate_configs,
    equiv_cores,
    equiv_mem,
    per_core_flops,
    unify_system,
)

print("== platforms ==")
for spec in DEFAULT_SYSTEM:
    print(f"{spec.name}: {spec.total_cores} cores, {spec.peak_gflops} GFlops, "
          f"{spec.peak_bandwidth} GB/s over {spec.mem_controllers} controllers")

print("\n== per-core compute rates ==")
print(f"CPU core: {per_core_flops(DEFAULT_CPU):.2f} GFlops")
print(f"GPU core: {per_core_flops(DEFAULT_GPU):.2f} GFlops")
print(f"=> one GPU core is worth {equiv_cores(DEFAULT_GPU, DEFAULT_CPU, 1):.3f} CPU cores")
print(f"=> one GPU memory controller is worth "
      f"{equiv_mem(DEFAULT_GPU, DEFAULT_CPU, 1):.3f} CPU controllers")

print("\n== merged frequency index ==")
fidx = build_frequency_index(DEFAULT_SYSTEM)
for entry in fidx.entries:
    print(f"index {entry.index}: {entry.freq} GHz ({entry.platform})")

print("\n== configuration census ==")
configs = enumerate_configs(DEFAULT_SYSTEM)
by_platform = {}
for cfg in configs:
    by_platform[cfg.platform] = by_platform.get(cfg.platform, 0) + 1
for name, count in by_platform.items():
    print(f"{name}: {count} configurations")
print(f"total: {len(configs)}")

print("\n== a few unified coordinates ==")
_, unified, _ = unify_system(DEFAULT_SYSTEM)
for u in (unified[0], unified[200], unified[384], unified[392]):
    o = u.origin
    print(f"{o.config_id:<34} -> cores={u.equiv_cores:7.3f} "
          f"freq_index={u.freq_index} mem={u.equiv_mem:.3f}")
