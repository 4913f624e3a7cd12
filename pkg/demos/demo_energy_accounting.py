#!/usr/bin/env python3
"""Why whole-system energy differs from per-platform energy.

While one platform executes, the other still idles and draws its static
power.  That can flip which platform is cheapest: here the GPU wins on
dynamic energy but loses once the idle CPU's draw is charged for the
GPU's longer run.
"""

from heterotune import total_energy
from heterotune.platforms import PlatformKind, PlatformSpec

cpu = PlatformSpec(
    name="cpu", kind=PlatformKind.CPU, total_cores=4, peak_gflops=19.2,
    peak_bandwidth=34.0, mem_controllers=1, frequencies=(1.5,),
    static_power=0.03,   # 30 mW, scaled-down story numbers
)
gpu = PlatformSpec(
    name="gpu", kind=PlatformKind.GPU, total_cores=8, peak_gflops=19.2,
    peak_bandwidth=17.0, mem_controllers=1, frequencies=(1.2,),
    static_power=0.02, workgroup_sizes=(8,),
)
system = (cpu, gpu)

runs = {
    "cpu": dict(dynamic_mj=100.0, duration_s=1.0),   # faster but hungrier
    "gpu": dict(dynamic_mj=80.0, duration_s=1.6),    # thriftier but slower
}

print(f"{'run on':<8}{'dynamic mJ':>12}{'duration s':>12}{'total mJ':>10}")
totals = {}
for active, run in runs.items():
    breakdown = total_energy(system, active, **run)
    totals[active] = breakdown.total_mj
    print(f"{active:<8}{run['dynamic_mj']:>12.1f}{run['duration_s']:>12.1f}"
          f"{breakdown.total_mj:>10.1f}")
    for part in breakdown.platforms:
        role = "active" if part.platform == active else "idle"
        print(f"         {part.platform} ({role}): static {part.static_mj:.1f} mJ"
              f" + dynamic {part.dynamic_mj:.1f} mJ")

dyn_winner = min(runs, key=lambda k: runs[k]["dynamic_mj"])
total_winner = min(totals, key=totals.get)
print(f"\ndynamic-energy winner: {dyn_winner}")
print(f"whole-system winner:   {total_winner}")
assert dyn_winner != total_winner
print("-> optimizing each platform in isolation picks the wrong one here.")
