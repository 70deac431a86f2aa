"""Fly the box-and-hold mission without faults and look at what profiling extracts from it.

Run: python3 demos/01_golden_flight.py
"""
from modecheck.campaign import CampaignConfig, profile

cfg = CampaignConfig(workload="box_hold", seed=0)
prof = profile(cfg, snapshots=False)

print(f"{len(prof.traces)} profiling flights, reference flight lasts {prof.golden_steps} steps "
      f"({prof.golden_steps * cfg.dt:.1f} s)")
print("\nmode transitions of the reference flight:")
for tr in prof.transitions:
    print(f"  step {tr.timestamp:5d}  {tr.from_mode.value:>13} -> {tr.to_mode.value}")

c = prof.constants
print("\nnormalization constants:")
print(f"  position scale {c.P:.3f} m, acceleration scale {c.A:.3f} m/s^2, mode-graph diameter {c.D}")
print(f"  liveliness threshold tau = {c.tau:.3f}")

last = prof.traces[0].pos[-1]
print(f"\nlanded at ({last[0]:.2f}, {last[1]:.2f}, {last[2]:.2f}), final mode {prof.traces[0].modes[-1].value}")
