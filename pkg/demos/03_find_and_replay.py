"""Hunt the seeded firmware bugs on the box mission, then replay what was found.

Takes about a minute.  Run: python3 demos/03_find_and_replay.py
"""
from modecheck.campaign import CampaignConfig, profile, replay, run_campaign

cfg = CampaignConfig(workload="box_hold", seed=0, budget=60, strategy="sabre")
prof = profile(cfg)
rep = run_campaign(cfg, prof, write=False)

totals = rep["totals"]
print(f"{totals['simulations']} simulations, {totals['unsafe']} unsafe")
for bug, n in sorted(totals["first_detection"].items(), key=lambda kv: kv[1]):
    print(f"  {bug:<22} first seen in simulation {n}")

print("\nfirst unsafe scenario per bug, replayed from its mode-anchored injections:")
seen = set()
for r in rep["records"]:
    if r["verdict"]["kind"] == "Safe" or r["bug"] in seen:
        continue
    seen.add(r["bug"])
    anchors = "; ".join(f"{a['sensor']}#{a['instance']} {a['offset']} steps after {a['from']}->{a['to']}"
                        for a in r["anchors"])
    again = replay(r, cfg, prof)
    print(f"  #{r['id']:<3} {r['verdict']['kind']:<20} in {r['injection_mode']:<13} [{anchors}]")
    print(f"       replay: {again.kind.value}")
