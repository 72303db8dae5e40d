"""A full persisted experiment run: config, replicates, CSV outputs, inspection.

Run: python3 demos/05_full_experiment.py
"""
import json
import tempfile
from pathlib import Path

from decavg import inspect_run, loads_config, run_experiment

config = {
    "topology": {"kind": "er", "n": 30, "p": 0.12},
    "dataset": {"kind": "synthetic", "classes": 6, "dims": 12, "per_class": 300,
                "spread": 0.1, "test_per_class": 20},
    "partition": {"scheme": "hub_focused", "fraction": 0.1,
                  "g1_classes": [0, 1, 2], "g2_classes": [3, 4, 5],
                  "per_node_per_class": 8},
    "learner": {"layer_sizes": [12, 32, 16, 6], "learning_rate": 0.05},
    "rounds": 10,
    "seeds": {"master": 0, "replicates": 2},
    "metrics": {"confusion_every": 5},
}

cfg = loads_config(json.dumps(config))
print(f"config fingerprint: {cfg.fingerprint()}   label: {cfg.label()}")

out = Path(tempfile.mkdtemp(prefix="decavg_demo_"))
run_root, results = run_experiment(cfg, out_dir=out, verbose=True)

print(f"\nrun directory layout under {run_root}:")
for rep_dir in sorted(run_root.iterdir()):
    for f in sorted(rep_dir.iterdir()):
        print(f"  {rep_dir.name}/{f.name}  ({f.stat().st_size} bytes)")

print("\nfirst lines of replicate 0 summary.csv:")
for line in (run_root / "0" / "summary.csv").read_text().splitlines()[:5]:
    print(f"  {line}")

print("\ninspect_run report:")
print(json.dumps(inspect_run(run_root), indent=2)[:800])
