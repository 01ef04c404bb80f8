"""Full ROC curves at N = 64 against the observation-bound polyline."""

import numpy as np

from risfusion.detect import observation_bound_at
from risfusion.experiments import BOUND_RULE, ExperimentConfig, run_experiment

cfg = ExperimentConfig(experiment="roc", n_antennas=64, trials_h0=20_000, trials_h1=10_000,
                       ris_modes=["long_term_design"],
                       roc_pf0_grid=[0.001, 0.005, 0.01, 0.05, 0.1, 0.3, 1.0])
table = run_experiment(cfg)

grid = cfg.roc_pf0_grid
print("rule     " + "".join(f"{p:<8g}" for p in grid) + "(target P_F0)")
for rule in cfg.rules:
    cells = [r for r in table.rows if r["rule"] == rule]
    print(f"{rule:8s} " + "".join(f"{r['pd0']:<8.3f}" for r in cells))
print("bound    " + "".join(f"{observation_bound_at(p, 10, 0.5, 0.05):<8.3f}" for p in grid))

curve = np.array([(r["pf0_achieved"], r["pd0"]) for r in table.rows if r["rule"] == BOUND_RULE])
print("\ncounting-rule vertices (P_F0, P_D0):")
for nu, (pf, pd) in enumerate(curve):
    print(f"  nu={nu:2d}: ({pf:.2e}, {pd:.4f})")
