"""One operating point for every fusion rule.

Thresholds are calibrated on one set of H0 trials for P_F0 = 0.01, checked
on a second H0 set, and applied to fresh H1 trials. The observation bound
is the detection rate of an error-free channel with a counting rule, so no
rule can beat it.
"""

from risfusion.detect import TrialConfig, estimate_roc_points, observation_bound_at
from risfusion.fusion import RULES
from risfusion.scenario import build_scenario

TRIALS = 20_000
N = 64

sc = build_scenario(seed=0, n_antennas=N)
print(f"N={N}, noise power {sc.params.sigma_w2:.1e} (relative to the transmit power)")
print(f"observation bound at P_F0=0.01: {observation_bound_at(0.01, 10, 0.5, 0.05):.3f}\n")
for mode in ("random_phases", "long_term_design"):
    cfg = TrialConfig(TRIALS, n_channel_draws_h1=TRIALS // 2, master_seed=0, ris_mode=mode)
    points = estimate_roc_points(cfg, sc, rules=RULES)
    print(mode)
    for rule, p in points.items():
        print(f"  {rule:6s} P_D0 = {p.pd0:.3f} +- {p.std_err_pd0:.3f}   "
              f"(held-out P_F0 {p.pf0_achieved:.4f})")
