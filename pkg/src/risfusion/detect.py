"""Monte Carlo estimation of FC-level false-alarm and detection rates.

Trials are grouped into fixed-size blocks of channel draws. Each block owns
an RNG substream keyed on (seed, phase tag, block index), so the statistics
do not depend on how blocks are scheduled across worker processes.

A ROC point is produced in two phases: the threshold is calibrated as an
empirical quantile of H0 statistics, then applied to a fresh (held-out) H0
set and to H1 trials with a strict ``>`` decision.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .channel import (crandn, ctranspose, draw_composite_batch, gram_v, substream)
from .fusion import LINEAR_RULES, RULES, LlrKernel, SensorModel, solve_checked
from .scenario import RIS_MODES, Scenario

BLOCK_CHANNELS = 256


@dataclass(frozen=True)
class TrialConfig:
    """Monte Carlo sizes and operating point.

    H0 trials per phase = ``n_channel_draws * n_noise_draws_per_channel``; the
    H1 phase uses ``n_channel_draws_h1`` channel draws (defaults to the H0 value).
    """

    n_channel_draws: int
    n_noise_draws_per_channel: int = 1
    target_pf0: float = 0.01
    master_seed: int = 0
    rule: str = "ZFC"
    ris_mode: str = "long_term_design"
    n_channel_draws_h1: int | None = None

    def __post_init__(self):
        if self.n_channel_draws < 1 or self.n_noise_draws_per_channel < 1:
            raise ValueError("trial counts must be >= 1")
        if self.n_channel_draws_h1 is not None and self.n_channel_draws_h1 < 1:
            raise ValueError("trial counts must be >= 1")
        if not 0.0 < self.target_pf0 < 1.0:
            raise ValueError("target false-alarm rate must lie in (0, 1)")
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}")
        if self.ris_mode not in RIS_MODES:
            raise ValueError(f"unknown RIS mode {self.ris_mode!r}")

    @property
    def channels_h1(self):
        return self.n_channel_draws if self.n_channel_draws_h1 is None else self.n_channel_draws_h1


@dataclass(frozen=True)
class RocPoint:
    pf0_achieved: float
    pd0: float
    threshold: float
    trials_h0: int
    trials_h1: int
    std_err_pd0: float
    std_err_pf0: float = 0.0
    trials_calibration: int = 0
    failures: int = 0


def draw_decisions(sensors: SensorModel, hypothesis, rng, size=()):
    """Local decisions in {-1, +1}; ``x_k = +1`` w.p. ``pd_k`` (H1) or ``pf_k`` (H0)."""
    h = _hypothesis(hypothesis)
    p = sensors.pd if h == 1 else sensors.pf
    u = rng.random(tuple(size) + p.shape)
    return np.where(u < p, 1.0, -1.0)


def _hypothesis(hypothesis):
    if hypothesis in (1, "H1", True):
        return 1
    if hypothesis in (0, "H0", False):
        return 0
    raise ValueError(f"hypothesis must be H0 or H1, got {hypothesis!r}")


def calibrate_threshold(h0_statistics, target_pf0):
    """Threshold whose strict exceedance rate on the calibration set is at most
    ``target_pf0``.

    With ``j = floor(target * n)`` the threshold sits halfway between the
    ``j``-th and ``(j+1)``-th largest statistics. A target of 1 returns
    ``-inf`` (always decide H1).
    """
    s = np.sort(np.asarray(h0_statistics, dtype=float).ravel())
    n = s.size
    if n == 0:
        raise ValueError("no H0 statistics to calibrate on")
    if not 0.0 < target_pf0 <= 1.0:
        raise ValueError("target false-alarm rate must lie in (0, 1]")
    if target_pf0 >= 1.0:
        return -np.inf
    if n < math.ceil(10.0 / target_pf0):
        warnings.warn(f"{n} H0 samples are few for a false-alarm target of {target_pf0}",
                      stacklevel=2)
    j = int(math.floor(target_pf0 * n + 1e-9))
    if j == 0:
        return float(s[-1])
    lo, hi = s[n - j - 1], s[n - j]
    mid = 0.5 * (lo + hi)
    return float(mid if np.isfinite(mid) else lo)


def observation_bound(k, pd, pf, nu):
    """Ideal-channel counting rule ``sum(x == +1) >= nu``; returns (pd0, pf0)."""
    if not 0 <= nu <= k:
        raise ValueError("threshold nu must lie in [0, K]")
    # P(count >= nu) = sf(nu - 1)
    return float(binom.sf(nu - 1, k, pd)), float(binom.sf(nu - 1, k, pf))


def observation_bound_curve(k, pd, pf):
    """``(pf0, pd0)`` of the counting rule for ``nu = 0..K``."""
    return [observation_bound(k, pd, pf, nu)[::-1] for nu in range(k + 1)]


def observation_bound_at(pf0, k, pd, pf):
    """Bound on P_D0 at false-alarm ``pf0``, interpolating the counting-rule
    curve linearly (randomized threshold between adjacent ``nu``)."""
    curve = np.array(observation_bound_curve(k, pd, pf))[::-1]
    return float(np.interp(pf0, curve[:, 0], curve[:, 1]))


# -- trial engine ------------------------------------------------------------

@dataclass(frozen=True)
class _Job:
    scenario: Scenario
    ris_mode: str
    rules: tuple
    hypothesis: int
    seed: int
    tag: str
    block: int
    n_channels: int
    n_noise: int


def _block_statistics(job: _Job):
    sc = job.scenario
    rng = substream(job.seed, job.tag, job.block)
    theta = sc.theta(job.ris_mode)
    alpha = sc.sensors.alpha
    sqrt_a = np.sqrt(alpha)
    inv_sqrt_a = 1.0 / sqrt_a
    n = sc.layout.n_fc_antennas

    h_e, h_r = draw_composite_batch(sc.layout, sc.los, sc.params, theta, rng, job.n_channels)
    x = draw_decisions(sc.sensors, job.hypothesis, rng, size=(job.n_channels, job.n_noise))
    w = crandn(rng, (job.n_channels, job.n_noise, n), sc.params.sigma_w2)

    h_eh = ctranspose(h_e)
    gram = h_eh @ h_e
    # z = H^H y = gram D^1/2 x + H^H w, shape (B, T, K)
    z = (x * sqrt_a) @ np.swapaxes(gram, -1, -2) + w @ np.conj(h_e)

    out, failed = {}, {}
    for rule in job.rules:
        if rule == "LLR":
            stat = LlrKernel(sc.sensors, sc.params.sigma_w2)(z, gram)
            ok = np.ones(job.n_channels, bool)
        elif rule == "MRC":
            stat = np.real(z) @ sqrt_a
            ok = np.ones(job.n_channels, bool)
        else:
            if rule == "MMRC1":
                u, ok = solve_checked(gram_v(h_r, theta, sc.params, sc.los.a_m), inv_sqrt_a)
            elif rule == "MMRC2":
                u, ok = solve_checked(sc.v_bar(job.ris_mode), inv_sqrt_a)
                u = np.broadcast_to(u, (job.n_channels,) + u.shape)
                ok = np.broadcast_to(ok, (job.n_channels,))
            elif rule == "ZFC":
                u, ok = solve_checked(gram, inv_sqrt_a)
            else:
                raise ValueError(f"unknown rule {rule!r}")
            stat = np.real(np.einsum("bk,btk->bt", np.conj(u), z))
        bad = ~np.asarray(ok)[:, None] | ~np.isfinite(stat) & ~np.isinf(stat)
        stat = np.where(bad, -np.inf, stat)
        out[rule] = stat.ravel()
        failed[rule] = int(np.count_nonzero(bad))
    return out, failed


def simulate_statistics(scenario: Scenario, ris_mode, rules, hypothesis, n_channels,
                        n_noise=1, seed=0, tag="calibration_h0", workers=1):
    """Fusion statistics for ``n_channels * n_noise`` trials under one hypothesis.

    Returns ``(stats, failures)``: per-rule arrays ordered by (channel, noise)
    index, and per-rule counts of trials whose combiner could not be formed
    (those trials carry ``-inf`` and never trigger a detection).
    """
    rules = tuple(rules)
    for rule in rules:
        if rule not in RULES:
            raise ValueError(f"unknown rule {rule!r}")
    if "ZFC" in rules and scenario.layout.n_fc_antennas < scenario.layout.n_sensors:
        raise ValueError("zero forcing needs N >= K")
    h = _hypothesis(hypothesis)
    n_blocks = -(-int(n_channels) // BLOCK_CHANNELS)
    jobs = [_Job(scenario, ris_mode, rules, h, int(seed), tag, b,
                 min(BLOCK_CHANNELS, n_channels - b * BLOCK_CHANNELS), int(n_noise))
            for b in range(n_blocks)]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_block_statistics, jobs))
    else:
        results = [_block_statistics(j) for j in jobs]
    stats = {r: np.concatenate([res[0][r] for res in results]) for r in rules}
    failures = {r: sum(res[1][r] for res in results) for r in rules}
    return stats, failures


def _binomial_se(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else float("nan")


@dataclass
class TrialSets:
    """Statistics of the three trial phases of one scenario and RIS mode."""

    calibration: dict
    holdout: dict
    h1: dict
    failures: dict

    def roc_point(self, rule, target_pf0) -> RocPoint:
        gamma = calibrate_threshold(self.calibration[rule], target_pf0)
        h0 = self.holdout[rule]
        h1 = self.h1[rule]
        pf0 = float(np.mean(h0 > gamma))
        pd0 = float(np.mean(h1 > gamma))
        n_cal = self.calibration[rule].size
        return RocPoint(pf0_achieved=pf0, pd0=pd0, threshold=gamma,
                        trials_h0=h0.size, trials_h1=h1.size,
                        std_err_pd0=_binomial_se(pd0, h1.size),
                        std_err_pf0=_binomial_se(target_pf0, h0.size),
                        trials_calibration=n_cal,
                        failures=self.failures[rule])


def run_trials(scenario: Scenario, config: TrialConfig, rules=None, workers=1) -> TrialSets:
    """Simulate calibration H0, held-out H0 and H1 trial sets for ``rules``."""
    rules = (config.rule,) if rules is None else tuple(rules)
    common = dict(scenario=scenario, ris_mode=config.ris_mode, rules=rules,
                  n_noise=config.n_noise_draws_per_channel, seed=config.master_seed,
                  workers=workers)
    cal, f_cal = simulate_statistics(hypothesis=0, n_channels=config.n_channel_draws,
                                     tag="calibration_h0", **common)
    hold, f_hold = simulate_statistics(hypothesis=0, n_channels=config.n_channel_draws,
                                       tag="holdout_h0", **common)
    h1, f_h1 = simulate_statistics(hypothesis=1, n_channels=config.channels_h1,
                                   tag="trials_h1", **common)
    failures = {r: f_cal[r] + f_hold[r] + f_h1[r] for r in rules}
    return TrialSets(calibration=cal, holdout=hold, h1=h1, failures=failures)


def estimate_roc_point(config: TrialConfig, scenario: Scenario, workers=1) -> RocPoint:
    """Two-phase Monte Carlo estimate of (P_F0, P_D0) for ``config.rule``."""
    sets = run_trials(scenario, config, workers=workers)
    return sets.roc_point(config.rule, config.target_pf0)


def estimate_roc_points(config: TrialConfig, scenario: Scenario, rules=RULES,
                        workers=1) -> dict:
    """Like :func:`estimate_roc_point` for several rules on shared trials."""
    sets = run_trials(scenario, config, rules=rules, workers=workers)
    return {r: sets.roc_point(r, config.target_pf0) for r in rules}


__all__ = [
    "BLOCK_CHANNELS", "LINEAR_RULES", "RocPoint", "TrialConfig", "TrialSets",
    "calibrate_threshold", "draw_decisions", "estimate_roc_point",
    "estimate_roc_points", "observation_bound", "observation_bound_at",
    "observation_bound_curve", "run_trials", "simulate_statistics",
]
