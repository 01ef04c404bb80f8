"""Bundles a layout, its long-term statistics and the RIS configurations."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (FadingParams, LosTerms, RisPhases, dbm_to_watts, db_to_linear,
                      rician_amplitude, substream, v_bar)
from .fusion import SensorModel
from .geometry import NetworkLayout, compute_angles, compute_path_gains
from .risopt import MmTrace, build_design_inputs, design_phases

RIS_MODES = ("random_phases", "long_term_design")


@dataclass(frozen=True)
class ChannelDefaults:
    mu_db: float = -20.0
    d0: float = 1.0
    nu1: float = 2.0
    nu2: float = 4.0
    sigma_w2_dbm: float = -70.0
    # sensor transmit power that D_alpha = I stands for; noise is expressed
    # relative to it (30 dBm reproduces a 1 W reference)
    tx_power_dbm: float = 0.0
    rician_low_db: float = 10.0
    rician_high_db: float = 20.0


def noise_power(channel: ChannelDefaults) -> float:
    """Noise power normalized to the per-sensor transmit power."""
    return float(dbm_to_watts(channel.sigma_w2_dbm) / dbm_to_watts(channel.tx_power_dbm))


@dataclass
class Scenario:
    layout: NetworkLayout
    los: LosTerms
    params: FadingParams
    sensors: SensorModel
    phases: dict = field(default_factory=dict)
    design_trace: MmTrace | None = None

    def theta(self, ris_mode) -> RisPhases:
        try:
            return self.phases[ris_mode]
        except KeyError:
            raise ValueError(f"unknown RIS mode {ris_mode!r}") from None

    def v_bar(self, ris_mode):
        return v_bar(self.los, self.theta(ris_mode), self.params)

    def with_antennas(self, n) -> "Scenario":
        """Same sensors, statistics and phases observed by an N-antenna FC."""
        layout = replace(self.layout, n_fc_antennas=n)
        angles = compute_angles(layout)
        return replace(self, layout=layout, los=LosTerms.from_layout(layout, angles))

    def with_rician(self, b_wr=None, b=None) -> "Scenario":
        params = replace(self.params,
                         b_wr=self.params.b_wr if b_wr is None else np.broadcast_to(
                             np.asarray(b_wr, dtype=float), self.params.b_wr.shape),
                         b=self.params.b if b is None else float(b))
        return replace(self, params=params)


def random_sensor_positions(k, side, rng):
    """``k`` ground-level sensors uniform in ``[0, side]^2``."""
    xy = rng.uniform(0.0, side, size=(k, 2))
    return np.column_stack([xy, np.zeros(k)])


def build_scenario(seed=0, n_sensors=10, n_antennas=64, ris_rows=5, ris_cols=5,
                   field_side=40.0, ris_position=(40.0, 20.0, 5.0),
                   fc_position=(65.0, 40.0, 2.0), sensor_positions=None,
                   pd=0.5, pf=0.05, alpha=1.0, channel=ChannelDefaults(),
                   rician_wr_db=None, rician_rf_db=None,
                   design_restarts=10, design_max_iter=500, design_rel_tol=1e-8):
    """Draw a layout and Rician factors from ``seed`` and design both RIS modes.

    Rician factors left as ``None`` are drawn uniformly (in dB) between the
    channel defaults' bounds, one per sensor for the sensor->RIS links and one
    for the RIS->FC link.
    """
    if sensor_positions is None:
        sensor_positions = random_sensor_positions(n_sensors, field_side,
                                                   substream(seed, "layout"))
    layout = NetworkLayout(sensor_positions, ris_position, fc_position,
                           n_antennas, ris_rows, ris_cols)
    k = layout.n_sensors
    angles = compute_angles(layout)
    gains = compute_path_gains(layout, db_to_linear(channel.mu_db), channel.d0,
                               channel.nu1, channel.nu2)
    rng = substream(seed, "rician")
    lo, hi = channel.rician_low_db, channel.rician_high_db
    wr_db = rng.uniform(lo, hi, size=k)
    rf_db = rng.uniform(lo, hi)
    if rician_wr_db is not None:
        wr_db = np.broadcast_to(np.asarray(rician_wr_db, dtype=float), (k,))
    if rician_rf_db is not None:
        rf_db = float(rician_rf_db)
    params = FadingParams(b_wr=rician_amplitude(wr_db), b=float(rician_amplitude(rf_db)),
                          sigma_w2=noise_power(channel), gains=gains)
    sensors = SensorModel(np.broadcast_to(pd, (k,)), np.broadcast_to(pf, (k,)),
                          np.broadcast_to(alpha, (k,)))
    los = LosTerms.from_layout(layout, angles)
    random_theta = RisPhases.random(layout.n_ris_elements, substream(seed, "random_phases"))
    inputs = build_design_inputs(los, gains, sensors.alpha)
    designed, trace = design_phases(inputs, seed=seed, restarts=design_restarts,
                                    max_iter=design_max_iter, rel_tol=design_rel_tol)
    return Scenario(layout=layout, los=los, params=params, sensors=sensors,
                    phases={"random_phases": random_theta, "long_term_design": designed},
                    design_trace=trace)
