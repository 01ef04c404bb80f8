"""Layout geometry: path loss, arrival/departure angles and steering vectors.

Frame convention: z points up, azimuth is measured in the horizontal plane
with ``atan2(dy, dx)`` and elevation is measured from the horizontal plane.
The FC is a horizontal uniform linear array and the RIS a planar array of
``ris_rows x ris_cols`` half-wavelength spaced elements.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NetworkLayout:
    sensor_positions: np.ndarray
    ris_position: np.ndarray
    fc_position: np.ndarray
    n_fc_antennas: int
    ris_rows: int
    ris_cols: int

    def __post_init__(self):
        sensors = np.atleast_2d(np.asarray(self.sensor_positions, dtype=float))
        ris = np.asarray(self.ris_position, dtype=float).reshape(3)
        fc = np.asarray(self.fc_position, dtype=float).reshape(3)
        if sensors.ndim != 2 or sensors.shape[1] != 3 or sensors.shape[0] < 1:
            raise ValueError("sensor_positions must be a K x 3 array with K >= 1")
        for name, value in (("n_fc_antennas", self.n_fc_antennas),
                            ("ris_rows", self.ris_rows),
                            ("ris_cols", self.ris_cols)):
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not (np.all(np.isfinite(sensors)) and np.all(np.isfinite(ris))
                and np.all(np.isfinite(fc))):
            raise ValueError("positions must be finite")
        if np.any(np.linalg.norm(sensors - ris, axis=1) == 0):
            raise ValueError("a sensor coincides with the RIS")
        if np.any(np.linalg.norm(sensors - fc, axis=1) == 0):
            raise ValueError("a sensor coincides with the FC")
        if np.linalg.norm(ris - fc) == 0:
            raise ValueError("RIS and FC coincide")
        sensors.setflags(write=False)
        ris.setflags(write=False)
        fc.setflags(write=False)
        object.__setattr__(self, "sensor_positions", sensors)
        object.__setattr__(self, "ris_position", ris)
        object.__setattr__(self, "fc_position", fc)
        object.__setattr__(self, "n_fc_antennas", int(self.n_fc_antennas))
        object.__setattr__(self, "ris_rows", int(self.ris_rows))
        object.__setattr__(self, "ris_cols", int(self.ris_cols))

    @property
    def n_sensors(self) -> int:
        return self.sensor_positions.shape[0]

    @property
    def n_ris_elements(self) -> int:
        return self.ris_rows * self.ris_cols


@dataclass(frozen=True)
class SteeringAngles:
    """Angles (radians) that parametrize the LoS steering vectors.

    ``sensor_at_ris`` is K x 2 with columns (azimuth, elevation) of each
    sensor seen from the RIS; ``ris_departure`` is the (azimuth, elevation)
    of the FC seen from the RIS; ``fc_arrival`` is the azimuth of the RIS
    seen from the FC array.
    """

    sensor_at_ris: np.ndarray
    ris_departure: tuple[float, float]
    fc_arrival: float


@dataclass(frozen=True)
class PathGains:
    """Linear power gains: sensor->FC (``d_wf``), sensor->RIS (``d_wr``), RIS->FC."""

    d_wf: np.ndarray
    d_wr: np.ndarray
    d_rf: float


def path_loss(distance, exponent, mu, d0=1.0):
    """Power gain ``mu * (d / d0) ** -exponent``.

    Distances shorter than ``d0`` are clamped to ``d0`` so the gain never
    exceeds ``mu``. Works elementwise on arrays.
    """
    distance = np.asarray(distance, dtype=float)
    if d0 <= 0:
        raise ValueError(f"reference distance must be positive, got {d0}")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if np.any(distance <= 0):
        raise ValueError("distance must be positive")
    ratio = np.maximum(distance / d0, 1.0)
    gain = mu * ratio ** (-float(exponent))
    return float(gain) if gain.ndim == 0 else gain


def ula_steering(azimuth, n):
    """Half-wavelength ULA response, element i is ``exp(j*pi*i*sin(azimuth))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(1j * np.pi * np.arange(n) * np.sin(azimuth))


def upa_steering(azimuth, elevation, m1, m2):
    """Half-wavelength UPA response flattened row-major over (p, q).

    Element (p, q) has phase ``pi * (p*sin(el)*sin(az) + q*sin(el)*cos(az))``.
    """
    if m1 < 1 or m2 < 1:
        raise ValueError("m1 and m2 must be >= 1")
    p = np.arange(m1)[:, None]
    q = np.arange(m2)[None, :]
    se = np.sin(elevation)
    phase = np.pi * (p * se * np.sin(azimuth) + q * se * np.cos(azimuth))
    return np.exp(1j * phase).ravel()


def _azimuth_elevation(delta):
    delta = np.atleast_2d(delta)
    horizontal = np.hypot(delta[:, 0], delta[:, 1])
    if np.any(np.linalg.norm(delta, axis=1) == 0):
        raise ValueError("coincident positions have no direction")
    az = np.arctan2(delta[:, 1], delta[:, 0])
    # keep azimuth in (-pi, pi]
    az = np.where(az == -np.pi, np.pi, az)
    el = np.arctan2(delta[:, 2], horizontal)
    return az, el


def compute_angles(layout: NetworkLayout) -> SteeringAngles:
    ris = layout.ris_position
    fc = layout.fc_position
    az, el = _azimuth_elevation(layout.sensor_positions - ris)
    dep_az, dep_el = _azimuth_elevation(fc - ris)
    arr_az, _ = _azimuth_elevation(ris - fc)
    sensor_at_ris = np.column_stack([az, el])
    sensor_at_ris.setflags(write=False)
    return SteeringAngles(
        sensor_at_ris=sensor_at_ris,
        ris_departure=(float(dep_az[0]), float(dep_el[0])),
        fc_arrival=float(arr_az[0]),
    )


def compute_path_gains(layout: NetworkLayout, mu, d0, nu1, nu2) -> PathGains:
    sensors = layout.sensor_positions
    d_fc = np.linalg.norm(sensors - layout.fc_position, axis=1)
    d_ris = np.linalg.norm(sensors - layout.ris_position, axis=1)
    d_link = np.linalg.norm(layout.ris_position - layout.fc_position)
    d_wf = np.atleast_1d(path_loss(d_fc, nu2, mu, d0))
    d_wr = np.atleast_1d(path_loss(d_ris, nu1, mu, d0))
    d_wf.setflags(write=False)
    d_wr.setflags(write=False)
    return PathGains(d_wf=d_wf, d_wr=d_wr, d_rf=float(path_loss(d_link, nu1, mu, d0)))


def ris_los_matrix(angles: SteeringAngles, m1, m2):
    """M x K matrix whose k-th column is the UPA response toward sensor k."""
    cols = [upa_steering(az, el, m1, m2) for az, el in angles.sensor_at_ris]
    return np.column_stack(cols)


def ris_departure_vector(angles: SteeringAngles, m1, m2):
    az, el = angles.ris_departure
    return upa_steering(az, el, m1, m2)
