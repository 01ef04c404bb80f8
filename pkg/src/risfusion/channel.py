"""Channel synthesis for the sensor -> (RIS) -> FC multiple access channel.

Direct links are Rayleigh, the sensor->RIS and RIS->FC links are Rician with
LoS parts given by steering vectors. All matrix helpers accept stacked
leading dimensions, so a batch of channel draws can be processed at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (NetworkLayout, PathGains, SteeringAngles,
                       ris_departure_vector, ris_los_matrix, ula_steering)

HERMITIAN_TOL = 1e-10
UNIT_MODULUS_TOL = 1e-12

# purpose tags for RNG substreams
STREAM_TAGS = {
    "layout": 0,
    "rician": 1,
    "random_phases": 2,
    "design_init": 3,
    "calibration_h0": 10,
    "holdout_h0": 11,
    "trials_h1": 12,
    "moment_check": 20,
}


def substream(master_seed: int, tag: str | int, index: int = 0) -> np.random.Generator:
    """Independent generator keyed on (seed, purpose tag, index).

    The stream depends only on its key, never on the order in which streams
    are created, which keeps results independent of scheduling.
    """
    tag_id = STREAM_TAGS[tag] if isinstance(tag, str) else int(tag)
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(tag_id, int(index)))
    return np.random.default_rng(seq)


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def dbm_to_watts(value_dbm):
    return 10.0 ** ((np.asarray(value_dbm, dtype=float) - 30.0) / 10.0)


def rician_amplitude(kappa_db):
    """LoS amplitude fraction ``sqrt(kappa / (1 + kappa))`` for a factor in dB."""
    kappa = db_to_linear(kappa_db)
    return np.sqrt(kappa / (1.0 + kappa))


def crandn(rng: np.random.Generator, shape, var=1.0):
    """Circularly-symmetric complex normal samples with total variance ``var``."""
    shape = (shape,) if isinstance(shape, (int, np.integer)) else tuple(shape)
    pairs = rng.standard_normal(shape + (2,))
    return np.sqrt(np.asarray(var, dtype=float) / 2.0) * pairs.view(np.complex128)[..., 0]


def ctranspose(a):
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class FadingParams:
    b_wr: np.ndarray
    b: float
    sigma_w2: float
    gains: PathGains

    def __post_init__(self):
        b_wr = np.atleast_1d(np.asarray(self.b_wr, dtype=float))
        if np.any(b_wr < 0) or np.any(b_wr > 1):
            raise ValueError("b_wr entries must lie in [0, 1]")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")
        if not self.sigma_w2 > 0:
            raise ValueError(f"noise power must be positive, got {self.sigma_w2}")
        if b_wr.shape != self.gains.d_wr.shape:
            raise ValueError("b_wr and path gains disagree on the number of sensors")
        b_wr.setflags(write=False)
        object.__setattr__(self, "b_wr", b_wr)
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "sigma_w2", float(self.sigma_w2))


@dataclass(frozen=True)
class LosTerms:
    """Deterministic steering quantities of a layout.

    ``h_los`` (M x K) holds the sensor->RIS LoS columns, ``a_m`` the RIS
    departure response toward the FC and ``a_fc`` the FC array response.
    """

    h_los: np.ndarray
    a_m: np.ndarray
    a_fc: np.ndarray

    @classmethod
    def from_layout(cls, layout: NetworkLayout, angles: SteeringAngles) -> "LosTerms":
        m1, m2 = layout.ris_rows, layout.ris_cols
        return cls(h_los=ris_los_matrix(angles, m1, m2),
                   a_m=ris_departure_vector(angles, m1, m2),
                   a_fc=ula_steering(angles.fc_arrival, layout.n_fc_antennas))

    @property
    def g_los(self):
        return np.outer(self.a_fc, np.conj(self.a_m))


@dataclass(frozen=True)
class ChannelRealization:
    h_d: np.ndarray
    h_r: np.ndarray
    g: np.ndarray


@dataclass(frozen=True)
class RisPhases:
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=complex).ravel()
        if np.any(np.abs(np.abs(theta) - 1.0) > UNIT_MODULUS_TOL):
            raise ValueError("RIS phases must have unit modulus")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_angles(cls, phi):
        return cls(np.exp(1j * np.asarray(phi, dtype=float)))

    @classmethod
    def random(cls, m, rng: np.random.Generator):
        return cls.from_angles(rng.uniform(0.0, 2 * np.pi, size=m))

    def __len__(self):
        return self.theta.size


def _theta(theta):
    return theta.theta if isinstance(theta, RisPhases) else np.asarray(theta)


def draw_direct_channel(layout: NetworkLayout, params: FadingParams, rng, size=()):
    """Rayleigh direct channel ``Hd_hat @ diag(sqrt(d_wf))``; shape ``size + (N, K)``."""
    shape = tuple(size) + (layout.n_fc_antennas, layout.n_sensors)
    return crandn(rng, shape) * np.sqrt(params.gains.d_wf)


def draw_ris_channels(layout: NetworkLayout, los: LosTerms, params: FadingParams,
                      rng, size=()):
    """Draw (H^r, G) with shapes ``size + (M, K)`` and ``size + (N, M)``."""
    size = tuple(size)
    n, m, k = layout.n_fc_antennas, layout.n_ris_elements, layout.n_sensors
    b_wr = params.b_wr
    scattered = crandn(rng, size + (m, k))
    h_r = (los.h_los * b_wr + scattered * np.sqrt(1.0 - b_wr ** 2)) \
        * np.sqrt(params.gains.d_wr)
    b = params.b
    g_hat = crandn(rng, size + (n, m))
    g = np.sqrt(params.gains.d_rf) * (b * los.g_los + np.sqrt(1.0 - b * b) * g_hat)
    return h_r, g


def draw_realization(layout, los, params, rng) -> ChannelRealization:
    h_d = draw_direct_channel(layout, params, rng)
    h_r, g = draw_ris_channels(layout, los, params, rng)
    return ChannelRealization(h_d=h_d, h_r=h_r, g=g)


def composite_channel(real: ChannelRealization, theta) -> np.ndarray:
    """``H^e = G diag(theta) H^r + H^d``."""
    th = _theta(theta)
    return real.g @ (th[:, None] * real.h_r) + real.h_d


def draw_noise(n, sigma_w2, rng, size=()):
    if not sigma_w2 > 0:
        raise ValueError("noise power must be positive")
    return crandn(rng, tuple(size) + (n,), sigma_w2)


def _checked_hermitian(v):
    err = np.max(np.abs(v - ctranspose(v)))
    scale = max(np.max(np.abs(v)), np.finfo(float).tiny)
    if err > HERMITIAN_TOL * scale:
        raise ArithmeticError(f"matrix is not Hermitian (relative asymmetry {err / scale:.2e})")
    return 0.5 * (v + ctranspose(v))


def k_matrix(theta, params: FadingParams, a_m):
    """``K(Theta) = d_rf Theta^* [(1-b^2) I + b^2 a_m a_m^H] Theta``."""
    th = _theta(theta)
    b2 = params.b ** 2
    u = np.conj(th) * a_m
    return params.gains.d_rf * ((1.0 - b2) * np.eye(th.size) + b2 * np.outer(u, np.conj(u)))


def gram_v(h_r, theta, params: FadingParams, a_m):
    """Large-array Gram approximation ``V = D_wf + H^r^H K(Theta) H^r``.

    ``h_r`` may carry leading batch dimensions.
    """
    th = _theta(theta)
    b2 = params.b ** 2
    # K(Theta) = d_rf[(1-b^2) I + b^2 u u^H] with u = Theta^* a_m, so expand
    # without forming the M x M matrix.
    t = np.einsum("m,...mk->...k", np.conj(a_m) * th, h_r)
    hh = ctranspose(h_r) @ h_r
    v = np.diag(params.gains.d_wf) + params.gains.d_rf * (
        (1.0 - b2) * hh + b2 * np.conj(t)[..., :, None] * t[..., None, :])
    return _checked_hermitian(v)


def v_bar(los: LosTerms, theta, params: FadingParams):
    """Averaged Gram matrix driving the mMRC-2 combiner.

    ``D_wf + D_wr (I - B_wr^2) + L^H K(Theta) L`` with
    ``L = H_LoS diag(b_wr) D_wr^{1/2}``.
    """
    gains = params.gains
    lmat = los.h_los * (params.b_wr * np.sqrt(gains.d_wr))
    kmat = k_matrix(theta, params, los.a_m)
    v = (np.diag(gains.d_wf + gains.d_wr * (1.0 - params.b_wr ** 2))
         + ctranspose(lmat) @ kmat @ lmat)
    return _checked_hermitian(v)


def los_coupling(los: LosTerms, theta, gains: PathGains):
    """K-vector ``w`` such that ``V_LoS = D_wf + w w^H``."""
    th = _theta(theta)
    lmat = los.h_los * np.sqrt(gains.d_wr)
    # w = sqrt(d_rf) L^H Theta^* a_m
    return np.sqrt(gains.d_rf) * (ctranspose(lmat) @ (np.conj(th) * los.a_m))


def v_los(los: LosTerms, theta, gains: PathGains):
    """Full-LoS Gram matrix ``D_wf + d_rf (H_LoS D_wr^1/2)^H Theta^* a a^H Theta (...)``."""
    w = los_coupling(los, theta, gains)
    return _checked_hermitian(np.diag(gains.d_wf) + np.outer(w, np.conj(w)))


def draw_composite_batch(layout: NetworkLayout, los: LosTerms, params: FadingParams,
                         theta, rng, batch: int):
    """Draw ``batch`` composite channels ``H^e`` together with their ``H^r``.

    Equal in distribution to :func:`draw_realization` followed by
    :func:`composite_channel`, but never materializes ``G``: given ``H^r``,
    the scattered product ``G_hat Theta H^r`` has i.i.d. rows with covariance
    ``(H^r^H H^r)^T``, so it is sampled as ``Z R`` with ``H^r = Q R``.
    Returns arrays of shape (batch, N, K) and (batch, M, K).
    """
    th = _theta(theta)
    n, k = layout.n_fc_antennas, layout.n_sensors
    b = params.b
    h_d = draw_direct_channel(layout, params, rng, size=(batch,))
    m = layout.n_ris_elements
    scattered = crandn(rng, (batch, m, k))
    b_wr = params.b_wr
    h_r = (los.h_los * b_wr + scattered * np.sqrt(1.0 - b_wr ** 2)) * np.sqrt(params.gains.d_wr)
    # LoS part: a_fc (a_m^H Theta H^r)
    t = np.einsum("m,bmk->bk", np.conj(los.a_m) * th, h_r)
    h_e = h_d + np.sqrt(params.gains.d_rf) * b * los.a_fc[None, :, None] * t[:, None, :]
    z = crandn(rng, (batch, n, k))
    if b < 1.0:
        r = np.linalg.qr(h_r, mode="r")
        h_e = h_e + np.sqrt(params.gains.d_rf * (1.0 - b * b)) * (z @ r)
    return h_e, h_r
