"""Fusion statistics computed at the FC.

Every linear rule has the form ``Re(a^H y)`` with ``a = H^e u`` for some
K-vector ``u``; writing it as ``Re(u^H z)`` with the matched-filter output
``z = H^e^H y`` lets a whole batch of trials share one projection.

The ZFC statistic is left unnormalized: on noiseless data it equals the
count ``sum(x)`` exactly, so no division by N is applied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .channel import ctranspose

RULES = ("LLR", "MRC", "MMRC1", "MMRC2", "ZFC")
LINEAR_RULES = ("MRC", "MMRC1", "MMRC2", "ZFC")
MAX_LLR_SENSORS = 20
MAX_CONDITION = 1e12


class IllConditionedError(np.linalg.LinAlgError):
    """A combiner matrix is singular or too ill-conditioned to invert."""


@dataclass(frozen=True)
class SensorModel:
    pd: np.ndarray
    pf: np.ndarray
    alpha: np.ndarray

    def __post_init__(self):
        pd = np.atleast_1d(np.asarray(self.pd, dtype=float))
        pf = np.atleast_1d(np.asarray(self.pf, dtype=float))
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if not (pd.shape == pf.shape == alpha.shape) or pd.ndim != 1:
            raise ValueError("pd, pf and alpha must be K-vectors of equal length")
        if np.any((pd < 0) | (pd > 1) | (pf < 0) | (pf > 1)):
            raise ValueError("local probabilities must lie in [0, 1]")
        if np.any(pd < pf):
            raise ValueError("each sensor needs pd >= pf")
        if np.any(alpha <= 0):
            raise ValueError("transmit energies must be positive")
        for arr in (pd, pf, alpha):
            arr.setflags(write=False)
        object.__setattr__(self, "pd", pd)
        object.__setattr__(self, "pf", pf)
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def identical(cls, k, pd=0.5, pf=0.05, alpha=1.0):
        return cls(np.full(k, pd), np.full(k, pf), np.full(k, alpha))

    @property
    def n_sensors(self):
        return self.pd.size


@dataclass(frozen=True)
class FusionInput:
    y: np.ndarray
    h_e: np.ndarray
    sigma_w2: float
    sensors: SensorModel
    v: Optional[np.ndarray] = None
    v_bar: Optional[np.ndarray] = None


def decision_vectors(k):
    """All ``2**k`` vectors in {-1, +1}^k as rows."""
    if k > MAX_LLR_SENSORS:
        raise ValueError(f"exhaustive enumeration limited to {MAX_LLR_SENSORS} sensors, got {k}")
    return np.array(list(itertools.product((-1.0, 1.0), repeat=k)))


def log_pmf(xs, p_one):
    """Log-probability of each row of ``xs`` under independent sensors
    with ``P(x_k = +1) = p_one[k]``. Zero-probability rows give ``-inf``.
    """
    with np.errstate(divide="ignore"):
        log_on = np.log(p_one)
        log_off = np.log1p(-np.asarray(p_one))
    return np.where(xs > 0, log_on, log_off).sum(axis=-1)


def condition_number(mat):
    """2-norm condition number of (stacked) Hermitian matrices."""
    eig = np.abs(np.linalg.eigvalsh(mat))
    with np.errstate(divide="ignore", invalid="ignore"):
        return eig.max(axis=-1) / eig.min(axis=-1)


def solve_checked(mat, rhs, max_condition=MAX_CONDITION):
    """Solve ``mat @ u = rhs`` for (stacked) Hermitian ``mat``.

    Returns ``(u, ok)`` where ``ok`` flags systems whose condition number is
    below ``max_condition``; rejected systems get NaN solutions.
    """
    mat = np.asarray(mat)
    cond = condition_number(mat)
    ok = np.asarray(np.isfinite(cond) & (cond <= max_condition))
    safe = np.where(ok[..., None, None], mat, np.eye(mat.shape[-1]))
    rhs_b = np.broadcast_to(rhs, mat.shape[:-1])[..., None]
    u = np.linalg.solve(safe, rhs_b)[..., 0]
    u = np.where(ok[..., None], u, np.nan)
    return u, ok


def _solve_or_raise(mat, rhs, what):
    u, ok = solve_checked(mat, rhs)
    if not np.all(ok):
        cond = np.max(condition_number(mat))
        raise IllConditionedError(f"{what} is ill-conditioned (condition number {cond:.3e})")
    return u


def combiner_weights(rule, h_e, alpha, v=None, v_bar=None, gram=None):
    """K-vector ``u`` with combiner ``a = H^e u`` for a linear rule.

    Raises :class:`IllConditionedError` when the matrix to invert is
    singular to working precision.
    """
    alpha = np.asarray(alpha, dtype=float)
    inv_sqrt = 1.0 / np.sqrt(alpha)
    if rule == "MRC":
        return np.broadcast_to(np.sqrt(alpha), h_e.shape[:-2] + alpha.shape).astype(complex)
    if rule == "MMRC1":
        if v is None:
            raise ValueError("mMRC-1 needs the instantaneous Gram approximation V")
        return _solve_or_raise(v, inv_sqrt, "V")
    if rule == "MMRC2":
        if v_bar is None:
            raise ValueError("mMRC-2 needs the averaged Gram matrix")
        return _solve_or_raise(v_bar, inv_sqrt, "V_bar")
    if rule == "ZFC":
        if h_e.shape[-2] < h_e.shape[-1]:
            raise IllConditionedError("zero forcing needs at least as many antennas as sensors")
        if gram is None:
            gram = ctranspose(h_e) @ h_e
        return _solve_or_raise(gram, inv_sqrt, "H^e^H H^e")
    raise ValueError(f"unknown linear rule {rule!r}")


def linear_statistic(u, z):
    """``Re(u^H z)`` over the trailing axis."""
    return np.real(np.sum(np.conj(u) * z, axis=-1))


def _linear(rule, inp: FusionInput):
    u = combiner_weights(rule, inp.h_e, inp.sensors.alpha, v=inp.v, v_bar=inp.v_bar)
    a = inp.h_e @ u
    return float(np.real(np.vdot(a, inp.y)))


def mrc_statistic(inp: FusionInput) -> float:
    """Matched filter ``Re(a^H y)`` with ``a = H^e D_alpha^{1/2} 1``."""
    return _linear("MRC", inp)


def mmrc1_statistic(inp: FusionInput) -> float:
    """Modified MRC using the instantaneous ``V``: ``a = H^e V^-1 D_alpha^-1/2 1``."""
    return _linear("MMRC1", inp)


def mmrc2_statistic(inp: FusionInput) -> float:
    """Modified MRC using the averaged ``V_bar`` in place of ``V``."""
    return _linear("MMRC2", inp)


def zfc_statistic(inp: FusionInput) -> float:
    """Zero-forcing combiner ``a = H^e (H^e^H H^e)^-1 D_alpha^-1/2 1``."""
    return _linear("ZFC", inp)


class LlrKernel:
    """Batched optimal (LLR) statistic for fixed sensor pmfs.

    The squared distance ``||y - H D^1/2 x||^2`` is expanded so that only the
    projection ``z = H^H y`` and the Gram matrix ``H^H H`` are needed; the
    ``||y||^2`` term cancels in the ratio.
    """

    def __init__(self, sensors: SensorModel, sigma_w2: float):
        self.sensors = sensors
        self.sigma_w2 = float(sigma_w2)
        self.xs = decision_vectors(sensors.n_sensors)
        self.log_p1 = log_pmf(self.xs, sensors.pd)
        self.log_p0 = log_pmf(self.xs, sensors.pf)
        self.sx = self.xs * np.sqrt(sensors.alpha)
        k = sensors.n_sensors
        # x^T Re(G) x for every x as one product with the flattened outer products
        self._outer = (self.sx[:, :, None] * self.sx[:, None, :]).reshape(-1, k * k).T

    def __call__(self, z, gram):
        """``z``: (..., T, K) projections; ``gram``: (..., K, K). Returns (..., T)."""
        g = np.real(gram)
        quad = g.reshape(g.shape[:-2] + (-1,)) @ self._outer
        lin = np.real(z) @ self.sx.T
        expo = (2.0 * lin - quad[..., None, :]) / self.sigma_w2
        num = logsumexp(expo + self.log_p1, axis=-1)
        den = logsumexp(expo + self.log_p0, axis=-1)
        with np.errstate(invalid="ignore"):
            return num - den


def llr_statistic(inp: FusionInput) -> float:
    """Log-likelihood ratio over all ``2**K`` decision vectors.

    Evaluated in the log domain; returns ``+inf``/``-inf`` when one
    hypothesis assigns zero probability to every decision vector that
    explains ``y``.
    """
    kernel = LlrKernel(inp.sensors, inp.sigma_w2)
    z = ctranspose(inp.h_e) @ inp.y
    gram = ctranspose(inp.h_e) @ inp.h_e
    return float(kernel(z[None, :], gram)[0])


STATISTICS = {
    "LLR": llr_statistic,
    "MRC": mrc_statistic,
    "MMRC1": mmrc1_statistic,
    "MMRC2": mmrc2_statistic,
    "ZFC": zfc_statistic,
}
