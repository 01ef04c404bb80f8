"""Long-term RIS phase design by majorization-minimization.

The design minimizes the noise-variance proxy
``f(theta) = 1^T D_a^-1/2 V_LoS(theta)^-1 D_a^-1/2 1``. Since ``V_LoS`` is a
rank-one update of ``D_wf``, Sherman-Morrison turns this into maximizing the
ratio of quadratic forms

    g(theta) = |v1^T theta|^2 / (theta^T Xi theta^*),   |theta_m| = 1,

and ``f(theta) = c0 - g(theta)`` with ``c0 = sum_k 1 / (alpha_k d_wf_k)``.

Both quadratic forms are Hermitian forms in ``phi = conj(theta)``
(``g = |v1^H phi|^2 / phi^H Xi phi``), so the MM step is taken in ``phi``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import LosTerms, RisPhases, ctranspose, substream, v_los
from .geometry import PathGains

DEFAULT_MAX_ITER = 500
DEFAULT_REL_TOL = 1e-8
DEFAULT_RESTARTS = 10


@dataclass(frozen=True)
class LongTermDesignInputs:
    s1: np.ndarray
    v1: np.ndarray
    xi: np.ndarray
    lambda_max_xi: float
    c0: float = 0.0

    @property
    def n_elements(self):
        return self.v1.size


@dataclass
class MmTrace:
    g_values: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def build_design_inputs(los: LosTerms, gains: PathGains, alpha) -> LongTermDesignInputs:
    """Assemble ``S1``, ``v1``, ``Xi`` and ``lambda_max(Xi)`` from long-term statistics."""
    alpha = np.asarray(alpha, dtype=float)
    d_wf = np.asarray(gains.d_wf, dtype=float)
    if np.any(d_wf <= 0):
        raise ValueError("direct-link gains must be positive to invert D_wf")
    m = los.a_m.size
    s1 = np.sqrt(gains.d_rf) * (np.conj(los.a_m)[:, None] * los.h_los) * np.sqrt(gains.d_wr)
    v1 = s1 @ (1.0 / (d_wf * np.sqrt(alpha)))
    xi = np.eye(m) / m + (s1 / d_wf) @ ctranspose(s1)
    xi = 0.5 * (xi + ctranspose(xi))
    lam = float(np.linalg.eigvalsh(xi)[-1])
    return LongTermDesignInputs(s1=s1, v1=v1, xi=xi, lambda_max_xi=lam,
                                c0=float(np.sum(1.0 / (alpha * d_wf))))


def _theta(theta):
    return theta.theta if isinstance(theta, RisPhases) else np.asarray(theta, dtype=complex)


def g_objective(theta, inputs: LongTermDesignInputs) -> float:
    th = _theta(theta)
    num = abs(th @ inputs.v1) ** 2
    den = np.real(th @ inputs.xi @ np.conj(th))
    return float(num / den)


def noise_proxy(theta, los: LosTerms, gains: PathGains, alpha) -> float:
    """``1^T D_a^-1/2 V_LoS^-1 D_a^-1/2 1`` by a direct linear solve."""
    c = 1.0 / np.sqrt(np.asarray(alpha, dtype=float))
    v = v_los(los, theta, gains)
    return float(np.real(c @ np.linalg.solve(v, c)))


def mm_update(theta, inputs: LongTermDesignInputs) -> RisPhases:
    """One closed-form MM step; elements with a zero bracket keep their phase."""
    th = _theta(theta)
    phi = np.conj(th)
    v1, xi = inputs.v1, inputs.xi
    c = np.real(np.vdot(phi, xi @ phi))
    proj = np.vdot(v1, phi)                # v1^H phi
    bracket = v1 * proj / c - (abs(proj) ** 2 / c ** 2) * (xi @ phi - inputs.lambda_max_xi * phi)
    mag = np.abs(bracket)
    moved = mag > 0
    step = bracket / np.where(moved, mag, 1.0)
    # second division removes rounding drift in the modulus
    new_phi = np.where(moved, step / np.abs(np.where(moved, step, 1.0)), phi)
    return RisPhases(np.conj(new_phi))


def optimize_phases(inputs: LongTermDesignInputs, init, max_iter=DEFAULT_MAX_ITER,
                    rel_tol=DEFAULT_REL_TOL):
    """Iterate :func:`mm_update` from ``init``.

    Stops once ``|g_new - g_old| <= rel_tol * max(1, g_old)`` or after
    ``max_iter`` updates. Returns the best phases seen and the trace.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    current = init if isinstance(init, RisPhases) else RisPhases(init)
    g_cur = g_objective(current, inputs)
    trace = MmTrace(g_values=[g_cur])
    best, g_best = current, g_cur
    for _ in range(max_iter):
        nxt = mm_update(current, inputs)
        g_next = g_objective(nxt, inputs)
        trace.iterations += 1
        trace.g_values.append(g_next)
        if g_next > g_best:
            best, g_best = nxt, g_next
        done = abs(g_next - g_cur) <= rel_tol * max(1.0, g_cur)
        current, g_cur = nxt, g_next
        if done:
            trace.converged = True
            break
    return best, trace


def design_phases(inputs: LongTermDesignInputs, seed=0, restarts=1,
                  max_iter=DEFAULT_MAX_ITER, rel_tol=DEFAULT_REL_TOL):
    """Run MM from ``restarts`` random initial points and keep the best.

    Initial points come from the ``design_init`` substreams of ``seed``.
    Returns ``(phases, trace_of_best_run)``.
    """
    best = None
    for r in range(max(1, int(restarts))):
        init = RisPhases.random(inputs.n_elements, substream(seed, "design_init", r))
        theta, trace = optimize_phases(inputs, init, max_iter=max_iter, rel_tol=rel_tol)
        g = trace.g_values and max(trace.g_values)
        if best is None or g > best[2]:
            best = (theta, trace, g)
    return best[0], best[1]
