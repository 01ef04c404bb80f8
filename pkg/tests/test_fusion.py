import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import spearmanr

from risfusion.channel import crandn, draw_composite_batch, gram_v, v_bar
from risfusion.fusion import (IllConditionedError, FusionInput, LlrKernel, SensorModel,
                              combiner_weights, decision_vectors, linear_statistic,
                              llr_statistic, mmrc1_statistic, mmrc2_statistic,
                              mrc_statistic, zfc_statistic)
from risfusion.scenario import build_scenario



def brute_force_llr(y, h, sensors, sigma_w2):
    """Direct evaluation of the likelihood ratio over every decision vector."""
    k = h.shape[1]
    num = den = 0.0
    for bits in range(2 ** k):
        x = np.array([1.0 if bits >> i & 1 else -1.0 for i in range(k)])
        like = np.exp(-np.linalg.norm(y - h @ (np.sqrt(sensors.alpha) * x)) ** 2 / sigma_w2)
        num += like * np.prod(np.where(x > 0, sensors.pd, 1 - sensors.pd))
        den += like * np.prod(np.where(x > 0, sensors.pf, 1 - sensors.pf))
    return np.log(num / den)


def random_input(rng, n=6, k=3, sigma_w2=0.5, pd=0.5, pf=0.05, alpha=None):
    h = crandn(rng, (n, k))
    alpha = rng.uniform(0.5, 2, k) if alpha is None else np.full(k, alpha)
    sensors = SensorModel(np.full(k, pd), np.full(k, pf), alpha)
    y = crandn(rng, n)
    return FusionInput(y=y, h_e=h, sigma_w2=sigma_w2, sensors=sensors)


def test_sensor_model_validation():
    with pytest.raises(ValueError):
        SensorModel([0.1], [0.2], [1.0])
    with pytest.raises(ValueError):
        SensorModel([0.5], [0.05], [0.0])
    with pytest.raises(ValueError):
        SensorModel([0.5, 0.5], [0.05], [1.0])


def test_decision_vectors():
    xs = decision_vectors(3)
    assert xs.shape == (8, 3)
    assert len({tuple(r) for r in xs}) == 8
    with pytest.raises(ValueError):
        decision_vectors(21)


def test_llr_indistinguishable_sensors(rng):
    inp = random_input(rng, pd=0.3, pf=0.3)
    assert llr_statistic(inp) == pytest.approx(0.0, abs=1e-12)


def test_llr_flattens_with_large_noise(rng):
    inp = random_input(rng, sigma_w2=1e12)
    assert llr_statistic(inp) == pytest.approx(0.0, abs=1e-9)


def test_llr_scalar_two_term_oracle():
    sensors = SensorModel([0.5], [0.05], [1.0])
    inp = FusionInput(y=np.array([1.0 + 0j]), h_e=np.array([[1.0 + 0j]]), sigma_w2=1.0,
                      sensors=sensors)
    # x = +1 gives |y - 1|^2 = 0, x = -1 gives |y + 1|^2 = 4
    expected = np.log((0.5 * 1 + 0.5 * np.exp(-4)) / (0.05 * 1 + 0.95 * np.exp(-4)))
    assert llr_statistic(inp) == pytest.approx(expected, rel=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5), st.floats(0.2, 5.0))
@settings(max_examples=40, deadline=None)
def test_llr_matches_brute_force(seed, k, sigma_w2):
    rng = np.random.default_rng(seed)
    inp = random_input(rng, n=4, k=k, sigma_w2=sigma_w2, pd=0.7, pf=0.2)
    expected = brute_force_llr(inp.y, inp.h_e, inp.sensors, sigma_w2)
    assert llr_statistic(inp) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_llr_stable_at_high_snr(rng):
    # exponents far beyond the float range of exp()
    inp = random_input(rng, n=64, k=10, sigma_w2=1e-9)
    assert np.isfinite(llr_statistic(inp))


def test_llr_kernel_batch_matches_single(rng):
    inp = random_input(rng, k=4)
    kernel = LlrKernel(inp.sensors, inp.sigma_w2)
    h = crandn(rng, (5, 6, 4))
    y = crandn(rng, (5, 3, 6))
    z = np.einsum("bnk,btn->btk", h.conj(), y)
    batch = kernel(z, np.conj(np.swapaxes(h, -1, -2)) @ h)
    for b in range(5):
        for t in range(3):
            single = llr_statistic(FusionInput(y[b, t], h[b], inp.sigma_w2, inp.sensors))
            assert batch[b, t] == pytest.approx(single, rel=1e-10)


def test_mrc_matched_and_orthogonal(rng):
    inp = random_input(rng)
    a = inp.h_e @ np.sqrt(inp.sensors.alpha)
    matched = FusionInput(a, inp.h_e, inp.sigma_w2, inp.sensors)
    assert mrc_statistic(matched) == pytest.approx(np.linalg.norm(a) ** 2)
    y = crandn(rng, 6)
    y -= a * np.vdot(a, y) / np.vdot(a, a)
    assert mrc_statistic(FusionInput(y, inp.h_e, inp.sigma_w2, inp.sensors)) == \
        pytest.approx(0.0, abs=1e-12)


def test_mmrc1_reduces_to_rescaled_mrc(rng):
    k, n = 2, 4
    inp = random_input(rng, n=n, k=k)
    d_wf = rng.uniform(0.1, 1.0, k)
    alpha = inp.sensors.alpha
    mm = mmrc1_statistic(FusionInput(inp.y, inp.h_e, 1.0, inp.sensors, v=np.diag(d_wf)))
    rescaled = FusionInput(inp.y, inp.h_e / (alpha * d_wf), 1.0, inp.sensors)
    assert mm == pytest.approx(mrc_statistic(rescaled), rel=1e-12)


def test_linear_rules_vanish_at_zero_input(rng):
    inp = random_input(rng)
    v = np.eye(3) * 2.0
    zero = FusionInput(np.zeros(6, complex), inp.h_e, 1.0, inp.sensors, v=v, v_bar=v)
    for stat in (mrc_statistic, mmrc1_statistic, mmrc2_statistic, zfc_statistic):
        assert stat(zero) == 0.0


def test_missing_matrices_rejected(rng):
    inp = random_input(rng)
    with pytest.raises(ValueError):
        mmrc1_statistic(inp)
    with pytest.raises(ValueError):
        mmrc2_statistic(inp)


def test_singular_combiner_matrix_reported(rng):
    inp = random_input(rng)
    bad = FusionInput(inp.y, inp.h_e, 1.0, inp.sensors, v=np.ones((3, 3)))
    with pytest.raises(IllConditionedError, match="condition number"):
        mmrc1_statistic(bad)
    h = inp.h_e.copy()
    h[:, 2] = h[:, 1]
    with pytest.raises(IllConditionedError):
        zfc_statistic(FusionInput(inp.y, h, 1.0, inp.sensors))
    with pytest.raises(IllConditionedError):
        zfc_statistic(FusionInput(inp.y[:2], inp.h_e[:2], 1.0, inp.sensors))


def test_zfc_counts_exactly(rng):
    inp = random_input(rng, n=16, k=10)
    x = np.ones(10)
    y = inp.h_e @ (np.sqrt(inp.sensors.alpha) * x)
    assert zfc_statistic(FusionInput(y, inp.h_e, 1.0, inp.sensors)) == pytest.approx(10.0, abs=1e-9)


def test_zfc_noise_variance(rng):
    inp = random_input(rng, n=12, k=4, sigma_w2=0.3)
    inv_sqrt = 1 / np.sqrt(inp.sensors.alpha)
    gram = inp.h_e.conj().T @ inp.h_e
    expected = 0.3 / 2 * np.real(inv_sqrt @ np.linalg.solve(gram, inv_sqrt))
    u = combiner_weights("ZFC", inp.h_e, inp.sensors.alpha)
    w = crandn(rng, (10_000, 12), 0.3)
    stats = linear_statistic(u, w @ inp.h_e.conj())
    singles = [zfc_statistic(FusionInput(w[i], inp.h_e, 0.3, inp.sensors)) for i in range(20)]
    np.testing.assert_allclose(stats[:20], singles, rtol=1e-10)
    assert np.var(stats) == pytest.approx(expected, rel=0.05)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-10, 10),
       st.sampled_from([mrc_statistic, mmrc1_statistic, mmrc2_statistic, zfc_statistic]))
@settings(max_examples=40, deadline=None)
def test_linear_rules_are_linear(seed, c, stat):
    rng = np.random.default_rng(seed)
    inp = random_input(rng)
    v = np.diag(rng.uniform(1, 2, 3)).astype(complex)
    y1, y2 = crandn(rng, 6), crandn(rng, 6)

    def run(y):
        return stat(FusionInput(y, inp.h_e, 1.0, inp.sensors, v=v, v_bar=2 * v))

    assert run(y1 + y2) == pytest.approx(run(y1) + run(y2), abs=1e-9)
    assert run(c * y1) == pytest.approx(c * run(y1), abs=1e-9)


def test_positive_scaling_keeps_ranking(rng):
    inp = random_input(rng)
    u = combiner_weights("ZFC", inp.h_e, inp.sensors.alpha)
    z = crandn(rng, (500, 6)) @ inp.h_e.conj()
    a = linear_statistic(u, z)
    b = linear_statistic(7.5 * u, z)
    np.testing.assert_array_equal(np.argsort(a), np.argsort(b))


def test_llr_monotone_in_mrc_for_perfect_sensors(rng):
    eps = 1e-12
    k, n = 3, 4
    sensors = SensorModel(np.full(k, 1 - eps), np.full(k, eps), np.ones(k))
    h = crandn(rng, (n, k))
    sigma_w2 = 2.0
    llr, mrc = [], []
    for i in range(400):
        x = np.full(k, 1.0 if i % 2 else -1.0)
        y = h @ x + crandn(rng, n, sigma_w2)
        inp = FusionInput(y, h, sigma_w2, sensors)
        llr.append(llr_statistic(inp))
        mrc.append(mrc_statistic(inp))
    np.testing.assert_array_equal(np.argsort(llr), np.argsort(mrc))
    assert spearmanr(llr, mrc)[0] == pytest.approx(1.0, abs=1e-12)


@pytest.fixture(scope="module")
def large_array():
    sc = build_scenario(seed=1, n_antennas=1024, design_restarts=1, design_max_iter=50)
    theta = sc.theta("random_phases")
    rng = np.random.default_rng(77)
    h_e, h_r = draw_composite_batch(sc.layout, sc.los, sc.params, theta, rng, 50)
    v = gram_v(h_r, theta, sc.params, sc.los.a_m)
    x = np.where(rng.random((50, 10)) < 0.5, 1.0, -1.0)
    return sc, theta, h_e, v, x


def test_mrc_tracks_gram_approximation(large_array):
    sc, _, h_e, v, x = large_array
    a = sc.sensors.alpha
    stats, target = [], []
    for b in range(50):
        y = h_e[b] @ (np.sqrt(a) * x[b])
        stats.append(mrc_statistic(FusionInput(y, h_e[b], sc.params.sigma_w2, sc.sensors)) / 1024)
        target.append(np.real(np.sqrt(a) @ v[b] @ (np.sqrt(a) * x[b])))
    stats, target = np.array(stats), np.array(target)
    assert np.mean(np.abs(stats - target)) <= 0.10 * np.mean(np.abs(target))


def test_mmrc1_is_noisy_counting(large_array):
    sc, _, h_e, v, x = large_array
    a = sc.sensors.alpha
    err, scale = [], []
    for b in range(50):
        y = h_e[b] @ (np.sqrt(a) * x[b])
        s = mmrc1_statistic(FusionInput(y, h_e[b], sc.params.sigma_w2, sc.sensors, v=v[b]))
        err.append(abs(s / 1024 - x[b].sum()))
        scale.append(abs(x[b].sum()))
    assert np.mean(err) <= 0.10 * np.mean(scale)


def test_zfc_and_mmrc1_agree_at_large_n(large_array):
    sc, _, h_e, v, x = large_array
    a = sc.sensors.alpha
    rng = np.random.default_rng(5)
    zfc, mm1 = [], []
    for b in range(50):
        y = h_e[b] @ (np.sqrt(a) * x[b]) + crandn(rng, 1024, sc.params.sigma_w2)
        zfc.append(zfc_statistic(FusionInput(y, h_e[b], sc.params.sigma_w2, sc.sensors)))
        mm1.append(mmrc1_statistic(FusionInput(y, h_e[b], sc.params.sigma_w2, sc.sensors,
                                               v=v[b])) / 1024)
    assert abs(np.mean(zfc) - np.mean(mm1)) < 0.05 * 2 * 10


def test_mmrc2_equals_mmrc1_in_full_los(rng):
    sc = build_scenario(seed=2, n_antennas=32, design_restarts=1, design_max_iter=20,
                        rician_wr_db=400.0, rician_rf_db=400.0)
    assert np.all(sc.params.b_wr == 1.0) and sc.params.b == 1.0
    theta = sc.theta("long_term_design")
    h_e, h_r = draw_composite_batch(sc.layout, sc.los, sc.params, theta, rng, 1)
    v = gram_v(h_r[0], theta, sc.params, sc.los.a_m)
    inp = FusionInput(crandn(rng, 32), h_e[0], sc.params.sigma_w2, sc.sensors, v=v,
                      v_bar=v_bar(sc.los, theta, sc.params))
    assert mmrc2_statistic(inp) == pytest.approx(mmrc1_statistic(inp), rel=1e-9)


def test_mmrc2_differs_from_mmrc1_under_scattering(rng, default_scenario):
    sc = default_scenario
    theta = sc.theta("random_phases")
    h_e, h_r = draw_composite_batch(sc.layout, sc.los, sc.params, theta, rng, 1)
    inp = FusionInput(crandn(rng, 64), h_e[0], sc.params.sigma_w2, sc.sensors,
                      v=gram_v(h_r[0], theta, sc.params, sc.los.a_m),
                      v_bar=sc.v_bar("random_phases"))
    assert abs(mmrc2_statistic(inp) - mmrc1_statistic(inp)) > 1e-6 * abs(mmrc1_statistic(inp))
