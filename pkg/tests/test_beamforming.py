import dataclasses

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmwave3gpp.antenna import AntennaPanel, bs_panel, sector_azimuth, ut_panel
from mmwave3gpp.beamforming import (
    cell_scan,
    collapse_channel,
    dominant_eigenvector,
    gain,
    gain_direct,
    long_term,
    power_method,
    psd_apply,
    spatial_correlation,
    with_beams,
)
from mmwave3gpp.propagation import LinkContext, LosCondition, LosState
from mmwave3gpp.scenario import SPEED_OF_LIGHT, Scenario
from mmwave3gpp.small_scale import AngleSet, channel_coefficients, generate_channel, trivial_expansion

seeds = st.integers(0, 2**32 - 1)


def _cn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _realization(seed=1, los=False, tx=None, rx=None):
    link = LinkContext(Scenario.UMi, 28e9, (0, 0, 10), (50, 20, 1.5),
                       LosCondition(LosState.LOS if los else LosState.NLOS, "deterministic"))
    return generate_channel(link, tx or AntennaPanel(2, 4), rx or AntennaPanel(2, 2), np.random.default_rng(seed))


def _toy(channel, delays, aoa=None, zoa=None):
    """A realization whose tensor, delays and Doppler anchors are set by hand."""
    base = _realization()
    n = len(delays)
    centres = np.zeros((4, n))
    centres[0] = 0.0 if aoa is None else aoa
    centres[1] = np.pi / 2 if zoa is None else zoa
    return dataclasses.replace(
        base, delays=np.asarray(delays, dtype=float), powers=np.full(n, 1.0 / n),
        angles=AngleSet(centres, np.zeros((4, n, 1))), expansion=trivial_expansion(n, 1),
        channel=np.asarray(channel, dtype=complex), blockage_db=np.zeros(n), generated_at=0.0,
        meta={**base.meta, "wavelength": 0.01})


# collapse


def test_collapse_examples(rng):
    h = _cn(rng, 3, 4, 1)
    assert np.array_equal(collapse_channel(h), h[:, :, 0])
    assert not np.any(collapse_channel(np.stack([h[:, :, 0], -h[:, :, 0]], axis=2)))
    t = _cn(rng, 2, 2, 3)
    ref = np.array([[t[i, j, 0] + t[i, j, 1] + t[i, j, 2] for j in range(2)] for i in range(2)])
    assert np.allclose(collapse_channel(t), ref)


@given(seeds)
def test_spatial_correlation_hermitian_psd(seed):
    h = _cn(np.random.default_rng(seed), 4, 6)
    q = spatial_correlation(h)
    for m in (q.q_tx, q.q_rx):
        assert np.allclose(m, m.conj().T)
        assert np.linalg.eigvalsh(m).min() >= -1e-9
    assert q.q_tx.shape == (6, 6) and q.q_rx.shape == (4, 4)


# power method


def _parallel(a, b):
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) < 1e-9


def test_rank_one(rng):
    a, b = _cn(rng, 5), _cn(rng, 7)
    h = np.outer(a, b.conj())
    w_tx, w_rx = power_method(h)
    assert _parallel(w_rx, a) and _parallel(w_tx, b)
    # one multiplication reaches the eigenvector; the next confirms convergence
    _, iters = dominant_eigenvector(h.conj().T @ h)
    assert iters <= 2


def test_diagonal():
    h = np.diag([1.0, 3.0, 2.0])
    w_tx, w_rx = power_method(h)
    assert np.allclose(np.abs(w_tx), [0, 1, 0], atol=1e-6)
    assert np.allclose(np.abs(w_rx), [0, 1, 0], atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_power_method_against_dense_solver(seed):
    h = _cn(np.random.default_rng(seed), 16, 64)
    w_tx, w_rx = power_method(h)
    ev = np.linalg.eigvalsh(h.conj().T @ h)[-1]
    assert abs(np.vdot(w_rx, h @ w_tx)) ** 2 == pytest.approx(ev, rel=1e-6)
    assert np.linalg.norm(w_tx) == pytest.approx(1.0) and np.linalg.norm(w_rx) == pytest.approx(1.0)


def test_zero_matrix_rejected():
    with pytest.raises(ValueError):
        power_method(np.zeros((2, 3)))


@given(seeds, st.floats(1e-3, 1e3))
def test_power_method_scale_invariant(seed, c):
    h = _cn(np.random.default_rng(seed), 3, 5)
    a_tx, a_rx = power_method(h)
    b_tx, b_rx = power_method(c * h)
    assert abs(np.vdot(a_tx, b_tx)) == pytest.approx(1.0, abs=1e-6)
    assert abs(np.vdot(a_rx, b_rx)) == pytest.approx(1.0, abs=1e-6)


# cell scan


def _los_tensor(tx, rx, aod, aoa):
    rays = np.array([aoa, np.pi / 2, aod, np.pi / 2]).reshape(4, 1, 1)
    return channel_coefficients(rx, tx, np.array([1.0]), rays, np.zeros((1, 1)))


def test_scan_aligned_30db():
    tx, rx = bs_panel(), ut_panel()
    h = collapse_channel(_los_tensor(tx, rx, sector_azimuth(3, tx), sector_azimuth(2, rx)))
    res = cell_scan(h, tx, rx)
    assert (res.xi_tx, res.xi_rx) == (3, 2)
    assert 10 * np.log10(res.gains.max()) == pytest.approx(10 * np.log10(64 * 16), abs=1e-9)


def test_scan_edge_ties_to_lower_sector():
    tx, rx = bs_panel(), ut_panel()
    edge = 0.5 * (sector_azimuth(2, rx) + sector_azimuth(3, rx))
    h = collapse_channel(_los_tensor(tx, rx, sector_azimuth(5, tx), edge))
    res = cell_scan(h, tx, rx)
    g = res.gains
    assert g[4, 1] == pytest.approx(g[4, 2], rel=1e-9)
    assert (res.xi_tx, res.xi_rx) == (5, 2)
    edge_db = 10 * np.log10(g.max())
    assert edge_db == pytest.approx(30.1029995664 - 10.5413962612, abs=1e-6)


def test_single_sector_codebooks(rng):
    tx, rx = AntennaPanel(2, 1), AntennaPanel(3, 1)
    res = cell_scan(_cn(rng, 3, 2), tx, rx)
    assert (res.xi_tx, res.xi_rx) == (1, 1)


@given(seeds)
def test_power_method_beats_scan(seed):
    r = _realization(seed % 1000, los=bool(seed % 2), tx=AntennaPanel(4, 4), rx=AntennaPanel(2, 2))
    h = collapse_channel(r.channel)
    w_tx, w_rx = power_method(h)
    scan = cell_scan(r, r.tx_panel, r.rx_panel)
    assert abs(np.vdot(w_rx, h @ w_tx)) ** 2 >= scan.gains.max() * (1 - 1e-9)
    again = cell_scan(3.7 * h, r.tx_panel, r.rx_panel)
    assert (again.xi_tx, again.xi_rx) == (scan.xi_tx, scan.xi_rx)


# long-term terms


def test_long_term_single_cluster_singular_value(rng):
    h = _cn(rng, 4, 6, 1)
    w_tx, w_rx = power_method(h[:, :, 0])
    assert abs(long_term(h, w_tx, w_rx)[0]) == pytest.approx(np.linalg.svd(h[:, :, 0], compute_uv=False)[0])


def test_long_term_orthogonal_and_linear(rng):
    a, b = _cn(rng, 3), _cn(rng, 4)
    h = np.outer(a, b)[:, :, None]
    w_rx = np.array([a[1], -a[0], 0]).conj()
    w_rx = w_rx / np.linalg.norm(w_rx)
    assert abs(long_term(h, b.conj(), w_rx)[0]) < 1e-12
    h2, w_tx, w2 = _cn(rng, 3, 4, 5), _cn(rng, 4), _cn(rng, 3)
    c = 0.3 - 1.2j
    assert np.allclose(long_term(c * h2, w_tx, w2), c * long_term(h2, w_tx, w2))
    with pytest.raises(ValueError):
        long_term(h2, _cn(rng, 3), w2)


# gain


def test_gain_at_rest_is_sum():
    r = _realization(3)
    w_tx, w_rx = power_method(collapse_channel(r.channel))
    r = with_beams(r, w_tx, w_rx)
    assert gain(r, 0.0, 0.0) == pytest.approx(r.long_term.sum(), rel=1e-14)
    assert gain(r, 5.0, 0.0) == pytest.approx(r.long_term.sum(), rel=1e-14)


def test_gain_requires_beams():
    with pytest.raises(ValueError):
        gain(_realization(), 0.0, 0.0)


@given(st.floats(0, 10), st.floats(-5e7, 5e7))
def test_single_cluster_unimodular(t, f):
    r = _toy(np.full((1, 1, 1), 0.6 - 0.8j), [3e-8])
    r = with_beams(r, np.ones(1), np.ones(1))
    assert abs(gain(r, t, f, v=(3.0, -1.0, 0.0))) == pytest.approx(1.0, rel=1e-12)


def test_two_path_period_10mhz():
    r = with_beams(_toy(np.ones((1, 1, 2)), [0.0, 100e-9]), np.ones(1), np.ones(1))
    f = np.linspace(-3e7, 3e7, 301)
    g = np.abs(gain(r, 0.0, f)) ** 2
    assert np.allclose(g, np.abs(gain(r, 0.0, f + 10e6)) ** 2, atol=1e-12)
    assert np.allclose(g, 2 + 2 * np.cos(2 * np.pi * f * 100e-9), atol=1e-12)


def test_doppler_period():
    r = with_beams(_toy(np.ones((1, 1, 2)), [0.0, 0.0], aoa=[0.0, np.pi]), np.ones(1), np.ones(1))
    lam = r.meta["wavelength"]
    v = np.array([2.0, 0.0, 0.0])
    # the two anchors see opposite Doppler, so |G| oscillates with period lambda / (2 v)
    t = np.linspace(0, 0.01, 50)
    g = np.array([abs(gain(r, x, 0.0, v)) for x in t])
    g2 = np.array([abs(gain(r, x + lam / 2.0, 0.0, v)) for x in t])
    g3 = np.array([abs(gain(r, x + lam / 4.0, 0.0, v)) for x in t])
    assert np.allclose(g, g2, atol=1e-9)
    assert np.allclose(g, g3, atol=1e-9)


def test_single_cluster_doppler_phase_period():
    r = with_beams(_toy(np.ones((1, 1, 1)), [0.0], aoa=[0.4]), np.ones(1), np.ones(1))
    v = np.array([3.0, 1.0, 0.0])
    rv = np.cos(0.4) * 3.0 + np.sin(0.4) * 1.0
    period = r.meta["wavelength"] / rv
    assert gain(r, 0.2 + period, 0.0, v) == pytest.approx(gain(r, 0.2, 0.0, v), abs=1e-9)


@given(seeds, st.floats(0, 2), st.floats(-1e8, 1e8))
def test_factorised_equals_direct_sum(seed, t, f):
    r = _realization(seed % 500, los=bool(seed % 2))
    rng = np.random.default_rng(seed)
    w_tx = _cn(rng, r.tx_panel.size)
    w_rx = _cn(rng, r.rx_panel.size)
    r = with_beams(r, w_tx / np.linalg.norm(w_tx), w_rx / np.linalg.norm(w_rx))
    v = (1.0, -2.0, 0.0)
    a, b = gain(r, t, f, v), gain_direct(r, t, f, v)
    assert abs(a - b) <= 1e-12 * max(abs(b), 1e-30) + 1e-15
    assert abs(a) ** 2 <= np.sum(np.abs(r.long_term)) ** 2 * (1 + 1e-12)


def test_psd_apply():
    r = with_beams(_toy(np.full((1, 1, 1), 0.5), [0.0]), np.ones(1), np.ones(1))
    f = np.linspace(-5e6, 5e6, 11)
    assert not np.any(psd_apply(np.zeros(11), r, 100.0, 0.0, f))
    flat = psd_apply(np.ones(11), r, 100.0, 0.0, f)
    assert np.allclose(flat, 0.25 * 1e-10, rtol=1e-12)
    r2 = with_beams(_toy(np.ones((1, 1, 3)) * [[[1, 0.5j, -0.3]]], [0, 2e-8, 7e-8]), np.ones(1), np.ones(1))
    a = psd_apply(np.full(11, 2.0), r2, 80.0, 0.0, f)
    b = psd_apply(np.full(11, 2.0), r2, 83.0, 0.0, f)
    assert np.allclose(b / a, 10 ** -0.3, rtol=1e-12)
    with pytest.raises(ValueError):
        psd_apply(np.ones(3), r, 0.0, 0.0, f)
