import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmwave3gpp.antenna import (
    ELEMENT_3GPP,
    ISOTROPIC,
    AntennaPanel,
    array_response,
    bs_panel,
    codebook,
    element_location,
    radiation_pattern,
    sector_azimuth,
    sector_vector,
    steering_vector,
    ut_panel,
)
from mmwave3gpp.scenario import SPEED_OF_LIGHT

LAMBDA_28 = SPEED_OF_LIGHT / 28e9

azimuth = st.floats(-np.pi, np.pi, allow_nan=False)
zenith = st.floats(0.0, np.pi, allow_nan=False)
panels = st.builds(AntennaPanel, rows=st.integers(1, 6), cols=st.integers(1, 6),
                   d_h=st.sampled_from([0.25, 0.5, 1.0]), d_v=st.sampled_from([0.25, 0.5, 1.0]),
                   bearing=st.floats(-np.pi, np.pi))


def test_first_element_at_origin():
    assert np.array_equal(element_location(0, bs_panel(), LAMBDA_28), np.zeros(3))


@pytest.mark.parametrize("rows,cols", [(8, 8), (4, 4), (2, 5)])
def test_row_boundary(rows, cols):
    p = AntennaPanel(rows=rows, cols=cols, d_v=0.7)
    assert np.allclose(element_location(cols, p, 1.0), [0.0, 0.0, 0.7])


def test_element_nine_on_8x8_at_28ghz():
    loc = element_location(9, bs_panel(), LAMBDA_28)
    assert np.allclose(loc, [0.0, 0.00535, 0.00535], atol=1e-5)
    assert loc[1] == pytest.approx(0.5 * LAMBDA_28)


@pytest.mark.parametrize("i", [-1, 64, 100])
def test_element_index_out_of_range(i):
    with pytest.raises(IndexError):
        element_location(i, bs_panel(), 1.0)


@given(panels)
def test_element_locations_distinct(p):
    locs = {tuple(np.round(element_location(i, p, 1.0), 12)) for i in range(p.size)}
    assert len(locs) == p.size


def test_isotropic_is_unity():
    th = np.linspace(0, np.pi, 7)
    ph = np.linspace(-np.pi, np.pi, 7)
    assert np.all(radiation_pattern(th, ph, ISOTROPIC) == 1.0)


@given(zenith, azimuth)
def test_element_pattern_peak_and_symmetry(th, ph):
    g = radiation_pattern(th, ph, ELEMENT_3GPP)
    assert g <= radiation_pattern(np.pi / 2, 0.0, ELEMENT_3GPP) + 1e-15
    assert g == pytest.approx(radiation_pattern(th, -ph, ELEMENT_3GPP), rel=1e-12)
    assert g >= 10 ** (-30 / 20) - 1e-15


def test_element_pattern_3db_point():
    # 12 dB at one half-power beamwidth off boresight (power), i.e. field -12 dB / 20
    g = radiation_pattern(np.pi / 2, np.deg2rad(65.0), ELEMENT_3GPP)
    assert 20 * np.log10(g) == pytest.approx(-12.0)


def test_unknown_pattern_mode():
    with pytest.raises(ValueError):
        AntennaPanel(pattern="dipole")


def test_single_element_steering():
    p = AntennaPanel(rows=1, cols=1)
    assert np.allclose(steering_vector(0.7, 1.1, p), [1.0])


@given(panels, azimuth, zenith)
def test_steering_unit_norm_and_max_gain(p, az, zen):
    w = steering_vector(az, zen, p)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    a = array_response(p, az, zen)
    # the matched beam attains the array gain R*C
    assert abs(np.vdot(w, a)) ** 2 == pytest.approx(p.size, rel=1e-9)


@given(st.integers(1, 8), azimuth)
def test_conjugate_symmetry_horizontal_array(cols, az):
    # a single row along local y, with the panel facing +x
    p = AntennaPanel(rows=1, cols=cols)
    y = p.positions()[:, 1]
    direct = np.exp(2j * np.pi * np.sin(az) * y) / np.sqrt(cols)
    assert np.allclose(steering_vector(az, np.pi / 2, p), direct)
    assert np.allclose(steering_vector(az, np.pi / 2, p), np.conj(steering_vector(-az, np.pi / 2, p)))


def test_broadside_sector_is_uniform():
    # an odd column count puts the middle sector on boresight
    p = AntennaPanel(rows=2, cols=3)
    w = sector_vector(2, p)
    assert sector_azimuth(2, p) == pytest.approx(0.0)
    assert np.allclose(w, np.full(6, 1 / np.sqrt(6)))


def test_sector_layout():
    p = bs_panel(bearing=0.0)
    az = np.array([sector_azimuth(xi, p) for xi in range(1, 9)])
    assert az[0] == pytest.approx(np.pi / 2 - np.pi / 16)
    assert np.allclose(-np.diff(az), np.pi / 8)
    assert p.n_sectors == 8 and ut_panel().n_sectors == 4


@pytest.mark.parametrize("xi", [0, 9])
def test_sector_out_of_range(xi):
    with pytest.raises(IndexError):
        sector_vector(xi, bs_panel())


@given(panels)
def test_codebook_rows_unit_norm(p):
    assert np.allclose(np.linalg.norm(codebook(p), axis=1), 1.0)


def test_edge_of_adjacent_sectors_ties():
    p = ut_panel()
    edge = 0.5 * (sector_azimuth(2, p) + sector_azimuth(3, p))
    a = array_response(p, edge, np.pi / 2)
    g2 = abs(np.vdot(sector_vector(2, p), a)) ** 2
    g3 = abs(np.vdot(sector_vector(3, p), a)) ** 2
    assert g2 == pytest.approx(g3, rel=1e-9)


def test_aligned_combined_gain_about_30db():
    bs, ut = bs_panel(), ut_panel()
    g = (abs(np.vdot(steering_vector(0.3, 1.4, bs), array_response(bs, 0.3, 1.4))) ** 2
         * abs(np.vdot(steering_vector(2.0, 1.7, ut), array_response(ut, 2.0, 1.7))) ** 2)
    assert 10 * np.log10(g) == pytest.approx(30.1029995664, abs=1e-9)


def test_ut_edge_loss_matches_oracle():
    p = ut_panel()
    edge = 0.5 * (sector_azimuth(2, p) + sector_azimuth(3, p))
    a = array_response(p, edge, np.pi / 2)
    best = max(abs(np.vdot(w, a)) ** 2 for w in codebook(p))
    assert 10 * np.log10(best / p.size) == pytest.approx(-10.5413962612, abs=1e-6)
