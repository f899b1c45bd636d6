import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundclusters.effective import OPTIMAL_T0, bp_scattering_chain, bt_scattering_chain
from boundclusters.scattering import (
    InvalidMomentumError, bp_separation_closed_form, group_velocity, junction_scattering, lead_energy, open_grid, sweep,
)

CHAIN, _ = bp_scattering_chain(1.0, OPTIMAL_T0, 8, 8)


def test_closed_form_on_fine_grid():
    ks = open_grid(1000)
    curve = sweep(CHAIN, ks)
    assert np.max(np.abs(curve.probability - bp_separation_closed_form(ks))) < 1e-10


def test_closed_form_landmarks():
    assert bp_separation_closed_form(math.pi / 2) == 1.0
    assert junction_scattering(CHAIN, math.pi / 2).transmission == pytest.approx(1.0, abs=1e-13)
    ks = np.linspace(0.01, math.pi / 4, 50)
    assert np.all(bp_separation_closed_form(ks) == 0)


def test_closed_form_upper_half():
    ks = open_grid(200, math.pi / 2, math.pi, singular=(3 * math.pi / 4,), include_hi=False)
    got = np.array([junction_scattering(CHAIN, k).transmission for k in ks])
    np.testing.assert_allclose(got, bp_separation_closed_form(ks), atol=1e-10)


@settings(max_examples=60)
@given(st.floats(0.01, math.pi - 0.01), st.floats(0.2, 2.5), st.floats(0.5, 2.0))
def test_flux_unitarity(k, t0, t):
    chain, _ = bp_scattering_chain(t, t0 * t, 8, 8)
    assert junction_scattering(chain, k).unitarity_error() < 1e-10


@settings(max_examples=60)
@given(st.floats(-2.7, 2.7), st.floats(0.2, 2.5))
def test_reciprocity(energy, t0):
    """Transmission at fixed energy is the same from either side."""
    chain, _ = bp_scattering_chain(1.0, t0, 8, 8)
    if abs(energy) >= 2.0 - 1e-6:
        return
    left = junction_scattering(chain, energy=energy)
    right = junction_scattering(chain, energy=energy, incident="right")
    assert left.transmission == pytest.approx(right.transmission, abs=1e-10)
    assert right.unitarity_error() < 1e-10


def test_evanescent_right_lead_reflects_everything():
    res = junction_scattering(CHAIN, 0.5)
    assert res.evanescent
    assert res.reflection == pytest.approx(1.0, abs=1e-12)
    assert res.transmission == 0.0


@pytest.mark.parametrize("k", [0.0, math.pi, -0.2, 4.0])
def test_invalid_momentum(k):
    with pytest.raises(InvalidMomentumError):
        junction_scattering(CHAIN, k)


def test_energy_outside_incident_band():
    with pytest.raises(InvalidMomentumError):
        junction_scattering(CHAIN, energy=3.5)
    with pytest.raises(ValueError):
        junction_scattering(CHAIN, 1.0, energy=0.0)


def test_bt_junction_transmits_fully_at_band_centre():
    chain, _ = bt_scattering_chain(1.0, 12, 8)
    res = junction_scattering(chain, energy=0.0)
    assert res.transmission == pytest.approx(1.0, abs=1e-10)
    assert res.unitarity_error() < 1e-10


@settings(max_examples=40)
@given(st.floats(-2.7, 2.7))
def test_bt_junction_unitarity(energy):
    chain, _ = bt_scattering_chain(1.0, 12, 8)
    try:
        res = junction_scattering(chain, energy=energy)
    except InvalidMomentumError:
        return
    assert res.unitarity_error() < 1e-10


def test_lead_energy_and_velocity():
    assert lead_energy(CHAIN, math.pi / 3) == pytest.approx(-2 * math.sqrt(2) * 0.5)
    assert lead_energy(CHAIN, math.pi / 3, side="right") == pytest.approx(-1.0)
    assert group_velocity(math.pi / 2) == pytest.approx(2 * math.sqrt(2))
    curve = sweep(CHAIN, [math.pi / 2])
    assert curve.group_velocity[0] == pytest.approx(2 * math.sqrt(2))


def test_open_grid():
    ks = open_grid(1000)
    assert len(ks) == 1000 and ks[-1] == math.pi / 2 and ks[0] > 0
    assert np.min(np.abs(ks - math.pi / 4)) >= 1e-6 - 1e-15


def test_closed_form_value_at_pi_over_3():
    assert bp_separation_closed_form(math.pi / 3) == pytest.approx(0.9730, abs=1e-4)


def test_uniform_chain_is_transparent():
    from boundclusters.effective import EffectiveChainSpec, LeadInfo

    labels = np.arange(-6, 6)
    bonds = tuple((int(a), int(a) + 1, 1.0) for a in labels[:-1])
    chain = EffectiveChainSpec("open chain", labels, np.zeros(12), bonds, LeadInfo(-1), LeadInfo(1))
    for k in (0.3, 1.2, 2.5):
        res = junction_scattering(chain, k)
        assert abs(res.r) < 1e-12 and abs(abs(res.t_amp) - 1) < 1e-12


def test_group_velocity_is_odd():
    assert group_velocity(-0.7) == -group_velocity(0.7)
    assert group_velocity(0.0) == 0.0
