import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundclusters.bands import (
    NN, ONSITE, RESONANT, SCATTERING, bound_energies, momentum_block, momentum_grid, narrowband_widths, rbp_asymptotics,
    rbp_band, solve_block, trimer_band, trimer_bloch_matrix, trimer_cubic, trimer_gaps, unfold_trimer_momentum,
)
from boundclusters.lattice import GeometryError, LatticeSpec

from oracles import ring_two_boson_spectrum


@pytest.mark.parametrize("u,v", [(40.0, 40.0), (5.0, 0.0), (0.0, 3.0), (-2.0, 1.0)])
def test_blocks_reproduce_full_ring_spectrum(u, v):
    n = 11
    lat = LatticeSpec(n, "periodic", 1.0, u, v)
    blocks = np.sort(np.concatenate([
        [s.energy for s in solve_block(momentum_block(k, lat))] for k in momentum_grid(n)
    ]))
    np.testing.assert_allclose(blocks, ring_two_boson_spectrum(n, 1.0, u, v), atol=1e-9)


def test_even_ring_rejected():
    with pytest.raises(GeometryError):
        momentum_block(0.0, LatticeSpec(10, "periodic"))
    with pytest.raises(ValueError):
        momentum_block(0.1234, LatticeSpec(11, "periodic"))


def test_resonant_band_count_and_shape():
    lat = LatticeSpec(41, "periodic", 1.0, 40.0, 40.0)
    ks, es = bound_energies(lat, RESONANT)
    assert len(es) == 2 * 41
    lo, hi = rbp_band(ks, 40.0)
    dev = np.minimum(np.abs(es - lo), np.abs(es - hi))
    assert dev.max() <= 5 / 40


def test_classification_types():
    onsite = LatticeSpec(21, "periodic", 1.0, 30.0, 0.0)
    nn = LatticeSpec(21, "periodic", 1.0, 0.0, 30.0)
    kinds_on = {s.classification for s in solve_block(momentum_block(0.0 + 2 * np.pi, onsite))}
    kinds_nn = {s.classification for s in solve_block(momentum_block(2 * np.pi, nn))}
    assert ONSITE in kinds_on and SCATTERING in kinds_on
    assert NN in kinds_nn


@pytest.mark.parametrize("k", [0.3, 1.0, 2.0, 2.8])
@pytest.mark.parametrize("branch", [1, -1])
def test_asymptotic_ansatz_matches_block(k, branch):
    u = 40.0
    lat = LatticeSpec(201, "periodic", 1.0, u, u)
    n = round(k * 201 / (2 * np.pi))
    kk = 2 * np.pi * n / 201
    sols = [s for s in solve_block(momentum_block(kk, lat)) if s.classification == RESONANT]
    ans = rbp_asymptotics(kk, u, branch=branch, n_rel=100)
    best = min(sols, key=lambda s: abs(s.energy - ans.energy))
    assert abs(best.energy - ans.energy) < 5 / u**2 + 1e-3
    overlap = abs(np.dot(best.amplitudes, ans.amplitudes))
    assert overlap > 1 - 1e-3


def test_narrowband_scaling():
    ratio = narrowband_widths(80.0, kind=ONSITE) / narrowband_widths(40.0, kind=ONSITE)
    assert ratio == pytest.approx(0.5, rel=0.1)
    ratio_nn = narrowband_widths(80.0, kind=NN) / narrowband_widths(40.0, kind=NN)
    assert ratio_nn == pytest.approx(0.5, rel=0.1)


def test_trimer_roots_at_zero():
    roots = trimer_band(0.0).roots
    np.testing.assert_allclose(roots, sorted([2.0, -1 + math.sqrt(5), -1 - math.sqrt(5)]), atol=1e-10)


@given(st.floats(-math.pi, math.pi), st.floats(0.2, 3.0))
def test_trimer_bloch_roots_solve_cubic(k, t):
    sol = trimer_band(k, t)
    assert np.max(np.abs(trimer_cubic(sol.roots, k, t))) < 1e-9 * t**3
    m = trimer_bloch_matrix(k, t)
    np.testing.assert_allclose(m @ sol.vectors, sol.vectors * sol.roots, atol=1e-12)


def test_trimer_gaps_location():
    gaps = trimer_gaps()
    assert [g.q for g in gaps] == pytest.approx([math.pi / 3, 2 * math.pi / 3], abs=1e-2)
    assert all(g.width > 0.5 for g in gaps)


def test_unfolding_covers_extended_zone():
    assert unfold_trimer_momentum(0.3, 0) == pytest.approx(0.1)
    assert abs(unfold_trimer_momentum(0.3, 1)) == pytest.approx((2 * math.pi - 0.3) / 3)
    assert abs(unfold_trimer_momentum(0.3, 2)) == pytest.approx((2 * math.pi + 0.3) / 3)


@pytest.mark.parametrize("k", [0.4, 1.5, 2.6])
def test_asymptotic_overlap_bound(k):
    u = 40.0
    lat = LatticeSpec(401, "periodic", 1.0, u, u)
    n = round(k * 401 / (2 * np.pi))
    kk = 2 * np.pi * n / 401
    exact = [s for s in solve_block(momentum_block(kk, lat)) if s.classification == RESONANT]
    for branch in (1, -1):
        ans = rbp_asymptotics(kk, u, branch=branch, n_rel=200)
        best = max(exact, key=lambda s: abs(np.dot(s.amplitudes, ans.amplitudes)))
        assert np.dot(best.amplitudes, ans.amplitudes) ** 2 >= 1 - (1 / u) ** 2


def test_asymptotic_decay_grows_with_u():
    xis = [rbp_asymptotics(1.0, u).xi for u in (10.0, 20.0, 40.0)]
    assert xis[0] < xis[1] < xis[2]


def test_asymptotic_at_zone_boundary():
    sol = rbp_asymptotics(math.pi, 40.0)
    assert sol.energy == 40.0 and sol.amplitudes[0] == 0.0


def test_asymptotic_warns_for_small_u():
    with pytest.warns(UserWarning):
        rbp_asymptotics(0.3, 8.0)


def test_block_examples():
    lat = LatticeSpec(5, "periodic", 1.0, 7.0, 3.0)
    block = momentum_block(2 * np.pi, lat)
    # -2 sqrt2 t cos(k/2) with cos(pi) = -1
    assert block.hoppings[0] == pytest.approx(2 * math.sqrt(2)) and block.hoppings[1] == pytest.approx(2.0)
    assert block.onsite[:2].tolist() == [7.0, 3.0]
    odd = momentum_block(2 * np.pi * 3 / 5, lat)
    assert odd.onsite[2] == pytest.approx(-(-2 * math.cos(np.pi * 3 / 5)))
