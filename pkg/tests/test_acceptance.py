"""Acceptance criteria 1-10, each reported as one PASS/FAIL line in the terminal summary."""
import math
import time

import numpy as np
import pytest

from boundclusters.bands import (
    ONSITE, RESONANT, bound_energies, momentum_block, momentum_grid, narrowband_widths, rbp_band, solve_block,
    trimer_band, trimer_bloch_matrix, trimer_cubic, trimer_gaps,
)
from boundclusters.dynamics import (
    centroid_speed, run_bp_separation, run_bt_separation, run_fermi_arbitrary, run_fermi_singlet,
)
from boundclusters.effective import OPTIMAL_T0, bp_scattering_chain, bt_scattering_chain
from boundclusters.fock import FERMION, build_basis
from boundclusters.lattice import LatticeSpec
from boundclusters.scattering import bp_separation_closed_form, junction_scattering, open_grid, sweep

from conftest import ACCEPTANCE_LINES
from oracles import ring_two_boson_spectrum

PI = math.pi
LN2 = math.log(2)


def record(n: int, checks: dict[str, bool], detail: str):
    ok = all(checks.values())
    failed = [name for name, good in checks.items() if not good]
    ACCEPTANCE_LINES[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}" + (
        f"  [failed: {', '.join(failed)}]" if failed else "")
    print(ACCEPTANCE_LINES[n])
    assert ok, ACCEPTANCE_LINES[n]


def test_criterion_01_closed_form_transmission():
    start = time.perf_counter()
    chain, _ = bp_scattering_chain(1.0, OPTIMAL_T0, 8, 8)
    ks = open_grid(1000)
    curve = sweep(chain, ks)
    dev = float(np.max(np.abs(curve.probability - bp_separation_closed_form(ks))))
    p_half = junction_scattering(chain, PI / 2).transmission
    low = ks[ks <= PI / 4]
    p_low = float(np.max(sweep(chain, low).probability))
    elapsed = time.perf_counter() - start
    record(1, {
        "deviation < 1e-10": dev < 1e-10,
        "closed form P(pi/2) == 1": bp_separation_closed_form(PI / 2) == 1.0,
        "solver P(pi/2) == 1": abs(p_half - 1) < 1e-12,
        "P == 0 on (0, pi/4]": p_low < 1e-12,
        "runtime < 1 s": elapsed < 1.0,
    }, f"max|P - closed| = {dev:.2e}, P(pi/2) = {p_half:.15f}, max P on (0,pi/4] = {p_low:.1e}, {elapsed:.2f} s")


def test_criterion_02_bp_separation_effective():
    out = run_bp_separation(k0=PI / 2, alpha=0.01)
    record(2, {"P in [0.995, 1]": 0.995 <= out.p_separated <= 1.0},
           f"effective chain alpha=0.01: P_separated = {out.p_separated:.6f}")


@pytest.mark.slow
def test_criterion_03_bp_separation_full():
    out = run_bp_separation(k0=PI / 2, alpha=0.05, model="full", n_sites=400)
    eff = out.details["effective_p_separated"]
    record(3, {
        "P_full >= 0.95": out.p_separated >= 0.95,
        "|P_full - P_eff| <= 0.02": abs(out.p_separated - eff) <= 0.02,
        "norm drift <= 1e-9": out.norm_drift <= 1e-9,
    }, f"N=400 alpha=0.05: P_full = {out.p_separated:.5f}, P_eff = {eff:.5f}")


@pytest.mark.slow
def test_criterion_04_bt_separation():
    eff = run_bt_separation(k0=PI / 2, alpha=0.01)
    full = run_bt_separation(k0=PI / 2, alpha=0.05, model="full", n_sites=120, clearance=3.0)
    ref = full.details["effective_p_separated"]
    record(4, {
        "effective 0.97 +/- 0.01": abs(eff.p_separated - 0.97) <= 0.01,
        "full within 0.03 of effective": abs(full.p_separated - ref) <= 0.03,
    }, f"effective alpha=0.01: {eff.p_separated:.4f}; N=120 alpha=0.05: full {full.p_separated:.4f} "
       f"vs effective {ref:.4f} (residual outside the effective subspace {full.details['residual_norm']:.3f})")


def test_criterion_05_resonant_band():
    u = 40.0
    lat = LatticeSpec(41, "periodic", 1.0, u, u)
    ks, es = bound_energies(lat, RESONANT)
    lo, hi = rbp_band(ks, u)
    dev = float(np.max(np.minimum(np.abs(es - lo), np.abs(es - hi))))
    width = float(es.max() - es.min())
    tol = 5 / u
    covered = set(np.round(ks, 12)) == set(np.round(momentum_grid(41), 12))
    record(5, {
        "every k has resonant states": covered,
        "max deviation <= 5t^2/U": dev <= tol,
        "bandwidth 4 sqrt2 +/- 5t^2/U": abs(width - 4 * math.sqrt(2)) <= tol,
    }, f"N=41 U=V=40: max deviation {dev:.4f} (tol {tol}), bandwidth {width:.5f} vs {4 * math.sqrt(2):.5f}")


def test_criterion_06_narrow_band_scaling():
    w40 = narrowband_widths(40.0, kind=ONSITE)
    w80 = narrowband_widths(80.0, kind=ONSITE)
    ratio = w80 / w40
    record(6, {"W(80)/W(40) = 0.5 within 10%": abs(ratio - 0.5) <= 0.05},
           f"on-site BP widths {w40:.5f} (U=40), {w80:.5f} (U=80), ratio {ratio:.4f}")


def test_criterion_07_trimer_spectrum():
    roots = trimer_band(0.0).roots
    want = np.sort([2.0, -1 + math.sqrt(5), -1 - math.sqrt(5)])
    root_err = float(np.max(np.abs(roots - want)))
    grid_err = 0.0
    for k in np.linspace(-PI, PI, 200):
        ev = np.linalg.eigvalsh(trimer_bloch_matrix(k))
        cubic = np.sort(np.roots([1, 0, -8, 8 * math.cos(k)]).real)
        grid_err = max(grid_err, float(np.max(np.abs(ev - cubic))), float(np.max(np.abs(trimer_cubic(ev, k)))))
    gaps = trimer_gaps()
    qs = [g.q for g in gaps]
    record(7, {
        "roots at k=0 to 1e-10": root_err < 1e-10,
        "Bloch vs cubic on 200 points to 1e-10": grid_err < 1e-10,
        "gaps at pi/3 and 2pi/3": np.allclose(qs, [PI / 3, 2 * PI / 3], atol=1e-2) and min(g.width for g in gaps) > 0,
    }, f"root error {root_err:.1e}, grid error {grid_err:.1e}, gaps at q = {qs[0]:.4f}, {qs[1]:.4f} "
       f"(widths {gaps[0].width:.4f}, {gaps[1].width:.4f})")


@pytest.mark.slow
def test_criterion_08_fermion_entanglement():
    singlet = run_fermi_singlet(k0=PI / 2, alpha=0.05)
    ent = singlet.entanglement
    parallel = run_fermi_arbitrary(1.0, 0.0, k0=PI / 2, alpha=0.05)
    # two up spins cannot share a site, so double occupancy vanishes at every time, not only the last
    up_up = build_basis(LatticeSpec(10), (2, 0), FERMION).configs
    structural = not np.any(up_up[:, 0] == up_up[:, 1])
    record(8, {
        "entropy ln2 +/- 0.05": abs(ent.entropy - LN2) <= 0.05,
        "concurrence >= 0.95": ent.concurrence >= 0.95,
        "parallel double occupancy <= 1e-6": parallel.double_occupancy <= 1e-6 and structural,
    }, f"entropy {ent.entropy:.6f} (ln2 {LN2:.6f}), concurrence {ent.concurrence:.6f}, "
       f"parallel double occupancy {parallel.double_occupancy:.1e}, parallel reflected {parallel.parallel:.4f}")


def test_criterion_09_property_suites():
    runs = [
        run_bp_separation(alpha=0.05),
        run_bp_separation(alpha=0.2, model="full"),
        run_bt_separation(alpha=0.05),
        run_fermi_singlet(alpha=0.2),
    ]
    parallel = run_fermi_arbitrary(1.0, 0.0, alpha=0.2)
    norm = max([r.norm_drift for r in runs] + [parallel.norm_drift])
    energy = max([r.energy_drift for r in runs] + [parallel.energy_drift])
    unit = 0.0
    for t0 in (0.5, OPTIMAL_T0, 1.7):
        chain, _ = bp_scattering_chain(1.0, t0, 8, 8)
        for k in open_grid(300, 0, PI, singular=(PI / 4, 3 * PI / 4), include_hi=False):
            unit = max(unit, junction_scattering(chain, k).unitarity_error())
    bt, _ = bt_scattering_chain(1.0, 12, 8)
    for e in np.linspace(-2.5, 2.5, 101):
        try:
            unit = max(unit, junction_scattering(bt, energy=e).unitarity_error())
        except ValueError:
            pass  # energy in a trimer gap
    lat = LatticeSpec(11, "periodic", 1.0, 40.0, 40.0)
    blocks = np.sort(np.concatenate([[s.energy for s in solve_block(momentum_block(k, lat))]
                                     for k in momentum_grid(11)]))
    full = ring_two_boson_spectrum(11, 1.0, 40.0, 40.0)
    block_err = float(np.max(np.abs(blocks - full))) if len(blocks) == len(full) else math.inf
    record(9, {
        "norm drift <= 1e-9": norm <= 1e-9,
        "energy drift <= 1e-8": energy <= 1e-8,
        "flux unitarity <= 1e-10": unit <= 1e-10,
        "block completeness <= 1e-9": block_err <= 1e-9,
    }, f"norm drift {norm:.1e}, energy drift {energy:.1e}, unitarity {unit:.1e}, block vs full {block_err:.1e}")


def test_criterion_10_group_velocity():
    v = centroid_speed(k0=PI / 2, alpha=0.02)
    want = 2 * math.sqrt(2)
    record(10, {"within 2% of 2 sqrt2 t": abs(v / want - 1) <= 0.02},
           f"centroid speed {v:.5f} vs {want:.5f} ({100 * abs(v / want - 1):.3f}% off)")
