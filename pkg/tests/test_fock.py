import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundclusters.fock import (
    BOSON, DOWN, FERMION, UP, CapacityError, FockState, Observables, basis_dimension, build_basis,
    build_hamiltonian, fermion_state, total_spin_squared,
)
from boundclusters.lattice import Impurity, LatticeSpec

from oracles import boson_hamiltonian, fermion_hamiltonian

energies = st.floats(-3, 3, allow_nan=False)


@given(st.integers(2, 9), st.integers(1, 3))
def test_boson_dimension_and_lookup(n_sites, n):
    basis = build_basis(LatticeSpec(n_sites), n)
    assert basis.dim == basis_dimension(n_sites, n) == math.comb(n_sites + n - 1, n)
    np.testing.assert_array_equal(basis.find(basis.configs), np.arange(basis.dim))


@given(st.integers(2, 7), st.integers(0, 2), st.integers(0, 2))
def test_fermion_dimension_and_lookup(n_sites, nu, nd):
    if nu + nd == 0:
        return
    basis = build_basis(LatticeSpec(n_sites), (nu, nd), FERMION)
    assert basis.dim == basis_dimension(n_sites, (nu, nd), FERMION)
    np.testing.assert_array_equal(basis.find(basis.configs), np.arange(basis.dim))


def test_find_rejects_outside_configs():
    basis = build_basis(LatticeSpec(4), 2)
    np.testing.assert_array_equal(basis.find(np.array([[0, 4], [-1, 2], [1, 2]])), [-1, -1, basis.find([[1, 2]])[0]])


def test_fermion_capacity():
    with pytest.raises(CapacityError):
        build_basis(LatticeSpec(2), (3, 0), FERMION)


def test_state_index_roundtrip():
    basis = build_basis(LatticeSpec(4), (1, 2), FERMION)
    for i in range(basis.dim):
        assert basis.index(basis.state(i)) == i
    bb = build_basis(LatticeSpec(4), 3)
    assert bb.index(FockState((0, 3, 0, 0))) == bb.find([[1, 1, 1]])[0]


def _random_lattice(n, boundary, t, u, v, t0, mu):
    imp = Impurity(bond=0, bond_hopping=t0, offres_site=1, offres_onsite=u + 1.5, mu_site=n - 1, chem_potential=mu)
    return LatticeSpec(n, boundary, t, u, v, imp, interaction_overrides=((1, v + 0.7),))


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["open", "periodic"]), st.integers(3, 4), st.integers(1, 3), energies, energies, energies,
       energies, energies)
def test_boson_hamiltonian_matches_dense_oracle(boundary, n, npart, t, u, v, t0, mu):
    lat = _random_lattice(n, boundary, t, u, v, t0, mu)
    basis = build_basis(lat, npart)
    got = build_hamiltonian(lat, basis).toarray()
    np.testing.assert_allclose(got, boson_hamiltonian(lat, npart, basis.configs), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["open", "periodic"]), st.integers(3, 4), st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 0)]),
       energies, energies, energies, energies, energies)
def test_fermion_hamiltonian_matches_jordan_wigner(boundary, n, content, t, u, v, t0, mu):
    lat = _random_lattice(n, boundary, t, u, v, t0, mu)
    basis = build_basis(lat, content, FERMION)
    got = build_hamiltonian(lat, basis).toarray()
    np.testing.assert_allclose(got, fermion_hamiltonian(lat, content, basis.configs), atol=1e-12)


def test_hamiltonian_is_hermitian():
    lat = _random_lattice(6, "periodic", 1.0, 3.0, 2.0, 0.4, 1.0)
    for basis in (build_basis(lat, 3), build_basis(lat, (2, 1), FERMION)):
        h = build_hamiltonian(lat, basis)
        assert h.hermiticity_error() < 1e-14


def test_fermion_state_sign_follows_operator_order():
    basis = build_basis(LatticeSpec(3), (1, 1), FERMION)
    i1, s1 = fermion_state(basis, [(1, UP), (0, DOWN)])
    i2, s2 = fermion_state(basis, [(0, DOWN), (1, UP)])
    assert i1 == i2 and s1 == -s2
    # canonical mode order (0 down = mode 1, 1 up = mode 2) carries +1
    assert s2 == 1.0


def _pair(basis, i, j, sign):
    psi = np.zeros(basis.dim, complex)
    psi[basis.find([[i, j]])] += 1
    psi[basis.find([[j, i]])] += sign
    return psi / np.linalg.norm(psi)


def test_total_spin_of_singlet_and_triplet():
    basis = build_basis(LatticeSpec(4), (1, 1), FERMION)
    # c+_{i up} c+_{j dn} -+ c+_{i dn} c+_{j up}; for i < j the second is -basis[(j, i)]
    singlet = _pair(basis, 0, 2, -1)
    triplet = _pair(basis, 0, 2, +1)
    assert total_spin_squared(singlet, basis) == pytest.approx(0, abs=1e-14)
    assert total_spin_squared(triplet, basis) == pytest.approx(2, abs=1e-14)
    up_up = build_basis(LatticeSpec(4), (2, 0), FERMION)
    assert total_spin_squared(np.eye(up_up.dim)[0], up_up) == pytest.approx(2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_observables_sum_to_particle_number(seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(LatticeSpec(5), 3)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    obs = Observables(basis)
    dens = obs.densities(psi)
    assert dens.sum() == pytest.approx(3)
    for s in range(5):
        assert obs.expectation(obs.number(s), psi) == pytest.approx(dens[s])
    assert 0 <= obs.expectation(obs.double_occupancy(), psi) <= 1


def test_statistics_constants():
    assert {BOSON, FERMION} == {"boson", "fermion"} and UP != DOWN
