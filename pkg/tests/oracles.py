"""Independent reference constructions used as test oracles.

Operators are built as dense Kronecker products over sites (bosons,
truncated at the particle number) or over spin-orbital modes with a
Jordan-Wigner string (fermions), then restricted to the fixed-number sector
in the package's basis order.
"""
from __future__ import annotations

import itertools
from functools import reduce

import numpy as np


def _kron_all(ops):
    return reduce(np.kron, ops)


def _site_op(op, site, n_sites, local_dim):
    eye = np.eye(local_dim)
    return _kron_all([op if s == site else eye for s in range(n_sites)])


def _lattice_terms(lattice):
    n = lattice.n_sites
    hop = lattice.bond_hoppings()
    vv = lattice.nn_interactions()
    bonds = [(b, (b + 1) % n) for b in range(lattice.n_bonds)]
    return bonds, hop, vv, lattice.onsite_interactions(), lattice.potentials()


def boson_hamiltonian(lattice, n_particles: int, configs: np.ndarray) -> np.ndarray:
    """Dense Bose-Hubbard matrix on the given sorted-position configurations."""
    d = n_particles + 1
    n_sites = lattice.n_sites
    a = np.diag(np.sqrt(np.arange(1, d)), 1)
    num = a.T @ a
    bonds, hop, vv, uu, mu = _lattice_terms(lattice)
    ops_a = [_site_op(a, s, n_sites, d) for s in range(n_sites)]
    ops_n = [_site_op(num, s, n_sites, d) for s in range(n_sites)]
    dim = d**n_sites
    h = np.zeros((dim, dim))
    for (i, j), hij, vij in zip(bonds, hop, vv):
        h -= hij * (ops_a[i].T @ ops_a[j] + ops_a[j].T @ ops_a[i])
        h += vij * ops_n[i] @ ops_n[j]
    for s in range(n_sites):
        h += 0.5 * uu[s] * ops_n[s] @ (ops_n[s] - np.eye(dim)) + mu[s] * ops_n[s]
    idx = [_occupation_index([np.count_nonzero(c == s) for s in range(n_sites)], d) for c in configs]
    return h[np.ix_(idx, idx)]


def _occupation_index(occ, d):
    i = 0
    for n in occ:
        i = i * d + n
    return i


def fermion_hamiltonian(lattice, content, configs: np.ndarray) -> np.ndarray:
    """Dense Fermi-Hubbard matrix via Jordan-Wigner on modes ``2 * site + spin``.

    Basis states are ``c+_{m1} c+_{m2} ... |vac>`` with modes ascending.
    """
    n_sites = lattice.n_sites
    n_modes = 2 * n_sites
    z = np.diag([1.0, -1.0])
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # annihilates |1> -> |0> with basis (|0>, |1>)
    eye = np.eye(2)
    c = [_kron_all([z] * m + [lower] + [eye] * (n_modes - m - 1)) for m in range(n_modes)]
    num = [cm.T @ cm for cm in c]
    bonds, hop, vv, uu, mu = _lattice_terms(lattice)
    dim = 2**n_modes
    h = np.zeros((dim, dim))
    for (i, j), hij, vij in zip(bonds, hop, vv):
        for s in (0, 1):
            h -= hij * (c[2 * i + s].T @ c[2 * j + s] + c[2 * j + s].T @ c[2 * i + s])
        ni = num[2 * i] + num[2 * i + 1]
        nj = num[2 * j] + num[2 * j + 1]
        h += vij * ni @ nj
    for s in range(n_sites):
        h += uu[s] * num[2 * s] @ num[2 * s + 1] + mu[s] * (num[2 * s] + num[2 * s + 1])
    n_up = content[0]
    idx = []
    for cfg in configs:
        modes = sorted([2 * int(x) for x in cfg[:n_up]] + [2 * int(x) + 1 for x in cfg[n_up:]])
        # c+_{m1} ... c+_{mk}|vac> with ascending modes has JW sign +1
        idx.append(sum(1 << (n_modes - 1 - m) for m in modes))
    return h[np.ix_(idx, idx)]


def ring_two_boson_spectrum(n_sites, t, onsite_u, nn_v) -> np.ndarray:
    """Full two-boson ring spectrum by dense diagonalisation in position space."""
    from boundclusters.fock import build_basis, build_hamiltonian
    from boundclusters.lattice import LatticeSpec

    lat = LatticeSpec(n_sites, "periodic", t, onsite_u, nn_v)
    basis = build_basis(lat, 2)
    return np.linalg.eigvalsh(build_hamiltonian(lat, basis).toarray())


def all_configs(n_sites, n):
    return np.array(list(itertools.combinations_with_replacement(range(n_sites), n)))
