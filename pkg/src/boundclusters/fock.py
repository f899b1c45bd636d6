"""Fixed-particle-number Fock spaces and extended Hubbard Hamiltonians.

Basis ordering
--------------
Bosonic states are stored as sorted particle positions and enumerated in
ascending lexicographic order of those tuples, which is the same as
descending lexicographic order of the occupation vectors
(``|2,0>, |1,1>, |0,2>`` for two bosons on two sites).

Fermionic states are stored as ``(up positions, down positions)``, each
sorted, and enumerated in ascending lexicographic order of the concatenated
tuple. The state attached to a configuration is the product of creation
operators in ascending *mode* order, where the mode of ``(site, spin)`` is
``2 * site + spin`` with spin up = 0 and spin down = 1 (site-major, up
before down). Fermionic matrix elements carry the sign
``(-1)**(number of occupied modes strictly between source and target)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeSpec

BOSON = "boson"
FERMION = "fermion"
UP, DOWN = 0, 1


class CapacityError(ValueError):
    """Particle content does not fit into the lattice."""


class ConsistencyError(ValueError):
    """Operator, basis and lattice do not belong together."""


@dataclass(frozen=True)
class FockState:
    """A single occupation-number configuration.

    For bosons ``occupation`` holds ``n_i``; for fermions it holds the
    spin-up bits and ``occupation_down`` the spin-down bits.
    """

    occupation: tuple[int, ...]
    occupation_down: tuple[int, ...] | None = None

    @property
    def n_particles(self) -> int:
        return sum(self.occupation) + sum(self.occupation_down or ())


def _positions(occ) -> list[int]:
    return [i for i, n in enumerate(occ) for _ in range(n)]


class FockBasis:
    """Enumerated basis with a vectorised configuration -> index lookup."""

    def __init__(self, n_sites: int, statistics: str, content: tuple[int, ...]):
        if statistics not in (BOSON, FERMION):
            raise ValueError(f"unknown statistics {statistics!r}")
        if any(c < 0 for c in content) or sum(content) < 1:
            raise CapacityError("need at least one particle")
        self.n_sites = int(n_sites)
        self.statistics = statistics
        self.content = tuple(int(c) for c in content)
        if statistics == BOSON:
            (n,) = self.content
            configs = list(itertools.combinations_with_replacement(range(self.n_sites), n))
            self.configs = np.array(configs, dtype=np.int64).reshape(len(configs), n)
        else:
            n_up, n_dn = self.content
            if n_up > self.n_sites or n_dn > self.n_sites:
                raise CapacityError(
                    f"{n_up} up / {n_dn} down fermions exceed {self.n_sites} sites"
                )
            ups = list(itertools.combinations(range(self.n_sites), n_up))
            dns = list(itertools.combinations(range(self.n_sites), n_dn))
            configs = [u + d for u in ups for d in dns]
            self.configs = np.array(configs, dtype=np.int64).reshape(len(configs), n_up + n_dn)
        self.configs.setflags(write=False)
        self._weights = self.n_sites ** np.arange(self.n_particles - 1, -1, -1, dtype=np.int64)
        self.keys = self.configs @ self._weights
        assert np.all(np.diff(self.keys) > 0)

    @property
    def n_particles(self) -> int:
        return sum(self.content)

    @property
    def dim(self) -> int:
        return len(self.configs)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"FockBasis({self.statistics}, n_sites={self.n_sites}, content={self.content}, dim={self.dim})"

    @property
    def n_up(self) -> int:
        return self.content[0] if self.statistics == FERMION else 0

    def spin_of_slot(self) -> np.ndarray:
        if self.statistics == BOSON:
            return np.zeros(self.n_particles, dtype=int)
        return np.array([UP] * self.content[0] + [DOWN] * self.content[1])

    def find(self, configs: np.ndarray) -> np.ndarray:
        """Indices of canonical (sorted) configurations; -1 where absent."""
        configs = np.asarray(configs, dtype=np.int64).reshape(-1, self.n_particles)
        if len(configs) == 0:
            return np.zeros(0, dtype=np.int64)
        keys = configs @ self._weights
        idx = np.searchsorted(self.keys, keys)
        idx = np.minimum(idx, self.dim - 1)
        found = (self.keys[idx] == keys) & np.all((configs >= 0) & (configs < self.n_sites), axis=1)
        return np.where(found, idx, -1)

    def canonical(self, configs: np.ndarray) -> np.ndarray:
        """Sort positions within each species block."""
        configs = np.array(configs, dtype=np.int64, copy=True)
        if self.statistics == BOSON:
            configs.sort(axis=1)
        else:
            nu = self.content[0]
            configs[:, :nu].sort(axis=1)
            configs[:, nu:].sort(axis=1)
        return configs

    def state(self, i: int) -> FockState:
        cfg = self.configs[i]
        if self.statistics == BOSON:
            occ = np.bincount(cfg, minlength=self.n_sites)
            return FockState(tuple(int(x) for x in occ))
        nu = self.content[0]
        up = np.bincount(cfg[:nu], minlength=self.n_sites)
        dn = np.bincount(cfg[nu:], minlength=self.n_sites)
        return FockState(tuple(int(x) for x in up), tuple(int(x) for x in dn))

    def index(self, state: FockState) -> int:
        if self.statistics == BOSON:
            cfg = _positions(state.occupation)
        else:
            if state.occupation_down is None:
                raise ConsistencyError("fermionic state needs down occupations")
            cfg = _positions(state.occupation) + _positions(state.occupation_down)
        if len(cfg) != self.n_particles:
            raise ConsistencyError("particle number does not match basis")
        i = int(self.find(np.array([cfg]))[0])
        if i < 0:
            raise KeyError(state)
        return i

    def occupations(self) -> np.ndarray:
        """Dense ``(dim, n_sites)`` total occupation table; small bases only."""
        occ = np.zeros((self.dim, self.n_sites), dtype=np.int64)
        rows = np.repeat(np.arange(self.dim), self.n_particles)
        np.add.at(occ, (rows, self.configs.ravel()), 1)
        return occ


def build_basis(lattice: LatticeSpec, content, statistics: str = BOSON) -> FockBasis:
    """Enumerate the fixed-number basis.

    ``content`` is the boson count, or ``(n_up, n_down)`` for fermions.
    """
    if statistics == BOSON:
        content = (int(content),) if np.ndim(content) == 0 else tuple(content)
        if len(content) != 1:
            raise CapacityError("bosonic content is a single particle number")
    else:
        content = tuple(content)
        if len(content) != 2:
            raise CapacityError("fermionic content is (n_up, n_down)")
    return FockBasis(lattice.n_sites, statistics, content)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Compressed-row operator acting on a basis or an effective chain."""

    matrix: sp.csr_matrix
    hermitian: bool = True
    basis: FockBasis | None = None

    @classmethod
    def from_entries(cls, rows, cols, values, dim: int, **kw) -> "SparseOperator":
        m = sp.coo_matrix(
            (np.asarray(values, dtype=np.complex128), (np.asarray(rows), np.asarray(cols))),
            shape=(dim, dim),
        ).tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        return cls(m, **kw)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return apply(self, v)

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_error(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def spectral_bounds(self) -> tuple[float, float]:
        """Gershgorin interval containing the spectrum of a Hermitian operator."""
        m = self.matrix
        diag = m.diagonal().real
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
        return float(np.min(diag - radius)), float(np.max(diag + radius))


def apply(op: SparseOperator, state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[0] != op.dim:
        raise ConsistencyError(f"state of length {state.shape[0]} vs operator dim {op.dim}")
    return op.matrix @ state


def _check(lattice: LatticeSpec, basis: FockBasis):
    if basis.n_sites != lattice.n_sites:
        raise ConsistencyError(
            f"basis has {basis.n_sites} sites but lattice has {lattice.n_sites}"
        )


def diagonal_energies(lattice: LatticeSpec, basis: FockBasis) -> np.ndarray:
    """Interaction and potential energy of every basis configuration."""
    _check(lattice, basis)
    cfg = basis.configs
    spins = basis.spin_of_slot()
    u = lattice.onsite_interactions()
    mu = lattice.potentials()
    v_bond = lattice.nn_interactions()
    n = lattice.n_sites
    e = mu[cfg].sum(axis=1)
    for p, q in itertools.combinations(range(basis.n_particles), 2):
        same = cfg[:, p] == cfg[:, q]
        if basis.statistics == BOSON or spins[p] != spins[q]:
            e = e + np.where(same, u[cfg[:, p]], 0.0)
        lo, hi = np.minimum(cfg[:, p], cfg[:, q]), np.maximum(cfg[:, p], cfg[:, q])
        adjacent = hi - lo == 1
        bond = lo.copy()
        if lattice.periodic:
            wrap = hi - lo == n - 1
            adjacent |= wrap
            bond[wrap] = n - 1
        e = e + np.where(adjacent, v_bond[np.where(adjacent, bond, 0)], 0.0)
    return e


def _hops(lattice: LatticeSpec, basis: FockBasis):
    """Yield (rows, cols, values) blocks of the kinetic term."""
    cfg = basis.configs
    dim, npart = cfg.shape
    hop = lattice.bond_hoppings()
    spins = basis.spin_of_slot()
    cols_all = np.arange(dim)
    for p in range(npart):
        src = cfg[:, p]
        same_species = np.flatnonzero(spins == spins[p])
        if basis.statistics == BOSON:
            first = np.ones(dim, bool) if p == 0 else src != cfg[:, p - 1]
            n_src = (cfg == src[:, None]).sum(axis=1)
        for step in (+1, -1):
            dst = lattice.neighbor(src, step)
            ok = dst >= 0
            bond = np.where(step > 0, src, dst)
            h = hop[np.where(ok, bond, 0)]
            occupied_dst = (cfg[:, same_species] == dst[:, None]).sum(axis=1)
            if basis.statistics == BOSON:
                ok &= first
                amp = -h * np.sqrt(n_src) * np.sqrt(occupied_dst + 1)
            else:
                ok &= occupied_dst == 0
                m_src = 2 * src + spins[p]
                m_dst = 2 * dst + spins[p]
                lo, hi = np.minimum(m_src, m_dst), np.maximum(m_src, m_dst)
                between = np.zeros(dim, dtype=np.int64)
                for q in range(npart):
                    if q == p:
                        continue
                    mq = 2 * cfg[:, q] + spins[q]
                    between += (mq > lo) & (mq < hi)
                amp = -h * (1 - 2 * (between % 2))
            new = cfg[ok].copy()
            new[:, p] = dst[ok]
            rows = basis.find(basis.canonical(new))
            if np.any(rows < 0):
                raise ConsistencyError("hopping left the basis")
            yield rows, cols_all[ok], amp[ok]


def build_hamiltonian(lattice: LatticeSpec, basis: FockBasis) -> SparseOperator:
    """Assemble the extended Hubbard Hamiltonian on ``basis``.

    Hopping ``-h_b`` per bond (bosonic factors ``sqrt(n_src) sqrt(n_dst + 1)``,
    fermionic signs as documented in the module), on-site ``U/2 n(n-1)`` for
    bosons or ``U n_up n_down`` for fermions, ``V n_i n_{i+1}`` on every bond
    and the site potentials.
    """
    _check(lattice, basis)
    rows, cols, vals = [np.arange(basis.dim)], [np.arange(basis.dim)], [diagonal_energies(lattice, basis)]
    for r, c, v in _hops(lattice, basis):
        rows.append(r)
        cols.append(c)
        vals.append(v)
    return SparseOperator.from_entries(
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), basis.dim, basis=basis
    )


def number_operator(basis: FockBasis) -> SparseOperator:
    n = basis.n_particles
    return SparseOperator(sp.identity(basis.dim, dtype=np.complex128, format="csr") * n, basis=basis)


class Observables:
    """Occupation-diagonal observables on a Fock basis.

    Every method returns the diagonal of the operator as a real array; use
    :meth:`expectation` to evaluate it on a state vector.
    """

    def __init__(self, basis: FockBasis):
        self.basis = basis
        self.cfg = basis.configs
        self.spins = basis.spin_of_slot()

    @staticmethod
    def expectation(diag: np.ndarray, psi: np.ndarray) -> float:
        return float(np.dot(diag, np.abs(psi) ** 2))

    def count(self, site: int, spin: int | None = None) -> np.ndarray:
        sel = self.cfg == site
        if spin is not None:
            sel = sel & (self.spins == spin)[None, :]
        return sel.sum(axis=1).astype(float)

    def number(self, site: int) -> np.ndarray:
        return self.count(site)

    def spin_number(self, site: int, spin: int) -> np.ndarray:
        return self.count(site, spin)

    def densities(self, psi: np.ndarray) -> np.ndarray:
        """All ``<n_i>`` at once."""
        w = np.abs(psi) ** 2
        return np.bincount(
            self.cfg.ravel(), weights=np.repeat(w, self.basis.n_particles), minlength=self.basis.n_sites
        )

    def double_occupancy(self, site: int | None = None) -> np.ndarray:
        """Projector onto configurations with two or more particles on ``site`` (any site if None)."""
        if site is not None:
            return (self.count(site) >= 2).astype(float)
        dup = np.zeros(self.basis.dim, bool)
        for p, q in itertools.combinations(range(self.basis.n_particles), 2):
            dup |= self.cfg[:, p] == self.cfg[:, q]
        return dup.astype(float)

    def nn_pair(self, site: int) -> np.ndarray:
        """Projector onto configurations with ``site`` and ``site + 1`` both occupied."""
        return ((self.count(site) > 0) & (self.count(site + 1) > 0)).astype(float)

    def window(self, sites) -> np.ndarray:
        """Projector onto configurations with every particle inside ``sites``."""
        mask = np.zeros(self.basis.n_sites, bool)
        mask[list(sites)] = True
        return np.all(mask[self.cfg], axis=1).astype(float)

    def total_sz(self) -> np.ndarray:
        nu, nd = self.basis.content if self.basis.statistics == FERMION else (0, 0)
        return np.full(self.basis.dim, 0.5 * (nu - nd))


def spin_raising(basis: FockBasis) -> tuple[SparseOperator, FockBasis]:
    """Total ``S+ = sum_i c+_{i,up} c_{i,down}`` from ``basis`` into the raised sector.

    The up and down modes of one site are adjacent, so no sign arises.
    """
    if basis.statistics != FERMION:
        raise ConsistencyError("spin operators need a fermionic basis")
    nu, nd = basis.content
    if nd == 0:
        raise ConsistencyError("no down spin to raise")
    target = FockBasis(basis.n_sites, FERMION, (nu + 1, nd - 1))
    cfg = basis.configs
    rows, cols = [], []
    for q in range(nu, nu + nd):
        site = cfg[:, q]
        free = ~np.any(cfg[:, :nu] == site[:, None], axis=1)
        new = np.concatenate([cfg[:, :nu], site[:, None], np.delete(cfg[:, nu:], q - nu, axis=1)], axis=1)[free]
        idx = target.find(target.canonical(new))
        rows.append(idx)
        cols.append(np.flatnonzero(free))
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    m = sp.coo_matrix(
        (np.ones(len(rows), dtype=np.complex128), (rows, cols)), shape=(target.dim, basis.dim)
    ).tocsr()
    return SparseOperator(m, hermitian=False, basis=basis), target


def total_spin_squared(psi: np.ndarray, basis: FockBasis) -> float:
    """``<S^2> = |S+ psi|^2 + Sz^2 + Sz`` for a state of fixed ``Sz``."""
    nu, nd = basis.content
    sz = 0.5 * (nu - nd)
    norm2 = float(np.vdot(psi, psi).real)
    raised = 0.0
    if nd > 0 and nu < basis.n_sites:
        sp_op, _ = spin_raising(basis)
        v = sp_op.matrix @ psi
        raised = float(np.vdot(v, v).real)
    return raised + (sz * sz + sz) * norm2


def fermion_state(basis: FockBasis, ops) -> tuple[int, float]:
    """Basis index and sign of ``c+_{op0} c+_{op1} ... |vac>``.

    ``ops`` is a sequence of ``(site, spin)`` pairs written left to right.
    """
    modes = [2 * s + sigma for s, sigma in ops]
    if len(set(modes)) != len(modes):
        raise ConsistencyError("Pauli-forbidden product")
    # parity of the permutation that sorts the modes
    inversions = sum(1 for a, b in itertools.combinations(modes, 2) if a > b)
    sign = -1.0 if inversions % 2 else 1.0
    ups = sorted(s for s, sigma in ops if sigma == UP)
    dns = sorted(s for s, sigma in ops if sigma == DOWN)
    if (len(ups), len(dns)) != basis.content:
        raise ConsistencyError("spin content does not match basis")
    idx = int(basis.find(np.array([ups + dns]))[0])
    return idx, sign


def basis_dimension(n_sites: int, content, statistics: str = BOSON) -> int:
    """Combinatorial dimension without enumerating."""
    if statistics == BOSON:
        n = int(content) if np.ndim(content) == 0 else int(content[0])
        return math.comb(n_sites + n - 1, n)
    nu, nd = content
    return math.comb(n_sites, nu) * math.comb(n_sites, nd)
