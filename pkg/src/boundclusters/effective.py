"""Effective single-particle chains for bound clusters and their Fock-space maps.

A chain site is labelled by an integer ``l`` (labels may be negative for
junction geometries). Bonds store a hopping amplitude ``h``; the matrix
element is ``-h`` so that every mapped Fock state enters with a plus sign and
all effective hoppings are negative real.

Maps use *physical* site labels: for junction geometries the resident site
is ``1`` and the impurity bond joins ``0`` and ``1``. A Fock lattice indexes
sites from zero, so :func:`embed` and :func:`project` take an ``origin`` (the
lattice index of physical site 0). Ring maps are already reduced modulo the
ring length.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .fock import FockBasis, SparseOperator
from .lattice import GeometryError

SQRT2 = math.sqrt(2.0)
OPTIMAL_T0 = 2 ** 0.25


@dataclass(frozen=True)
class LeadInfo:
    """Semi-infinite lead attached to a chain.

    ``end`` is the lead site nearest the junction; ``period`` is the
    repetition length of its bond/on-site pattern away from the junction.
    """

    end: int
    period: int = 1


@dataclass(frozen=True, eq=False)
class EffectiveChainSpec:
    topology: str  # "ring" | "open chain" | "chain-with-side-segment"
    labels: np.ndarray
    onsite: np.ndarray
    bonds: tuple[tuple[int, int, float], ...]
    left_lead: LeadInfo | None = None
    right_lead: LeadInfo | None = None
    extra_bonds: tuple[tuple[int, int, float], ...] = field(default=())

    def __post_init__(self):
        known = set(int(x) for x in self.labels)
        for a, b, _ in self.all_bonds():
            if a not in known or b not in known:
                raise GeometryError(f"bond ({a}, {b}) references a missing site")

    @property
    def n_sites(self) -> int:
        return len(self.labels)

    def all_bonds(self):
        return tuple(self.bonds) + tuple(self.extra_bonds)

    def index(self, label) -> np.ndarray:
        return np.asarray(label) - int(self.labels[0])

    def operator(self) -> SparseOperator:
        rows, cols, vals = [], [], []
        for a, b, h in self.all_bonds():
            i, j = int(self.index(a)), int(self.index(b))
            rows += [i, j]
            cols += [j, i]
            vals += [-h, -h]
        n = self.n_sites
        diag = np.arange(n)
        return SparseOperator.from_entries(
            np.concatenate([rows, diag]), np.concatenate([cols, diag]), np.concatenate([vals, self.onsite]), n
        )

    def hopping(self, a: int, b: int) -> float:
        """Summed hopping amplitude between two labels (0 if unconnected)."""
        total = 0.0
        for x, y, h in self.all_bonds():
            if {x, y} == {a, b}:
                total += h
        return total

    def to_json(self) -> str:
        doc = {
            "topology": self.topology,
            "labels": [int(x) for x in self.labels],
            "onsite": [float(x) for x in self.onsite],
            "bonds": [[int(a), int(b), float(h)] for a, b, h in self.bonds],
            "extra_bonds": [[int(a), int(b), float(h)] for a, b, h in self.extra_bonds],
            "left_lead": None if self.left_lead is None else vars(self.left_lead),
            "right_lead": None if self.right_lead is None else vars(self.right_lead),
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "EffectiveChainSpec":
        doc = json.loads(text)
        return cls(
            doc["topology"],
            np.array(doc["labels"], dtype=np.int64),
            np.array(doc["onsite"], dtype=float),
            tuple((int(a), int(b), float(h)) for a, b, h in doc["bonds"]),
            None if doc["left_lead"] is None else LeadInfo(**doc["left_lead"]),
            None if doc["right_lead"] is None else LeadInfo(**doc["right_lead"]),
            tuple((int(a), int(b), float(h)) for a, b, h in doc["extra_bonds"]),
        )


@dataclass(frozen=True, eq=False)
class BasisMap:
    """Bijection between chain labels and Fock configurations.

    ``positions[i]`` holds the sorted particle positions (physical labels) of
    the configuration mapped to ``labels[i]``. Every mapped configuration has
    diagonal energy ``reference`` (a symbolic name such as ``"U"`` or ``"2V"``),
    which the effective chain subtracts.
    """

    labels: np.ndarray
    positions: np.ndarray
    reference: str

    def __post_init__(self):
        keys = {tuple(p) for p in self.positions.tolist()}
        if len(keys) != len(self.labels):
            raise GeometryError("basis map is not injective")

    def state_of(self, label: int) -> tuple[int, ...]:
        i = int(np.searchsorted(self.labels, label))
        if i >= len(self.labels) or self.labels[i] != label:
            raise KeyError(label)
        return tuple(int(x) for x in self.positions[i])

    def label_of(self, positions) -> int:
        target = tuple(sorted(int(x) for x in positions))
        hits = np.flatnonzero(np.all(self.positions == np.array(target), axis=1))
        if len(hits) == 0:
            raise KeyError(positions)
        return int(self.labels[hits[0]])

    def indices(self, basis: FockBasis, origin: int = 0) -> np.ndarray:
        """Basis index of each mapped configuration."""
        idx = basis.find(np.sort(self.positions + origin, axis=1))
        if np.any(idx < 0):
            raise GeometryError("basis map reaches outside the Fock lattice")
        return idx

    def restrict(self, keep: np.ndarray) -> "BasisMap":
        return BasisMap(self.labels[keep], self.positions[keep], self.reference)


def _uniform_bonds(labels, hop_of_left_site):
    return tuple((int(a), int(a) + 1, float(hop_of_left_site(int(a)))) for a in labels[:-1])


def _bp_positions(l: int) -> tuple[int, int]:
    if l % 2 == 0:
        return (l // 2, l // 2)
    return ((l - 1) // 2, (l + 1) // 2)


def _bt_positions(l: int) -> tuple[int, int, int]:
    i, m = divmod(l, 3)
    if m == 0:
        return (i - 1, i, i + 1)
    if m == 1:
        return (i, i, i + 1)
    return (i, i + 1, i + 1)


def bp_ring(n_sites: int, t: float = 1.0) -> tuple[EffectiveChainSpec, BasisMap]:
    """Resonant-pair ring: ``2N`` sites, uniform hopping ``sqrt(2) t``.

    Even ``l`` is the doubly occupied site ``l/2``, odd ``l`` the NN pair
    ``((l-1)/2, (l+1)/2)``, positions taken modulo ``N``.
    """
    if n_sites < 3:
        raise GeometryError("bp_ring needs N >= 3")
    labels = np.arange(2 * n_sites)
    bonds = _uniform_bonds(labels, lambda a: SQRT2 * t) + ((int(labels[-1]), 0, SQRT2 * t),)
    chain = EffectiveChainSpec("ring", labels, np.zeros(len(labels)), bonds)
    pos = np.sort(np.array([_bp_positions(int(l)) for l in labels]) % n_sites, axis=1)
    return chain, BasisMap(labels, pos, "U")


def bp_scattering_chain(
    t: float = 1.0, t0: float = OPTIMAL_T0, left_length: int = 200, right_length: int = 200
) -> tuple[EffectiveChainSpec, BasisMap]:
    """Two joined semi-infinite chains seen by a resonant pair hitting the impurity.

    Labels run over ``[-left_length, right_length - 1]``. Bonds ``(l-1, l)``
    carry ``sqrt(2) t`` for ``l <= -1``, ``t0`` for ``l = 0`` and ``t`` for
    ``l >= 1``. Labels ``l < 0`` map to pair configurations as on the ring,
    ``l >= 0`` to one particle resident on site 1 and the other on ``-l-1``.
    """
    if left_length < 4 or right_length < 4:
        raise GeometryError("leads must have at least four sites")
    labels = np.arange(-left_length, right_length)

    def hop(a):
        b = a + 1
        if b <= -1:
            return SQRT2 * t
        if b == 0:
            return t0
        return t

    chain = EffectiveChainSpec(
        "open chain",
        labels,
        np.zeros(len(labels)),
        _uniform_bonds(labels, hop),
        left_lead=LeadInfo(-1, 1),
        right_lead=LeadInfo(0, 1),
    )
    pos = [_bp_positions(int(l)) if l < 0 else (-int(l) - 1, 1) for l in labels]
    return chain, BasisMap(labels, np.sort(np.array(pos), axis=1), "U")


def _bt_hop(b: int, t: float) -> float:
    """Trimer-chain amplitude on bond ``(b-1, b)``: 2t when ``b = 3i+2``."""
    return 2 * t if b % 3 == 2 else SQRT2 * t


def bt_chain(n_cells: int, t: float = 1.0) -> tuple[EffectiveChainSpec, BasisMap]:
    """Trimerised ring of ``3N`` sites for a bound triple on an ``N``-site ring."""
    if n_cells < 4:
        raise GeometryError("bt_chain needs N >= 4 so cluster configurations stay distinct")
    labels = np.arange(3 * n_cells)
    bonds = _uniform_bonds(labels, lambda a: _bt_hop(a + 1, t)) + ((int(labels[-1]), 0, _bt_hop(0, t)),)
    chain = EffectiveChainSpec("ring", labels, np.zeros(len(labels)), bonds)
    pos = np.sort(np.array([_bt_positions(int(l)) for l in labels]) % n_cells, axis=1)
    return chain, BasisMap(labels, pos, "2V")


def bt_scattering_chain(
    t: float = 1.0, left_length: int = 300, right_length: int = 300
) -> tuple[EffectiveChainSpec, BasisMap]:
    """Trimer lead joined to a uniform lead with a side-coupled two-site segment.

    Labels run over ``[-left_length, right_length + 2]``. Bonds ``(l-1, l)``
    are ``sqrt(2) t`` for ``l <= 2`` and ``2 t`` for ``l >= 4``; a direct link
    ``(0, 3)`` of ``sqrt(2) t``; stubs ``(2 - sqrt(2)) t`` on ``(3j+1, 3j+2)``
    for ``j <= 0``. Labels ``l <= 2`` map to bound-triple configurations,
    ``l > 2`` to the pair ``(-1, 0)`` plus a particle on ``l - 1``.
    """
    if left_length < 7 or right_length < 4:
        raise GeometryError("leads too short")
    labels = np.arange(-left_length, right_length + 3)
    bonds = []
    for a in labels[:-1]:
        b = int(a) + 1
        if b <= 2:
            bonds.append((int(a), b, SQRT2 * t))
        elif b >= 4:
            bonds.append((int(a), b, 2 * t))
    extra = [(0, 3, SQRT2 * t)]
    for a in labels:
        if a % 3 == 1 and a <= 1 and a + 1 <= labels[-1]:
            extra.append((int(a), int(a) + 1, (2 - SQRT2) * t))
    chain = EffectiveChainSpec(
        "chain-with-side-segment",
        labels,
        np.zeros(len(labels)),
        tuple(bonds),
        left_lead=LeadInfo(-1, 3),
        right_lead=LeadInfo(3, 1),
        extra_bonds=tuple(extra),
    )
    pos = [_bt_positions(int(l)) if l <= 2 else (-1, 0, int(l) - 1) for l in labels]
    return chain, BasisMap(labels, np.sort(np.array(pos), axis=1), "2V")


def embed(coeffs: np.ndarray, bmap: BasisMap, basis: FockBasis, origin: int = 0) -> np.ndarray:
    """Fock vector with the chain amplitudes placed on the mapped configurations."""
    coeffs = np.asarray(coeffs)
    if coeffs.shape != bmap.labels.shape:
        raise ValueError("coefficient vector does not match the map")
    psi = np.zeros(basis.dim, dtype=np.complex128)
    psi[bmap.indices(basis, origin)] = coeffs
    return psi


def project(psi: np.ndarray, bmap: BasisMap, basis: FockBasis, origin: int = 0) -> tuple[np.ndarray, float]:
    """Chain amplitudes of ``psi`` and the norm left outside the mapped subspace."""
    coeffs = np.asarray(psi)[bmap.indices(basis, origin)]
    rest = float(np.vdot(psi, psi).real) - float(np.vdot(coeffs, coeffs).real)
    return coeffs, math.sqrt(max(rest, 0.0))


def restricted_hamiltonian(H: SparseOperator, bmap: BasisMap, basis: FockBasis, origin: int = 0) -> np.ndarray:
    """Dense ``P H P`` on the mapped configurations (small maps only)."""
    idx = bmap.indices(basis, origin)
    sub = H.matrix[idx][:, idx]
    return sub.toarray() if sp.issparse(sub) else np.asarray(sub)


def bloch_matrix(chain: EffectiveChainSpec, cell: int, k: float, start: int | None = None) -> np.ndarray:
    """Bloch matrix of a periodic chain with ``cell`` sites per unit cell.

    Uses ``|lambda, k> = sum_c exp(i k c) |start + c*cell + lambda>`` with the
    bonds leaving the unit cell that begins at ``start`` (default: first label).
    """
    if start is None:
        start = int(chain.labels[0])
    n = chain.n_sites
    m = np.zeros((cell, cell), dtype=complex)
    for a, b, h in chain.all_bonds():
        for x, y in ((a, b), (b, a)):
            if not start <= x < start + cell:
                continue
            d = y - x
            if chain.topology == "ring":
                d = (d + n // 2) % n - n // 2
            shift, lam_y = divmod(x - start + d, cell)
            m[lam_y, x - start] += -h * np.exp(-1j * k * shift)
    return m + np.diag(chain.onsite[chain.index(np.arange(start, start + cell))])
