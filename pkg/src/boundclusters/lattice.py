"""One-dimensional lattice geometry and couplings for the extended Hubbard model.

Energies are in units of the bulk hopping ``t`` unless stated otherwise.
Bond ``b`` joins sites ``b`` and ``b + 1``; on a periodic lattice the last
bond joins ``n_sites - 1`` and ``0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    """Raised when a lattice or wavepacket geometry is infeasible."""


@dataclass(frozen=True)
class Impurity:
    """Local modifications of the uniform chain.

    Each entry is optional. ``bond_hopping`` replaces the hopping on ``bond``,
    ``offres_onsite`` replaces the on-site interaction at ``offres_site`` and
    ``chem_potential`` adds ``mu * n`` at ``mu_site``.
    """

    bond: int | None = None
    bond_hopping: float | None = None
    offres_site: int | None = None
    offres_onsite: float | None = None
    mu_site: int | None = None
    chem_potential: float | None = None


@dataclass(frozen=True)
class LatticeSpec:
    n_sites: int
    boundary: str = "open"
    t: float = 1.0
    onsite_u: float = 0.0
    nn_v: float = 0.0
    impurity: Impurity | None = None
    hopping_overrides: tuple[tuple[int, float], ...] = field(default=())
    potential_overrides: tuple[tuple[int, float], ...] = field(default=())
    interaction_overrides: tuple[tuple[int, float], ...] = field(default=())  # per-bond V

    def __post_init__(self):
        if self.boundary not in ("open", "periodic"):
            raise GeometryError(f"unknown boundary {self.boundary!r}")
        if self.n_sites < 2:
            raise GeometryError("n_sites must be >= 2")
        if self.boundary == "periodic" and self.n_sites < 3:
            # a two-site ring would carry a doubled bond
            raise GeometryError("periodic lattices need n_sites >= 3")
        energies = [self.t, self.onsite_u, self.nn_v]
        energies += [v for _, v in self.hopping_overrides]
        energies += [v for _, v in self.potential_overrides]
        energies += [v for _, v in self.interaction_overrides]
        imp = self.impurity
        if imp is not None:
            energies += [v for v in (imp.bond_hopping, imp.offres_onsite, imp.chem_potential) if v is not None]
            for name, idx, limit in (
                ("impurity bond", imp.bond, self.n_bonds),
                ("impurity offres_site", imp.offres_site, self.n_sites),
                ("impurity mu_site", imp.mu_site, self.n_sites),
            ):
                if idx is not None and not 0 <= idx < limit:
                    raise GeometryError(f"{name} {idx} out of range")
        if not all(math.isfinite(float(e)) for e in energies):
            raise GeometryError("all energies must be finite")
        for b, _ in self.hopping_overrides:
            if not 0 <= b < self.n_bonds:
                raise GeometryError(f"hopping override bond {b} out of range")
        for b, _ in self.interaction_overrides:
            if not 0 <= b < self.n_bonds:
                raise GeometryError(f"interaction override bond {b} out of range")
        for s, _ in self.potential_overrides:
            if not 0 <= s < self.n_sites:
                raise GeometryError(f"potential override site {s} out of range")

    @property
    def n_bonds(self) -> int:
        return self.n_sites if self.boundary == "periodic" else self.n_sites - 1

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    def bond_hoppings(self) -> np.ndarray:
        """Hopping amplitude of every bond; the matrix element is ``-h``."""
        h = np.full(self.n_bonds, float(self.t))
        for b, v in self.hopping_overrides:
            h[b] = v
        imp = self.impurity
        if imp is not None and imp.bond is not None and imp.bond_hopping is not None:
            h[imp.bond] = imp.bond_hopping
        return h

    def nn_interactions(self) -> np.ndarray:
        """Nearest-neighbour interaction ``V`` of every bond."""
        v = np.full(self.n_bonds, float(self.nn_v))
        for b, val in self.interaction_overrides:
            v[b] = val
        return v

    def onsite_interactions(self) -> np.ndarray:
        u = np.full(self.n_sites, float(self.onsite_u))
        imp = self.impurity
        if imp is not None and imp.offres_site is not None and imp.offres_onsite is not None:
            u[imp.offres_site] = imp.offres_onsite
        return u

    def potentials(self) -> np.ndarray:
        mu = np.zeros(self.n_sites)
        for s, v in self.potential_overrides:
            mu[s] += v
        imp = self.impurity
        if imp is not None and imp.mu_site is not None and imp.chem_potential is not None:
            mu[imp.mu_site] += imp.chem_potential
        return mu

    def neighbor(self, site: np.ndarray, step: int) -> np.ndarray:
        """Neighbor of ``site`` one step left (-1) or right (+1); -1 where absent."""
        nb = np.asarray(site) + step
        if self.periodic:
            return nb % self.n_sites
        return np.where((nb < 0) | (nb >= self.n_sites), -1, nb)
