"""Two-boson momentum blocks, bound-pair classification and the trimer band.

On an odd ring ``N = 2 N0 + 1`` the two-boson problem at total momentum
``k = 2 pi n / N`` reduces to an ``N0 + 1``-site chain in the relative
distance ``r``: hoppings ``T_0 = -2 sqrt(2) t cos(k/2)`` and
``T_r = -2 t cos(k/2)``, potentials ``U`` at ``r = 0``, ``V`` at ``r = 1``
and ``(-1)**n T`` at ``r = N0``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .lattice import GeometryError, LatticeSpec

SQRT2 = math.sqrt(2.0)

ONSITE = "onsite-BP"
NN = "NN-BP"
RESONANT = "resonant-BP"
SCATTERING = "scattering"


class NoBoundStateError(ValueError):
    """The asymptotic ansatz has no normalisable bound solution."""


@dataclass(frozen=True)
class MomentumBlock:
    k: float
    parity: int
    hoppings: np.ndarray  # T_r between r and r + 1, r = 0 .. N0 - 1
    onsite: np.ndarray  # r = 0 .. N0

    @property
    def n0(self) -> int:
        return len(self.onsite) - 1

    def matrix(self) -> np.ndarray:
        return np.diag(self.onsite) + np.diag(self.hoppings, 1) + np.diag(self.hoppings, -1)

    @property
    def continuum_halfwidth(self) -> float:
        """Relative-motion band ``|eps| <= 4 |t cos(k/2)|``."""
        if self.n0 < 2:
            return 2.0 * abs(self.hoppings[0]) / SQRT2 if self.n0 else 0.0
        return 2.0 * abs(self.hoppings[1])


@dataclass(frozen=True)
class BoundStateSolution:
    k: float
    energy: float
    amplitudes: np.ndarray
    classification: str
    eta: float | None = None
    xi: float | None = None

    @property
    def weights(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class TrimerBandSolution:
    k: float
    roots: np.ndarray  # ascending
    vectors: np.ndarray  # columns gamma_{lambda,k} for each root


def momentum_grid(n_sites: int) -> np.ndarray:
    """``k = 2 pi n / N`` for ``n = 1 .. N``."""
    return 2 * np.pi * np.arange(1, n_sites + 1) / n_sites


def momentum_block(k: float, lattice: LatticeSpec, parity: int | None = None) -> MomentumBlock:
    """Relative-coordinate chain for total momentum ``k`` on an odd periodic ring.

    ``parity`` is ``n mod 2`` for ``k = 2 pi n / N``; it is inferred when ``k``
    lies on the ring's momentum grid and must be given otherwise.
    """
    n_sites = lattice.n_sites
    if not lattice.periodic or n_sites % 2 == 0:
        raise GeometryError("momentum blocks need a periodic ring with odd n_sites")
    if parity is None:
        n_float = k * n_sites / (2 * np.pi)
        n = round(n_float)
        if abs(n_float - n) > 1e-9:
            raise ValueError(f"k={k} is not on the 2 pi n / {n_sites} grid; pass parity")
        parity = n % 2
    n0 = (n_sites - 1) // 2
    c = math.cos(k / 2)
    t = lattice.t
    hoppings = np.full(n0, -2 * t * c)
    hoppings[0] *= SQRT2
    onsite = np.zeros(n0 + 1)
    onsite[0] += lattice.onsite_u
    onsite[1] += lattice.nn_v
    onsite[n0] += (-1) ** parity * (-2 * t * c)
    return MomentumBlock(float(k), int(parity), hoppings, onsite)


def _classify(block: MomentumBlock, energy: float, weights: np.ndarray) -> str:
    w0, w1 = weights[0], weights[1] if len(weights) > 1 else 0.0
    halfwidth = block.continuum_halfwidth
    spacing = 2 * halfwidth / max(block.n0, 1)
    outside = abs(energy) - halfwidth
    if not (w0 + w1 >= 0.9 or outside >= 2 * spacing):
        return SCATTERING
    share = w0 / (w0 + w1) if w0 + w1 > 0 else 0.5
    if share >= 0.8:
        return ONSITE
    if share <= 0.2:
        return NN
    return RESONANT


def solve_block(block: MomentumBlock) -> list[BoundStateSolution]:
    """All eigenpairs of the block, each labelled bound (by type) or scattering.

    A state counts as bound when at least 90% of its weight sits on
    ``r in {0, 1}`` or it lies at least two level spacings outside the
    relative-motion continuum. Bound states with more than 80% of that weight
    on ``r = 0`` are on-site pairs, less than 20% NN pairs, otherwise resonant.
    """
    energies, vecs = np.linalg.eigh(block.matrix())
    out = []
    for e, v in zip(energies, vecs.T):
        # fix the sign so the amplitude at r = 1 (or r = 0) is non-negative
        ref = v[1] if abs(v[1]) > 1e-12 else v[0]
        v = v * (1 if ref >= 0 else -1)
        out.append(BoundStateSolution(block.k, float(e), v, _classify(block, e, v**2)))
    return out


def rbp_band(k, onsite_u: float, t: float = 1.0):
    """Resonant bound-pair branches ``U -/+ 2 sqrt(2) t cos(k/2)``."""
    d = 2 * SQRT2 * t * np.cos(np.asarray(k) / 2)
    return onsite_u - d, onsite_u + d


def rbp_asymptotics(
    k: float, onsite_u: float, t: float = 1.0, branch: int = 1, n_rel: int | None = None
) -> BoundStateSolution:
    """Large-``U`` resonant-pair ansatz (``U = V``) in the gauge of :func:`momentum_block`.

    With ``e_p = -2 t cos(k/2)``:
    ``eps = U + branch sqrt(2) e_p + e_p**2 / (2U)``,
    ``xi = (|eps| + sqrt(eps**2 - 4 e_p**2)) / (2 |e_p|)``,
    ``f(0) = sqrt(2) e_p eta / (eps - U)`` and
    ``f(r >= 1) = eta [sgn(eps / e_p)]**(r-1) xi**-(r-1)``.
    Amplitudes are returned on ``r = 0 .. n_rel`` and renormalised there.
    """
    if abs(onsite_u) < 10 * abs(t):
        warnings.warn("rbp_asymptotics is only accurate for |U| >= 10 t", stacklevel=2)
    e_p = -2 * t * math.cos(k / 2)
    if n_rel is None:
        n_rel = 64
    if abs(e_p) < 1e-14:
        # pair frozen at distance one, degenerate with the on-site configuration
        f = np.zeros(n_rel + 1)
        f[1] = 1.0
        return BoundStateSolution(k, float(onsite_u), f, RESONANT, eta=1.0, xi=math.inf)
    eps = onsite_u + branch * SQRT2 * e_p + e_p**2 / (2 * onsite_u)
    disc = eps**2 - 4 * e_p**2
    if disc <= 0:
        raise NoBoundStateError(f"xi <= 1 at k={k}: energy {eps} inside the continuum")
    root = math.sqrt(disc)
    xi = (abs(eps) + root) / (2 * abs(e_p))
    eta = (abs(eps) / (2 * root) + 2 * e_p**2 / (eps - onsite_u) ** 2 + 0.5) ** -0.5
    r = np.arange(1, n_rel + 1)
    f = np.empty(n_rel + 1)
    f[0] = SQRT2 * e_p * eta / (eps - onsite_u)
    f[1:] = eta * np.sign(eps / e_p) ** (r - 1) * xi ** -(r - 1.0)
    f /= np.linalg.norm(f)
    return BoundStateSolution(k, float(eps), f, RESONANT, eta=float(eta), xi=float(xi))


def bound_energies(lattice: LatticeSpec, kind: str) -> tuple[np.ndarray, np.ndarray]:
    """Momenta and energies of all bound states of one classification over the ring grid."""
    ks, es = [], []
    for k in momentum_grid(lattice.n_sites):
        for sol in solve_block(momentum_block(k, lattice)):
            if sol.classification == kind:
                ks.append(k)
                es.append(sol.energy)
    return np.array(ks), np.array(es)


def narrowband_widths(u_or_v: float, t: float = 1.0, n_sites: int = 41, kind: str = ONSITE) -> float:
    """Width (max - min over k) of a bound-pair band on an ``n_sites`` ring.

    ``kind`` selects the on-site pair (``V = 0``), the NN pair (``U = 0``) or
    the resonant pair (``U = V``, both branches together).
    """
    if kind == ONSITE:
        lat = LatticeSpec(n_sites, "periodic", t, onsite_u=u_or_v, nn_v=0.0)
        pick = 0
    elif kind == NN:
        lat = LatticeSpec(n_sites, "periodic", t, onsite_u=0.0, nn_v=u_or_v)
        pick = 1
    elif kind == RESONANT:
        lat = LatticeSpec(n_sites, "periodic", t, onsite_u=u_or_v, nn_v=u_or_v)
        _, es = bound_energies(lat, RESONANT)
        return float(es.max() - es.min())
    else:
        raise ValueError(f"unknown band kind {kind!r}")
    es = []
    for k in momentum_grid(n_sites):
        sols = solve_block(momentum_block(k, lat))
        best = max(sols, key=lambda s: s.weights[pick])
        es.append(best.energy)
    es = np.array(es)
    return float(es.max() - es.min())


def trimer_bloch_matrix(k: float, t: float = 1.0) -> np.ndarray:
    s = SQRT2 * t
    return np.array(
        [
            [0, -s, -2 * t * np.exp(-1j * k)],
            [-s, 0, -s],
            [-2 * t * np.exp(1j * k), -s, 0],
        ],
        dtype=complex,
    )


def trimer_band(k: float, t: float = 1.0) -> TrimerBandSolution:
    """Three bound-triple branches at Bloch momentum ``k``.

    Obtained from the Hermitian 3x3 Bloch matrix; the roots solve
    ``L**3 - 8 t**2 L + 8 t**3 cos k = 0``.
    """
    roots, vecs = np.linalg.eigh(trimer_bloch_matrix(k, t))
    return TrimerBandSolution(float(k), roots, vecs)


def trimer_cubic(lam, k: float, t: float = 1.0):
    return lam**3 - 8 * t**2 * lam + 8 * t**3 * np.cos(k)


def unfold_trimer_momentum(k: float, band: int) -> float:
    """Extended-zone momentum of branch ``band`` (0, 1, 2 ascending) at Bloch ``k``.

    Branch 0 covers ``|q| <= pi/3``, branch 1 ``pi/3 <= |q| <= 2 pi/3`` and
    branch 2 ``2 pi/3 <= |q| <= pi``; ``k`` is taken in ``(-pi, pi]``.
    """
    k = (k + np.pi) % (2 * np.pi) - np.pi
    if band == 0:
        return k / 3
    s = 1.0 if k >= 0 else -1.0
    if band == 1:
        return (k - 2 * np.pi * s) / 3
    return (k + 2 * np.pi * s) / 3


@dataclass(frozen=True)
class BandGap:
    lower: float
    upper: float
    q: float  # extended-zone momentum where the gap opens (positive member of +/- pair)

    @property
    def width(self) -> float:
        return self.upper - self.lower


def trimer_gaps(t: float = 1.0, n_k: int = 601) -> list[BandGap]:
    """Gaps between the three trimer branches, located in the extended zone."""
    ks = np.linspace(-np.pi, np.pi, n_k)
    bands = np.array([trimer_band(k, t).roots for k in ks])
    gaps = []
    for b in (0, 1):
        i_top = int(np.argmax(bands[:, b]))
        i_bot = int(np.argmin(bands[:, b + 1]))
        q_top = abs(unfold_trimer_momentum(ks[i_top], b))
        q_bot = abs(unfold_trimer_momentum(ks[i_bot], b + 1))
        gaps.append(BandGap(float(bands[i_top, b]), float(bands[i_bot, b + 1]), float(0.5 * (q_top + q_bot))))
    return gaps
