"""Plane-wave scattering on effective junction chains.

Leads are nearest-neighbour chains whose bond and on-site pattern repeats
with some period away from the junction. At fixed energy the two Bloch
solutions of each lead come from the 2x2 transfer matrix over one period;
the incoming, reflected and outgoing waves are matched to the scatterer by a
small linear solve. Probabilities are flux ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .effective import EffectiveChainSpec, LeadInfo

SQRT2 = math.sqrt(2.0)


class InvalidMomentumError(ValueError):
    pass


@dataclass(frozen=True)
class PlaneWaveScattering:
    k0: float | None
    energy: float
    r: complex
    t_amp: complex
    k_right: float | None  # None when the right lead is evanescent
    flux_left: float  # incoming current per unit amplitude
    flux_right: float  # outgoing current per unit amplitude (0 if evanescent)
    flux_reflected: float

    @property
    def reflection(self) -> float:
        return abs(self.r) ** 2 * self.flux_reflected / self.flux_left

    @property
    def transmission(self) -> float:
        return abs(self.t_amp) ** 2 * self.flux_right / self.flux_left

    @property
    def evanescent(self) -> bool:
        return self.k_right is None

    def unitarity_error(self) -> float:
        return abs(self.reflection + self.transmission - 1.0)


@dataclass(frozen=True)
class TransmissionCurve:
    k0: np.ndarray
    probability: np.ndarray
    group_velocity: np.ndarray


class _Hop:
    """Matrix elements ``H[a, b]`` of a chain by label."""

    def __init__(self, chain: EffectiveChainSpec):
        self.chain = chain
        self.off: dict[tuple[int, int], float] = {}
        self.nbrs: dict[int, set[int]] = {}
        for a, b, h in chain.all_bonds():
            for x, y in ((a, b), (b, a)):
                self.off[(x, y)] = self.off.get((x, y), 0.0) - h
                self.nbrs.setdefault(x, set()).add(y)
        self.first = int(chain.labels[0])

    def __call__(self, a: int, b: int) -> float:
        if a == b:
            return float(self.chain.onsite[a - self.first])
        return self.off.get((a, b), 0.0)


def _current(hop: _Hop, a: int, b: int, psi_a: complex, psi_b: complex) -> float:
    """Probability current from site ``a`` to ``b = a + 1``."""
    return -2.0 * (np.conj(psi_a) * hop(a, b) * psi_b).imag


def _modes(hop: _Hop, lead: LeadInfo, side: str, energy: float):
    """Both Bloch solutions of a lead at ``energy``.

    Returns a list of ``(psi_end, psi_next, factor, current)`` where
    ``psi_next`` is the amplitude one site further into the lead and
    ``factor`` the multiplier over one period (moving away from the junction).
    """
    a, p = lead.end, lead.period
    step = -1 if side == "left" else 1
    m = np.eye(2, dtype=complex)
    # state (psi_l, psi_{l+step}); advance one site away from the junction
    for j in range(p):
        l = a + step * (j + 1)
        back, fwd = l - step, l + step
        c_fwd = hop(l, fwd)
        if c_fwd == 0.0:
            raise ValueError(f"lead bond ({l}, {fwd}) missing; lead too short")
        tm = np.array([[0, 1], [-hop(l, back) / c_fwd, (energy - hop(l, l)) / c_fwd]], dtype=complex)
        m = tm @ m
    vals, vecs = np.linalg.eig(m)
    out = []
    for lam, v in zip(vals, vecs.T):
        v = v / v[0] if abs(v[0]) > 1e-300 else v
        psi_end, psi_next = complex(v[0]), complex(v[1])
        if side == "left":
            cur = _current(hop, a - 1, a, psi_next, psi_end)
        else:
            cur = _current(hop, a, a + 1, psi_end, psi_next)
        out.append((psi_end, psi_next, complex(lam), cur))
    return out


def _propagating(lam: complex) -> bool:
    return abs(abs(lam) - 1.0) < 1e-9


def _mirror(chain: EffectiveChainSpec) -> EffectiveChainSpec:
    flip = lambda x: -int(x)
    labels = -chain.labels[::-1]
    return replace(
        chain,
        labels=labels.copy(),
        onsite=chain.onsite[::-1].copy(),
        bonds=tuple((flip(b), flip(a), h) for a, b, h in chain.bonds),
        extra_bonds=tuple((flip(b), flip(a), h) for a, b, h in chain.extra_bonds),
        left_lead=None if chain.right_lead is None else LeadInfo(flip(chain.right_lead.end), chain.right_lead.period),
        right_lead=None if chain.left_lead is None else LeadInfo(flip(chain.left_lead.end), chain.left_lead.period),
    )


def lead_energy(chain: EffectiveChainSpec, k0: float, side: str = "left") -> float:
    """Energy of momentum ``k0`` in a uniform lead (``e - 2 h cos k0``)."""
    lead = chain.left_lead if side == "left" else chain.right_lead
    if lead.period != 1:
        raise ValueError("momentum input needs a uniform lead; pass energy instead")
    hop = _Hop(chain)
    a = lead.end
    nb = a - 1 if side == "left" else a + 1
    return hop(a, a) + 2.0 * hop(a, nb) * math.cos(k0)


def junction_scattering(
    chain: EffectiveChainSpec, k0: float | None = None, *, energy: float | None = None, incident: str = "left"
) -> PlaneWaveScattering:
    """Reflection and transmission of a plane wave hitting the junction.

    Give either the incident momentum ``k0`` in ``(0, pi)`` (uniform incident
    lead) or the ``energy`` directly.
    """
    if incident == "right":
        chain = _mirror(chain)
    if chain.left_lead is None or chain.right_lead is None:
        raise ValueError("chain has no leads")
    if (k0 is None) == (energy is None):
        raise ValueError("give exactly one of k0 or energy")
    if k0 is not None:
        if not 0.0 < k0 < math.pi:
            raise InvalidMomentumError(f"k0={k0} outside (0, pi)")
        energy = lead_energy(chain, k0)
    hop = _Hop(chain)
    la, ra = chain.left_lead, chain.right_lead
    left = _modes(hop, la, "left", energy)
    if not all(_propagating(m[2]) for m in left):
        raise InvalidMomentumError(f"energy {energy} outside the incident lead band")
    inc = max(left, key=lambda m: m[3])
    ref = min(left, key=lambda m: m[3])
    right = _modes(hop, ra, "right", energy)
    if all(_propagating(m[2]) for m in right):
        out = max(right, key=lambda m: m[3])
        k_right = math.atan2(out[2].imag, out[2].real) / ra.period
        flux_right = out[3]
    else:
        out = min(right, key=lambda m: abs(m[2]))
        k_right, flux_right = None, 0.0

    a, b = la.end, ra.end
    scatter = [l for l in range(a + 1, b)]
    unknown = {l: 2 + i for i, l in enumerate(scatter)}
    sites = [a] + scatter + [b]
    n = len(sites)
    mat = np.zeros((n, n), dtype=complex)
    rhs = np.zeros(n, dtype=complex)

    def place(row, y, coef):
        if y == a:
            mat[row, 0] += coef * ref[0]
            rhs[row] -= coef * inc[0]
        elif y == a - 1:
            mat[row, 0] += coef * ref[1]
            rhs[row] -= coef * inc[1]
        elif y == b:
            mat[row, 1] += coef * out[0]
        elif y == b + 1:
            mat[row, 1] += coef * out[1]
        elif y in unknown:
            mat[row, unknown[y]] += coef
        else:
            raise ValueError(f"site {y} couples to the junction but is not in a lead or the scatterer")

    for row, x in enumerate(sites):
        place(row, x, hop(x, x) - energy)
        for y in hop.nbrs.get(x, ()):
            place(row, y, hop(x, y))
    sol = np.linalg.solve(mat, rhs)
    return PlaneWaveScattering(
        k0=k0,
        energy=float(energy),
        r=complex(sol[0]),
        t_amp=complex(sol[1]),
        k_right=k_right,
        flux_left=float(inc[3]),
        flux_right=float(flux_right),
        flux_reflected=float(abs(ref[3])),
    )


def bp_separation_closed_form(k0):
    """Separation probability of the optimal junction (``t0 = 2**(1/4) t``).

    ``P = 2 / (1 + (1 - sqrt(2) cos^2 k0) / (sin k0 sqrt|cos 2 k0|))`` while
    the right lead propagates (``sqrt(2)|cos k0| < 1``), zero otherwise.
    """
    k0 = np.asarray(k0, dtype=float)
    c = np.cos(k0)
    open_ = SQRT2 * np.abs(c) < 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (1.0 - SQRT2 * c**2) / (np.sin(k0) * np.sqrt(np.abs(np.cos(2 * k0))))
        p = 2.0 / (1.0 + ratio)
    p = np.where(open_, p, 0.0)
    return float(p) if p.ndim == 0 else p


def group_velocity(k0, t: float = 1.0, hopping_factor: float = SQRT2):
    """``dE/dk = 2 h sin k0`` for a lead of hopping ``h = hopping_factor * t``.

    The default is the resonant-pair lead (``h = sqrt(2) t``), where a packet
    ``exp(+i k0 l)`` moves towards increasing ``l``.
    """
    return 2.0 * hopping_factor * t * np.sin(k0)


def open_grid(n: int, lo: float = 0.0, hi: float = math.pi / 2, singular=(math.pi / 4,), eps: float = 1e-6,
              include_hi: bool = True) -> np.ndarray:
    """``n`` momenta on ``(lo, hi]`` kept at least ``eps`` away from singular points."""
    if include_hi:
        ks = np.linspace(lo, hi, n + 1)[1:]
    else:
        ks = np.linspace(lo, hi, n + 2)[1:-1]
    for s in (lo, *singular) + (() if include_hi else (hi,)):
        close = np.abs(ks - s) < eps
        ks[close] = s + eps if s == lo else s + np.where(ks[close] >= s, eps, -eps)
    return ks


def sweep(chain: EffectiveChainSpec, ks) -> TransmissionCurve:
    """Separation probability and incident-lead group velocity over momenta."""
    ks = np.asarray(ks, dtype=float)
    probs = np.empty_like(ks)
    for i, k in enumerate(ks):
        probs[i] = junction_scattering(chain, k).transmission
    hop = _Hop(chain)
    a = chain.left_lead.end
    h = -hop(a - 1, a)
    return TransmissionCurve(ks, probs, 2.0 * h * np.sin(ks))
