"""Wavepacket scattering runs on effective chains and full Fock lattices.

Packets are Gaussians ``exp(-alpha**2 (l - l_c)**2 / 2 + i k0 l)`` in the
label ``l`` of an effective chain. Full-model packets are the same
coefficients placed on the mapped Fock configurations, so the real-space
structure of a bound pair (envelope ``exp(-2 alpha**2 (j - h_c)**2)``,
alternating signs at ``k0 = pi/2``) comes out of the map.

Junction geometry in physical sites: the impurity bond joins 0 and 1, the
resident site is 1, and a separated partner leaves towards negative sites.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .effective import (
    OPTIMAL_T0,
    SQRT2,
    BasisMap,
    EffectiveChainSpec,
    bp_scattering_chain,
    bt_scattering_chain,
    embed,
    project,
)
from .fock import BOSON, FERMION, FockBasis, build_basis, build_hamiltonian, total_spin_squared
from .lattice import GeometryError, Impurity, LatticeSpec
from .propagation import PropagationConfig, propagate

CHANNELS = ("single", "BP", "BT", "fermi-singlet", "fermi-up-down-product", "fermi-parallel")


# ---------------------------------------------------------------- packets


@dataclass(frozen=True)
class WavepacketSpec:
    k0: float
    alpha: float
    center: float  # chain label of the envelope maximum
    channel: str = "BP"

    def __post_init__(self):
        if not 0 < self.alpha <= 0.2:
            raise ValueError(f"alpha={self.alpha} must lie in (0, 0.2]")
        if not (math.isfinite(self.k0) and math.isfinite(self.center)):
            raise ValueError("k0 and center must be finite")
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown channel {self.channel!r}")

    @property
    def sigma(self) -> float:
        return 1.0 / self.alpha

    @property
    def direction(self) -> int:
        return 1 if self.k0 >= 0 else -1


def make_wavepacket(spec: WavepacketSpec, labels, clearance: float = 5.0) -> np.ndarray:
    """Normalised Gaussian coefficients over ``labels``.

    Raises :class:`GeometryError` unless ``clearance`` widths (``1/alpha``)
    fit on both sides of the centre.
    """
    labels = np.asarray(labels)
    reach = clearance * spec.sigma
    if spec.center - reach < labels.min() or spec.center + reach > labels.max():
        raise GeometryError(
            f"packet at {spec.center} with {clearance}/alpha = {reach:.1f} overflows labels "
            f"[{labels.min()}, {labels.max()}]"
        )
    psi = np.exp(-0.5 * spec.alpha**2 * (labels - spec.center) ** 2 + 1j * spec.k0 * labels)
    omega = float(np.sum(np.abs(psi) ** 2))
    return psi / math.sqrt(omega)


# ---------------------------------------------------------------- geometry


@dataclass(frozen=True)
class JunctionGeometry:
    """Where a packet starts and how long it runs, in chain labels.

    The packet centre starts ``start_distance`` labels from the junction and
    runs until its trailing edge (``clearance`` widths behind the centre)
    has reached the junction.
    """

    alpha: float
    clearance: float
    v_in: float
    v_out: float
    start_distance: float
    total_time: float
    incoming_extent: float  # labels needed on the incoming side
    outgoing_extent: float  # labels needed on the outgoing side


def plan_geometry(alpha: float, v_in: float, v_out: float, clearance: float = 5.0, margin: int = 10) -> JunctionGeometry:
    if v_in <= 0:
        raise GeometryError("incoming group velocity must be positive")
    sigma = 1.0 / alpha
    dist = clearance * sigma
    time = (dist + clearance * sigma) / v_in
    incoming = dist + clearance * sigma + margin
    outgoing = abs(v_out) / v_in * 2 * clearance * sigma + margin
    return JunctionGeometry(alpha, clearance, v_in, v_out, dist, time, incoming, outgoing)


# ---------------------------------------------------------------- outcomes


@dataclass(frozen=True)
class Entanglement:
    entropy: float  # von Neumann entropy (nats) of the resident spin
    concurrence: float
    two_spin_state: np.ndarray  # 4x4, basis (flying, resident) in order uu, ud, du, dd
    weight: float  # norm of the separated component the state is conditioned on


@dataclass
class SeparationOutcome:
    """Channel probabilities at the end of a scattering run.

    ``p_separated``: resident particle at the impurity with the partner in
    the outgoing single-particle channel. ``p_bound_reflected``: intact bound
    cluster on the incoming side of the junction. ``p_other`` is the rest.
    For combination runs the bound channel is the combined pair.
    """

    p_separated: float
    p_bound_reflected: float
    p_other: float
    resident_population: float
    entanglement: Entanglement | None = None
    norm_drift: float = 0.0
    energy_drift: float = 0.0
    time: float = 0.0
    details: dict = field(default_factory=dict)
    trajectory: "Trajectory | None" = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("trajectory")
        if self.entanglement is not None:
            ent = d["entanglement"]
            rho = self.entanglement.two_spin_state
            ent["two_spin_state"] = {"real": rho.real.tolist(), "imag": rho.imag.tolist()}
        return d


@dataclass(frozen=True)
class Channels:
    """Masks over a state vector used by :func:`measure_separation`."""

    separated: np.ndarray
    bound: np.ndarray
    resident: np.ndarray  # occupation-like weight per component


def measure_separation(psi: np.ndarray, channels: Channels, **extra) -> SeparationOutcome:
    w = np.abs(psi) ** 2
    total = float(w.sum())
    sep = float(w[channels.separated].sum())
    bound = float(w[channels.bound].sum())
    return SeparationOutcome(
        p_separated=sep / total,
        p_bound_reflected=bound / total,
        p_other=(total - sep - bound) / total,
        resident_population=float(np.dot(w, channels.resident)) / total,
        **extra,
    )


def _connected(pos: np.ndarray) -> np.ndarray:
    return np.all(np.diff(pos, axis=1) <= 1, axis=1)


def pair_channels(positions: np.ndarray) -> Channels:
    """Two particles, physical positions sorted per row."""
    pos = np.sort(positions, axis=1)
    sep = (pos[:, 1] == 1) & (pos[:, 0] <= -1)
    bound = _connected(pos) & (pos[:, 1] <= 0)
    return Channels(sep, bound, (pos == 1).sum(axis=1).astype(float))


def triple_channels(positions: np.ndarray) -> Channels:
    """Three particles: a nearest-neighbour pair left at ``x <= 0`` with the third at ``x >= 2``.

    The pair is deposited on ``(-1, 0)``; at ``U = 0`` it drifts by
    second-order pair hopping, so any NN pair on the left counts.
    """
    pos = np.sort(positions, axis=1)
    sep = (pos[:, 1] - pos[:, 0] == 1) & (pos[:, 1] <= 0) & (pos[:, 2] >= 2)
    bound = _connected(pos) & (pos[:, 2] <= 0)
    resident = 0.5 * ((pos == -1).any(axis=1).astype(float) + (pos == 0).any(axis=1).astype(float))
    return Channels(sep, bound, resident)


def _fock_positions(basis: FockBasis, origin: int) -> np.ndarray:
    return np.asarray(basis.configs) - origin


# ---------------------------------------------------------------- lattices


def bp_junction_lattice(
    n_left: int,
    n_right: int,
    onsite_u: float = 40.0,
    t: float = 1.0,
    t0: float = OPTIMAL_T0,
    offres_onsite: float | None = None,
) -> tuple[LatticeSpec, int]:
    """Open chain over physical sites ``-n_left .. n_right`` with the resonant impurity.

    ``U = V`` everywhere, ``t0`` on bond (0, 1), ``U_s`` (default ``U + 40 t``)
    on site 0 and a potential ``U`` on site 1. Returns the lattice and the
    index of physical site 0.
    """
    if n_left < 2 or n_right < 2:
        raise GeometryError("need at least two sites on each side of the impurity")
    if offres_onsite is None:
        offres_onsite = onsite_u + 40.0 * t
    origin = n_left
    imp = Impurity(
        bond=origin, bond_hopping=t0, offres_site=origin, offres_onsite=offres_onsite,
        mu_site=origin + 1, chem_potential=onsite_u,
    )
    return LatticeSpec(n_left + n_right + 1, "open", t, onsite_u, onsite_u, imp), origin


def bt_junction_lattice(n_left: int, n_right: int, nn_v: float = 40.0, t: float = 1.0) -> tuple[LatticeSpec, int]:
    """Open chain for bound-triple separation over physical sites ``-n_left .. n_right``.

    Hopping ``t`` up to bond (0, 1), ``sqrt(2) t`` on (1, 2), ``2 t`` beyond;
    ``V`` on every bond and a potential ``V`` on sites ``>= 2``; ``U = 0``.
    """
    if n_left < 3 or n_right < 3:
        raise GeometryError("need at least three sites on each side of the junction")
    origin = n_left
    n = n_left + n_right + 1
    hops = [(origin + 1, SQRT2 * t)] + [(origin + i, 2 * t) for i in range(2, n_right)]
    pots = [(origin + i, nn_v) for i in range(2, n_right + 1)]
    return LatticeSpec(n, "open", t, 0.0, nn_v, None, tuple(hops), tuple(pots)), origin


def _bp_chain_for_lattice(n_left: int, t: float, t0: float) -> tuple[EffectiveChainSpec, BasisMap]:
    """Junction chain whose map fits exactly inside physical sites ``>= -n_left``."""
    return bp_scattering_chain(t, t0, left_length=2 * n_left - 1, right_length=n_left)


def _bt_chain_for_lattice(n_left: int, n_right: int, t: float) -> tuple[EffectiveChainSpec, BasisMap]:
    return bt_scattering_chain(t, left_length=3 * n_left - 3, right_length=n_right - 1)


# ---------------------------------------------------------------- helpers


@dataclass
class Trajectory:
    """Channel populations and site densities at snapshot times."""

    times: np.ndarray
    populations: np.ndarray  # (n_times, 3): separated, bound, other
    sites: np.ndarray  # physical site labels of the density columns
    densities: np.ndarray  # (n_times, n_sites)


def site_densities(psi: np.ndarray, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``<n_x>`` over physical sites from per-component particle positions."""
    lo = int(positions.min())
    w = np.abs(psi) ** 2
    dens = np.bincount((positions - lo).ravel(), weights=np.repeat(w, positions.shape[1]))
    return np.arange(lo, lo + len(dens)), dens


def _run(op, psi0, time, accuracy, positions, channels, n_snapshots=0, **extra):
    """Propagate, measure the channels and optionally record a trajectory."""
    times = tuple(np.linspace(0, time, n_snapshots + 2)[1:-1]) if n_snapshots > 0 else ()
    res = propagate(op, psi0, PropagationConfig(time, accuracy, snapshot_times=times))
    out = measure_separation(
        res.final, channels, norm_drift=res.norm_drift, energy_drift=res.energy_drift, time=time, **extra
    )
    if n_snapshots > 0:
        states = [np.asarray(psi0, dtype=complex)] + res.snapshots + [res.final]
        ts = np.array([0.0, *res.times, time])
        pops, dens = [], []
        for s in states:
            o = measure_separation(s, channels)
            pops.append((o.p_separated, o.p_bound_reflected, o.p_other))
            sites, d = site_densities(s, positions)
            dens.append(d)
        width = max(len(d) for d in dens)
        dens = np.array([np.pad(d, (0, width - len(d))) for d in dens])
        out.trajectory = Trajectory(ts, np.array(pops), np.arange(int(positions.min()), int(positions.min()) + width), dens)
    return res, out


def _bp_speeds(k0: float, t: float) -> tuple[float, float]:
    """Group velocities (labels per unit time) in the pair lead and the single-particle lead."""
    e = -2 * SQRT2 * t * math.cos(k0)
    cos_r = -e / (2 * t)
    v_out = 2 * t * math.sqrt(max(0.0, 1 - cos_r**2))
    return 2 * SQRT2 * t * abs(math.sin(k0)), v_out


def _check_fit(geom: JunctionGeometry, incoming_available: float, outgoing_available: float, what: str):
    if geom.incoming_extent > incoming_available or geom.outgoing_extent > outgoing_available:
        raise GeometryError(
            f"{what}: needs {geom.incoming_extent:.0f} incoming and {geom.outgoing_extent:.0f} outgoing labels, "
            f"lattice offers {incoming_available:.0f} and {outgoing_available:.0f}; enlarge it or lower the clearance"
        )


def _check_model(model: str):
    if model not in ("effective", "full"):
        raise ValueError(f"unknown model {model!r}; use 'effective' or 'full'")


def _bp_full_size(geom: JunctionGeometry, n_sites: int | None, incoming_is_pair: bool, n_right: int = 10):
    pair_need, single_need = (geom.incoming_extent, geom.outgoing_extent) if incoming_is_pair else (
        geom.outgoing_extent, geom.incoming_extent)
    if n_sites is None:
        n_left = int(math.ceil(max(pair_need / 2 + 2, single_need + 2)))
        n_sites = n_left + n_right + 1
    n_left = n_sites - n_right - 1
    if n_left < 4:
        raise GeometryError(f"n_sites={n_sites} is too small for the junction")
    return n_sites, n_left, n_right


# ---------------------------------------------------------------- bound pairs


def run_bp_separation(
    k0: float = math.pi / 2,
    alpha: float = 0.01,
    model: str = "effective",
    onsite_u: float = 40.0,
    t: float = 1.0,
    t0: float = OPTIMAL_T0,
    n_sites: int | None = None,
    offres_onsite: float | None = None,
    clearance: float = 5.0,
    accuracy: float = 1e-12,
    n_snapshots: int = 0,
) -> SeparationOutcome:
    """Inject a resonant-pair packet at the impurity and measure the channels.

    ``model="effective"`` runs the single-particle junction chain;
    ``model="full"`` runs two bosons on an ``n_sites`` lattice and also
    reports the effective-chain result on the same geometry together with
    the fidelity between the two final states.
    """
    _check_model(model)
    v_in, v_out = _bp_speeds(k0, t)
    geom = plan_geometry(alpha, v_in, max(v_out, t), clearance)
    spec = WavepacketSpec(k0, alpha, -geom.start_distance, "BP")
    if model == "effective":
        chain, bmap = bp_scattering_chain(
            t, t0, left_length=int(math.ceil(geom.incoming_extent)) + 1,
            right_length=int(math.ceil(geom.outgoing_extent)) + 1,
        )
        c0 = make_wavepacket(spec, chain.labels, clearance)
        pos = np.asarray(bmap.positions)
        _, out = _run(chain.operator(), c0, geom.total_time, accuracy, pos, pair_channels(pos), n_snapshots,
                      details={"model": "effective", "n_chain": chain.n_sites})
        return out
    n_sites, n_left, n_right = _bp_full_size(geom, n_sites, True)
    _check_fit(geom, 2 * n_left - 2, n_left - 1, "bound-pair separation")
    lattice, origin = bp_junction_lattice(n_left, n_right, onsite_u, t, t0, offres_onsite)
    basis = build_basis(lattice, 2)
    chain, bmap = _bp_chain_for_lattice(n_left, t, t0)
    c0 = make_wavepacket(spec, chain.labels, clearance)
    pos = _fock_positions(basis, origin)
    res, out = _run(build_hamiltonian(lattice, basis), embed(c0, bmap, basis, origin), geom.total_time, accuracy,
                    pos, pair_channels(pos), n_snapshots)
    eff = propagate(chain.operator(), c0, PropagationConfig(geom.total_time, accuracy))
    eff_out = measure_separation(eff.final, pair_channels(np.asarray(bmap.positions)))
    out.details = {
        "model": "full",
        "n_sites": n_sites,
        "dimension": basis.dim,
        "effective_p_separated": eff_out.p_separated,
        "fidelity": float(abs(np.vdot(embed(eff.final, bmap, basis, origin), res.final)) ** 2),
        "residual_norm": project(res.final, bmap, basis, origin)[1],
    }
    return out


def run_bp_combination(
    k0: float = math.pi / 2,
    alpha: float = 0.01,
    model: str = "effective",
    onsite_u: float = 40.0,
    t: float = 1.0,
    t0: float = OPTIMAL_T0,
    n_sites: int | None = None,
    resident: bool = True,
    offres_onsite: float | None = None,
    clearance: float = 5.0,
    accuracy: float = 1e-12,
    n_snapshots: int = 0,
) -> SeparationOutcome:
    """Send a single particle (momentum ``k0`` in its own lead) onto the resident one.

    The combination probability is the weight that ends as a bound pair on the
    incoming side (``p_bound_reflected``); ``p_separated`` is the weight still
    in the particle-plus-resident channel. Without a resident particle the
    full model holds a single boson and the pair channel is empty.
    """
    _check_model(model)
    v_in = 2 * t * abs(math.sin(k0))
    cos_l = 2 * t * math.cos(k0) / (2 * SQRT2 * t)
    v_out = 2 * SQRT2 * t * math.sqrt(max(0.0, 1 - cos_l**2))
    geom = plan_geometry(alpha, v_in, max(v_out, t), clearance)
    spec = WavepacketSpec(-k0, alpha, geom.start_distance, "single")
    if model == "effective":
        if not resident:
            raise ValueError("the effective chain always contains the resident particle")
        chain, bmap = bp_scattering_chain(
            t, t0, left_length=int(math.ceil(geom.outgoing_extent)) + 1,
            right_length=int(math.ceil(geom.incoming_extent)) + 1,
        )
        c0 = make_wavepacket(spec, chain.labels, clearance)
        pos = np.asarray(bmap.positions)
        _, out = _run(chain.operator(), c0, geom.total_time, accuracy, pos, pair_channels(pos), n_snapshots,
                      details={"model": "effective"})
        return out
    n_sites, n_left, n_right = _bp_full_size(geom, n_sites, False)
    _check_fit(geom, n_left - 1, 2 * n_left - 2, "combination")
    lattice, origin = bp_junction_lattice(n_left, n_right, onsite_u, t, t0, offres_onsite)
    chain, bmap = _bp_chain_for_lattice(n_left, t, t0)
    c0 = make_wavepacket(spec, chain.labels, clearance)
    if resident:
        basis = build_basis(lattice, 2)
        pos = _fock_positions(basis, origin)
        _, out = _run(build_hamiltonian(lattice, basis), embed(c0, bmap, basis, origin), geom.total_time, accuracy,
                      pos, pair_channels(pos), n_snapshots,
                      details={"model": "full", "n_sites": n_sites, "resident": True})
        return out
    # lone flying particle: same packet without the boson on site 1
    basis = build_basis(lattice, 1)
    keep = bmap.labels >= 0
    psi0 = np.zeros(basis.dim, dtype=complex)
    psi0[-bmap.labels[keep] - 1 + origin] = c0[keep]
    psi0 /= np.linalg.norm(psi0)
    pos = _fock_positions(basis, origin)
    empty = np.zeros(basis.dim, bool)
    res, out = _run(build_hamiltonian(lattice, basis), psi0, geom.total_time, accuracy, pos,
                    Channels(empty, empty, (pos[:, 0] == 1).astype(float)), n_snapshots)
    w = np.abs(res.final) ** 2
    out.details = {"model": "full", "n_sites": n_sites, "resident": False,
                   "reflected": float(w[pos[:, 0] <= -1].sum()), "transmitted": float(w[pos[:, 0] >= 1].sum())}
    return out


# ---------------------------------------------------------------- bound triples

BT_V_IN = 3.0  # labels per unit time (units of t) of the middle trimer band at E = 0
BT_V_OUT = 4.0


def run_bt_separation(
    k0: float = math.pi / 2,
    alpha: float = 0.01,
    model: str = "effective",
    nn_v: float = 40.0,
    t: float = 1.0,
    n_sites: int | None = None,
    clearance: float = 5.0,
    accuracy: float = 1e-12,
    n_snapshots: int = 0,
) -> SeparationOutcome:
    """Bound-triple packet hitting the side-coupled junction.

    The full model uses physical sites ``-n_left .. n_right`` with ``n_left``
    just large enough for the incoming side; the rest of ``n_sites`` forms the
    outgoing lead, whose far end may reflect the separated particle as long
    as it does not return to the junction (``details["junction_weight"]``).
    Full runs also report the effective chain on the identical finite
    geometry (``details["effective_p_separated"]``) and the weight that
    ended with two or more particles at ``x >= 1`` (``details["two_right_weight"]``),
    a channel the effective chain does not contain.
    """
    _check_model(model)
    geom = plan_geometry(alpha, BT_V_IN * t, BT_V_OUT * t, clearance)
    spec = WavepacketSpec(k0, alpha, -geom.start_distance, "BT")
    if model == "effective":
        chain, bmap = bt_scattering_chain(
            t, left_length=int(math.ceil(geom.incoming_extent)) + 3,
            right_length=int(math.ceil(geom.outgoing_extent)) + 1,
        )
        c0 = make_wavepacket(spec, chain.labels, clearance)
        pos = np.asarray(bmap.positions)
        _, out = _run(chain.operator(), c0, geom.total_time, accuracy, pos, triple_channels(pos), n_snapshots,
                      details={"model": "effective", "n_chain": chain.n_sites})
        return out
    n_left = int(math.ceil(geom.incoming_extent / 3)) + 2
    if n_sites is None:
        n_sites = n_left + int(math.ceil(geom.outgoing_extent)) + 2
    n_right = n_sites - n_left - 1
    if n_right < 3:
        raise GeometryError(f"n_sites={n_sites} leaves no outgoing lead (incoming side needs {n_left} sites)")
    lattice, origin = bt_junction_lattice(n_left, n_right, nn_v, t)
    basis = build_basis(lattice, 3)
    chain, bmap = _bt_chain_for_lattice(n_left, n_right, t)
    c0 = make_wavepacket(spec, chain.labels, clearance)
    pos = _fock_positions(basis, origin)
    res, out = _run(build_hamiltonian(lattice, basis), embed(c0, bmap, basis, origin), geom.total_time, accuracy,
                    pos, triple_channels(pos), n_snapshots)
    eff = propagate(chain.operator(), c0, PropagationConfig(geom.total_time, accuracy))
    eff_out = measure_separation(eff.final, triple_channels(np.asarray(bmap.positions)))
    w = np.abs(res.final) ** 2
    out.details = {
        "model": "full",
        "n_sites": n_sites,
        "n_left": n_left,
        "dimension": basis.dim,
        "clearance": clearance,
        "effective_p_separated": eff_out.p_separated,
        "cluster_weight": float(w[_connected(pos)].sum()),
        "junction_weight": float(w[np.all(np.abs(pos) <= 3, axis=1)].sum()),
        "two_right_weight": float(w[pos[:, 1] >= 1].sum()),
        "fidelity": float(abs(np.vdot(embed(eff.final, bmap, basis, origin), res.final)) ** 2),
        "residual_norm": project(res.final, bmap, basis, origin)[1],
    }
    return out


def bt_dispersal(nn_v: float = 0.0, n_sites: int = 40, alpha: float = 0.2, time: float = 10.0, t: float = 1.0,
                 accuracy: float = 1e-12) -> tuple[float, float]:
    """Cluster weight of a bound-triple packet before and after free evolution on a uniform chain.

    With ``V = 0`` nothing binds the three bosons and the cluster weight
    (configurations with no empty site between particles) decays.
    """
    from .effective import bt_chain

    lattice = LatticeSpec(n_sites, "open", t, 0.0, nn_v)
    basis = build_basis(lattice, 3)
    n_cells = n_sites
    chain, bmap = bt_chain(n_cells, t)
    # open lattice: drop ring configurations that wrap around
    keep = np.all(np.diff(np.sort(bmap.positions, axis=1), axis=1) <= 1, axis=1)
    keep &= (bmap.labels >= 3) & (bmap.labels <= 3 * n_cells - 4)
    labels = bmap.labels[keep]
    spec = WavepacketSpec(math.pi / 2, alpha, float(np.mean(labels)), "BT")
    c0 = make_wavepacket(spec, labels, clearance=3.0)
    psi0 = embed(c0, bmap.restrict(keep), basis, 0)
    pos = np.asarray(basis.configs)
    mask = _connected(pos)
    res = propagate(build_hamiltonian(lattice, basis), psi0, PropagationConfig(time, accuracy))
    w0 = float((np.abs(psi0[mask]) ** 2).sum())
    w1 = float((np.abs(res.final[mask]) ** 2).sum())
    return w0, w1


# ---------------------------------------------------------------- kinematics


def centroid_speed(k0: float = math.pi / 2, alpha: float = 0.02, t: float = 1.0, time: float | None = None,
                   n_samples: int = 11, hopping: float | None = None) -> float:
    """Least-squares centroid speed of a packet on a uniform chain (labels per unit time).

    The default hopping is the resonant-pair value ``sqrt(2) t``.
    """
    h = SQRT2 * t if hopping is None else hopping
    v = 2 * h * abs(math.sin(k0))
    sigma = 1.0 / alpha
    if time is None:
        time = 5 * sigma / max(v, 1e-9)
    span = int(math.ceil(10 * sigma + v * time)) + 20
    labels = np.arange(-span, span + 1)
    n = len(labels)
    from .fock import SparseOperator

    idx = np.arange(n - 1)
    op = SparseOperator.from_entries(np.r_[idx, idx + 1], np.r_[idx + 1, idx], np.full(2 * (n - 1), -h), n)
    c0 = make_wavepacket(WavepacketSpec(k0, alpha, -v * time / 2, "single"), labels)
    ts = np.linspace(0, time, n_samples)
    res = propagate(op, c0, PropagationConfig(time, snapshot_times=tuple(ts[1:-1])))
    states = [c0] + res.snapshots + [res.final]
    xs = [float(np.dot(np.abs(s) ** 2, labels)) for s in states]
    return float(np.polyfit(ts, xs, 1)[0])


# ---------------------------------------------------------------- fermions


def fermi_map(psi_boson: np.ndarray, boson_basis: FockBasis, fermi_basis: FockBasis) -> np.ndarray:
    """Map a two-boson state to the ``S_z = 0`` two-fermion sector.

    Double occupancy ``(a_j+)**2/sqrt(2)`` becomes ``c+_{j up} c+_{j dn}`` and
    ``a_i+ a_j+`` becomes the singlet ``(c+_{i up} c+_{j dn} - c+_{i dn} c+_{j up})/sqrt(2)``.
    """
    if boson_basis.statistics != BOSON or boson_basis.n_particles != 2:
        raise ValueError("fermi_map takes a two-boson state")
    if fermi_basis.statistics != FERMION or fermi_basis.content != (1, 1):
        raise ValueError("target must be the one-up one-down sector")
    if boson_basis.n_sites != fermi_basis.n_sites:
        raise ValueError("bases live on different lattices")
    cfg = np.asarray(boson_basis.configs)
    psi_boson = np.asarray(psi_boson)
    out = np.zeros(fermi_basis.dim, dtype=complex)
    same = cfg[:, 0] == cfg[:, 1]
    # configurations are (up position, down position); for i < j both products are already mode-ordered
    out[fermi_basis.find(cfg[same])] += psi_boson[same]
    i, j = cfg[~same, 0], cfg[~same, 1]
    out[fermi_basis.find(np.c_[i, j])] += psi_boson[~same] / SQRT2
    out[fermi_basis.find(np.c_[j, i])] -= psi_boson[~same] / SQRT2
    return out


def _sigma_y2() -> np.ndarray:
    sy = np.array([[0, -1j], [1j, 0]])
    return np.kron(sy, sy)


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    yy = _sigma_y2()
    r = rho @ yy @ rho.conj() @ yy
    lam = np.sqrt(np.clip(np.sort(np.linalg.eigvals(r).real)[::-1], 0, None))
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def spin_entropy(rho: np.ndarray, keep: int = 1) -> float:
    """Von Neumann entropy (nats) of one spin of a two-spin state (``keep=1`` the second)."""
    r = rho.reshape(2, 2, 2, 2)
    red = np.einsum("abac->bc", r) if keep == 1 else np.einsum("abcb->ac", r)
    ev = np.clip(np.linalg.eigvalsh(red), 0, None)
    ev = ev[ev > 1e-15]
    return float(-(ev * np.log(ev)).sum())


def conditional_spin_state(
    psi_ud: np.ndarray, basis_ud: FockBasis, origin: int,
    psi_uu: np.ndarray | None = None, basis_uu: FockBasis | None = None,
    psi_dd: np.ndarray | None = None, basis_dd: FockBasis | None = None,
) -> tuple[np.ndarray, float]:
    """Two-spin density matrix (flying, resident) on the separated channel.

    The separated channel holds one fermion on site 1 and one on ``x <= -1``;
    for ``x < 1`` every basis product is already mode-ordered, so basis
    coefficients are the spin amplitudes directly.
    """
    n = basis_ud.n_sites
    amps = np.zeros((n, 4), dtype=complex)
    r = origin + 1
    xs = np.arange(0, origin)  # lattice indices of x <= -1
    ud = basis_ud.find(np.c_[xs, np.full_like(xs, r)])
    du = basis_ud.find(np.c_[np.full_like(xs, r), xs])
    amps[xs, 1] = psi_ud[ud]
    amps[xs, 2] = psi_ud[du]
    for psi, basis, col in ((psi_uu, basis_uu, 0), (psi_dd, basis_dd, 3)):
        if psi is not None:
            pair = np.c_[xs, np.full_like(xs, r)]
            amps[xs, col] = psi[basis.find(pair)]
    rho = amps.T @ amps.conj()
    weight = float(np.trace(rho).real)
    if weight <= 0:
        return np.zeros((4, 4), dtype=complex), 0.0
    return rho / weight, weight


def _fermi_setup(n_left: int, n_right: int, onsite_u: float, t: float, t0: float, offres_onsite):
    lattice, origin = bp_junction_lattice(n_left, n_right, onsite_u, t, t0, offres_onsite)
    chain, bmap = _bp_chain_for_lattice(n_left, t, t0)
    return lattice, origin, chain, bmap


def run_fermi_singlet(
    k0: float = math.pi / 2,
    alpha: float = 0.05,
    onsite_u: float = 40.0,
    t: float = 1.0,
    t0: float = OPTIMAL_T0,
    n_sites: int | None = None,
    offres_onsite: float | None = None,
    clearance: float = 5.0,
    accuracy: float = 1e-12,
    n_snapshots: int = 0,
) -> SeparationOutcome:
    """Singlet bound pair separated at the impurity; reports spin entanglement of the separated pair."""
    v_in, v_out = _bp_speeds(k0, t)
    geom = plan_geometry(alpha, v_in, max(v_out, t), clearance)
    n_sites, n_left, n_right = _bp_full_size(geom, n_sites, True)
    _check_fit(geom, 2 * n_left - 2, n_left - 1, "fermion singlet separation")
    lattice, origin, chain, bmap = _fermi_setup(n_left, n_right, onsite_u, t, t0, offres_onsite)
    bbasis = build_basis(lattice, 2)
    fbasis = build_basis(lattice, (1, 1), FERMION)
    c0 = make_wavepacket(WavepacketSpec(k0, alpha, -geom.start_distance, "fermi-singlet"), chain.labels, clearance)
    psi0 = fermi_map(embed(c0, bmap, bbasis, origin), bbasis, fbasis)
    s2_0 = total_spin_squared(psi0, fbasis)
    pos = _fock_positions(fbasis, origin)
    res, out = _run(build_hamiltonian(lattice, fbasis), psi0, geom.total_time, accuracy, pos, pair_channels(pos),
                    n_snapshots)
    rho, weight = conditional_spin_state(res.final, fbasis, origin)
    out.entanglement = Entanglement(spin_entropy(rho), concurrence(rho), rho, weight)
    w = np.abs(res.final) ** 2
    same_site = pos[:, 0] == pos[:, 1]
    out.details = {
        "n_sites": n_sites,
        "dimension": fbasis.dim,
        "s2_drift": abs(total_spin_squared(res.final, fbasis) - s2_0),
        "double_occupancy": float(w[same_site].sum()),
    }
    return out


@dataclass(frozen=True)
class FermiChannels:
    """Output weights of a flying fermion hitting a resident spin-up fermion."""

    parallel: float  # both spins up, reflected
    bound_pair: float  # combined into a bound pair
    triplet_reflected: float
    singlet_reflected: float
    other: float
    double_occupancy: float
    s2_drift: float
    sz_drift: float
    norm_drift: float
    energy_drift: float

    @property
    def total(self) -> float:
        return self.parallel + self.bound_pair + self.triplet_reflected + self.singlet_reflected + self.other


def expected_fermi_channels(a: complex, b: complex, reflection: float, transmission: float) -> dict:
    """Channel weights implied by linearity from the singlet, triplet and parallel processes.

    ``reflection`` and ``transmission`` are the singlet combination
    probabilities at the incident momentum (``|r|^2`` and ``|t|^2``).
    """
    return {
        "parallel": abs(a) ** 2,
        "bound_pair": abs(b) ** 2 * transmission / 2,
        "triplet_reflected": abs(b) ** 2 / 2,
        "singlet_reflected": abs(b) ** 2 * reflection / 2,
    }


def run_fermi_arbitrary(
    a: complex,
    b: complex,
    k0: float = math.pi / 2,
    alpha: float = 0.05,
    onsite_u: float = 40.0,
    t: float = 1.0,
    t0: float = OPTIMAL_T0,
    n_sites: int | None = None,
    offres_onsite: float | None = None,
    clearance: float = 5.0,
    accuracy: float = 1e-12,
) -> FermiChannels:
    """Flying fermion ``a |up> + b |down>`` incident on a resident spin on site 1.

    ``(a, b) = (1, 0)`` is the parallel-spin input. Other spin inputs (pure
    triplet or singlet) go through :func:`run_fermi_spin_input`.
    """
    if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > 1e-9:
        raise ValueError("|a|^2 + |b|^2 must equal 1")
    # flying up + resident up, flying down + resident up
    return run_fermi_spin_input({"uu": a, "du": b}, k0, alpha, onsite_u, t, t0, n_sites, offres_onsite,
                                clearance, accuracy)


def run_fermi_spin_input(
    amplitudes: dict,
    k0: float = math.pi / 2,
    alpha: float = 0.05,
    onsite_u: float = 40.0,
    t: float = 1.0,
    t0: float = OPTIMAL_T0,
    n_sites: int | None = None,
    offres_onsite: float | None = None,
    clearance: float = 5.0,
    accuracy: float = 1e-12,
) -> FermiChannels:
    """Flying fermion plus resident fermion with a general two-spin amplitude.

    ``amplitudes`` maps ``"uu", "ud", "du", "dd"`` (flying spin first) to
    complex weights; e.g. ``{"ud": 1/sqrt2, "du": 1/sqrt2}`` is the
    ``S_z = 0`` triplet and ``{"ud": 1/sqrt2, "du": -1/sqrt2}`` the singlet.
    """
    unknown = set(amplitudes) - {"uu", "ud", "du", "dd"}
    if unknown:
        raise ValueError(f"unknown spin labels {sorted(unknown)}")
    norm = math.sqrt(sum(abs(v) ** 2 for v in amplitudes.values()))
    if norm == 0:
        raise ValueError("all spin amplitudes vanish")
    amp = {k: complex(v) / norm for k, v in amplitudes.items()}
    v_in = 2 * t * abs(math.sin(k0))
    geom = plan_geometry(alpha, v_in, max(2 * SQRT2 * t, t), clearance)
    n_sites, n_left, n_right = _bp_full_size(geom, n_sites, False)
    _check_fit(geom, n_left - 1, 2 * n_left - 2, "fermion combination")
    lattice, origin, chain, bmap = _fermi_setup(n_left, n_right, onsite_u, t, t0, offres_onsite)
    c0 = make_wavepacket(WavepacketSpec(-k0, alpha, geom.start_distance, "fermi-up-down-product"),
                         chain.labels, clearance)
    keep = bmap.labels >= 0
    xs = -bmap.labels[keep] - 1 + origin  # lattice index of the flying particle
    phi = c0[keep]
    r = np.full_like(xs, origin + 1)
    sectors = {}
    for key, (content, cfg) in {
        "uu": ((2, 0), np.c_[xs, r]),
        "ud": ((1, 1), np.c_[xs, r]),
        "du": ((1, 1), np.c_[r, xs]),
        "dd": ((0, 2), np.c_[xs, r]),
    }.items():
        if amp.get(key, 0) == 0:
            continue
        if content not in sectors:
            basis = build_basis(lattice, content, FERMION)
            sectors[content] = [basis, np.zeros(basis.dim, dtype=complex)]
        basis, vec = sectors[content]
        vec[basis.find(cfg)] += amp[key] * phi

    # sectors of different S_z evolve independently and S^2 has no cross terms between them
    finals = {}
    drift = dict(norm=0.0, energy=0.0, s2=0.0, sz=0.0)
    for content, (basis, vec) in sectors.items():
        res = propagate(build_hamiltonian(lattice, basis), vec, PropagationConfig(geom.total_time, accuracy))
        finals[content] = (basis, res.final)
        drift["norm"] = max(drift["norm"], res.norm_drift)
        drift["energy"] = max(drift["energy"], res.energy_drift)
        drift["s2"] += abs(total_spin_squared(res.final, basis) - total_spin_squared(vec, basis))
        drift["sz"] += 0.5 * abs(content[0] - content[1]) * abs(np.vdot(res.final, res.final).real - np.vdot(vec, vec).real)

    parallel = bound = trip = sing = 0.0
    double = 0.0
    total = 0.0
    for content, (basis, psi) in finals.items():
        w = np.abs(psi) ** 2
        total += float(w.sum())
        pos = _fock_positions(basis, origin)
        ch = pair_channels(pos)
        if content == (1, 1):
            bound += float(w[ch.bound].sum())
            double += float(w[pos[:, 0] == pos[:, 1]].sum())
            xs_all = np.arange(0, origin)
            rr = np.full_like(xs_all, origin + 1)
            a_ud = psi[basis.find(np.c_[xs_all, rr])]
            a_du = psi[basis.find(np.c_[rr, xs_all])]
            trip += float(np.sum(np.abs(a_ud + a_du) ** 2) / 2)
            sing += float(np.sum(np.abs(a_ud - a_du) ** 2) / 2)
        else:
            parallel += float(w[ch.separated].sum())
            bound += float(w[ch.bound].sum())
    other = total - parallel - bound - trip - sing
    values = (parallel, bound, trip, sing, other, double, drift["s2"], drift["sz"], drift["norm"], drift["energy"])
    return FermiChannels(*(float(v) for v in values))
