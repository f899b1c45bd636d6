"""Time evolution ``exp(-i H t) psi`` by Chebyshev expansion.

The Hamiltonian is shifted and scaled into ``[-1, 1]`` using a Gershgorin
interval, then ``exp(-i H dt) = exp(-i c dt) sum_k (2 - delta_k0) (-i)**k
J_k(a dt) T_k(H_s)``. The series is cut once the Bessel tail, bounded by
``(x/2)**k / k!``, drops below the requested accuracy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln, jv

from .fock import SparseOperator


class ConvergenceError(RuntimeError):
    """The expansion cannot reach the requested accuracy."""


@dataclass(frozen=True)
class PropagationConfig:
    total_time: float
    accuracy: float = 1e-12
    max_step: float | None = None  # default: a few hundred Chebyshev terms per step
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.total_time >= 0 and math.isfinite(self.total_time)):
            raise ValueError("total_time must be finite and non-negative")
        if not 0 < self.accuracy <= 1e-6:
            raise ValueError("accuracy must lie in (0, 1e-6]")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if any(s < 0 or s > self.total_time for s in self.snapshot_times):
            raise ValueError("snapshot times must lie in [0, total_time]")


@dataclass
class PropagationResult:
    final: np.ndarray
    times: list[float] = field(default_factory=list)
    snapshots: list[np.ndarray] = field(default_factory=list)
    norm_drift: float = 0.0
    energy_drift: float = 0.0
    n_matvec: int = 0


def _as_matrix(op):
    if isinstance(op, SparseOperator):
        return op.matrix
    return op


def _matvec_factory(m):
    """Matrix-vector product; real matrices act on real and imaginary parts separately."""
    if sp.issparse(m):
        m = m.tocsr()
        if np.iscomplexobj(m.data) and not np.any(m.data.imag):
            m = m.real.tocsr()
    elif np.iscomplexobj(m) and not np.any(np.imag(m)):
        m = np.real(m)
    if np.iscomplexobj(m.data if sp.issparse(m) else m):
        return lambda v: m @ v
    return lambda v: (m @ v.real) + 1j * (m @ v.imag)


def _bounds(m) -> tuple[float, float]:
    if sp.issparse(m):
        diag = m.diagonal().real
        radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(diag)
    else:
        diag = np.real(np.diag(m))
        radius = np.abs(m).sum(axis=1) - np.abs(diag)
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def chebyshev_coefficients(x: float, accuracy: float) -> np.ndarray:
    """``(2 - delta_k0) (-i)**k J_k(x)`` truncated where the tail drops below ``accuracy``."""
    if accuracy < 1e-15:
        raise ConvergenceError(f"accuracy {accuracy} is below double precision")
    n = int(x + 20 * max(x, 1.0) ** (1 / 3) + 40)
    while True:
        k = np.arange(n)
        # log of the tail bound (x/2)**k / k!
        log_bound = k * math.log(max(x / 2, 1e-300)) - gammaln(k + 1)
        ok = np.nonzero((k > x) & (log_bound < math.log(accuracy / 4)))[0]
        if ok.size:
            n_keep = int(ok[0]) + 1
            break
        n *= 2
        if n > 10**7:
            raise ConvergenceError("Chebyshev series does not converge")
    k = np.arange(n_keep)
    coef = (-1j) ** (k % 4) * jv(k, x)
    coef[1:] *= 2
    return coef


def chebyshev_step(matvec, psi: np.ndarray, dt: float, bounds: tuple[float, float], accuracy: float):
    """One step ``exp(-i H dt) psi``; returns the new state and the matvec count."""
    lo, hi = bounds
    center = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo) * (1 + 1e-6) + 1e-12
    coef = chebyshev_coefficients(half * dt, accuracy)
    scaled = lambda v: (matvec(v) - center * v) / half
    t_prev = psi.astype(complex, copy=True)
    out = coef[0] * t_prev
    if len(coef) == 1:
        return out * np.exp(-1j * center * dt), 0
    t_cur = scaled(t_prev)
    out += coef[1] * t_cur
    for c in coef[2:]:
        t_prev, t_cur = t_cur, 2 * scaled(t_cur) - t_prev
        out += c * t_cur
    if not np.all(np.isfinite(out)):
        raise ConvergenceError("non-finite amplitudes during propagation")
    return out * np.exp(-1j * center * dt), len(coef) - 1


def propagate(
    op,
    psi0: np.ndarray,
    config: PropagationConfig,
    observer: Callable[[float, np.ndarray], None] | None = None,
) -> PropagationResult:
    """Evolve ``psi0`` to ``config.total_time``.

    ``op`` may be a :class:`SparseOperator`, a scipy sparse matrix or a dense
    array. States at ``config.snapshot_times`` are stored; ``observer`` is
    called with ``(time, psi)`` at every snapshot and at the final time.
    """
    m = _as_matrix(op)
    if m.shape[0] != m.shape[1] or m.shape[0] != psi0.shape[0]:
        raise ValueError(f"operator of shape {m.shape} cannot act on a state of length {psi0.shape[0]}")
    matvec = _matvec_factory(m)
    bounds = _bounds(m)
    half = 0.5 * (bounds[1] - bounds[0])
    max_step = config.max_step if config.max_step is not None else 400.0 / max(half, 1e-12)

    psi = np.asarray(psi0, dtype=complex).copy()
    norm0 = np.linalg.norm(psi)
    energy0 = float(np.vdot(psi, matvec(psi)).real) / norm0**2 if norm0 else 0.0
    result = PropagationResult(final=psi)
    marks = sorted(set(config.snapshot_times) | {config.total_time})
    now = 0.0
    for mark in marks:
        span = mark - now
        n_steps = max(1, math.ceil(span / max_step - 1e-12)) if span > 0 else 0
        for _ in range(n_steps):
            psi, used = chebyshev_step(matvec, psi, span / n_steps, bounds, config.accuracy)
            result.n_matvec += used
        now = mark
        if mark in config.snapshot_times:
            result.times.append(mark)
            result.snapshots.append(psi.copy())
        if observer is not None:
            observer(mark, psi)
    result.final = psi
    if norm0:
        norm = np.linalg.norm(psi)
        result.norm_drift = abs(norm / norm0 - 1.0)
        result.energy_drift = abs(float(np.vdot(psi, matvec(psi)).real) / norm**2 - energy0)
    return result


def evolve(op, psi0: np.ndarray, time: float, accuracy: float = 1e-12) -> np.ndarray:
    """Shorthand for the final state of :func:`propagate`."""
    return propagate(op, psi0, PropagationConfig(time, accuracy)).final
