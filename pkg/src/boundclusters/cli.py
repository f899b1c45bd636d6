"""``simulate``: configuration-driven experiment runner.

Usage::

    simulate <experiment> --config run.json [--out DIR]
    simulate --list-experiments

A config is a JSON document ``{"schema_version": 1, "experiment": ...,
"params": {...}}``. Energies are in units of ``t`` and times in ``1/t``.
Unknown keys are rejected and every diagnostic names the offending field.
Each run writes ``summary.json`` (resolved config plus scalar results) and
CSV series formatted with 17 significant digits. Set ``BOUNDCLUSTERS_THREADS``
to pin the BLAS/OpenMP thread count.
"""
from __future__ import annotations

import os
import sys

THREAD_ENV = "BOUNDCLUSTERS_THREADS"


def _pin_threads() -> None:
    # must run before numpy loads its BLAS
    n = os.environ.get(THREAD_ENV)
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = n


_pin_threads()

import argparse  # noqa: E402
import csv  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import types  # noqa: E402
import typing  # noqa: E402
from dataclasses import MISSING, asdict, dataclass, fields  # noqa: E402
from pathlib import Path  # noqa: E402
from typing import Callable  # noqa: E402

import numpy as np  # noqa: E402

from . import bands, dynamics, scattering  # noqa: E402
from .effective import OPTIMAL_T0, bp_ring, bp_scattering_chain  # noqa: E402
from .lattice import GeometryError, LatticeSpec  # noqa: E402

SCHEMA_VERSION = 1
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------- parameter sets


@dataclass(frozen=True)
class BandParams:
    n_sites: int = 41
    t: float = 1.0
    onsite_u: float = 40.0
    nn_v: float = 40.0


@dataclass(frozen=True)
class TrimerBandParams:
    t: float = 1.0
    n_k: int = 200


@dataclass(frozen=True)
class SweepParams:
    t: float = 1.0
    t0: float = OPTIMAL_T0
    n_points: int = 1000
    k_min: float = 0.0
    k_max: float = math.pi / 2
    lead_length: int = 8


@dataclass(frozen=True)
class BPSeparateParams:
    k0: float
    alpha: float
    model: str = "effective"
    onsite_u: float = 40.0
    t: float = 1.0
    t0: float = OPTIMAL_T0
    offres_onsite: float | None = None
    n_sites: int | None = None
    clearance: float = 5.0
    accuracy: float = 1e-12
    n_snapshots: int = 0


@dataclass(frozen=True)
class BPCombineParams:
    k0: float
    alpha: float
    model: str = "effective"
    resident: bool = True
    onsite_u: float = 40.0
    t: float = 1.0
    t0: float = OPTIMAL_T0
    offres_onsite: float | None = None
    n_sites: int | None = None
    clearance: float = 5.0
    accuracy: float = 1e-12
    n_snapshots: int = 0


@dataclass(frozen=True)
class BTSeparateParams:
    k0: float
    alpha: float
    model: str = "effective"
    nn_v: float = 40.0
    t: float = 1.0
    n_sites: int | None = None
    clearance: float = 5.0
    accuracy: float = 1e-12
    n_snapshots: int = 0


@dataclass(frozen=True)
class FermiSingletParams:
    k0: float
    alpha: float
    onsite_u: float = 40.0
    t: float = 1.0
    t0: float = OPTIMAL_T0
    offres_onsite: float | None = None
    n_sites: int | None = None
    clearance: float = 5.0
    accuracy: float = 1e-12
    n_snapshots: int = 0


@dataclass(frozen=True)
class FermiArbitraryParams:
    k0: float
    alpha: float
    a: list  # [re, im] amplitude of the flying spin up
    b: list  # [re, im] amplitude of the flying spin down
    onsite_u: float = 40.0
    t: float = 1.0
    t0: float = OPTIMAL_T0
    offres_onsite: float | None = None
    n_sites: int | None = None
    clearance: float = 5.0
    accuracy: float = 1e-12


@dataclass(frozen=True)
class EffectiveCompareParams:
    n_sites: int = 41
    onsite_u: float = 40.0
    t: float = 1.0


# ---------------------------------------------------------------- validation


def _type_name(tp) -> str:
    return getattr(tp, "__name__", str(tp))


def _coerce(path: str, value, tp):
    origin = typing.get_origin(tp)
    if origin in (typing.Union, types.UnionType):
        args = typing.get_args(tp)
        if value is None and type(None) in args:
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return _coerce(path, value, inner)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected a boolean, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(path, f"expected a finite number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if tp is list:  # complex amplitude as [re, im]
        if (
            not isinstance(value, list)
            or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
        ):
            raise ConfigError(path, f"expected [re, im], got {value!r}")
        return [float(v) for v in value]
    raise TypeError(f"unsupported field type {_type_name(tp)}")


def _build_params(cls, raw) -> object:
    if not isinstance(raw, dict):
        raise ConfigError("params", "expected an object")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"params.{key}", f"unknown key (allowed: {', '.join(sorted(known))})")
    values = {}
    for name, f in known.items():
        if name in raw:
            values[name] = _coerce(f"params.{name}", raw[name], hints[name])
        elif f.default is MISSING:
            raise ConfigError(f"params.{name}", "required field missing")
    return cls(**values)


def _require(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _check_common(p) -> None:
    names = {f.name for f in fields(p)}
    if "alpha" in names:
        _require(0 < p.alpha <= 0.2, "params.alpha", "must lie in (0, 0.2]")
    if "k0" in names:
        _require(0 < p.k0 < math.pi, "params.k0", "must lie in (0, pi)")
    if "model" in names:
        _require(p.model in ("effective", "full"), "params.model", "must be 'effective' or 'full'")
    if "accuracy" in names:
        _require(0 < p.accuracy <= 1e-6, "params.accuracy", "must lie in (0, 1e-6]")
    if "n_snapshots" in names:
        _require(p.n_snapshots >= 0, "params.n_snapshots", "must be non-negative")
    if "clearance" in names:
        _require(p.clearance > 0, "params.clearance", "must be positive")
    if "t" in names:
        _require(p.t > 0, "params.t", "must be positive")


# ---------------------------------------------------------------- output helpers


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % x
    return str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_trajectory(out_dir: Path, outcome) -> list[str]:
    traj = outcome.trajectory
    if traj is None:
        return []
    write_csv(
        out_dir / "populations.csv",
        ["time", "p_separated", "p_bound", "p_other"],
        [(t, *p) for t, p in zip(traj.times, traj.populations)],
    )
    write_csv(
        out_dir / "densities.csv",
        ["time", *[f"n_{s}" for s in traj.sites]],
        [(t, *d) for t, d in zip(traj.times, traj.densities)],
    )
    return ["populations.csv", "densities.csv"]


# ---------------------------------------------------------------- experiments


def run_band(p: BandParams, out_dir: Path) -> dict:
    _require(p.n_sites >= 3 and p.n_sites % 2 == 1, "params.n_sites", "must be an odd integer >= 3")
    lattice = LatticeSpec(p.n_sites, "periodic", p.t, p.onsite_u, p.nn_v)
    rows, counts = [], {}
    resonant_dev = 0.0
    resonant = []
    for k in bands.momentum_grid(p.n_sites):
        for sol in bands.solve_block(bands.momentum_block(k, lattice)):
            rows.append((k, sol.energy, sol.classification))
            counts[sol.classification] = counts.get(sol.classification, 0) + 1
            if sol.classification == bands.RESONANT:
                lo, hi = bands.rbp_band(k, p.onsite_u, p.t)
                resonant_dev = max(resonant_dev, min(abs(sol.energy - lo), abs(sol.energy - hi)))
                resonant.append(sol.energy)
    write_csv(out_dir / "band.csv", ["k", "energy", "classification"], rows)
    results = {"counts": counts}
    if resonant:
        results.update(
            resonant_max_deviation=resonant_dev,
            resonant_bandwidth=max(resonant) - min(resonant),
            resonant_bandwidth_reference=4 * math.sqrt(2) * p.t,
            tolerance=5 * p.t**2 / abs(p.onsite_u) if p.onsite_u else math.inf,
        )
    return {"results": results, "files": ["band.csv"]}


def run_trimer_band(p: TrimerBandParams, out_dir: Path) -> dict:
    _require(p.n_k >= 2, "params.n_k", "must be >= 2")
    ks = np.linspace(-math.pi, math.pi, p.n_k)
    rows, worst = [], 0.0
    for k in ks:
        roots = bands.trimer_band(k, p.t).roots
        worst = max(worst, float(np.max(np.abs(bands.trimer_cubic(roots, k, p.t)))))
        rows.append((k, *roots))
    write_csv(out_dir / "trimer_band.csv", ["k", "lambda_0", "lambda_1", "lambda_2"], rows)
    gaps = [
        {"lower": g.lower, "upper": g.upper, "width": g.width, "q": g.q} for g in bands.trimer_gaps(p.t)
    ]
    return {"results": {"max_cubic_residual": worst, "gaps": gaps}, "files": ["trimer_band.csv"]}


def run_transmission_sweep(p: SweepParams, out_dir: Path) -> dict:
    _require(p.n_points >= 1, "params.n_points", "must be >= 1")
    _require(0 <= p.k_min < p.k_max <= math.pi, "params.k_max", "need 0 <= k_min < k_max <= pi")
    _require(p.lead_length >= 2, "params.lead_length", "must be >= 2")
    chain, _ = bp_scattering_chain(p.t, p.t0, p.lead_length, p.lead_length)
    ks = scattering.open_grid(p.n_points, p.k_min, p.k_max, include_hi=p.k_max < math.pi)
    curve = scattering.sweep(chain, ks)
    write_csv(out_dir / "transmission.csv", ["k0", "P", "v_g"],
              zip(curve.k0, curve.probability, curve.group_velocity))
    unitarity = max(scattering.junction_scattering(chain, k).unitarity_error() for k in ks)
    results = {"n_rows": len(ks), "max_unitarity_error": unitarity}
    if abs(p.t0 - OPTIMAL_T0 * p.t) < 1e-12:
        closed = scattering.bp_separation_closed_form(ks)
        results["max_closed_form_deviation"] = float(np.max(np.abs(curve.probability - closed)))
    return {"results": results, "files": ["transmission.csv"]}


def _outcome_result(outcome, out_dir: Path) -> dict:
    files = _write_trajectory(out_dir, outcome)
    return {"results": outcome.to_dict(), "files": files}


def run_bp_separate(p: BPSeparateParams, out_dir: Path) -> dict:
    return _outcome_result(dynamics.run_bp_separation(**asdict(p)), out_dir)


def run_bp_combine(p: BPCombineParams, out_dir: Path) -> dict:
    return _outcome_result(dynamics.run_bp_combination(**asdict(p)), out_dir)


def run_bt_separate(p: BTSeparateParams, out_dir: Path) -> dict:
    return _outcome_result(dynamics.run_bt_separation(**asdict(p)), out_dir)


def run_fermi_singlet(p: FermiSingletParams, out_dir: Path) -> dict:
    return _outcome_result(dynamics.run_fermi_singlet(**asdict(p)), out_dir)


def run_fermi_arbitrary(p: FermiArbitraryParams, out_dir: Path) -> dict:
    a, b = complex(*p.a), complex(*p.b)
    _require(abs(abs(a) ** 2 + abs(b) ** 2 - 1) < 1e-9, "params.b", "|a|^2 + |b|^2 must equal 1")
    kwargs = asdict(p)
    kwargs.update(a=a, b=b)
    got = dynamics.run_fermi_arbitrary(**kwargs)
    chain, _ = bp_scattering_chain(p.t, p.t0, 8, 8)
    plane = scattering.junction_scattering(chain, p.k0, incident="right")
    expected = dynamics.expected_fermi_channels(a, b, plane.reflection, plane.transmission)
    results = {f.name: getattr(got, f.name) for f in fields(got)}
    results["total"] = got.total
    results["expected"] = expected
    return {"results": results, "files": []}


def run_effective_compare(p: EffectiveCompareParams, out_dir: Path) -> dict:
    _require(p.n_sites >= 3 and p.n_sites % 2 == 1, "params.n_sites", "must be an odd integer >= 3")
    lattice = LatticeSpec(p.n_sites, "periodic", p.t, p.onsite_u, p.onsite_u)
    _, full = bands.bound_energies(lattice, bands.RESONANT)
    chain, _ = bp_ring(p.n_sites, p.t)
    eff = p.onsite_u + np.linalg.eigvalsh(chain.operator().matrix.toarray())
    full, eff = np.sort(full), np.sort(eff)
    results = {"n_full": len(full), "n_effective": len(eff)}
    if len(full) == len(eff):
        write_csv(out_dir / "effective_compare.csv", ["index", "full", "effective"],
                  zip(range(len(full)), full, eff))
        results["max_deviation"] = float(np.max(np.abs(full - eff)))
        results["tolerance"] = 5 * p.t**2 / abs(p.onsite_u)
        files = ["effective_compare.csv"]
    else:
        files = []
    return {"results": results, "files": files}


@dataclass(frozen=True)
class Experiment:
    params: type
    run: Callable
    summary: str


EXPERIMENTS: dict[str, Experiment] = {
    "band": Experiment(BandParams, run_band, "two-boson ring spectrum by momentum block with bound-state labels"),
    "trimer-band": Experiment(TrimerBandParams, run_trimer_band, "bound-triple Bloch bands and gaps"),
    "transmission-sweep": Experiment(SweepParams, run_transmission_sweep,
                                     "plane-wave separation probability P(k0) and group velocity"),
    "bp-separate": Experiment(BPSeparateParams, run_bp_separate, "bound-pair wavepacket separated at the impurity"),
    "bp-combine": Experiment(BPCombineParams, run_bp_combine, "single particle combined with the resident one"),
    "bt-separate": Experiment(BTSeparateParams, run_bt_separate, "bound-triple wavepacket separated at the junction"),
    "fermi-singlet": Experiment(FermiSingletParams, run_fermi_singlet,
                                "singlet fermion pair separation and spin entanglement"),
    "fermi-arbitrary": Experiment(FermiArbitraryParams, run_fermi_arbitrary,
                                  "flying fermion with arbitrary spin on a resident spin-up fermion"),
    "effective-compare": Experiment(EffectiveCompareParams, run_effective_compare,
                                    "resonant-pair energies: full ring vs effective chain"),
}


# ---------------------------------------------------------------- config loading


def parse_config(doc, experiment: str | None = None):
    """Validate a config document; returns ``(experiment_name, params)``."""
    if not isinstance(doc, dict):
        raise ConfigError("config", "expected a JSON object")
    allowed = {"schema_version", "experiment", "params"}
    for key in doc:
        if key not in allowed:
            raise ConfigError(key, f"unknown key (allowed: {', '.join(sorted(allowed))})")
    if "schema_version" not in doc:
        raise ConfigError("schema_version", "required field missing")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {doc['schema_version']!r}, expected {SCHEMA_VERSION}")
    name = doc.get("experiment", experiment)
    if name is None:
        raise ConfigError("experiment", "required field missing")
    if name not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {name!r}")
    if experiment is not None and name != experiment:
        raise ConfigError("experiment", f"config is for {name!r} but subcommand is {experiment!r}")
    params = _build_params(EXPERIMENTS[name].params, doc.get("params", {}))
    _check_common(params)
    return name, params


def load_config(path: str | Path, experiment: str | None = None):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return parse_config(doc, experiment)


def run_experiment(name: str, params, out_dir: str | Path) -> dict:
    """Run one experiment and write ``summary.json`` plus CSV files into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    produced = EXPERIMENTS[name].run(params, out_dir)
    summary = {
        "schema_version": SCHEMA_VERSION,
        "experiment": name,
        "config": {"schema_version": SCHEMA_VERSION, "experiment": name, "params": asdict(params)},
        "units": "energies in units of t, time in 1/t",
        "results": produced["results"],
        "files": sorted(produced["files"]),
    }
    summary = _jsonable(summary)
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _list_experiments() -> str:
    width = max(map(len, EXPERIMENTS))
    return "\n".join(f"{name.ljust(width)}  {exp.summary}" for name, exp in EXPERIMENTS.items())


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="simulate", description="Few-particle extended Hubbard experiments.")
    parser.add_argument("--list-experiments", action="store_true", help="list experiments and exit")
    parser.add_argument("experiment", nargs="?", choices=sorted(EXPERIMENTS), help="experiment to run")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="output directory (default: out/<experiment>)")
    args = parser.parse_args(argv)

    if args.list_experiments:
        print(_list_experiments())
        return 0
    if args.experiment is None or args.config is None:
        parser.print_usage(sys.stderr)
        print("simulate: error: an experiment and --config are required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        name, params = load_config(args.config, args.experiment)
        out_dir = Path(args.out) if args.out else Path("out") / name
        summary = run_experiment(name, params, out_dir)
    except ConfigError as exc:
        print(f"simulate: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GeometryError as exc:
        print(f"simulate: geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    print(json.dumps(summary["results"], indent=2, sort_keys=True))
    print(f"wrote {out_dir}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
