"""Where the three-boson junction leaks out of the bound-triple chain.

Collects all configurations whose diagonal energy lies within ``--window``
of the cluster energy 2V and keeps the part of that degenerate manifold
that hopping connects to the effective map. Every member outside the map is
a resonant channel the effective chain leaves out. A small full run then
reports how much weight ends outside the map.
"""
import argparse
from collections import Counter

import numpy as np
from scipy.sparse.csgraph import connected_components

from boundclusters.dynamics import _bt_chain_for_lattice, bt_junction_lattice, run_bt_separation
from boundclusters.fock import build_basis, build_hamiltonian, diagonal_energies


def classify(pos) -> str:
    right = sum(p >= 2 for p in pos)
    if right >= 2:
        return "two or more on the raised lead"
    if right == 1:
        return "one on the lead, two left of it" if pos[1] <= 0 else "one on the lead, one on site 1"
    return "all at x <= 1"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nn-v", type=float, default=40.0)
    ap.add_argument("--window", type=float, default=4.0, help="energy window around 2V in units of t")
    ap.add_argument("--skip-run", action="store_true")
    args = ap.parse_args()
    v = args.nn_v
    n_left, n_right = 10, 10
    lattice, origin = bt_junction_lattice(n_left, n_right, v)
    basis = build_basis(lattice, 3)
    h = build_hamiltonian(lattice, basis).matrix
    diag = diagonal_energies(lattice, basis)
    _, bmap = _bt_chain_for_lattice(n_left, n_right, 1.0)
    inside = np.zeros(basis.dim, bool)
    inside[bmap.indices(basis, origin)] = True
    near = np.flatnonzero(np.abs(diag - 2 * v) <= args.window)
    _, comp = connected_components(abs(h[near][:, near]) > 0, directed=False)
    reached = np.isin(comp, np.unique(comp[inside[near]]))
    pos = basis.configs[near] - origin
    # keep away from the far ends of the finite lattice
    bulk = (pos.min(axis=1) > -n_left + 2) & (pos.max(axis=1) < n_right - 2)
    leaks = reached & ~inside[near] & bulk
    print(f"{int((inside[near] & bulk).sum())} mapped configurations; {int(leaks.sum())} configurations outside "
          f"the map in the same degenerate manifold (|E_diag - 2V| <= {args.window} t):")
    kinds = Counter()
    for p, e in zip(pos[leaks], diag[near][leaks]):
        kind = classify(tuple(int(x) for x in p))
        kinds[kind] += 1
        if kinds[kind] <= 4:
            print(f"  {tuple(int(x) for x in p)}  E_diag - 2V = {e - 2 * v:+.2f}  [{kind}]")
    for kind, n in kinds.items():
        print(f"{n:5d}  {kind}")
    if not args.skip_run:
        out = run_bt_separation(alpha=0.2, model="full", clearance=3.0, nn_v=v)
        d = out.details
        print(f"full alpha=0.2: P_sep {out.p_separated:.3f} vs effective {d['effective_p_separated']:.3f}; "
              f"residual {d['residual_norm']:.3f}, two right {d['two_right_weight']:.3f}")


if __name__ == "__main__":
    main()
