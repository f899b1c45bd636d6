"""Headline numbers: bound-pair and bound-triple separation, combination and fermion entanglement.

``--full`` adds the two-boson (N=400) and three-boson (N=120) lattice runs,
which take about half a minute and a few minutes respectively.
"""
import argparse
import math
import time

from boundclusters.dynamics import (
    run_bp_combination, run_bp_separation, run_bt_separation, run_fermi_arbitrary, run_fermi_singlet,
)

K0 = math.pi / 2


def timed(label, fn):
    start = time.perf_counter()
    value = fn()
    print(f"{label:<48s} {value:<40s} {time.perf_counter() - start:7.1f} s", flush=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true", help="include the many-body lattice runs")
    args = ap.parse_args()
    timed("BP separation, effective, alpha=0.01", lambda: f"P = {run_bp_separation(K0, 0.01).p_separated:.6f}")
    timed("BP combination, effective, alpha=0.01",
          lambda: f"P = {run_bp_combination(K0, 0.01).p_bound_reflected:.6f}")
    timed("BT separation, effective, alpha=0.01", lambda: f"P = {run_bt_separation(K0, 0.01).p_separated:.4f}")

    def singlet():
        e = run_fermi_singlet(K0, 0.05).entanglement
        return f"S = {e.entropy:.6f} (ln2 = {math.log(2):.6f}), C = {e.concurrence:.6f}"

    timed("fermion singlet separation, alpha=0.05", singlet)

    def mixed():
        ch = run_fermi_arbitrary(0.6, 0.8j, K0, 0.05)
        return f"par {ch.parallel:.3f} BP {ch.bound_pair:.3f} trip {ch.triplet_reflected:.3f}"

    timed("fermion 0.6|up> + 0.8i|down>, alpha=0.05", mixed)
    if args.full:
        def bp_full():
            o = run_bp_separation(K0, 0.05, model="full", n_sites=400)
            return f"P = {o.p_separated:.5f} (effective {o.details['effective_p_separated']:.5f})"

        def bt_full():
            o = run_bt_separation(K0, 0.05, model="full", n_sites=120, clearance=3.0)
            return f"P = {o.p_separated:.4f} (effective {o.details['effective_p_separated']:.4f})"

        timed("BP separation, two bosons N=400, alpha=0.05", bp_full)
        timed("BT separation, three bosons N=120, alpha=0.05", bt_full)


if __name__ == "__main__":
    main()
