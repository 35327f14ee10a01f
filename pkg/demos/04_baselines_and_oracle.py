"""Is the solver actually finding good schedules?

Two independent yardsticks say yes on a plant small enough to check.
The exhaustive oracle evaluates every feasible schedule, so it knows the
true optimum. The random baseline draws schedules uniformly from the
same feasible set, so it knows what "no cleverness" costs. This script
runs both against the solver on a four-node line-diffusion plant.

The CLI equivalent writes the same comparison to CSV:

    persched compare configs/compare_line4.yaml --out out/compare

Run:  python3 demos/04_baselines_and_oracle.py
"""

import numpy as np

import persched as ps
from persched.model import FieldGeometry, build_diffusion_system


def banner(text):
    print()
    print(text)
    print("-" * len(text))


def main():
    geom = FieldGeometry(
        ell_h=3,
        ell_v=0,
        spacing=1.2,
        sample_interval=0.05,
        sensor_sites=((0, 0), (2, 0)),
    )
    sys = build_diffusion_system(geom, q_scale=1.0, r_scale=1.0)
    period, eta = 4, 2

    banner("The solver's answer")
    report = ps.run(sys, ps.AdmmConfig(period=period, gamma=0.0, eta=eta))
    print(f"converged after {report.iterations} iterations, "
          f"J = {report.j_polished:.6f}")
    print(report.schedule.to_text())

    banner("Yardstick 1: the exhaustive oracle")
    oracle = ps.exhaustive_search(sys, period, eta)
    gap = (report.j_polished - oracle.J) / oracle.J
    print(f"evaluated all {oracle.n_evaluated} feasible schedules")
    print(f"true optimum J = {oracle.J:.6f}")
    print(f"solver's relative gap: {gap:.2e}")

    banner("Yardstick 2: random schedules with the same budget")
    baseline = ps.random_baseline(
        sys,
        period,
        eta,
        total_activations=report.schedule.total_activations,
        trials=200,
        seed=11,
    )
    print(f"{len(baseline.values)} uniform draws with "
          f"{report.schedule.total_activations} activations each")
    print(f"baseline J: mean {baseline.mean:.6f}, std {baseline.std:.6f}, "
          f"best {baseline.min:.6f}, worst {baseline.max:.6f}")
    beaten = np.mean(np.asarray(baseline.values) >= report.j_polished)
    print(f"the solver matches or beats {beaten:.0%} of the random draws")

    banner("Reading the gap")
    print("On a plant this small the solver lands on the true optimum, and")
    print("random schedules average only about one percent worse: with four")
    print("states there is little room to be clever. The gaps grow with the")
    print("state dimension; see demo 03 for the 25-state benchmark.")


if __name__ == "__main__":
    main()
