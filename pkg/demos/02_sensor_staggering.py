"""When symmetric sensors should take turns.

Two mirror-symmetric sensors watch two states whose disturbances are
strongly correlated. Each sensor may fire at most half of the time.
Should they fire together and rest together, or alternate? This script
enumerates every feasible schedule to settle the question, then shows
the solver finding the same answer without enumeration, and that the
pattern persists at a longer period.

Run:  python3 demos/02_sensor_staggering.py
"""

import numpy as np

import persched as ps


def banner(text):
    print()
    print(text)
    print("-" * len(text))


def two_sensor_system():
    return ps.SystemModel(
        A=np.array([[0.9, 0.1], [0.1, 0.9]]),
        B=np.eye(2),
        C=np.eye(2),
        Q=np.array([[1.0, 0.6], [0.6, 1.0]]),
        R=np.eye(2),
    )


def describe(mask):
    lines = []
    for row in mask:
        lines.append("  " + " ".join(str(int(v)) for v in row))
    return "\n".join(lines)


def main():
    sys = two_sensor_system()

    banner("Every feasible schedule, enumerated (K = 4, two shots each)")
    oracle = ps.exhaustive_search(sys, K=4, eta=2)
    print(f"schedules evaluated: {oracle.n_evaluated}")
    print(f"best J: {oracle.J:.6f}")
    print("best schedule (rows are steps, columns are sensors):")
    print(describe(oracle.schedule.mask))

    banner("A reasonable-looking alternative: fire together, rest together")
    paired = ps.Schedule(np.array([[1, 1], [0, 0], [1, 1], [0, 0]]))
    j_paired = ps.evaluate_schedule(sys, paired).J
    print(describe(paired.mask))
    print(f"J = {j_paired:.6f}, which is {(j_paired - oracle.J) / oracle.J:.1%} "
          "worse than the optimum")
    print("The correlated disturbances mean one sensor's measurement already")
    print("says a lot about the other state, so doubling up is wasteful.")

    banner("The solver finds the alternating pattern without enumerating")
    report = ps.run(sys, ps.AdmmConfig(period=4, gamma=0.0, eta=2))
    print(f"converged after {report.iterations} iterations")
    print(describe(report.schedule.mask))
    match = abs(report.j_polished - oracle.J) / oracle.J
    print(f"polished J = {report.j_polished:.6f} "
          f"(relative gap to the enumerated optimum: {match:.1e})")

    banner("Same story at period 6 (three shots each), where enumeration is larger")
    report6 = ps.run(sys, ps.AdmmConfig(period=6, gamma=0.0, eta=3))
    print(describe(report6.schedule.mask))
    one_per_step = (report6.schedule.mask.sum(axis=1) == 1).all()
    print(f"exactly one sensor per step: {bool(one_per_step)}")


if __name__ == "__main__":
    main()
