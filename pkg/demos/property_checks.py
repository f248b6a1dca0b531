"""Run the numerical property suites and print a one-line verdict per check.

The same suites back the `influence-game verify` command: propagator
stochasticity, convexity of the jump compositions, analytic-vs-numeric
gradient agreement, and solver-vs-exhaustive-search agreement.

Usage: python demos/property_checks.py
"""

from influencegame import run_suite


def main():
    for suite in ("lemmas", "gradients", "oracles"):
        report = run_suite(suite, seed=0)
        print(f"suite {suite!r}: {'PASS' if report['passed'] else 'FAIL'}")
        for check in report["checks"]:
            details = {k: v for k, v in check.items() if k not in ("name", "passed")}
            print(f"  [{'ok' if check['passed'] else 'XX'}] {check['name']}  {details}")


if __name__ == "__main__":
    main()
