"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one ``[PASS]``/``[FAIL] criterion N: ...`` line; the lines are
printed in the pytest terminal summary.  Run directly with
``python3 tests/test_acceptance.py`` to print them without pytest.
"""

import time

import pytest

from drboost.bench import verify

RESULTS = []

CRITERIA = [
    (1, "unbiasedness", verify.check_unbiasedness, 2.0),
    (2, "variance bound", verify.check_variance_bound, 10.0),
    (3, "key inequality", verify.check_key_inequality, 30.0),
    (4, "smoothness", verify.check_smoothness, 30.0),
    (5, "boundedness", verify.check_boundedness, 30.0),
    (6, "stationary-point ratios", verify.check_stationary_ratios, 60.0),
    (7, "local-max escape (k=5)", verify.check_local_max_escape, 30.0),
    (8, "offline QP", verify.check_offline_qp, 300.0),
    (9, "online regret", verify.check_online_regret, 600.0),
    (10, "oracle equivalence", verify.check_oracles_brute_force, 60.0),
]


DETERMINISM_CONFIGS = ("smoke.json", "smoke_online.json", "offline_qp.json", "special_case_k5_xloc.json")


def _determinism():
    parts, ok = [], True
    for name in DETERMINISM_CONFIGS:
        t0 = time.perf_counter()
        check = verify.check_determinism(verify.CONFIG_DIR / name)
        elapsed = time.perf_counter() - t0
        ok = ok and check.passed and elapsed < 60.0
        parts.append(f"{name}: identical={check.passed} in {elapsed:.1f}s")
    return verify.Check("determinism", ok, "; ".join(parts))


# 60 s budget applies per config inside _determinism
CRITERIA.append((11, "determinism", _determinism, 60.0 * len(DETERMINISM_CONFIGS)))


def evaluate(number, fn, budget):
    t0 = time.perf_counter()
    check = fn()
    elapsed = time.perf_counter() - t0
    ok = check.passed and elapsed < budget
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {check.name}: {check.detail} "
            f"({elapsed:.1f}s, budget {budget:.0f}s)")
    RESULTS.append(line)
    print(line)
    return check, elapsed


@pytest.mark.slow
@pytest.mark.parametrize("number,name,fn,budget", CRITERIA, ids=[f"criterion{c[0]:02d}" for c in CRITERIA])
def test_criterion(number, name, fn, budget):
    check, elapsed = evaluate(number, fn, budget)
    assert check.passed, check.detail
    assert elapsed < budget, f"took {elapsed:.1f}s, budget {budget:.0f}s"


if __name__ == "__main__":
    for number, _, fn, budget in CRITERIA:
        evaluate(number, fn, budget)
