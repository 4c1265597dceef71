"""Acceptance gate: every criterion prints one pass/fail line.

Run with ``pytest -v tests/test_acceptance.py -s`` to see the lines as they
complete; the full suite is evaluated once per session and each criterion is
asserted by its own test case.
"""

import pytest

from conemetric.acceptance import run_acceptance

IDS = {
    1: "football spectrum vs oracle",
    2: "eigenvalue count formula",
    3: "factorization roundtrip",
    4: "two-point radical formulas",
    5: "three-point expansion coefficients",
    6: "multiplicative error law",
    7: "splitting-factor derivative vanishing",
    8: "Gauss-Bonnet convergence",
    9: "indicial expansion regularity",
    10: "pairing closed form",
    11: "football pairing degeneracy",
    12: "spectral flow crossings",
}


@pytest.fixture(scope="module")
def results():
    out = {r.index: r for r in run_acceptance()}
    assert sorted(out) == sorted(IDS)
    return out


@pytest.mark.parametrize("index", sorted(IDS),
                         ids=[f"criterion-{i:02d}-{IDS[i]}".replace(" ", "-")
                              for i in sorted(IDS)])
def test_criterion(results, index):
    r = results[index]
    status = "PASS" if r.passed else "FAIL"
    print(f"[{status}] criterion {r.index:2d} ({r.name}): {r.detail} "
          f"[{r.elapsed:.2f}s]")
    assert r.name == IDS[index]
    assert r.passed, f"criterion {index} ({r.name}): {r.detail}"
