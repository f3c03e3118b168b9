"""Acceptance criteria 1-15.

Each test prints one ``PASS``/``FAIL criterion N: ...`` line (visible with
``pytest -s``) and then asserts.  Run directly with
``python3 tests/test_acceptance.py`` for the summary lines alone.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from qcmoments.brackets import bracket_oracle, moment_bracket, quantum_bracket
from qcmoments.dynamics import (
    MomentState,
    ensemble_evolve,
    gaussian_cloud,
    gaussian_state,
    integrate,
    sample_moments,
    sample_standard_errors,
)
from qcmoments.eomgen import (
    HamiltonianSpec,
    chain_rule_derivative,
    derive_eom,
    heisenberg_combination,
    heisenberg_drift,
    linear_eom_subsystem,
)
from qcmoments.inequalities import (
    CONVENTION,
    FAMILIES,
    check_family,
    equal_uncertainty_reduction,
    quantum_ineq_from_words,
    reduce_to_pure_pair,
    strongest_binomial_constraints,
    verify_appendix,
)
from qcmoments.stationary import StationaryProblem, moment_table
from qcmoments.symcore import HBAR, ZERO, MomentKey, moment

half = Fraction(1, 2)
HARMONIC = HamiltonianSpec({(2, 0): half, (0, 2): half})
QUARTIC = HamiltonianSpec({(2, 0): half, (0, 4): Fraction(1, 4)})
CUBIC = HamiltonianSpec({(2, 0): half, (0, 3): Fraction(1, 3)})
E, hbar = sympy.symbols("E hbar")


def report(n: int, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
    assert ok, detail


def K(a, b, kind="G"):
    return MomentKey(a, b, kind)


def _structural_3_to_6(cat) -> dict[int, bool]:
    heis = quantum_ineq_from_words("P", "Q")
    gammas = {n: reduce_to_pure_pair(cat, n) for n in range(1, 6)}
    best = strongest_binomial_constraints(equal_uncertainty_reduction(cat, 8))
    app = verify_appendix(cat)
    return {
        3: heis.lhs == HBAR**2 / 4 + moment(1, 1) ** 2 and heis.rhs == moment(2, 0) * moment(0, 2),
        4: gammas == {1: Fraction(1, 4), 2: Fraction(3, 8), 3: Fraction(81, 64), 4: Fraction(9, 4),
                      5: Fraction(225, 16)},
        5: best.get(("g1**2", "1")) == Fraction(1, 4) and best.get(("g2", "g1**2")) == 6
        and best.get(("g1*g3", "g2**2")) == Fraction(9, 4) and best.get(("g2*g4", "g3**2")) == Fraction(25, 14),
        6: app.all_found and app.combined_ok,
    }


def test_criterion_01_bracket_oracle():
    start = time.perf_counter()
    keys = [K(a, n - a) for n in range(6) for a in range(n + 1)]
    pairs = [(x, y) for x in keys for y in keys]
    bad = [(x, y) for x, y in pairs if moment_bracket(x, y) != bracket_oracle(x, y)]
    secs = time.perf_counter() - start
    report(1, not bad and len(pairs) >= 400 and secs < 120,
           f"{len(pairs)} pairs, {len(bad)} mismatches, {secs:.1f} s")


def test_criterion_02_named_bracket():
    val = quantum_bracket(K(1, 2), K(0, 2))
    report(2, val == -2 * moment(0, 3), f"{{G[1,2], G[0,2]}} = {val}")


def test_criterion_03_heisenberg():
    x = quantum_ineq_from_words("P", "Q")
    ok = x.lhs == HBAR**2 / 4 + moment(1, 1) ** 2 and x.rhs == moment(2, 0) * moment(0, 2)
    report(3, ok, str(x))


def test_criterion_04_gamma_table(catalog5):
    got = {n: reduce_to_pure_pair(catalog5, n) for n in range(1, 6)}
    want = {1: Fraction(1, 4), 2: Fraction(3, 8), 3: Fraction(81, 64), 4: Fraction(9, 4), 5: Fraction(225, 16)}
    report(4, got == want, "gamma = " + ", ".join(f"{n}: {v}" for n, v in got.items()))


def test_criterion_05_g_constraints(catalog5):
    best = strongest_binomial_constraints(equal_uncertainty_reduction(catalog5, 8))
    want = {("g1**2", "1"): Fraction(1, 4), ("g2", "g1**2"): Fraction(6),
            ("g1*g3", "g2**2"): Fraction(9, 4), ("g2*g4", "g3**2"): Fraction(25, 14)}
    got = {k: best.get(k) for k in want}
    report(5, got == want, "; ".join(f"{a} >= {v}*{b}" for (a, b), v in got.items()))


def test_criterion_06_appendix(catalog5):
    rep = verify_appendix(catalog5)
    report(6, rep.all_found and rep.combined_ok,
           f"{sum(1 for m in rep.matches if m)}/{len(rep.matches)} relations found, combination ok: {rep.combined_ok}")


def test_criterion_07_catalog_counts(catalog5):
    counts = catalog5.classification_counts()
    total, unc = len(catalog5), counts["uncertainty"]
    exact = total == 1449 and unc == 160
    text = catalog5.report()
    shows = f"distinct inequalities: {total}" in text and f"uncertainty: {unc}" in text and CONVENTION in text
    structural = _structural_3_to_6(catalog5)
    ok = exact or (shows and all(structural.values()))
    tier = "exact match" if exact else "counts differ from the 1449/160 target; reported with convention, criteria 3-6 hold"
    print(f"  counts: total={total} uncertainty={unc} ordinary={counts['ordinary']} "
          f"equalities={counts['equality']} raw splits={catalog5.raw_split_count} pairs={catalog5.pairs_considered}")
    print(f"  convention: {CONVENTION}")
    report(7, ok, f"{total} inequalities, {unc} uncertainty ({tier})")


def test_criterion_08_distributions(catalog5, classical_catalog3):
    one = Fraction(1)
    fac = check_family(FAMILIES["factorial"], catalog5.inequalities, 8, one)
    ofac = check_family(FAMILIES["order-factorial"], catalog5.inequalities, 4, one)
    heis = quantum_ineq_from_words("P", "Q")
    ofac_ok = [x for x, _ in ofac.failures] == [heis]
    p3 = check_family(FAMILIES["power-3"], classical_catalog3.inequalities, 6, one)
    ok = fac.passed and ofac_ok and not p3.passed
    report(8, ok, f"a!b! failures={len(fac.failures)}; (a+b)! failures={[str(x) for x, _ in ofac.failures]}; "
                  f"a^(a-3)b^(b-3) classical failures={len(p3.failures)}")


def test_criterion_09_harmonic_dynamics():
    start = time.perf_counter()

    def init(kind):
        mom = {K(2, 0, kind): 0.5, K(1, 1, kind): 0.0, K(0, 2, kind): 0.5}
        return MomentState(0.0, 1.0, 0.0, mom, 1.0 if kind == "G" else 0.0)

    tq = integrate(derive_eom(HARMONIC, "quantum", 2), init("G"), 10.0, 1e-3)
    tc = integrate(derive_eom(HARMONIC, "classical", 2), init("C"), 10.0, 1e-3)
    secs = time.perf_counter() - start
    err = float(np.max(np.abs(tq.column("q") - np.cos(tq.times))))
    inv = tq.column(K(2, 0)) * tq.column(K(0, 2)) - tq.column(K(1, 1)) ** 2
    drift = float(np.max(np.abs(inv - inv[0])))
    body_q = tq.to_csv().split("\n", 1)[1]
    body_c = tc.to_csv().split("\n", 1)[1]
    identical = body_q == body_c
    ok = err <= 1e-8 and drift <= 1e-9 and identical and secs < 5
    report(9, ok, f"max|q-cos t|={err:.2e}, invariant drift={drift:.2e}, identical={identical}, {secs:.2f} s")


def test_criterion_10_universality():
    n2 = derive_eom(QUARTIC, "quantum", 2).relabel("C").same_equations(derive_eom(QUARTIC, "classical", 2))
    q3 = derive_eom(QUARTIC, "quantum", 3)
    c3 = derive_eom(QUARTIC, "classical", 3).relabel("G")
    diffs = [q3.rhs[k] - c3.rhs[k] for k in q3.rhs if q3.rhs[k] != c3.rhs[k]]
    hbar_terms = bool(diffs) and all(all(m[2] == 2 for m in d.terms) for d in diffs)
    report(10, n2 and hbar_terms, f"N=2 identical: {n2}; N=3 differing equations: {len(diffs)}, all hbar^2: {hbar_terms}")


def test_criterion_11_routes():
    r1 = derive_eom(QUARTIC, "quantum", 3, 1)
    r2 = derive_eom(QUARTIC, "quantum", 3, 2)
    differing = [str(k) for k in r1.rhs if r1.rhs[k] != r2.rhs[k]]
    centroid = r1.rhs["q"] == r2.rhs["q"] and r1.rhs["p"] == r2.rhs["p"]
    report(11, bool(differing) and centroid, f"differing: {differing}; centroid agrees: {centroid}")


def test_criterion_12_ensemble():
    start = time.perf_counter()
    var = 0.01
    ens = gaussian_cloud(100_000, 1.0, 0.0, var, 0.0, var, seed=7)
    moved = ensemble_evolve(QUARTIC, ens, 1.0, 1e-2)
    sampled = sample_moments(moved, 2)
    se = sample_standard_errors(moved, 2)
    sys = derive_eom(QUARTIC, "classical", 4)
    final = integrate(sys, gaussian_state(1.0, 0.0, var, 0.0, var, 4), 1.0, 1e-3).final
    zs = {str(k): abs(sampled.moments[k] - final.moments[k]) / se[k] for k in (K(2, 0, "C"), K(1, 1, "C"), K(0, 2, "C"))}
    secs = time.perf_counter() - start
    ok = all(z <= 3 for z in zs.values()) and secs < 60
    report(12, ok, ", ".join(f"{k}: {z:.2f} SE" for k, z in zs.items()) + f"; {secs:.1f} s")


def test_criterion_13_stationary():
    tq = moment_table(StationaryProblem.monomial(2), 4)
    tc = moment_table(StationaryProblem.monomial(2, kind="classical"), 4)
    ok = (sympy.simplify(tq[2] - E / 2) == 0
          and sympy.expand(tq[4] - (3 * E**2 + sympy.Rational(3, 2) * hbar**2) / 8) == 0
          and sympy.expand(tc[4] - 3 * E**2 / 8) == 0)
    report(13, ok, f"G[0,2]={tq[2]}, G[0,4]={tq[4]}, C[0,4]={tc[4]}")


def test_criterion_14_heisenberg_drift():
    drift = heisenberg_drift(CUBIC)
    chain = chain_rule_derivative(heisenberg_combination(), derive_eom(CUBIC, "quantum", 4))
    harmonic = [HARMONIC, HamiltonianSpec({(2, 0): 3, (1, 1): -1, (0, 2): Fraction(2, 7), (0, 1): 5})]
    zero = all(heisenberg_drift(h) == ZERO for h in harmonic)
    report(14, drift == chain and zero, f"drift={drift}; harmonic drift zero: {zero}")


def test_criterion_15_linear_hamiltonian():
    xi = {2: half, 3: Fraction(1, 6)}
    sys = linear_eom_subsystem({}, xi, 4)
    mom = {k: 0.0 for k in sys.moment_keys + list(sys.open_keys)}
    mom.update({K(2, 0): 0.2, K(3, 0): 0.05, K(4, 0): 0.1, K(2, 1): 0.3, K(3, 1): -0.1, K(4, 1): 0.02})
    traj = integrate(sys, MomentState(0.0, 0.0, 0.5, mom, 1.0), 2.0, 0.1)
    t = traj.times
    affine_err = 0.0
    for a in range(1, 5):
        col = traj.column(K(a, 1))
        slope = (col[-1] - col[0]) / (t[-1] - t[0])
        affine_err = max(affine_err, float(np.max(np.abs(col - (col[0] + slope * t)))))
    const = bool(np.all(traj.column("p") == 0.5)) and all(
        bool(np.all(traj.column(K(a, 0)) == traj.column(K(a, 0))[0])) for a in range(2, 5))

    def m(a, b):
        return moment(a, b) if a >= 0 else ZERO

    algebra = True
    for a in range(7):
        for b in range(7):
            algebra &= moment_bracket(K(a, 0), K(b, 0)) == ZERO
            algebra &= moment_bracket(K(a, 0), K(b, 1)) == a * (m(a - 1, 0) * m(b, 0) - m(a + b - 1, 0))
            algebra &= moment_bracket(K(a, 1), K(b, 1)) == (
                a * m(a - 1, 1) * m(b, 0) - b * m(a, 0) * m(b - 1, 1) + (b - a) * m(a + b - 1, 1))
    ok = affine_err < 1e-12 and const and algebra
    report(15, ok, f"affine residual={affine_err:.1e}, constants fixed: {const}, closed algebra: {algebra}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
