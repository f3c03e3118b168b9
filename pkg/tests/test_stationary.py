from fractions import Fraction

import pytest
import sympy

from qcmoments.eomgen import HamiltonianSpec, derive_eom
from qcmoments.inequalities import enumerate_catalog
from qcmoments.stationary import (
    SeedingError,
    StationaryProblem,
    equilibrium_system,
    moment_table,
    recursion_step,
    stationary_condition,
)
from qcmoments.symcore import MomentKey

E, hbar = sympy.symbols("E hbar")
half = Fraction(1, 2)


def test_recursion_harmonic_values():
    prob = StationaryProblem.monomial(2)
    g2 = recursion_step(prob, 0)
    assert g2 == E / 2
    g4 = recursion_step(prob, 2, {2: g2})
    assert sympy.expand(g4 - (3 * E**2 + sympy.Rational(3, 2) * hbar**2) / 8) == 0


def test_recursion_classical():
    prob = StationaryProblem.monomial(2, kind="classical")
    g4 = recursion_step(prob, 2, {2: recursion_step(prob, 0)})
    assert g4 == 3 * E**2 / 8


def test_recursion_numeric_exact():
    prob = StationaryProblem.monomial(2, E=Fraction(3), hbar=Fraction(1))
    assert recursion_step(prob, 2, {2: Fraction(3, 2)}) == sympy.Rational(57, 16)


def test_recursion_linearity():
    prob = StationaryProblem.monomial(4)
    a, b = sympy.symbols("a b")
    out = recursion_step(prob, 4, {4: a, 2: b})
    assert sympy.diff(out, a, 2) == 0 and sympy.diff(out, b, 2) == 0


def test_seeding_errors():
    prob = StationaryProblem.monomial(2)
    with pytest.raises(SeedingError):
        recursion_step(prob, 4, {2: 1})
    with pytest.raises(SeedingError):
        recursion_step(prob, 3, {3: 1, 1: 0})


def test_quantum_classical_difference_is_hbar_squared():
    tq = moment_table(StationaryProblem.monomial(2), 8)
    tc = moment_table(StationaryProblem.monomial(2, kind="classical"), 8)
    assert tq[2] == tc[2]
    for j in (4, 6, 8):
        diff = sympy.expand(tq[j] - tc[j])
        assert diff != 0
        assert diff.subs(hbar, 0) == 0
        assert sympy.Poly(diff, hbar).monoms()[-1][0] == 2


@pytest.mark.parametrize("m", [2, 4, 6])
@pytest.mark.parametrize("k", [0, 1, 2, 3, 4])
def test_condition_matches_recursion(m, k):
    prob = StationaryProblem.monomial(m)
    # odd moments vanish for an even potential
    odd = {sympy.Symbol(f"G[0,{j}]"): 0 for j in range(3, k + m + 1, 2)}
    cond = stationary_condition(prob, k).set_symbol("q", 0).to_sympy().subs(odd)
    target = sympy.Symbol(f"G[0,{k + m}]")
    solved = sympy.solve(cond, target) if (k + m) % 2 == 0 else [0]
    lower = {j: (sympy.Symbol(f"G[0,{j}]") if j % 2 == 0 else 0) for j in range(2, k + 1)}
    assert sympy.expand(solved[0] - recursion_step(prob, k, lower)) == 0


def test_condition_classical_drops_hbar():
    prob = StationaryProblem({2: 1, 3: half}, kind="classical")
    for k in range(5):
        assert not stationary_condition(prob, k).has_symbol("hbar")


def test_condition_virial_form():
    prob = StationaryProblem({2: 1, 4: Fraction(1, 4)})
    cond = stationary_condition(prob, 0).set_symbol("q", 0)
    # 2E - 2<V> - <Q V'>
    expected = 2 * sympy.Symbol("E") - 4 * sympy.Symbol("G[0,2]") - 3 * sympy.Symbol("G[0,4]") / 2
    assert sympy.expand(cond.to_sympy() - expected) == 0


def test_from_hamiltonian():
    h = HamiltonianSpec({(2, 0): half, (0, 2): 1})
    assert StationaryProblem.from_hamiltonian(h).pure_power() == 2
    with pytest.raises(ValueError):
        StationaryProblem.from_hamiltonian(HamiltonianSpec({(2, 0): 1, (0, 2): 1}))


def test_harmonic_equilibrium_rank_deficient():
    h = HamiltonianSpec({(2, 0): half, (0, 2): half})
    rep = equilibrium_system(derive_eom(h, "quantum", 2))
    assert rep.rank_deficient
    (sol,) = rep.solutions
    assert sol[sympy.Symbol("G[1,1]")] == 0
    assert sol[sympy.Symbol("G[2,0]")] == sympy.Symbol("G[0,2]")
    assert rep.free == [sympy.Symbol("G[0,2]")]


def test_free_particle_equilibrium_keeps_momentum_moments_free():
    rep = equilibrium_system(derive_eom(HamiltonianSpec({(2, 0): half}), "classical", 3))
    for a in (2, 3):
        assert sympy.Symbol(f"C[{a},0]") not in rep.solutions[0] or rep.solutions[0][sympy.Symbol(f"C[{a},0]")] == 0


def test_dirac_point_at_critical_point():
    h = HamiltonianSpec({(2, 0): half, (0, 2): -1, (0, 4): Fraction(1, 4)})
    sys = derive_eom(h, "classical", 3)
    binds = {"q": 2 ** 0.5, "p": 0.0}
    binds.update({k: 0.0 for k in sys.moment_keys})
    for e in sys.rhs.values():
        assert abs(e.evaluate(binds)) < 1e-12


def test_ground_state_sequence_satisfies_position_inequalities():
    hb = 1.0
    e0 = hb / 2**0.5
    table = moment_table(StationaryProblem.monomial(2, E=e0, hbar=hb), 10)
    values = {MomentKey(0, j): float(v) for j, v in table.items() if j >= 2}
    cat = enumerate_catalog(5)
    pure_q = [x for x in cat if all(k.a == 0 for k in x.difference.keys())]
    assert pure_q
    for x in pure_q:
        binds = {"hbar": hb}
        binds.update({k: values[k] for k in x.difference.keys() | x.lhs.keys()})
        ok, _ = x.holds(binds, slack=1e-12)
        assert ok
