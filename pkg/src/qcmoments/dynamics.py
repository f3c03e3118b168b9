"""Numerical integration of truncated moment systems and a particle-ensemble oracle.

Right-hand sides are compiled once into plain Python functions over a flat
state vector.  The generated source depends only on the equations, not on the
moment label, so quantum and classical systems with identical equations run
exactly the same floating-point operations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .eomgen import EomSystem, HamiltonianSpec, effective_hamiltonian, heisenberg_combination
from .symcore import CLASSICAL, QUANTUM, MomentKey, MomentPoly, _SYMBOLS

__all__ = [
    "MomentState",
    "Trajectory",
    "DivergenceError",
    "EnsembleDivergenceError",
    "TruncationArtifactWarning",
    "compile_rhs",
    "integrate",
    "monitor_conserved",
    "ConservationReport",
    "ParticleEnsemble",
    "ensemble_evolve",
    "sample_moments",
    "sample_standard_errors",
    "gaussian_moments",
    "gaussian_state",
    "gaussian_cloud",
    "point_trajectory",
]


class DivergenceError(ArithmeticError):
    """A non-finite value appeared; ``last_state`` is the last finite state."""

    def __init__(self, message: str, last_state: "MomentState"):
        super().__init__(message)
        self.last_state = last_state


class EnsembleDivergenceError(ArithmeticError):
    def __init__(self, message: str, indices: np.ndarray):
        super().__init__(message)
        self.indices = indices


class TruncationArtifactWarning(UserWarning):
    """An even-even moment went negative during truncated evolution."""


@dataclass
class MomentState:
    t: float
    q: float
    p: float
    moments: dict = field(default_factory=dict)
    hbar: float = 0.0

    def value(self, var) -> float:
        if var == "q":
            return self.q
        if var == "p":
            return self.p
        return self.moments[var]

    def bindings(self) -> dict:
        out = {"q": self.q, "p": self.p, "hbar": self.hbar}
        out.update(self.moments)
        return out

    def negative_even_moments(self) -> list[MomentKey]:
        return [k for k, v in self.moments.items() if k.a % 2 == 0 and k.b % 2 == 0 and v < 0]


@dataclass
class Trajectory:
    """Sampled states plus any truncation-artifact notes collected on the way."""

    states: list[MomentState]
    variables: list
    warnings: list[str] = field(default_factory=list)

    def __iter__(self) -> Iterator[MomentState]:
        return iter(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]

    @property
    def final(self) -> MomentState:
        return self.states[-1]

    def column(self, var) -> np.ndarray:
        return np.array([s.value(var) for s in self.states])

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    def to_csv(self) -> str:
        head = ["t"] + [str(v) for v in self.variables]
        rows = [",".join(head)]
        for s in self.states:
            rows.append(",".join(_fmt(x) for x in [s.t] + [s.value(v) for v in self.variables]))
        return "\n".join(rows) + "\n"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# -- compilation ---------------------------------------------------------------

def _float_literal(c: Fraction) -> str:
    return repr(float(c))


def _poly_source(poly: MomentPoly, names: Mapping[MomentKey, str]) -> str:
    parts = []
    for m, c in poly.terms.items():
        if m[4]:
            raise ValueError("equation has an imaginary part")
        factors = [_float_literal(c)]
        for idx, sym in enumerate(_SYMBOLS):
            if m[idx]:
                factors.append(sym if m[idx] == 1 else f"{sym}**{m[idx]}")
        for k in m[5]:
            factors.append(names[k])
        parts.append("*".join(factors))
    return " + ".join(parts) if parts else "0.0"


def compile_rhs(sys: EomSystem, open_values: Mapping | None = None) -> Callable[[Sequence[float], float], list]:
    """``f(y, hbar) -> dy/dt`` for the flat state ``y`` ordered as ``sys.variables``.

    Open keys are read from ``open_values`` and held constant.
    """
    names: dict[MomentKey, str] = {}
    args = []
    for i, v in enumerate(sys.variables):
        name = v if v in ("q", "p") else f"x{i}"
        if isinstance(v, MomentKey):
            names[v] = name
        args.append(name)
    consts = {}
    for j, k in enumerate(sys.open_keys):
        names[k] = f"c{j}"
        if open_values is None or k not in open_values:
            raise ValueError(f"open moment {k} needs a value")
        consts[f"c{j}"] = float(open_values[k])
    body = [f"def _rhs(y, hbar):", f"    {', '.join(args)}, = y", "    E = 0.0"]
    body.append("    return [" + ", ".join(_poly_source(sys.rhs[v], names) for v in sys.variables) + "]")
    ns: dict = dict(consts)
    exec("\n".join(body), ns)
    return ns["_rhs"]


def _check_init(sys: EomSystem, init: MomentState) -> None:
    for k in sys.moment_keys:
        if k not in init.moments:
            raise ValueError(f"initial state lacks {k}")
    for k in init.moments:
        if k.kind != sys.kind:
            raise ValueError(f"initial moment {k} does not match system kind {sys.kind}")
    if sys.kind == CLASSICAL and init.hbar:
        raise ValueError("classical runs need hbar = 0")


def integrate(
    sys: EomSystem,
    init: MomentState,
    t_end: float,
    dt: float,
    stride: int = 1,
) -> Trajectory:
    """Fixed-step fourth-order Runge-Kutta from ``init.t`` to ``t_end``.

    ``dt`` may be negative to run backwards.  States are sampled every
    ``stride`` steps and at the final time.
    """
    _check_init(sys, init)
    if dt == 0 or not math.isfinite(dt):
        raise ValueError("dt must be finite and nonzero")
    if stride < 1:
        raise ValueError("stride must be positive")
    span = t_end - init.t
    if span and (span > 0) != (dt > 0):
        raise ValueError("dt has the wrong sign for the requested time span")
    n_steps = int(round(span / dt))
    if abs(n_steps * dt - span) > 1e-9 * max(1.0, abs(span)):
        raise ValueError("t_end - t0 must be an integer multiple of dt")
    f = compile_rhs(sys, init.moments)
    hbar = float(init.hbar)
    variables = sys.variables
    y = [float(init.value(v)) for v in variables]
    n = len(y)
    keys = sys.moment_keys

    def state(step: int, vec) -> MomentState:
        mom = {k: vec[i + 2] for i, k in enumerate(keys)}
        for k in sys.open_keys:
            mom[k] = float(init.moments[k])
        return MomentState(init.t + step * dt, vec[0], vec[1], mom, hbar)

    if variables[:2] != ["q", "p"]:
        raise ValueError("system must list q and p first")
    states = [state(0, y)]
    notes: list[str] = []
    h2 = dt / 2
    h6 = dt / 6
    for step in range(1, n_steps + 1):
        try:
            k1 = f(y, hbar)
            k2 = f([y[i] + h2 * k1[i] for i in range(n)], hbar)
            k3 = f([y[i] + h2 * k2[i] for i in range(n)], hbar)
            k4 = f([y[i] + dt * k3[i] for i in range(n)], hbar)
            new = [y[i] + h6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(n)]
        except OverflowError:
            new = [math.inf]
        if not all(math.isfinite(x) for x in new):
            raise DivergenceError(f"non-finite state at step {step} (t={init.t + step * dt!r})", state(step - 1, y))
        y = new
        if step % stride == 0 or step == n_steps:
            s = state(step, y)
            bad = s.negative_even_moments()
            if bad:
                notes.append(f"t={_fmt(s.t)}: negative " + ", ".join(str(k) for k in bad))
            states.append(s)
    if notes:
        warnings.warn(f"{len(notes)} sampled states had negative even moments", TruncationArtifactWarning, stacklevel=2)
    return Trajectory(states, list(variables), notes)


def point_trajectory(h: HamiltonianSpec, q0: float, p0: float, t_end: float, dt: float, stride: int = 1) -> Trajectory:
    """Hamilton's equations for a single point (every moment zero)."""
    sys = EomSystem(CLASSICAL, 0, None, {"q": h.derivative(1, 0), "p": -h.derivative(0, 1)})
    return integrate(sys, MomentState(0.0, q0, p0), t_end, dt, stride)


# -- conserved quantities -------------------------------------------------------

@dataclass
class ConservationReport:
    times: np.ndarray
    effective_energy: np.ndarray
    centroid_energy: np.ndarray
    moment_energy: np.ndarray
    heisenberg: np.ndarray

    @staticmethod
    def _drift(x: np.ndarray) -> float:
        return float(np.max(np.abs(x - x[0]))) if len(x) else 0.0

    @property
    def drifts(self) -> dict[str, float]:
        return {
            "H_eff": self._drift(self.effective_energy),
            "H(q,p)": self._drift(self.centroid_energy),
            "H_eff-H(q,p)": self._drift(self.moment_energy),
            "G20*G02-G11^2": self._drift(self.heisenberg),
        }

    def to_text(self) -> str:
        lines = ["# conservation report"]
        for name, v in self.drifts.items():
            lines.append(f"# max drift {name} = {_fmt(v)}")
        return "\n".join(lines) + "\n"


def monitor_conserved(h: HamiltonianSpec, sys: EomSystem, traj: Trajectory) -> ConservationReport:
    """Effective energy, centroid energy, their difference and the Heisenberg combination."""
    order = max(sys.order, 2)
    heff = effective_hamiltonian(h, "quantum" if sys.kind == QUANTUM else "classical", order)
    hc = h.as_poly()
    heis = heisenberg_combination("quantum" if sys.kind == QUANTUM else "classical")
    rows = []
    for s in traj:
        b = s.bindings()
        b["E"] = 0.0
        for k in heff.keys() | heis.keys():
            b.setdefault(k, 0.0)
        he = float(heff.evaluate(b))
        hq = float(hc.evaluate(b))
        rows.append((s.t, he, hq, he - hq, float(heis.evaluate(b))))
    arr = np.array(rows, dtype=float).reshape(-1, 5)
    return ConservationReport(*arr.T)


# -- particle ensembles -----------------------------------------------------

@dataclass
class ParticleEnsemble:
    """Equally weighted phase-space points ``(q, p)``."""

    q: np.ndarray
    p: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.q.shape != self.p.shape or self.q.ndim != 1 or self.q.size == 0:
            raise ValueError("ensemble needs matching nonempty 1-d coordinate arrays")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise ValueError("ensemble coordinates must be finite")

    def __len__(self) -> int:
        return self.q.size


def _hamilton_vector_field(h: HamiltonianSpec):
    dq_terms = [(float(c) * a, a - 1, b) for (a, b), c in h.terms.items() if a]
    dp_terms = [(-float(c) * b, a, b - 1) for (a, b), c in h.terms.items() if b]

    def poly(terms, q, p):
        out = np.zeros_like(q)
        for c, a, b in terms:
            out = out + c * p**a * q**b
        return out

    return lambda q, p: (poly(dq_terms, q, p), poly(dp_terms, q, p))


def ensemble_evolve(h: HamiltonianSpec, ens: ParticleEnsemble, t_end: float, dt: float) -> ParticleEnsemble:
    """Advance each particle along Hamilton's equations with vectorised RK4."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_end / dt))
    if abs(n_steps * dt - t_end) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("t_end must be an integer multiple of dt")
    field_ = _hamilton_vector_field(h)
    q, p = ens.q.copy(), ens.p.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_steps):
            a1, b1 = field_(q, p)
            a2, b2 = field_(q + dt / 2 * a1, p + dt / 2 * b1)
            a3, b3 = field_(q + dt / 2 * a2, p + dt / 2 * b2)
            a4, b4 = field_(q + dt * a3, p + dt * b3)
            q = q + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            p = p + dt / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
    bad = np.flatnonzero(~(np.isfinite(q) & np.isfinite(p)))
    if bad.size:
        raise EnsembleDivergenceError(f"{bad.size} particles diverged, first index {bad[0]}", bad)
    return ParticleEnsemble(q, p, ens.seed)


def sample_moments(ens: ParticleEnsemble, max_order: int, t: float = 0.0) -> MomentState:
    """Centroid and classical central moments ``C[a,b] = mean(dp^a dq^b)``."""
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    q0, p0 = float(np.mean(ens.q)), float(np.mean(ens.p))
    dq, dp = ens.q - q0, ens.p - p0
    mom = {}
    for n in range(2, max_order + 1):
        for a in range(n, -1, -1):
            mom[MomentKey(a, n - a, CLASSICAL)] = float(np.mean(dp**a * dq ** (n - a)))
    return MomentState(t, q0, p0, mom, 0.0)


def sample_standard_errors(ens: ParticleEnsemble, max_order: int) -> dict[MomentKey, float]:
    """Monte Carlo standard error of each sampled central moment."""
    dq, dp = ens.q - ens.q.mean(), ens.p - ens.p.mean()
    out = {}
    for n in range(2, max_order + 1):
        for a in range(n, -1, -1):
            x = dp**a * dq ** (n - a)
            out[MomentKey(a, n - a, CLASSICAL)] = float(np.std(x, ddof=1) / math.sqrt(x.size))
    return out


def gaussian_moments(var_p: float, cov_pq: float, var_q: float, max_order: int, kind: str = CLASSICAL) -> dict:
    """Central moments of a bivariate normal distribution (Isserlis recursion)."""
    memo: dict[tuple[int, int], float] = {(0, 0): 1.0}

    def m(a: int, b: int) -> float:
        if a < 0 or b < 0:
            return 0.0
        if (a, b) in memo:
            return memo[(a, b)]
        if (a + b) % 2:
            val = 0.0
        elif a:
            val = (a - 1) * var_p * m(a - 2, b) + b * cov_pq * m(a - 1, b - 1)
        else:
            val = (b - 1) * var_q * m(0, b - 2)
        memo[(a, b)] = val
        return val

    return {MomentKey(a, n - a, kind): m(a, n - a) for n in range(2, max_order + 1) for a in range(n, -1, -1)}


def gaussian_state(q: float, p: float, var_p: float, cov_pq: float, var_q: float, max_order: int,
                   kind: str = CLASSICAL, hbar: float = 0.0) -> MomentState:
    return MomentState(0.0, q, p, gaussian_moments(var_p, cov_pq, var_q, max_order, kind), hbar)


def gaussian_cloud(n: int, q: float, p: float, var_p: float, cov_pq: float, var_q: float, seed: int) -> ParticleEnsemble:
    """``n`` particles drawn from a seeded bivariate normal distribution."""
    if n < 1:
        raise ValueError("need at least one particle")
    rng = np.random.default_rng(seed)
    cov = np.array([[var_q, cov_pq], [cov_pq, var_p]], dtype=float)
    pts = rng.multivariate_normal([q, p], cov, size=n)
    return ParticleEnsemble(pts[:, 0], pts[:, 1], seed)
