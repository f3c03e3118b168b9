"""Command-line interface.

Subcommands: ``derive``, ``integrate``, ``ensemble``, ``inequalities``,
``check-distribution``, ``stationary``, ``verify-brackets`` and ``compare``.
Options may also come from a flat ``key = value`` file given with
``--config``; flags on the command line take precedence.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from .brackets import bracket_oracle, moment_bracket
from .dynamics import (
    MomentState,
    ensemble_evolve,
    gaussian_cloud,
    integrate,
    monitor_conserved,
    point_trajectory,
    sample_moments,
)
from .eomgen import HamiltonianSpec, derive_eom
from .inequalities import FAMILIES, check_family, enumerate_catalog
from .symcore import CLASSICAL, QUANTUM, MomentKey, ParseError, SymcoreError
from .stationary import StationaryProblem, moment_table

__all__ = ["parse_hamiltonian", "parse_config", "parse_initial_state", "build_parser", "main", "RunConfig"]


# -- Hamiltonian grammar --------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|(?P<sym>[pq])|(?P<op>[-+*^])|(?P<bad>\S))")


def parse_hamiltonian(text: str) -> HamiltonianSpec:
    """Parse ``term (('+'|'-') term)*`` with ``term = coeff ['*'] p^a ['*'] q^b``.

    The coefficient is optional, factors may appear in either order, and
    decimal coefficients are read exactly.  Division is not part of the
    grammar.
    """
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        if m.group("bad") is not None:
            raise ParseError(f"unexpected character {m.group('bad')!r}", m.start("bad"))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    i = 0
    terms: dict[tuple[int, int], Fraction] = {}

    def peek():
        return tokens[i]

    def take():
        nonlocal i
        tok = tokens[i]
        i += 1
        return tok

    def integer() -> int:
        kind, val, where = take()
        if kind != "num" or not val.isdigit():
            raise ParseError("expected a non-negative integer exponent", where)
        return int(val)

    sign = 1
    if peek()[1] in "+-" and peek()[0] == "op":
        sign = -1 if take()[1] == "-" else 1
    while True:
        coef = Fraction(sign)
        seen_factor = False
        powers = {"p": 0, "q": 0}
        kind, val, where = peek()
        if kind == "num":
            take()
            coef *= Fraction(val)
            seen_factor = True
        while True:
            kind, val, where = peek()
            if kind == "op" and val == "*" and seen_factor:
                take()
                kind, val, where = peek()
                if kind != "sym":
                    raise ParseError("expected 'p' or 'q' after '*'", where)
            if kind != "sym":
                break
            take()
            if powers[val]:
                raise ParseError(f"repeated factor {val!r}", where)
            exp = 1
            if peek()[0] == "op" and peek()[1] == "^":
                take()
                exp = integer()
            powers[val] = exp
            seen_factor = True
        if not seen_factor:
            raise ParseError("expected a term", where)
        key = (powers["p"], powers["q"])
        terms[key] = terms.get(key, 0) + coef
        kind, val, where = peek()
        if kind == "end":
            break
        if kind == "op" and val in "+-":
            take()
            sign = -1 if val == "-" else 1
            continue
        raise ParseError(f"unexpected {val!r}", where)
    return HamiltonianSpec(terms)


# -- configuration ---------------------------------------------------------------

def parse_config(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _number(text: str) -> Fraction:
    return Fraction(text.strip())


def parse_initial_state(text: str, order: int, kind: str, hbar: float) -> MomentState:
    """``q=1, p=0, G[2,0]=0.5, ...``; unspecified moments start at zero.

    The moment letter in the text is ignored so one initial-data string
    serves quantum and classical runs alike.
    """
    letter = QUANTUM if kind == "quantum" else CLASSICAL
    q = p = 0.0
    moments = {MomentKey(a, n - a, letter): 0.0 for n in range(2, order + 1) for a in range(n, -1, -1)}
    for item in re.split(r"[;\n]|,(?=\s*[A-Za-z])", text):
        item = item.strip()
        if not item:
            continue
        name, eq, value = item.partition("=")
        if not eq:
            raise ValueError(f"initial data entry {item!r} lacks '='")
        name = name.strip()
        val = float(_number(value))
        if name == "q":
            q = val
        elif name == "p":
            p = val
        else:
            m = re.fullmatch(r"[GC]\[(\d+),(\d+)\]", name.replace(" ", ""))
            if not m:
                raise ValueError(f"unknown initial variable {name!r}")
            key = MomentKey(int(m.group(1)), int(m.group(2)), letter)
            if key not in moments:
                raise ValueError(f"{name} is outside the truncation order {order}")
            moments[key] = val
    return MomentState(0.0, q, p, moments, hbar if kind == "quantum" else 0.0)


def _read_maybe_file(value: str) -> str:
    path = Path(value)
    if len(value) < 4096 and path.is_file():
        return path.read_text()
    return value


@dataclass
class RunConfig:
    command: str
    options: dict

    def get(self, name: str, default=None):
        v = self.options.get(name)
        return default if v is None else v


_DEFAULTS = {
    "order": 2,
    "route": None,
    "kind": "quantum",
    "hbar": 1.0,
    "t_end": 1.0,
    "dt": 1e-3,
    "stride": 1,
    "seed": 0,
    "particles": 10000,
    "max_order": 2,
    "init": "",
    "family": "factorial",
    "E": None,
    "potential": "q^2",
}

_TYPES = {
    "order": int,
    "route": int,
    "hbar": float,
    "t_end": float,
    "dt": float,
    "stride": int,
    "seed": int,
    "particles": int,
    "max_order": int,
}


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# -- subcommands -----------------------------------------------------------------

def _hamiltonian(cfg: RunConfig) -> HamiltonianSpec:
    src = cfg.get("hamiltonian")
    if not src:
        raise ValueError("--hamiltonian is required")
    return parse_hamiltonian(_read_maybe_file(src))


def _positive(cfg: RunConfig, *names: str) -> None:
    for n in names:
        v = cfg.get(n)
        if v is None or not v > 0:
            raise ValueError(f"--{n.replace('_', '-')} must be positive")


def _route(cfg: RunConfig) -> int:
    # neither truncation route is preferred, so the choice must be explicit
    route = cfg.get("route")
    if route not in (1, 2):
        raise ValueError("--route 1 or --route 2 is required")
    return route


def cmd_derive(cfg: RunConfig, out) -> int:
    sys_ = derive_eom(_hamiltonian(cfg), cfg.get("kind"), cfg.get("order"), _route(cfg))
    out.write(sys_.to_text())
    return 0


def _run_moments(cfg: RunConfig, kind: str):
    h = _hamiltonian(cfg)
    order = cfg.get("order")
    sys_ = derive_eom(h, kind, order, _route(cfg))
    init = parse_initial_state(_read_maybe_file(cfg.get("init")), order, kind, cfg.get("hbar"))
    traj = integrate(sys_, init, cfg.get("t_end"), cfg.get("dt"), cfg.get("stride"))
    return h, sys_, traj


def _write(path: str | None, text: str, out) -> None:
    if path:
        Path(path).write_text(text)
    else:
        out.write(text)


def cmd_integrate(cfg: RunConfig, out) -> int:
    _positive(cfg, "dt", "t_end", "stride")
    h, sys_, traj = _run_moments(cfg, cfg.get("kind"))
    report = monitor_conserved(h, sys_, traj)
    text = traj.to_csv() + report.to_text()
    for note in traj.warnings:
        text += f"# warning: {note}\n"
    _write(cfg.get("output"), text, out)
    return 0


def cmd_compare(cfg: RunConfig, out) -> int:
    _positive(cfg, "dt", "t_end", "stride")
    _, _, tq = _run_moments(cfg, "quantum")
    _, _, tc = _run_moments(cfg, "classical")
    h = _hamiltonian(cfg)
    init = parse_initial_state(_read_maybe_file(cfg.get("init")), cfg.get("order"), "classical", 0.0)
    tp = point_trajectory(h, init.q, init.p, cfg.get("t_end"), cfg.get("dt"), cfg.get("stride"))
    # the moment label is dropped from headers so identical runs give identical files
    def body(traj):
        csv = traj.to_csv()
        first, rest = csv.split("\n", 1)
        return re.sub(r"[GC]\[", "M[", first) + "\n" + rest

    prefix = cfg.get("output")
    texts = {"quantum": body(tq), "classical": body(tc), "point": tp.to_csv()}
    if prefix:
        for name, text in texts.items():
            Path(f"{prefix}_{name}.csv").write_text(text)
        out.write(f"wrote {prefix}_quantum.csv, {prefix}_classical.csv, {prefix}_point.csv\n")
    else:
        for name, text in texts.items():
            out.write(f"# {name}\n{text}")
    same = texts["quantum"] == texts["classical"]
    out.write(f"# quantum and classical trajectories identical: {same}\n")
    return 0


def cmd_ensemble(cfg: RunConfig, out) -> int:
    _positive(cfg, "dt", "t_end", "stride", "particles")
    h = _hamiltonian(cfg)
    init = parse_initial_state(_read_maybe_file(cfg.get("init")), 2, "classical", 0.0)
    var_p = init.moments[MomentKey(2, 0, CLASSICAL)]
    cov = init.moments[MomentKey(1, 1, CLASSICAL)]
    var_q = init.moments[MomentKey(0, 2, CLASSICAL)]
    seed = cfg.get("seed")
    ens = gaussian_cloud(cfg.get("particles"), init.q, init.p, var_p, cov, var_q, seed)
    max_order = max(2, cfg.get("max_order"))
    dt, stride = cfg.get("dt"), cfg.get("stride")
    n_steps = int(round(cfg.get("t_end") / dt))
    s0 = sample_moments(ens, max_order)
    cols = ["q", "p"] + list(s0.moments)
    lines = [f"# seed={seed} particles={len(ens)}", ",".join(["t"] + [str(c) for c in cols])]

    def row(step, s):
        vals = [step * dt] + [s.value(c) for c in cols]
        lines.append(",".join(_fmt(v) for v in vals))

    row(0, s0)
    done = 0
    while done < n_steps:
        chunk = min(stride, n_steps - done)
        ens = ensemble_evolve(h, ens, chunk * dt, dt)
        done += chunk
        row(done, sample_moments(ens, max_order))
    _write(cfg.get("output"), "\n".join(lines) + "\n", out)
    return 0


def cmd_inequalities(cfg: RunConfig, out) -> int:
    k = cfg.get("max_order")
    if k < 1:
        raise ValueError("--max-order must be at least 1")
    cat = enumerate_catalog(k, classical=bool(cfg.get("classical")))
    out.write(cat.report() + "\n")
    export = cfg.get("export")
    if export:
        Path(export).write_text("\n".join(cat.export_lines()) + "\n")
    return 0


def cmd_check_distribution(cfg: RunConfig, out) -> int:
    name = cfg.get("family")
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; choose from {', '.join(FAMILIES)}")
    k = cfg.get("max_order")
    classical = bool(cfg.get("classical"))
    cat = enumerate_catalog(max(1, k // 2), classical=classical)
    hbar_raw = cfg.options.get("hbar_text") or str(cfg.get("hbar"))
    try:
        hbar = Fraction(hbar_raw)
    except ValueError:
        hbar = float(hbar_raw)
    if not classical and not hbar > 0:
        raise ValueError("--hbar must be positive for quantum checks")
    rep = check_family(FAMILIES[name], cat.inequalities, k, hbar)
    out.write(rep.summary() + "\n")
    for x, margin in rep.failures:
        out.write(f"violated: {x} ; margin={_fmt(float(margin))}\n")
    return 0


def cmd_stationary(cfg: RunConfig, out) -> int:
    pot = parse_hamiltonian(cfg.get("potential"))
    if any(a for a, _ in pot.terms):
        raise ValueError("potential must depend on q only")
    e_raw = cfg.get("E")
    kw = {"kind": cfg.get("kind")}
    if e_raw is not None:
        try:
            kw["E"] = Fraction(str(e_raw))
        except ValueError:
            kw["E"] = str(e_raw)
    if cfg.options.get("hbar_set"):
        kw["hbar"] = Fraction(cfg.options["hbar_text"])
    prob = StationaryProblem({b: c for (_, b), c in pot.terms.items()}, **kw)
    letter = prob.letter
    for j, v in moment_table(prob, cfg.get("max_order")).items():
        out.write(f"{letter}[0,{j}] = {v}\n")
    return 0


def cmd_verify_brackets(cfg: RunConfig, out) -> int:
    k = cfg.get("max_order")
    keys = [MomentKey(a, n - a) for n in range(0, k + 1) for a in range(n, -1, -1)]
    bad = 0
    for x in keys:
        for y in keys:
            if moment_bracket(x, y) != bracket_oracle(x, y):
                bad += 1
                out.write(f"mismatch {{{x}, {y}}}\n")
    out.write(f"pairs checked: {len(keys) ** 2}; mismatches: {bad}\n")
    return 1 if bad else 0


COMMANDS = {
    "derive": cmd_derive,
    "integrate": cmd_integrate,
    "ensemble": cmd_ensemble,
    "inequalities": cmd_inequalities,
    "check-distribution": cmd_check_distribution,
    "stationary": cmd_stationary,
    "verify-brackets": cmd_verify_brackets,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qcmoments", description="Moment dynamics and moment inequalities.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key = value file; flags override it")
    parser.add_argument("--hamiltonian", help="polynomial such as '0.5*p^2 + 0.25*q^4', or a file holding one")
    parser.add_argument("--order", type=int)
    parser.add_argument("--route", type=int, choices=(1, 2), help="truncation route; required for derive, integrate, compare")
    parser.add_argument("--kind", choices=("quantum", "classical"))
    parser.add_argument("--hbar", type=str)
    parser.add_argument("--t-end", dest="t_end", type=float)
    parser.add_argument("--dt", type=float)
    parser.add_argument("--stride", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--particles", type=int)
    parser.add_argument("--max-order", dest="max_order", type=int)
    parser.add_argument("--export")
    parser.add_argument("--family")
    parser.add_argument("--potential")
    parser.add_argument("--E", dest="E")
    parser.add_argument("--init", help="initial data 'q=1, p=0, G[2,0]=0.5, ...' or a file")
    parser.add_argument("--output", help="output file (prefix for compare)")
    parser.add_argument("--classical", action="store_true", default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    file_opts = parse_config(Path(args.config).read_text()) if args.config else {}
    for key, value in file_opts.items():
        if key not in opts and key != "classical":
            raise ValueError(f"unknown config key {key!r}")
        if opts.get(key) is None:
            if key == "classical":
                opts[key] = value.lower() in ("1", "true", "yes")
            else:
                opts[key] = value
    hbar_text = opts.get("hbar")
    opts["hbar_set"] = hbar_text is not None
    opts["hbar_text"] = hbar_text if hbar_text is not None else "1"
    for key, default in _DEFAULTS.items():
        if opts.get(key) is None:
            opts[key] = default
    for key, typ in _TYPES.items():
        v = opts[key]
        if isinstance(v, str):
            opts[key] = float(Fraction(v)) if typ is float else typ(v)
    return RunConfig(args.command, opts)


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg, out)
    except (SymcoreError, ValueError, ArithmeticError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
