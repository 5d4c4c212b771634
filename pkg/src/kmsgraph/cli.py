"""``kmsgraph`` command-line front end.

Exit codes: 0 success, 1 I/O error, 2 parse or validation error, 3 empty result.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction

from .graph import GraphError, decompose, hereditary_closure, load_graph, vertex_matrix
from .kms import KmsSimplex, PhaseDiagram, evaluate_word, phase_diagram, round_sig, simplex_at
from .oprep import build_rep, check_homomorphism, verify_tck
from .pathspace import MAX_DEPTH, thomsen_bounds
from .pathtable import PathTableTooLarge
from .spectral import graph_spectrum
from .subinvariance import DimensionCapExceeded

EXIT_OK = 0
EXIT_IO = 1
EXIT_PARSE = 2
EXIT_EMPTY = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CliConfig:
    tol: float = 1e-9
    depth: int = 32
    rep_depth: int = 6
    json: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise CliError("--tol must be positive", EXIT_PARSE)
        if not 1 <= self.depth <= MAX_DEPTH:
            raise CliError(f"--depth must be between 1 and {MAX_DEPTH}", EXIT_PARSE)
        if self.rep_depth < 1:
            raise CliError("--rep-depth must be at least 1", EXIT_PARSE)


def parse_beta(text: str) -> float:
    """A decimal, or ``ln:<k>`` with ``k`` a positive integer, decimal or fraction ``a/b``."""
    text = text.strip()
    try:
        if text.startswith("ln:"):
            k = Fraction(text[3:])
            if k <= 0:
                raise ValueError
            return math.log(k.numerator) - math.log(k.denominator)
        value = float(text)
    except (ValueError, ZeroDivisionError):
        raise CliError(f"bad beta {text!r}; use a decimal or ln:<k>", EXIT_PARSE) from None
    if not math.isfinite(value):
        raise CliError("beta must be finite", EXIT_PARSE)
    return value


def _emit(data, as_json: bool, text: str) -> None:
    if as_json:
        print(json.dumps(data, indent=2))
    else:
        print(text)


def _fmt(x) -> str:
    return "-inf" if x is None else f"{x:.10g}"


def analyze_report(g, tol: float) -> dict:
    cd = decompose(g)
    spec = graph_spectrum(g, tol)
    A = vertex_matrix(g)
    comps = []
    critical = []
    for i, comp in enumerate(cd.components):
        r = spec.per_component_rho[i]
        is_crit = spec.rho > 0 and abs(r - spec.rho) <= tol * max(1.0, spec.rho)
        if is_crit:
            critical.extend(comp)
        comps.append({"vertices": list(comp), "trivial": bool(cd.trivial[i]), "rho": round_sig(r),
                      "critical": bool(is_crit)})
    closure = sorted(hereditary_closure(g, critical).members, key=g.index.get) if critical else []
    return {
        "vertices": list(g.vertices),
        "matrix": A.tolist(),
        "block_order": list(cd.block_order),
        "components": comps,
        "rho": round_sig(spec.rho),
        "critical_closure": closure,
        "critical_closure_is_everything": len(closure) == g.n,
        "sources": g.sources,
        "sinks": g.sinks,
    }


def cmd_analyze(args, cfg: CliConfig) -> int:
    g = _load(args.graph)
    rep = analyze_report(g, cfg.tol)
    lines = [f"vertices: {' '.join(rep['vertices'])}", "vertex matrix (rows = range, columns = source):"]
    for v, row in zip(rep["vertices"], rep["matrix"]):
        lines.append(f"  {v}: {' '.join(str(x) for x in row)}")
    lines.append("components:")
    for c in rep["components"]:
        tag = "trivial" if c["trivial"] else f"rho = {_fmt(c['rho'])}"
        crit = ", critical" if c["critical"] else ""
        lines.append(f"  {{{', '.join(c['vertices'])}}}: {tag}{crit}")
    lines.append(f"rho(A) = {_fmt(rep['rho'])}")
    if rep["critical_closure_is_everything"]:
        lines.append("hereditary closure of critical components = all vertices")
    else:
        lines.append(f"hereditary closure of critical components = {{{', '.join(rep['critical_closure'])}}}")
    lines.append(f"sources: {' '.join(rep['sources']) or 'none'}")
    lines.append(f"sinks: {' '.join(rep['sinks']) or 'none'}")
    _emit(rep, cfg.json, "\n".join(lines))
    return EXIT_OK


def _simplex_text(sx: KmsSimplex) -> str:
    lines = [f"beta = {sx.beta:.10g}: {len(sx.extreme_states)} extreme state(s), dimension {sx.dimension}"]
    for k, d in enumerate(sx.extreme_states):
        masses = ", ".join(f"{v}={x:.10g}" for v, x in zip(d.graph.vertices, d.m))
        lines.append(f"  [{k}] m: {masses}{'  (factors)' if d.factors else ''}")
    return "\n".join(lines)


def cmd_states(args, cfg: CliConfig) -> int:
    g = _load(args.graph)
    beta = parse_beta(_required(args.beta, "--beta"))
    sx = simplex_at(g, beta, cfg.tol)
    _emit(sx.to_dict(), cfg.json, _simplex_text(sx))
    return EXIT_EMPTY if sx.empty else EXIT_OK


def phase_text(pd: PhaseDiagram) -> str:
    lines = [f"rho(A) = {pd.rho:.10g}",
             "breakpoints: " + (", ".join(f"{b:.10g}" for b in pd.breakpoints) or "none"),
             f"existence floor: {_fmt(pd.existence_floor)}"]
    for s in pd.segments:
        where = f"beta = {s.lo:.10g}" if s.is_point else f"beta in ({_fmt(s.lo)}, {'inf' if s.hi is None else _fmt(s.hi)})"
        n = len(s.simplex.extreme_states)
        fac = len(s.simplex.graph_algebra_states)
        flag = "  [unconfirmed]" if s.paper_unconfirmed else ""
        lines.append(f"  {where}: {n} extreme state(s), {fac} factoring{flag}")
        for d in s.simplex.extreme_states:
            masses = ", ".join(f"{v}={x:.6g}" for v, x in zip(d.graph.vertices, d.m))
            lines.append(f"      m: {masses}{'  (factors)' if d.factors else ''}")
    return "\n".join(lines)


def cmd_phase(args, cfg: CliConfig) -> int:
    g = _load(args.graph)
    pd = phase_diagram(g, cfg.tol)
    _emit(pd.to_dict(), cfg.json, phase_text(pd))
    return EXIT_OK


def cmd_thomsen(args, cfg: CliConfig) -> int:
    g = _load(args.graph)
    tb = thomsen_bounds(g, cfg.depth, cfg.tol)
    data = tb.to_dict()
    lines = ["n,a_n,b_n"] + [f"{n},{a!r},{b!r}" for n, a, b in tb.table()]
    lines.append(f"# beta_c exact = {tb.beta_c_exact!r}, beta_l exact = {tb.beta_l_exact!r}")
    _emit(data, cfg.json, "\n".join(lines))
    return EXIT_OK


def cmd_rep(args, cfg: CliConfig) -> int:
    g = _load(args.graph)
    rep = build_rep(g, cfg.rep_depth)
    report = verify_tck(rep, cfg.tol)
    data = {"basis_size": rep.size, **report.to_dict()}
    lines = [f"depth {rep.depth}, basis size {rep.size}, checked {report.checked} vectors",
             f"gap ranks: {', '.join(f'{v}={r}' for v, r in report.gap_ranks.items())}"]
    lines += [f"violation: {v}" for v in report.violations] or ["relations hold"]
    ok = report.ok
    if args.check:
        k = min(3, rep.depth // 2)
        h = check_homomorphism(rep, k)
        data["homomorphism"] = {
            "nf_length": k, "normal_forms": h.normal_forms, "pairs": h.pairs,
            "checked": h.checked, "violations": h.violations,
            "action_mismatches": h.action_mismatches, "sampled_mismatches": h.sampled_mismatches,
        }
        lines.append(f"products of {h.normal_forms} normal forms (|mu|,|nu| <= {k}): "
                     f"{h.checked} checks, {h.violations + h.action_mismatches + h.sampled_mismatches} failures")
        ok = ok and h.ok
    data["all_ok"] = ok
    _emit(data, cfg.json, "\n".join(lines))
    return EXIT_OK


def cmd_eval(args, cfg: CliConfig) -> int:
    g = _load(args.graph)
    beta = parse_beta(_required(args.beta, "--beta"))
    word = _required(args.word, "--word")
    sx = simplex_at(g, beta, cfg.tol)
    if sx.empty:
        raise CliError(f"no KMS states at beta = {beta:.10g}", EXIT_EMPTY)
    i = args.state_index
    if not 0 <= i < len(sx.extreme_states):
        raise CliError(f"--state-index must be in 0..{len(sx.extreme_states) - 1}", EXIT_PARSE)
    value = evaluate_word(sx.extreme_states[i], word)
    _emit({"beta": round_sig(beta), "state_index": i, "word": word, "value": round_sig(value)},
          cfg.json, f"{value:.12g}")
    return EXIT_OK


def _required(value, flag: str):
    if value is None:
        raise CliError(f"{flag} is required", EXIT_PARSE)
    return value


def _load(path):
    try:
        return load_graph(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--json", action="store_true", help="JSON instead of text")
    p = argparse.ArgumentParser(prog="kmsgraph", description="KMS states and path-space growth of finite graphs")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="matrix, components, spectral radii")
    a.add_argument("graph")
    a.set_defaults(func=cmd_analyze)
    s = sub.add_parser("states", parents=[common], help="extreme KMS states at one beta")
    s.add_argument("graph")
    s.add_argument("--beta")
    s.set_defaults(func=cmd_states)
    ph = sub.add_parser("phase", parents=[common], help="phase diagram over all beta")
    ph.add_argument("graph")
    ph.set_defaults(func=cmd_phase)
    t = sub.add_parser("thomsen", parents=[common], help="preimage growth rates (CSV or JSON)")
    t.add_argument("graph")
    t.add_argument("--depth", type=int, default=32)
    t.set_defaults(func=cmd_thomsen)
    r = sub.add_parser("rep", parents=[common], help="check relations in the truncated path representation")
    r.add_argument("graph")
    r.add_argument("--rep-depth", type=int, default=6)
    r.add_argument("--depth", type=int, dest="rep_depth_alias", help=argparse.SUPPRESS)
    r.add_argument("--check", action="store_true", help="also compare word products with matrix products")
    r.set_defaults(func=cmd_rep)
    e = sub.add_parser("eval", parents=[common], help="evaluate a KMS state on a word")
    e.add_argument("graph")
    e.add_argument("--beta")
    e.add_argument("--word")
    e.add_argument("--state-index", type=int, default=0)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_PARSE
    try:
        rep_depth = getattr(args, "rep_depth_alias", None) or getattr(args, "rep_depth", 6)
        cfg = CliConfig(tol=args.tol, depth=getattr(args, "depth", 32), rep_depth=rep_depth, json=args.json)
        return args.func(args, cfg)
    except CliError as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return exc.code
    except (GraphError, DimensionCapExceeded, PathTableTooLarge) as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
