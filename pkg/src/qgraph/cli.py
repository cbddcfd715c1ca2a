"""Command-line driver: ``qgraph <command> [options]``.

Graph files are JSON (see ``qgraph.graph.build_graph``).  Structured results
are written as JSON with 9 significant digits; band tables as CSV with full
precision.  Exit codes: 0 ok, 2 input error, 3 solver failure, 4 certificate
or compact solution not found.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import families
from .discrete import (PeriodicDifferenceOperator, discrete_flat_band_test,
                       find_compact_kernel, inverse_floquet)
from .dtn import (DtnFunction, decorated_reduction, dtn_pole_candidates,
                  gap_certificate)
from .edge import DELTA_D, dirichlet_spectrum
from .errors import (CertificateNotFound, GraphError, QGraphError,
                     ResonanceError, SolverError)
from .floquet import band_structure, flat_band_test, quantum_scar
from .graph import build_graph, decorate, subdivide_all, subdivide_edge, to_dict
from .schnol import (build_cutoff, generate_generalized_eigenfunction,
                     schnol_bound_details)
from .spectrum import eigenvalues, solve_spectrum

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_NOT_FOUND = 0, 2, 3, 4

DEFAULTS = {
    "lo": 0.0,
    "hi": 40.0,
    "tol": 1e-12,
    "step": None,
    "delta": DELTA_D,
    "nk": 64,
    "flat_tol": 1e-8,
    "root": None,
    "lam": None,
    "width": 1.0,
    "nlam": 400,
    "route": "auto",
    "degree": 8,
    "exact": False,
    "discrete": False,
    "family": None,
    "radii": [10, 20, 40, 80, 160],
    "seed": [1.0, 0.0],
    "edge": None,
    "at": None,
    "fraction": 1 / math.sqrt(2),
    "grid": None,
    "details": False,
}


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------


def _read_json(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def read_graph(path):
    doc = _read_json(path)
    try:
        return build_graph(doc)
    except GraphError as exc:
        raise InputError(f"{path}: {exc}") from None


def read_operator(path) -> PeriodicDifferenceOperator:
    """Adjacency-type operator from a graph file; edge ``weight`` defaults to 1, lengths are ignored."""
    doc = _read_json(path)
    try:
        verts = [v["id"] if isinstance(v, dict) else v for v in doc["vertices"]]
        rank = int(doc.get("period", {}).get("rank", 0)) or len(doc["edges"][0].get("shift", [0]))
        hops = []
        for rec in doc["edges"]:
            g = tuple(rec.get("shift", [0] * rank))
            w = rec.get("weight", 1)
            hops.append((rec["from"], rec["to"], g, w))
            hops.append((rec["to"], rec["from"], tuple(-x for x in g), w))
        for v in doc["vertices"]:
            if isinstance(v, dict) and "potential" in v:
                hops.append((v["id"], v["id"], (0,) * rank, v["potential"]))
        return PeriodicDifferenceOperator(tuple(verts), tuple(hops), rank)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"{path}: bad operator description ({exc})") from None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _num(x, scale=1.0):
    if isinstance(x, bool) or x is None:
        return x
    if isinstance(x, complex):
        if abs(x.imag) <= 1e-12 * max(1.0, abs(x)):
            return _num(x.real, scale)
        return [_num(x.real, scale), _num(x.imag, scale)]
    if isinstance(x, int):
        return x
    x = float(x)
    if not math.isfinite(x):
        return None
    if abs(x) < 1e-9 * max(1.0, scale):
        return 0
    return float(f"{x:.9g}")


def _clean(obj, scale=1.0):
    if isinstance(obj, dict):
        return {str(k): _clean(v, scale) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v, scale) for v in obj]
    if isinstance(obj, (int, float, complex)) or obj is None:
        return _num(obj, scale)
    if hasattr(obj, "is_Rational") or hasattr(obj, "is_Number"):
        return _num(float(obj), scale)
    return obj


def _emit_json(obj, out, scale=1.0):
    text = json.dumps(_clean(obj, scale))
    out.write(text + "\n")


def _emit_csv(header, rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    out.write(buf.getvalue())


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _window(a):
    if not a.hi > a.lo:
        raise InputError("empty window: need hi > lo")
    for name in ("tol", "delta", "flat_tol"):
        if getattr(a, name) is not None and getattr(a, name) <= 0:
            raise InputError(f"{name} must be positive")
    return a.lo, a.hi


def _decoration(a):
    if not a.decoration:
        return None
    g1 = read_graph(a.decoration)
    root = a.root if a.root is not None else g1.root
    if root is None:
        raise InputError("decoration needs a root (--root or 'root' in the file)")
    return DtnFunction(g1, root, delta=a.delta)


def cmd_spectrum(a, out):
    g = read_graph(a.graph)
    lo, hi = _window(a)
    res = solve_spectrum(g, None, lo, hi, a.tol, step=a.step, delta=a.delta, eigenfunctions=False)
    if a.details:
        _emit_json([{"lambda": r.lam, "multiplicity": r.multiplicity} for r in res], out, hi)
    else:
        _emit_json(eigenvalues(res), out, hi)


def cmd_bands(a, out):
    g = read_graph(a.graph)
    lo, hi = _window(a)
    dtn = _decoration(a)
    cond = decorated_reduction(g, None, dtn) if dtn else None
    bs = band_structure(g, cond, lo=lo, hi=hi, n_k=a.nk, tol=a.tol, step=a.step, delta=a.delta)
    head = ["k"] if g.rank == 1 else [f"k{j + 1}" for j in range(g.rank)]
    rows = [list(k) + [lam] for k, roots in zip(bs.ks, bs.roots) for lam in roots]
    _emit_csv(head + ["lambda"], rows, out)


def cmd_gaps(a, out):
    g = read_graph(a.graph)
    lo, hi = _window(a)
    dtn = _decoration(a)
    cond = decorated_reduction(g, None, dtn) if dtn else None
    bs = band_structure(g, cond, lo=lo, hi=hi, n_k=a.nk, tol=a.tol, step=a.step, delta=a.delta)
    _emit_json({"bands": bs.band_intervals, "gaps": bs.gaps, "flat": bs.flat}, out, hi)


def _lams(a):
    if a.grid:
        lo, hi, n = a.grid
        n = int(n)
        return [lo + (hi - lo) * i / max(n - 1, 1) for i in range(n)]
    if a.lam is None:
        raise InputError("give --lam or --grid")
    return a.lam if isinstance(a.lam, list) else [a.lam]


def cmd_dtn(a, out):
    dtn = _decoration(a)
    rows = []
    for lam in _lams(a):
        try:
            rows.append({"lambda": lam, "value": dtn(lam)})
        except (SolverError, ResonanceError) as exc:
            rows.append({"lambda": lam, "value": None, "error": str(exc)})
    _emit_json(rows, out)


def cmd_residues(a, out):
    dtn = _decoration(a)
    lo, hi = _window(a)
    poles = dtn_pole_candidates(dtn, lo, hi)
    _emit_json([
        {"lambda0": p.lam0, "residue": p.residue, "residue_error": p.residue_error, "psi": p.psi,
         "simple": p.simple, "multiplicity": p.multiplicity, "in_sigma_d": p.in_sigma_d,
         "applicable": p.applicable}
        for p in poles
    ], out)


def cmd_decorate_reduce(a, out):
    g0 = read_graph(a.graph)
    if g0.is_periodic:
        raise InputError("decorate-reduce compares spectra of a compact base graph")
    dtn = _decoration(a)
    if dtn is None:
        raise InputError("--decoration is required")
    lo, hi = _window(a)
    reduced = eigenvalues(solve_spectrum(g0, decorated_reduction(g0, None, dtn), lo, hi, a.tol,
                                         step=a.step, delta=a.delta, eigenfunctions=False))
    explicit = eigenvalues(solve_spectrum(decorate(g0, dtn.graph.with_conditions(dtn.cond), dtn.root), None,
                                          lo, hi, a.tol, step=a.step, delta=a.delta, eigenfunctions=False))
    excluded = set(dirichlet_spectrum(g0, hi, lo).distinct()) | set(dtn.singularities(lo, hi))
    _emit_json({"reduced": reduced, "explicit": explicit, "excluded": sorted(excluded)}, out, hi)


def cmd_gap_cert(a, out):
    g0 = read_graph(a.graph)
    dtn = _decoration(a)
    if dtn is None:
        raise InputError("--decoration is required")
    if a.lam is None:
        raise InputError("--lam (the pole lambda0) is required")
    lam0 = a.lam[0] if isinstance(a.lam, list) else a.lam
    lo, hi = gap_certificate(g0, None, dtn, lam0, a.width, a.nlam, a.nk, delta=a.delta)
    _emit_json({"lambda0": lam0, "gap": [lo, hi]}, out)


def cmd_flatband(a, out):
    lam = a.lam[0] if isinstance(a.lam, list) else a.lam
    if lam is None:
        raise InputError("--lam is required")
    if a.discrete:
        flat = discrete_flat_band_test(read_operator(a.graph), lam, a.flat_tol)
    else:
        flat = flat_band_test(read_graph(a.graph), None, lam, a.flat_tol, a.delta)
    _emit_json({"lambda": lam, "flat": flat}, out)


def cmd_scar(a, out):
    lam = a.lam[0] if isinstance(a.lam, list) else a.lam
    if lam is None:
        raise InputError("--lam is required")
    if a.discrete:
        op = read_operator(a.graph)
        if a.exact:
            from fractions import Fraction

            lam = Fraction(lam).limit_denominator(10 ** 12)
        q = find_compact_kernel(op, lam, a.degree, exact=a.exact)
        if q is None:
            raise CertificateNotFound(f"no finitely supported solution up to degree {a.degree}")
        u = inverse_floquet(q)
        rows = [[w, *g, c] for (w, g), c in sorted(u.items(), key=lambda t: (t[0][1], op.vertices.index(t[0][0])))]
        _emit_json(rows, out)
        return
    g = read_graph(a.graph)
    try:
        scar = quantum_scar(g, None, lam, a.degree, a.route, a.delta)
    except SolverError as exc:
        if "no compactly supported" in str(exc):
            raise CertificateNotFound(str(exc)) from None
        raise
    edges = []
    for (eid, cell), w in sorted(scar.waves.items(), key=lambda t: repr(t[0])):
        edges.append({"edge": eid, "cell": list(cell), "a": w.a, "b": w.b})
    _emit_json({"lambda": lam, "route": scar.route, "residual": scar.residual, "support": edges}, out)


def _schnol_graph(a):
    R = max(a.radii) + 2
    if a.family == "chain":
        return families.chain(int(math.ceil(R)))
    if a.family == "tree":
        return families.binary_tree(int(math.ceil(R)))
    if a.graph:
        return read_graph(a.graph)
    raise InputError("give a graph file or --family chain|tree")


def cmd_schnol_bound(a, out):
    lam = a.lam[0] if isinstance(a.lam, list) else a.lam
    if lam is None:
        raise InputError("--lam is required")
    g = _schnol_graph(a)
    try:
        phi = generate_generalized_eigenfunction(g, None, lam, tuple(a.seed))
    except GraphError as exc:
        raise InputError(str(exc)) from None
    rows = []
    for r in a.radii:
        d = schnol_bound_details(phi, build_cutoff(g, r))
        rows.append({"r": r, "bound": d.value, "J": d.J, "norm2": d.denominator2, "degenerate": d.degenerate})
    _emit_json(rows, out)


def cmd_subdivide(a, out):
    g = read_graph(a.graph)
    try:
        if a.edge is not None:
            if a.at is None:
                raise InputError("--at is required with --edge")
            g = subdivide_edge(g, a.edge, a.at)
        else:
            g = subdivide_all(g, a.fraction)
    except GraphError as exc:
        raise InputError(str(exc)) from None
    out.write(json.dumps(to_dict(g), indent=2) + "\n")


COMMANDS = {
    "spectrum": (cmd_spectrum, "eigenvalues of a compact graph"),
    "bands": (cmd_bands, "band structure of a periodic graph (CSV)"),
    "gaps": (cmd_gaps, "band intervals, gaps and flat bands"),
    "dtn": (cmd_dtn, "Dirichlet-to-Neumann function of a rooted graph"),
    "residues": (cmd_residues, "poles and residues of the DtN function"),
    "decorate-reduce": (cmd_decorate_reduce, "decorated spectrum by reduction and by explicit decoration"),
    "gap-cert": (cmd_gap_cert, "certified gap of a decorated periodic graph"),
    "flatband": (cmd_flatband, "flat-band test at one energy"),
    "scar": (cmd_scar, "compactly supported eigenfunction at a flat-band energy"),
    "schnol-bound": (cmd_schnol_bound, "Schnol-type distance bounds from a generalized eigenfunction"),
    "subdivide": (cmd_subdivide, "insert degree-2 Neumann vertices"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qgraph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_, argument_default=None)
        s.add_argument("graph", nargs="?", help="graph JSON file")
        s.add_argument("--config", help="JSON file with option values (flags win)")
        s.add_argument("-o", "--output", help="output file (default stdout)")
        s.add_argument("--lo", type=float)
        s.add_argument("--hi", type=float)
        s.add_argument("--tol", type=float)
        s.add_argument("--step", type=float, help="scan step in sqrt(lambda)")
        s.add_argument("--delta", type=float, help="Dirichlet exclusion radius")
        s.add_argument("--nk", type=int, help="k-points per torus dimension")
        s.add_argument("--flat-tol", type=float, dest="flat_tol")
        s.add_argument("--decoration", help="decoration graph JSON file")
        s.add_argument("--root", help="root vertex of the decoration")
        s.add_argument("--lam", type=float, nargs="+")
        s.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "N"))
        s.add_argument("--width", type=float, help="half-width of the certificate window")
        s.add_argument("--nlam", type=int, help="lambda samples of the certificate")
        s.add_argument("--route", choices=["auto", "resonant", "kernel", "subdivide"])
        s.add_argument("--degree", type=int, help="degree bound for polynomial kernels")
        s.add_argument("--exact", action="store_const", const=True, help="rational arithmetic (discrete scar)")
        s.add_argument("--discrete", action="store_const", const=True, help="treat the file as a difference operator")
        s.add_argument("--family", choices=["chain", "tree"])
        s.add_argument("--radii", type=float, nargs="+")
        s.add_argument("--seed", type=float, nargs=2, metavar=("U", "DU"))
        s.add_argument("--edge")
        s.add_argument("--at", type=float)
        s.add_argument("--fraction", type=float)
        s.add_argument("--details", action="store_const", const=True)
    return p


def _resolve(a):
    cfg = _read_json(a.config) if a.config else {}
    if not isinstance(cfg, dict):
        raise InputError(f"{a.config}: config must be a JSON object")
    for key, default in DEFAULTS.items():
        if getattr(a, key, None) is None:
            setattr(a, key, cfg.get(key, default))
    for key in ("graph", "decoration", "output"):
        if getattr(a, key, None) is None and key in cfg:
            setattr(a, key, cfg[key])
    if a.command in ("dtn", "residues"):
        a.decoration = a.graph
    if a.root is not None and a.decoration:
        # vertex ids in JSON may be integers
        try:
            doc = _read_json(a.decoration)
            ids = [v["id"] if isinstance(v, dict) else v for v in doc.get("vertices", [])]
            for v in ids:
                if str(v) == str(a.root):
                    a.root = v
        except InputError:
            pass
    if a.command not in ("schnol-bound",) and not a.graph:
        raise InputError("a graph file is required")
    return a


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        _resolve(a)
        buf = io.StringIO()
        COMMANDS[a.command][0](a, buf)
    except InputError as exc:
        print(f"qgraph {a.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CertificateNotFound as exc:
        print(f"qgraph {a.command}: not found: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (QGraphError, ArithmeticError, ValueError) as exc:
        print(f"qgraph {a.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    text = buf.getvalue()
    if a.output:
        with open(a.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
