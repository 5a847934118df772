"""Command-line interface.

Exit codes: 0 success / property holds / feasible, 1 property fails or search
exhausted without solutions, 2 usage or format error, 3 node budget or group
enumeration cap exceeded.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import ovoid
from .canon import classify, stabilizer_in_group
from .fields import FieldError
from .formats import (FormatError, parse_ovoid, read_geometry, read_group, serialize_ovoid,
                      write_geometry)
from .geometry import Geometry, GeometryError, build_dual_polar, check_near_polygon
from .groups import GroupCapExceeded
from .ovoid import OvoidCertificate, Violation
from .polar import PolarError, form_make
from .scheme import (NotDistanceRegular, ParameterSet, SchemeError, dual_degree_set, eigendata,
                     parameters_from_geometry)
from .search import GroupError, SearchError, SearchOptions, induce_permutations, search

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

EPILOG = "Point indices are 0-based everywhere: in .npg line bodies, .ovd files and reports."

log = logging.getLogger("dualpolar")


class UsageError(Exception):
    pass


def emit(key: str, value) -> None:
    if isinstance(value, (list, tuple, set)):
        value = " ".join(str(v) for v in value)
    print(f"{key} {value}")


# -- loading ------------------------------------------------------------------------

def load_geometry(path: str, need_form: bool = False) -> Geometry:
    G = read_geometry(path)
    if not need_form:
        return G
    if G.family is None or G.q is None or G.d is None:
        raise UsageError(f"{path}: family, q and d are needed to rebuild the form")
    H = build_dual_polar(form_make(G.family, G.d, G.q))
    if H.content_hash != G.content_hash:
        raise UsageError(f"{path}: does not match the standard construction of {H.name}")
    return H


def load_certificate(G: Geometry, path: str) -> tuple[int, list[int]]:
    _, m, members = parse_ovoid(Path(path).read_bytes(), G)
    return m, members


def verified_certificate(G: Geometry, path: str) -> OvoidCertificate:
    m, members = load_certificate(G, path)
    res = ovoid.verify_m_ovoid(G, members)
    if isinstance(res, Violation):
        raise UsageError(f"{path}: not an m-ovoid ({res})")
    if res != m and members:
        raise UsageError(f"{path}: declares m={m} but meets every line in {res} points")
    return OvoidCertificate(G.content_hash, res, tuple(members), True)


def load_prescribed(G: Geometry, path: str):
    gf = read_group(path)
    if gf.q != G.form.field.q or gf.dim != G.form.dim:
        raise UsageError(f"{path}: group over GF({gf.q}) in dimension {gf.dim}, geometry needs "
                         f"GF({G.form.field.q}) in dimension {G.form.dim}")
    return induce_permutations(G, gf.gens, gf.frobs)


# -- commands -------------------------------------------------------------------------

def cmd_build(args) -> int:
    t0 = time.perf_counter()
    S = form_make(args.family, args.rank, args.q)
    G = build_dual_polar(S, max_count=args.max_points)
    write_geometry(G, args.output)
    emit("name", G.name)
    emit("points", G.n)
    emit("lines", len(G.lines))
    emit("s", G.s)
    emit("t", G.t)
    emit("hash", G.content_hash)
    emit("seconds", f"{time.perf_counter() - t0:.2f}")
    return EXIT_OK


def cmd_params(args) -> int:
    G = load_geometry(args.geometry)
    P = parameters_from_geometry(G, samples=args.samples, seed=args.seed)
    SD = eigendata(P, expect_line_eigenvalue=False)
    emit("name", G.name or "-")
    emit("n", G.n)
    emit("s", P.s)
    emit("t", P.t)
    emit("d", P.d)
    emit("t_seq", P.t_seq)
    emit("a", SD.a)
    emit("b", SD.b)
    emit("c", SD.c)
    emit("k", SD.k)
    emit("eigenvalues", SD.eigenvalues)
    emit("multiplicities", SD.multiplicities)
    for l in range(SD.d + 1):
        for i in range(SD.d + 1):
            emit(f"p{l}", f"i={i} " + " ".join(map(str, SD.p[l][i])))
    if args.near_polygon:
        ok, msg = check_near_polygon(G)
        emit("near_polygon", "ok" if ok else msg)
        if not ok:
            return EXIT_FAIL
    return EXIT_OK


def _param_set(args) -> ParameterSet:
    if args.orders:
        return ParameterSet.from_orders(*args.orders)
    if not args.geometry:
        raise UsageError("give a geometry file or --orders s t_2 ... t_d")
    return parameters_from_geometry(load_geometry(args.geometry), seed=args.seed)


def cmd_check(args) -> int:
    P = _param_set(args)
    emit("orders", (P.s,) + P.t_seq[2:])
    holds = ovoid.check_thm2_hypothesis(P)
    for i in range(3, P.d + 1):
        emit("hypothesis", f"i={i} t_i+1={P.t_seq[i] + 1} rhs={ovoid.thm2_rhs(P, i)} "
                           f"{'holds' if i in holds else 'fails'}")
    feasible = True
    if P.s >= 2:
        for r in ovoid.check_dbv_bounds(P):
            feasible &= r.feasible
            emit("bounds", f"i={r.i} lower={r.lower} value={r.value} upper={r.upper} "
                           f"attained={r.attained or '-'} {'ok' if r.feasible else 'violated'}")
    else:
        emit("bounds", "skipped (s < 2)")
    adm = sorted(ovoid.admissible_m(P))
    emit("admissible_m", adm if adm else "none")
    return EXIT_OK if feasible else EXIT_FAIL


def cmd_verify(args) -> int:
    G = load_geometry(args.geometry)
    m, members = load_certificate(G, args.ovoid)
    res = ovoid.verify_m_ovoid(G, members)
    emit("size", len(members))
    if isinstance(res, Violation):
        emit("result", "FAIL")
        emit("violation", f"line {res.line} count {res.count} expected {res.expected}")
        return EXIT_FAIL
    if res != m and members:
        emit("result", "FAIL")
        emit("violation", f"declared m {m} measured m {res}")
        return EXIT_FAIL
    emit("result", "PASS")
    emit("m", res)
    return EXIT_OK


def cmd_invariants(args) -> int:
    G = load_geometry(args.geometry)
    cert = verified_certificate(G, args.ovoid)
    P = parameters_from_geometry(G, seed=args.seed)
    SD = eigendata(P)
    reports = [ovoid.sphere_count_scan(G, cert, SD, seed=args.seed)]
    eig = ovoid.eigen_identity_check(G, cert)
    print(f"eigen_identity: {'PASS' if eig else 'FAIL'} constant={cert.m * (P.t + 1)}")
    chi = cert.indicator(G.n) - cert.m / (P.s + 1)
    dds = dual_degree_set(G, SD, chi)
    line_idx = SD.line_eigenvalue_index()
    dds_ok = dds <= {line_idx}
    print(f"dual_degree_set: {'PASS' if dds_ok else 'FAIL'} {sorted(dds)} line_eigenvalue_index={line_idx}")
    hyp = ovoid.check_thm2_hypothesis(P)
    for i in range(3, P.d + 1):
        if i in hyp:
            reports.append(ovoid.vanhove_check(G, cert, i, SD, seed=args.seed))
        else:
            print(f"vanhove: SKIP i={i} (hypothesis fails at i)")
    reports.append(ovoid.cross_sphere_check(G, cert, SD, seed=args.seed))
    for i in range(3, P.d + 1):
        reports.append(ovoid.double_count_check(G, cert, i, SD, seed=args.seed))
    for r in reports:
        print(r.line())
    ok = eig and dds_ok and all(r.ok for r in reports)
    return EXIT_OK if ok else EXIT_FAIL


def _ovd_paths(base: Path, count: int) -> list[Path]:
    if count == 1:
        return [base]
    return [base.with_name(f"{base.stem}_{j:04d}{base.suffix or '.ovd'}") for j in range(count)]


def cmd_search(args) -> int:
    G = load_geometry(args.geometry, need_form=args.group is not None)
    group = load_prescribed(G, args.group) if args.group else None
    if group is not None:
        emit("orbits", len(group.orbits))
    opts = SearchOptions(mode=args.mode, group=group, checkpoint=args.checkpoint,
                         node_budget=args.budget, split_depth=args.split_depth,
                         threads=args.threads, engine=args.engine)
    t0 = time.perf_counter()
    res = search(G, args.m, opts)
    print(res.summary())
    emit("seconds", f"{time.perf_counter() - t0:.2f}")
    if res.certificates:
        base = Path(args.output or Path(args.geometry).with_suffix("").name + f"_m{args.m}.ovd")
        for cert, path in zip(res.certificates, _ovd_paths(base, len(res.certificates))):
            path.write_bytes(serialize_ovoid(cert.geom_hash, cert.m, cert.members))
            emit("wrote", path)
    if res.status == "BUDGET":
        return EXIT_BUDGET
    return EXIT_OK if res.certificates else EXIT_FAIL


def cmd_classify(args) -> int:
    G = load_geometry(args.geometry)
    certs = [verified_certificate(G, p) for p in args.ovoids]
    cls = classify(G, certs)
    emit("certificates", len(certs))
    emit("classes", cls.count)
    for members, digest in zip(cls.classes, cls.digests):
        emit("class", f"{digest[:16]} " + " ".join(args.ovoids[j] for j in members))
    return EXIT_OK


def cmd_stabilizer(args) -> int:
    G = load_geometry(args.geometry, need_form=True)
    cert = verified_certificate(G, args.ovoid)
    group = load_prescribed(G, args.group)
    rep = stabilizer_in_group(G, cert, group, cap=args.cap)
    for line in rep.lines():
        print(line)
    return EXIT_OK


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for search")
    common.add_argument("-v", "--verbose", action="store_true")

    # common options live on the subcommands only, so a subcommand default never
    # overrides a value given before it
    p = argparse.ArgumentParser(prog="dualpolar", epilog=EPILOG,
                                description="Dual polar spaces, their parameters and m-ovoid search.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", parents=[common], epilog=EPILOG,
                       help="construct DQ(2d,q), DW(2d-1,q) or DH(2d-1,q^2) and write a .npg file")
    b.add_argument("--family", required=True, choices=["dq", "dw", "dh"])
    b.add_argument("--rank", type=int, required=True, help="rank d of the polar space")
    b.add_argument("--q", type=int, required=True,
                   help="field order; for dh this is q with the geometry over GF(q^2)")
    b.add_argument("-o", "--output", required=True)
    b.add_argument("--max-points", type=int, default=25_000, help="refuse to enumerate more generators")
    b.set_defaults(func=cmd_build)

    pr = sub.add_parser("params", parents=[common], epilog=EPILOG,
                        help="measure regular near polygon parameters and eigendata")
    pr.add_argument("geometry")
    pr.add_argument("--samples", type=int, default=2000, help="pairs per distance when n is large")
    pr.add_argument("--near-polygon", action="store_true", help="also run the full near-polygon scan")
    pr.set_defaults(func=cmd_params)

    c = sub.add_parser("check", parents=[common], epilog=EPILOG,
                       help="hemisystem hypothesis, parameter bounds and admissible m")
    c.add_argument("geometry", nargs="?")
    c.add_argument("--orders", type=int, nargs="+", metavar="N", help="s t_2 ... t_d instead of a geometry")
    c.set_defaults(func=cmd_check)

    v = sub.add_parser("verify", parents=[common], epilog=EPILOG, help="check that an .ovd file is an m-ovoid")
    v.add_argument("geometry")
    v.add_argument("ovoid")
    v.set_defaults(func=cmd_verify)

    iv = sub.add_parser("invariants", parents=[common], epilog=EPILOG,
                        help="run every counting identity on a verified m-ovoid")
    iv.add_argument("geometry")
    iv.add_argument("ovoid")
    iv.set_defaults(func=cmd_invariants)

    s = sub.add_parser("search", parents=[common], epilog=EPILOG, help="exact m-ovoid search")
    s.add_argument("geometry")
    s.add_argument("-m", type=int, required=True)
    s.add_argument("--mode", choices=["first", "all"], default="first")
    s.add_argument("--group", help=".grp file of generators to prescribe as symmetries")
    s.add_argument("--checkpoint", help="journal file; an existing one is resumed")
    s.add_argument("--budget", type=int, help="node budget (exit 3 when exceeded)")
    s.add_argument("--split-depth", type=int, default=6, help="depth of the root task split")
    s.add_argument("--engine", choices=["fast", "python"], default="fast")
    s.add_argument("-o", "--output", help="output .ovd (numbered _NNNN when several)")
    s.set_defaults(func=cmd_search)

    cl = sub.add_parser("classify", parents=[common], epilog=EPILOG,
                        help="group .ovd files into equivalence classes")
    cl.add_argument("geometry")
    cl.add_argument("ovoids", nargs="*")
    cl.set_defaults(func=cmd_classify)

    st = sub.add_parser("stabilizer", parents=[common], epilog=EPILOG,
                        help="setwise stabiliser of an .ovd set inside a .grp group")
    st.add_argument("geometry")
    st.add_argument("ovoid")
    st.add_argument("group")
    st.add_argument("--cap", type=int, default=1_000_000, help="maximum group order to enumerate")
    st.set_defaults(func=cmd_stabilizer)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except GroupCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, FormatError, GroupError, PolarError, FieldError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GeometryError, NotDistanceRegular, SchemeError, ovoid.OvoidError, SearchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
