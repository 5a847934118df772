"""Acceptance suite: one PASS/FAIL line per criterion.

The two long enumerations (DW(5,3) with m = 2 and the complete DQ(6,3)
m = 2 output) run in full only when DUALPOLAR_EXTENDED=1; otherwise the
desk-scale fallback is checked and the line says so. Checkpoints for the
extended runs go to DUALPOLAR_CKPT_DIR (default: the pytest temp dir) so an
interrupted run resumes.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from dualpolar.canon import automorphisms, canonical_form, classify, stabilizer_in_group
from dualpolar.cli import run_cli
from dualpolar.fields import FieldError, field_of_order, prime_power
from dualpolar.formats import parse_ovoid, write_geometry
from dualpolar.geometry import Geometry, build_dual_polar, check_near_polygon
from dualpolar.groups import random_isometry
from dualpolar.ovoid import (
    admissible_m,
    certify,
    check_dbv_bounds,
    check_thm2_hypothesis,
    cross_sphere_check,
    eigen_identity_check,
    sphere_count_check,
    vanhove_check,
)
from dualpolar.polar import form_make
from dualpolar.scheme import (
    eigendata,
    intersection_table,
    measure_intersection_numbers,
    parameters_from_geometry,
    project,
)
from dualpolar.search import act_on_points, induce_permutations, search

from conftest import data_file

EXTENDED = os.environ.get("DUALPOLAR_EXTENDED") == "1"
BUDGET = 10**9


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, seconds=None):
        took = f" [{seconds:.1f}s]" if seconds is not None else ""
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} {detail}{took}")
        assert ok, f"criterion {n}: {detail}"
    return emit


@pytest.fixture(scope="module")
def npg(tmp_path_factory, dq63, dw53, gq22):
    d = tmp_path_factory.mktemp("acc")
    for name, G in (("dq63", dq63), ("dw53", dw53), ("gq22", gq22)):
        write_geometry(G, d / f"{name}.npg")
    return d


def ckpt_dir(tmp_path):
    d = Path(os.environ.get("DUALPOLAR_CKPT_DIR", tmp_path))
    d.mkdir(parents=True, exist_ok=True)
    return d


def cli(capsys, *argv):
    code = run_cli([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, dict(ln.split(" ", 1) for ln in out.splitlines() if " " in ln)


def test_criterion_1_construction(report):
    rows = []
    ok = True
    t_all = time.perf_counter()
    for fam, d, q, want in [("Q", 3, 3, (1120, 3640, 4, 13)), ("W", 3, 3, (1120, 3640, 4, 13)),
                            ("H", 3, 2, (891, 891 * 21 // 3, 3, 21))]:
        t0 = time.perf_counter()
        G = build_dual_polar(form_make(fam, d, q))
        dt = time.perf_counter() - t0
        got = (G.n, len(G.lines), G.s + 1, G.t + 1)
        ok &= got == want and dt < 60
        rows.append(f"{G.name} n={got[0]} lines={got[1]} s+1={got[2]} t+1={got[3]} ({dt:.1f}s)")
    report(1, ok, "; ".join(rows), time.perf_counter() - t_all)


def test_criterion_2_scheme_identities(report, dq63, dw53, dh54):
    t0 = time.perf_counter()
    ok = True
    rows = []
    rng = np.random.default_rng(2)
    for G in (dq63, dw53, dh54):
        P = parameters_from_geometry(G)
        SD = intersection_table(P)
        a, b, c = measure_intersection_numbers(G)
        k = [int(np.count_nonzero(G.distance_matrix[0] == i)) for i in range(P.d + 1)]
        formulas = [(P.s - 1) * (t + 1) for t in P.t_seq], [P.s * (P.t - t) for t in P.t_seq]
        ok &= a == formulas[0] and b == formulas[1] and c[1:] == [t + 1 for t in P.t_seq[1:]]
        ok &= k == SD.k
        D = G.distance_matrix
        bad = 0
        for l in range(P.d + 1):
            xs, ys = np.nonzero(D == l)
            for j in rng.choice(len(xs), size=100):
                dx, dy = D[xs[j]], D[ys[j]]
                for i in range(P.d + 1):
                    for jj in range(P.d + 1):
                        bad += int(np.count_nonzero((dx == i) & (dy == jj))) != SD.p[l][i][jj]
        ok &= bad == 0
        rows.append(f"{G.name} a={a} k={SD.k} p-mismatches={bad}")
    dt = time.perf_counter() - t0
    report(2, ok and dt < 60, "; ".join(rows), dt)


def test_criterion_3_hypothesis_and_bounds(report, dq63, dw53, dh54):
    t0 = time.perf_counter()
    ok = True
    rows = []
    for G, want in ((dq63, {2}), (dw53, {2}), (dh54, set())):
        P = parameters_from_geometry(G)
        (b,) = check_dbv_bounds(P)
        adm = admissible_m(P)
        ok &= b.attained == "lower" and check_thm2_hypothesis(P) == {3} and adm == want
        rows.append(f"{G.name} t3+1={b.value} lower={b.lower} admissible_m={sorted(adm) or 'none'}")
    report(3, ok, "; ".join(rows), time.perf_counter() - t0)


def test_criterion_4_hemisystem(report, capsys, npg, dq63, tmp_path):
    t0 = time.perf_counter()
    out = tmp_path / "hemi.ovd"
    code, f = cli(capsys, "search", npg / "dq63.npg", "-m", 2, "--mode", "first", "-o", out)
    t_search = time.perf_counter() - t0
    _, m, members = parse_ovoid(out.read_bytes(), dq63)
    cert = certify(dq63, members)
    SD = eigendata(parameters_from_geometry(dq63))
    timings = {}

    def timed(name, fn):
        t = time.perf_counter()
        res = fn()
        timings[name] = time.perf_counter() - t
        return res

    inside = sphere_count_check(dq63, cert, cert.members[0], SD)
    x_out = next(x for x in range(dq63.n) if x not in set(cert.members))
    outside = timed("sphere", lambda: sphere_count_check(dq63, cert, x_out, SD))
    eig = timed("eigen", lambda: eigen_identity_check(dq63, cert))
    van = timed("vanhove", lambda: vanhove_check(dq63, cert, 3, SD))
    cross = timed("cross", lambda: cross_sphere_check(dq63, cert, SD))
    ok = (code == 0 and f["status"] == "FOUND" and len(members) == 560 and cert.m == 2
          and inside.details["measured"] == (1, 13, 195, 351)
          and outside.details["measured"] == (0, 26, 156, 378)
          and eig and van.ok and van.details["mu"] == "16" and van.checked >= 1000
          and cross.ok and cross.details["observed"][2] == [12] and cross.details["observed"][3] == [135]
          and t_search < 600 and max(timings.values()) < 60)
    detail = (f"560-point certificate in {f['nodes']} nodes ({t_search:.1f}s); spheres "
              f"{inside.details['measured']}/{outside.details['measured']}; constant 26; "
              f"mu=16 on {van.checked} pairs; cross 12/135")
    report(4, ok, detail, time.perf_counter() - t0)


def test_criterion_5_no_one_ovoid(report, capsys, npg, tmp_path):
    t0 = time.perf_counter()
    code, f = cli(capsys, "search", npg / "dq63.npg", "-m", 1, "--mode", "all", "--budget", BUDGET,
                  "--checkpoint", tmp_path / "dq63_m1.ckpt")
    ok = code == 1 and f["status"] == "EXHAUSTED" and f["solutions"] == "0"
    report(5, ok, f"full search {f['status']} with {f['solutions']} certificates, {f['nodes']} nodes",
           time.perf_counter() - t0)


def test_criterion_6_no_dw53_hemisystem(report, capsys, npg, tmp_path):
    t0 = time.perf_counter()
    ck = ckpt_dir(tmp_path)
    detail = ""
    if EXTENDED:
        code, f = cli(capsys, "search", npg / "dw53.npg", "-m", 2, "--mode", "all", "--budget", BUDGET,
                      "--split-depth", 10, "--checkpoint", ck / "dw53_m2.ckpt")
        if f["status"] == "EXHAUSTED":
            ok = code == 1 and f["solutions"] == "0"
            report(6, ok, f"full search EXHAUSTED with {f['solutions']} certificates, {f['nodes']} nodes",
                   time.perf_counter() - t0)
            return
        detail = f"full search stopped at {f['status']} ({f['nodes']} nodes); "
    grp = data_file("dw53_involution.grp")
    code, f = cli(capsys, "search", npg / "dw53.npg", "-m", 2, "--mode", "all", "--group", grp,
                  "--budget", BUDGET, "--checkpoint", ck / "dw53_m2_inv.ckpt")
    ok = code == 1 and f["status"] == "EXHAUSTED" and f["solutions"] == "0"
    detail += (f"fallback: orbit-reduced search under an involution ({f['orbits']} orbits) "
               f"{f['status']} with {f['solutions']} certificates, {f['nodes']} nodes"
               + ("" if EXTENDED else "; full run needs DUALPOLAR_EXTENDED=1"))
    report(6, ok, detail, time.perf_counter() - t0)


def test_criterion_7_uniqueness(report, dq63, hemi, tmp_path):
    t0 = time.perf_counter()
    detail = ""
    if EXTENDED:
        res = search(dq63, 2, mode="all", node_budget=BUDGET, split_depth=10,
                     checkpoint=ckpt_dir(tmp_path) / "dq63_m2_all.ckpt")
        if res.status == "EXHAUSTED":
            cls = classify(dq63, res.certificates)
            report(7, cls.count == 1, f"complete output of {len(res.certificates)} certificates "
                                      f"forms {cls.count} class", time.perf_counter() - t0)
            return
        detail = f"complete enumeration stopped at {res.status} ({len(res.certificates)} found); "
    rng = np.random.default_rng(7)
    images = []
    for _ in range(50):
        g = random_isometry(dq63.form, rng)
        images.append(certify(dq63, act_on_points(dq63, g)[list(hemi.members)]))
    distinct = len({c.members for c in images} | {hemi.members})
    cls = classify(dq63, [hemi] + images)
    dt = time.perf_counter() - t0
    detail += (f"fallback: certificate plus 50 images under random isometries "
               f"({distinct} distinct sets) form {cls.count} class")
    report(7, cls.count == 1 and distinct > 40 and dt < 300, detail, dt)


def test_criterion_8_stabilizer(report, dq63, hemi, stab120):
    t0 = time.perf_counter()
    grp = induce_permutations(dq63, stab120.gens)
    rep = stabilizer_in_group(dq63, hemi, grp)
    _, full = automorphisms(dq63, hemi)
    dt = time.perf_counter() - t0
    prof = " ".join(f"{k}:{v}" for k, v in rep.element_orders.items())
    ok = rep.group_order == 120 and rep.order == 120 and full == 120 and dt < 300
    report(8, ok, f"stabilizer order {rep.order} in a group of order {rep.group_order}; "
                  f"element orders {prof}; full set stabilizer {full}", dt)


def test_criterion_9_gq_oracle(report, gq22):
    t0 = time.perf_counter()
    n = gq22.n
    masks = np.arange(1 << n, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(n)) & 1
    counts = bits[:, gq22.line_array].sum(axis=2)
    const = np.all(counts == counts[:, :1], axis=1)
    ok = True
    rows = []
    for m in range(4):
        brute = sorted(tuple(np.flatnonzero(bits[x]).tolist()) for x in np.flatnonzero(const & (counts[:, 0] == m)))
        res = search(gq22, m, mode="all")
        found = sorted(c.members for c in res.certificates)
        ok &= res.status == "EXHAUSTED" and found == brute
        rows.append(f"m={m}: {len(found)}/{len(brute)}")
    dt = time.perf_counter() - t0
    report(9, ok and dt < 300, "search vs 2^15 subsets " + ", ".join(rows), dt)


def test_criterion_10_property_suites(report, gq22, dq63, dw53, dh54, hemi):
    t0 = time.perf_counter()
    parts = []
    # field axioms, exhaustive for every q <= 81
    field_ok = True
    qs = [q for q in range(2, 82) if _prime_power(q)]
    for q in qs:
        F = field_of_order(q)
        a = np.arange(q)
        A, M = F.add_table, F.mul_table
        field_ok &= bool(
            np.array_equal(A, A.T) and np.array_equal(M, M.T)
            and np.array_equal(A[A[:, :, None], a], A[a[:, None, None], A[None]])
            and np.array_equal(M[M[:, :, None], a], M[a[:, None, None], M[None]])
            and np.array_equal(M[a[:, None, None], A[None]], A[M[:, :, None], M[:, None, :]])
            and np.all(A[a, F.neg_table] == 0) and np.all(M[a[1:], F.inv_table[1:]] == 1))
    parts.append(f"fields {len(qs)} orders {'ok' if field_ok else 'FAIL'}")
    # near polygon axioms, full scan
    np_ok = all(check_near_polygon(G)[0] for G in (gq22, dq63, dw53, dh54))
    parts.append(f"near-polygon {'ok' if np_ok else 'FAIL'}")
    # resolution of identity
    worst = 0.0
    rng = np.random.default_rng(0)
    for G in (gq22, dq63, dw53, dh54):
        SD = eigendata(parameters_from_geometry(G))
        v = rng.standard_normal(G.n)
        total = sum(project(G, SD, j, v) for j in range(SD.d + 1))
        worst = max(worst, float(np.linalg.norm(total - v) / np.linalg.norm(v)))
    parts.append(f"resolution of identity max rel err {worst:.1e}")
    # canonical form under relabelling
    ref = canonical_form(dq63, hemi)
    same = 0
    for _ in range(100):
        perm = rng.permutation(dq63.n)
        H = Geometry(dq63.n, sorted(tuple(sorted(int(perm[x]) for x in ln)) for ln in dq63.lines))
        same += canonical_form(H, sorted(int(perm[x]) for x in hemi.members)) == ref
    parts.append(f"canonical form stable {same}/100")
    dt = time.perf_counter() - t0
    ok = field_ok and np_ok and worst < 1e-8 and same == 100 and dt < 600
    report(10, ok, "; ".join(parts), dt)


def _prime_power(q):
    try:
        prime_power(q)
        return True
    except FieldError:
        return False
