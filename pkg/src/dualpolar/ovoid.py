"""m-ovoid certificates and the counting identities they must satisfy.

All checks here are exact (ints and Fractions). For geometries with at most
``EXHAUSTIVE_LIMIT`` points every witness is checked; larger geometries use
``SAMPLES`` witnesses drawn from a seeded generator so reports are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import Geometry
from .scheme import ParameterSet, SchemeData, intersection_table, parameters_from_geometry

EXHAUSTIVE_LIMIT = 1200
SAMPLES = 1000


class OvoidError(ValueError):
    pass


class HypothesisError(OvoidError):
    """Raised when a check is requested outside the hypothesis that justifies it."""


@dataclass(frozen=True)
class OvoidCertificate:
    geom_hash: str
    m: int
    members: tuple[int, ...]
    verified: bool = False

    def __len__(self) -> int:
        return len(self.members)

    def indicator(self, n: int) -> np.ndarray:
        chi = np.zeros(n, dtype=np.int64)
        chi[list(self.members)] = 1
        return chi


@dataclass(frozen=True)
class Violation:
    line: int
    count: int
    expected: int

    def __str__(self) -> str:
        return f"line {self.line} meets the set in {self.count} points (expected {self.expected})"


def line_counts(G: Geometry, members) -> np.ndarray:
    chi = np.zeros(G.n, dtype=np.int64)
    chi[np.asarray(list(members), dtype=np.int64)] = 1
    return chi[G.line_array].sum(axis=1)


def verify_m_ovoid(G: Geometry, members) -> int | Violation:
    """``m`` if every line meets ``members`` in exactly m points, else the first violation."""
    members = list(members)
    if members and (min(members) < 0 or max(members) >= G.n):
        raise OvoidError(f"point index outside [0, {G.n})")
    if len(set(members)) != len(members):
        raise OvoidError("repeated point in ovoid")
    counts = line_counts(G, members)
    if len(counts) == 0:
        return 0
    # the most common count is the reference, so a damaged line 0 is reported as such
    ref = int(np.argmax(np.bincount(counts)))
    bad = np.flatnonzero(counts != ref)
    if len(bad):
        j = int(bad[0])
        return Violation(j, int(counts[j]), ref)
    return ref


def certify(G: Geometry, members) -> OvoidCertificate:
    members = tuple(sorted(int(x) for x in members))
    res = verify_m_ovoid(G, members)
    if isinstance(res, Violation):
        raise OvoidError(f"not an m-ovoid: {res}")
    return OvoidCertificate(G.content_hash, res, members, verified=True)


def _require(G: Geometry, cert: OvoidCertificate) -> None:
    if not cert.verified:
        raise OvoidError("certificate has not been verified")
    if cert.geom_hash != G.content_hash:
        raise OvoidError("certificate belongs to a different geometry")


def complement(G: Geometry, cert: OvoidCertificate) -> OvoidCertificate:
    _require(G, cert)
    inside = set(cert.members)
    rest = tuple(x for x in range(G.n) if x not in inside)
    out = certify(G, rest)
    if out.m != G.s + 1 - cert.m:
        raise OvoidError(f"complement is a {out.m}-ovoid, expected {G.s + 1 - cert.m}")
    return out


# -- closed forms ---------------------------------------------------------------

def sphere_count_formula(k_i: int, s: int, m: int, i: int, inside: bool) -> Fraction:
    """Expected ``|Gamma_i(x) & O|`` for x in O (``inside``) or outside O."""
    frac = Fraction(m, s + 1)
    sign = Fraction(-1, s) ** i
    if inside:
        return k_i * (frac + sign * (1 - frac))
    return k_i * frac * (1 - sign)


def f_closed(s: int, m: int, i: int) -> Fraction:
    """Solution of ``s f_i = m - f_{i-1}`` with ``f_1 = 1``."""
    return (m - s * Fraction(-1, s) ** i * (s + 1 - m)) / Fraction(s + 1)


def vanhove_alpha(P: ParameterSet, i: int) -> int:
    s = P.s
    return s * (P.c[i - 1] + (-1) ** i * s ** (i - 2))


# -- parameter conditions ----------------------------------------------------------

def thm2_rhs(P: ParameterSet, i: int) -> Fraction:
    s = P.s
    sign = (-1) ** i
    return Fraction((s**i + sign) * (P.t_seq[i - 1] + 1 + sign * s ** (i - 2)), s ** (i - 2) + sign)


def check_thm2_hypothesis(P: ParameterSet) -> set[int]:
    """Distances i in 3..d where t_i + 1 equals the hemisystem-forcing value."""
    return {i for i in range(3, P.d + 1) if P.t_seq[i] + 1 == thm2_rhs(P, i)}


@dataclass(frozen=True)
class BoundReport:
    i: int
    lower: Fraction
    value: int
    upper: Fraction
    attained: str | None  # "lower", "upper" or None
    feasible: bool


def check_dbv_bounds(P: ParameterSet) -> list[BoundReport]:
    s = P.s
    if s < 2 or P.d < 2:
        raise OvoidError("bounds need s >= 2 and d >= 2")
    out = []
    for i in range(3, P.d + 1):
        prev = P.t_seq[i - 1] + 1
        lower = Fraction((s**i - 1) * (prev - s ** (i - 2)), s ** (i - 2) - 1)
        upper = Fraction((s**i + 1) * (prev + s ** (i - 2)), s ** (i - 2) + 1)
        value = P.t_seq[i] + 1
        attained = "lower" if value == lower else "upper" if value == upper else None
        out.append(BoundReport(i, lower, value, upper, attained, lower <= value <= upper))
    return out


def admissible_m(P: ParameterSet) -> set[int]:
    """Nontrivial m for which an m-ovoid is not ruled out by the hemisystem theorem."""
    if check_thm2_hypothesis(P):
        return {(P.s + 1) // 2} if P.s % 2 else set()
    return set(range(1, P.s + 1))


# -- checks on certificates ---------------------------------------------------------

@dataclass
class CheckReport:
    name: str
    ok: bool
    checked: int = 0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        extra = " ".join(f"{k}={v}" for k, v in self.details.items())
        return f"{self.name}: {'PASS' if self.ok else 'FAIL'} ({self.checked} witnesses) {extra}".rstrip()


def _witnesses(n: int, seed: int, limit: int = EXHAUSTIVE_LIMIT, samples: int = SAMPLES) -> np.ndarray:
    if n <= limit:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=min(samples, n), replace=False))


def _scheme(G: Geometry, SD: SchemeData | None) -> SchemeData:
    return SD if SD is not None else intersection_table(parameters_from_geometry(G))


def sphere_count_check(G: Geometry, cert: OvoidCertificate, x: int, SD: SchemeData | None = None) -> CheckReport:
    """Measured ``|Gamma_i(x) & O|`` against the closed forms for i = 0..d."""
    _require(G, cert)
    SD = _scheme(G, SD)
    chi = cert.indicator(G.n)
    row = G.bfs_row(x)
    inside = bool(chi[x])
    measured, expected = [], []
    for i in range(SD.d + 1):
        measured.append(int(chi[row == i].sum()))
        expected.append(sphere_count_formula(SD.k[i], SD.params.s, cert.m, i, inside))
    ok = all(mv == ev for mv, ev in zip(measured, expected))
    return CheckReport("sphere_count", ok, 1, {"x": x, "inside": inside, "measured": tuple(measured),
                                               "expected": tuple(str(e) for e in expected)})


def sphere_count_scan(G: Geometry, cert: OvoidCertificate, SD: SchemeData | None = None,
                      seed: int = 0) -> CheckReport:
    _require(G, cert)
    SD = _scheme(G, SD)
    pts = _witnesses(G.n, seed)
    bad = [int(x) for x in pts if not sphere_count_check(G, cert, int(x), SD).ok]
    return CheckReport("sphere_count", not bad, len(pts), {"failures": len(bad)})


def eigen_identity_check(G: Geometry, cert: OvoidCertificate) -> bool:
    """``(A + (t+1) I) chi = m (t+1) 1`` coordinatewise, in integers."""
    _require(G, cert)
    chi = cert.indicator(G.n)
    lhs = G.adjacency @ chi + (G.t + 1) * chi
    return bool(np.all(lhs == cert.m * (G.t + 1)))


def _pairs_at(G: Geometry, i: int, seed: int):
    """``SAMPLES`` seeded pairs (x, y) at distance i."""
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for x in rng.choice(G.n, size=SAMPLES, replace=True):
        xs.append(int(x))
        ys.append(int(rng.choice(G.sphere(int(x), i))))
    return np.array(xs), np.array(ys)


def vanhove_check(G: Geometry, cert: OvoidCertificate, i: int, SD: SchemeData | None = None,
                  seed: int = 0) -> CheckReport:
    """Every pair at distance i has ``v_{x,y} . chi_O = 2(alpha + c_i) m / (s+1)``."""
    _require(G, cert)
    SD = _scheme(G, SD)
    P = SD.params
    if not 3 <= i <= P.d:
        raise HypothesisError(f"distance i={i} outside 3..{P.d}")
    if i not in check_thm2_hypothesis(P):
        raise HypothesisError(
            f"t_{i}+1 = {P.t_seq[i] + 1} differs from {thm2_rhs(P, i)}; design-orthogonality is not guaranteed")
    alpha = vanhove_alpha(P, i)
    ones = 2 * (alpha + SD.c[i])
    mu = Fraction(ones * cert.m, P.s + 1)
    chi = cert.indicator(G.n)
    D = G.distance_matrix
    if D is not None and G.n <= EXHAUSTIVE_LIMIT:
        sel = np.triu(D == i)
        prev = (D == i - 1).astype(np.float64)
        A = G.adjacency.astype(np.float64)
        N = np.asarray(A @ (chi[:, None] * prev))  # N[x, y] = |Gamma_1(x) & Gamma_{i-1}(y) & O|
        C = np.asarray(A @ prev)
        vals = alpha * (chi[:, None] + chi[None, :]) + N + N.T
        ones_mat = 2 * alpha + C + C.T
        observed = {int(round(v)) for v in np.unique(vals[sel])}
        ones_seen = {int(round(v)) for v in np.unique(ones_mat[sel])}
        checked = int(sel.sum())
        bad = int(np.count_nonzero(vals[sel] != float(mu)))
    else:
        xs, ys = _pairs_at(G, i, seed)
        observed, ones_seen = set(), set()
        bad = 0
        checked = len(xs)
        for x, y in zip(xs.tolist(), ys.tolist()):
            rx, ry = G.bfs_row(x), G.bfs_row(y)
            left = (rx == 1) & (ry == i - 1)
            right = (rx == i - 1) & (ry == 1)
            val = alpha * (chi[x] + chi[y]) + int(chi[left].sum()) + int(chi[right].sum())
            ones_seen.add(2 * alpha + int(left.sum()) + int(right.sum()))
            observed.add(int(val))
            bad += val != mu
    return CheckReport("vanhove", bad == 0 and ones_seen == {ones}, checked,
                       {"i": i, "alpha": alpha, "v.1": sorted(ones_seen), "mu": str(mu),
                        "observed": sorted(observed)})


def cross_sphere_check(G: Geometry, cert: OvoidCertificate, SD: SchemeData | None = None,
                       seed: int = 0) -> CheckReport:
    """For x outside O and z in O adjacent to x: ``|Gamma_{i-1}(z) & Gamma_i(x) & O| = p^1_{i,i-1} f_i``."""
    _require(G, cert)
    SD = _scheme(G, SD)
    s, m = SD.params.s, cert.m
    chi = cert.indicator(G.n).astype(bool)
    outside = [int(x) for x in _witnesses(G.n, seed) if not chi[x]]
    expected = {i: SD.p[1][i][i - 1] * f_closed(s, m, i) for i in range(1, SD.d + 1)}
    observed: dict[int, set[int]] = {i: set() for i in expected}
    checked = 0
    ok = True
    for x in outside:
        rx = G.bfs_row(x)
        for z in G.neighbors[x]:
            if not chi[z]:
                continue
            rz = G.bfs_row(int(z))
            checked += 1
            for i in expected:
                val = int(np.count_nonzero((rz == i - 1) & (rx == i) & chi))
                observed[i].add(val)
                ok &= val == expected[i]
    return CheckReport("cross_sphere", ok, checked,
                       {"expected": {i: str(v) for i, v in expected.items()},
                        "observed": {i: sorted(v) for i, v in observed.items()}})


def double_count_check(G: Geometry, cert: OvoidCertificate, i: int, SD: SchemeData | None = None,
                       seed: int = 0, witnesses: int = 20) -> CheckReport:
    """Count pairs (y, z) of ovoid points around an outside point x both ways.

    Pairs have d(x, y) = i and either d(y, z) = i-1, d(x, z) = 1 or
    d(y, z) = 1, d(x, z) = i-1. The enumeration over y first, the enumeration
    over z first and the two closed forms must all agree.
    """
    _require(G, cert)
    SD = _scheme(G, SD)
    P = SD.params
    if not 3 <= i <= P.d:
        raise HypothesisError(f"distance i={i} outside 3..{P.d}")
    s, t, m = P.s, P.t, cert.m
    c, k = SD.c, SD.k
    base = Fraction(m * k[i - 1] * (t - P.t_seq[i - 1]), s + 1)
    sign = Fraction(-1, s)
    first = (base * (1 - sign**i)
             * Fraction(2 * c[i] * m * s - (s + 1 - 2 * m) * (c[i - 1] * s**2 + (-1) ** i * s**i),
                        c[i] * (s + 1)))
    second = base * (2 * m - 1 + sign ** (i - 1) * (s - 2 * m + 2))
    chi = cert.indicator(G.n).astype(bool)
    rng = np.random.default_rng(seed)
    outside = np.flatnonzero(~chi)
    xs = rng.choice(outside, size=min(witnesses, len(outside)), replace=False)
    counts_yz, counts_zy = set(), set()
    for x in xs.tolist():
        rx = G.bfs_row(x)
        yz = 0
        for y in np.flatnonzero(chi & (rx == i)):
            ry = G.bfs_row(int(y))
            yz += int(np.count_nonzero(chi & (rx == 1) & (ry == i - 1)))
            yz += int(np.count_nonzero(chi & (rx == i - 1) & (ry == 1)))
        zy = 0
        for z in np.flatnonzero(chi & (rx == 1)):
            rz = G.bfs_row(int(z))
            zy += int(np.count_nonzero(chi & (rx == i) & (rz == i - 1)))
        for z in np.flatnonzero(chi & (rx == i - 1)):
            rz = G.bfs_row(int(z))
            zy += int(np.count_nonzero(chi & (rx == i) & (rz == 1)))
        counts_yz.add(yz)
        counts_zy.add(zy)
    ok = counts_yz == counts_zy == {first} and first == second
    return CheckReport("double_count", ok, len(xs),
                       {"i": i, "by_y": sorted(counts_yz), "by_z": sorted(counts_zy),
                        "first_form": str(first), "second_form": str(second)})
