"""Distance-regular parameters, intersection numbers and eigendata.

Everything combinatorial (k_i, p^l_{ij}) is exact integer/rational
arithmetic. Eigenvalues are exact when integral; projections onto the
eigenspaces are applied as polynomials in the sparse adjacency operator and
never as dense n x n idempotents.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .geometry import Geometry


class SchemeError(ValueError):
    pass


class NotDistanceRegular(SchemeError):
    def __init__(self, msg: str, witness: tuple[int, int] | None = None):
        super().__init__(msg)
        self.witness = witness


@dataclass(frozen=True)
class ParameterSet:
    """Regular near 2d-gon parameters ``(s, t_2, ..., t_d)`` with ``t_0 = -1, t_1 = 0``."""

    s: int
    d: int
    t_seq: tuple[int, ...]

    def __post_init__(self):
        if len(self.t_seq) != self.d + 1:
            raise SchemeError(f"need t_0..t_d ({self.d + 1} values), got {len(self.t_seq)}")
        if self.t_seq[0] != -1 or self.t_seq[1] != 0:
            raise SchemeError("t_0 must be -1 and t_1 must be 0")

    @classmethod
    def from_orders(cls, s: int, *ts: int) -> "ParameterSet":
        """``from_orders(3, 3, 12)`` is (s, t_2, t_3) = (3, 3, 12)."""
        return cls(s, len(ts) + 1, (-1, 0) + tuple(ts))

    @property
    def t(self) -> int:
        return self.t_seq[-1]

    @property
    def a(self) -> list[int]:
        return [(self.s - 1) * (ti + 1) for ti in self.t_seq]

    @property
    def b(self) -> list[int]:
        return [self.s * (self.t - ti) for ti in self.t_seq]

    @property
    def c(self) -> list[int]:
        return [ti + 1 for ti in self.t_seq]

    @property
    def k1(self) -> int:
        return self.s * (self.t + 1)


@dataclass
class SchemeData:
    params: ParameterSet
    a: list[int]
    b: list[int]
    c: list[int]
    k: list[int]
    p: list[list[list[int]]]  # p[l][i][j]
    eigenvalues: list = field(default_factory=list)  # descending; ints when integral
    multiplicities: list[int] = field(default_factory=list)
    projector_coeffs: list[list] = field(default_factory=list)  # E_j = sum_r coeffs[j][r] A^r

    @property
    def n(self) -> int:
        return sum(self.k)

    @property
    def d(self) -> int:
        return self.params.d

    def line_eigenvalue_index(self) -> int:
        """Index of the eigenvalue -(t+1)."""
        target = -(self.params.t + 1)
        for j, th in enumerate(self.eigenvalues):
            if abs(th - target) < 1e-9:
                return j
        raise SchemeError(f"-(t+1) = {target} is not an eigenvalue")


# -- measurement ----------------------------------------------------------------

def measure_intersection_numbers(G: Geometry, samples: int = 2000, seed: int = 0):
    """Measured ``(a, b, c)`` of the collinearity graph, verified constant.

    With a dense distance matrix every pair is checked; otherwise ``samples``
    seeded random pairs per distance are used. Raises NotDistanceRegular.
    """
    d = G.diameter
    a, b, c = [0] * (d + 1), [0] * (d + 1), [0] * (d + 1)
    A = G.adjacency
    D = G.distance_matrix
    if D is not None:
        masks = [(D == i).astype(np.float32) for i in range(d + 1)]
        Af = A.astype(np.float32)
        for i in range(d + 1):
            sel = D == i
            for arr, off in ((c, -1), (a, 0), (b, 1)):
                j = i + off
                if not 0 <= j <= d:
                    continue
                counts = np.asarray(Af @ masks[j])  # [y, x] = #{z ~ y : d(x, z) = j}
                vals = counts[sel]
                if vals.min() != vals.max():
                    y, x = np.argwhere(sel & (counts != vals[0]))[0]
                    raise NotDistanceRegular(
                        f"intersection number at distance {i} (offset {off}) not constant",
                        (int(x), int(y)))
                arr[i] = int(vals[0])
        return a, b, c
    rng = np.random.default_rng(seed)
    seen: dict[tuple[int, int], int] = {}
    for x in rng.integers(0, G.n, size=max(1, samples // 50)):
        row_x = G.bfs_row(int(x))
        for y in rng.integers(0, G.n, size=50):
            y = int(y)
            i = int(row_x[y])
            nbrs = G.neighbors[y]
            dz = row_x[nbrs]
            for arr, off in ((c, -1), (a, 0), (b, 1)):
                j = i + off
                if not 0 <= j <= d:
                    continue
                val = int(np.count_nonzero(dz == j))
                key = (i, off)
                if key in seen and seen[key] != val:
                    raise NotDistanceRegular(
                        f"intersection number at distance {i} (offset {off}) not constant",
                        (int(x), y))
                seen[key] = val
                arr[i] = val
    return a, b, c


def parameters_from_geometry(G: Geometry, samples: int = 2000, seed: int = 0) -> ParameterSet:
    a, b, c = measure_intersection_numbers(G, samples=samples, seed=seed)
    s, t, d = G.s, G.t, G.diameter
    if c[d] == 0:
        raise NotDistanceRegular("distance d never attained in samples")
    ts = tuple(ci - 1 for ci in c)
    P = ParameterSet(s, d, (-1,) + ts[1:])
    if P.t != t:
        raise NotDistanceRegular(f"c_d - 1 = {P.t} differs from t = {t}")
    if P.a != a or P.b != b:
        raise NotDistanceRegular(f"measured a={a}, b={b} disagree with near-polygon formulas")
    return P


# -- intersection table -----------------------------------------------------------

def intersection_table(P: ParameterSet) -> SchemeData:
    d = P.d
    a, b, c = P.a, P.b, P.c
    k = [1]
    for i in range(1, d + 1):
        ki = Fraction(k[-1] * b[i - 1], c[i])
        if ki.denominator != 1 or ki <= 0:
            raise SchemeError(f"k_{i} = {ki} is not a positive integer")
        k.append(int(ki))

    p = [[[Fraction(0)] * (d + 1) for _ in range(d + 1)] for _ in range(d + 1)]
    for l in range(d + 1):
        p[l][0][l] = Fraction(1)
        if l >= 1:
            p[l][1][l - 1] = Fraction(c[l])
        p[l][1][l] = Fraction(a[l])
        if l < d:
            p[l][1][l + 1] = Fraction(b[l])

    def get(l, i, j):
        if 0 <= l <= d and 0 <= i <= d:
            return p[l][i][j]
        return Fraction(0)

    for i in range(1, d):
        for l in range(d + 1):
            for j in range(d + 1):
                num = (get(l - 1, i, j) * c[l] + get(l, i, j) * a[l] + get(l + 1, i, j) * b[l]
                       - get(l, i - 1, j) * b[i - 1] - get(l, i, j) * a[i])
                p[l][i + 1][j] = num / c[i + 1]

    table = [[[0] * (d + 1) for _ in range(d + 1)] for _ in range(d + 1)]
    for l in range(d + 1):
        for i in range(d + 1):
            for j in range(d + 1):
                v = p[l][i][j]
                if v.denominator != 1 or v < 0:
                    raise SchemeError(f"p^{l}_({i},{j}) = {v} is not a nonnegative integer")
                table[l][i][j] = int(v)
    for l in range(d + 1):
        for i in range(d + 1):
            for j in range(d + 1):
                if table[l][i][j] != table[l][j][i]:
                    raise SchemeError(f"p^{l} not symmetric at ({i},{j})")
                if k[l] * table[l][i][j] != k[i] * table[i][l][j]:
                    raise SchemeError(f"balance k_l p^l_ij = k_i p^i_lj fails at l={l}, i={i}, j={j}")
    for i in range(d + 1):
        if table[0][i][i] != k[i]:
            raise SchemeError(f"p^0_({i},{i}) = {table[0][i][i]} differs from k_{i} = {k[i]}")
    return SchemeData(P, a, b, c, k, table)


# -- eigendata ---------------------------------------------------------------------

def _charpoly_value(x, a, b, c):
    d = len(a) - 1
    prev, cur = 0, 1
    for i in range(d + 1):
        nxt = (x - a[i]) * cur - (b[i - 1] * c[i] * prev if i else 0)
        prev, cur = cur, nxt
    return cur


def _count_below(x: float, a, b, c) -> int:
    """Number of eigenvalues of the intersection matrix strictly below ``x``."""
    count = 0
    qv = 1.0
    for i in range(len(a)):
        off = b[i - 1] * c[i] / qv if i else 0.0
        qv = (a[i] - x) - off
        if qv == 0.0:
            qv = -1e-300
        if qv < 0:
            count += 1
    return count


def _eigenvalues(a, b, c) -> list:
    d = len(a) - 1
    k1 = b[0]
    found = [x for x in range(-k1, k1 + 1) if _charpoly_value(x, a, b, c) == 0]
    if len(found) == d + 1:
        return sorted(found, reverse=True)
    # bisection on the Sturm count for each eigenvalue
    lo0, hi0 = -2.0 * k1 - 1.0, 2.0 * k1 + 1.0
    vals = []
    for j in range(d + 1):  # j-th smallest
        lo, hi = lo0, hi0
        while hi - lo > 1e-12 * max(1.0, abs(hi)):
            mid = (lo + hi) / 2
            if _count_below(mid, a, b, c) > j:
                hi = mid
            else:
                lo = mid
        x = (lo + hi) / 2
        r = round(x)
        vals.append(r if _charpoly_value(r, a, b, c) == 0 else x)
    return sorted(vals, reverse=True)


def eigendata(P: ParameterSet, expect_line_eigenvalue: bool = True) -> SchemeData:
    SD = intersection_table(P)
    a, b, c, k = SD.a, SD.b, SD.c, SD.k
    d, n = P.d, SD.n
    theta = _eigenvalues(a, b, c)
    for x, y in zip(theta, theta[1:]):
        if abs(x - y) < 1e-9:
            raise SchemeError(f"repeated eigenvalue {x}")
    if theta[0] != k[1]:
        raise SchemeError(f"largest eigenvalue {theta[0]} is not the valency {k[1]}")

    mults = []
    for th in theta:
        exact = isinstance(th, int)
        u = [Fraction(1), Fraction(th, k[1])] if exact else [1.0, th / k[1]]
        for i in range(1, d):
            u.append(((th - a[i]) * u[i] - c[i] * u[i - 1]) / b[i])
        denom = sum(ki * ui * ui for ki, ui in zip(k, u))
        m = n / denom
        if exact:
            if m.denominator != 1:
                raise SchemeError(f"non-integral multiplicity {m} for eigenvalue {th}")
            mults.append(int(m))
        else:
            if abs(m - round(m)) > 1e-6:
                raise SchemeError(f"non-integral multiplicity {m} for eigenvalue {th}")
            mults.append(int(round(m)))
    if sum(mults) != n or min(mults) <= 0:
        raise SchemeError(f"multiplicities {mults} do not sum to n = {n}")

    coeffs = []
    one = Fraction(1) if all(isinstance(x, int) for x in theta) else 1.0
    for j, th in enumerate(theta):
        poly = [one]  # ascending powers of A
        for l, other in enumerate(theta):
            if l == j:
                continue
            padded = [0 * one] + poly + [0 * one]
            poly = [(padded[r] - other * padded[r + 1]) / (th - other) for r in range(len(poly) + 1)]
        coeffs.append(poly)
    SD.eigenvalues = theta
    SD.multiplicities = mults
    SD.projector_coeffs = coeffs
    if expect_line_eigenvalue:
        SD.line_eigenvalue_index()
    return SD


def project(G: Geometry, SD: SchemeData, j: int, v) -> np.ndarray:
    """``E_j v`` via the product form of the Lagrange projector in A."""
    A = G.adjacency.astype(np.float64)
    w = np.asarray(v, dtype=np.float64).copy()
    th = [float(x) for x in SD.eigenvalues]
    for l, other in enumerate(th):
        if l != j:
            w = (A @ w - other * w) / (th[j] - other)
    return w


def dual_degree_set(G: Geometry, SD: SchemeData, v, eps: float | None = None) -> set[int]:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (G.n,):
        raise SchemeError(f"vector has length {v.shape}, expected {G.n}")
    if eps is None:
        eps = 1e-8 * G.n
    norm2 = float(v @ v)
    if norm2 == 0.0:
        return set()
    out = set()
    for j in range(1, SD.d + 1):
        w = project(G, SD, j, v)
        if float(w @ w) > eps * norm2:
            out.add(j)
    return out

