"""Small permutation-group and matrix-group helpers.

Elements act on the right: a row vector v goes to ``v^sigma g``. Point
permutations are integer arrays ``perm`` with ``x -> perm[x]``; the product
``a * b`` (first a, then b) is ``b[a]``.
"""

from __future__ import annotations

from collections import Counter
from math import lcm

import numpy as np

from .fields import Field
from .polar import FormSpace


class GroupCapExceeded(RuntimeError):
    pass


# -- permutations -------------------------------------------------------------

def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return b[a]


def perm_order(p: np.ndarray) -> int:
    seen = np.zeros(len(p), dtype=bool)
    order = 1
    for x in range(len(p)):
        if seen[x]:
            continue
        length = 0
        y = x
        while not seen[y]:
            seen[y] = True
            y = p[y]
            length += 1
        order = lcm(order, length)
    return order


def enumerate_elements(gens, n: int, cap: int = 1_000_000) -> list[np.ndarray]:
    """All elements of the group generated by ``gens`` (closure by BFS)."""
    ident = np.arange(n, dtype=np.int64)
    gens = [np.asarray(g, dtype=np.int64) for g in gens]
    seen = {ident.tobytes()}
    out = [ident]
    i = 0
    while i < len(out):
        a = out[i]
        i += 1
        for g in gens:
            b = g[a]
            key = b.tobytes()
            if key not in seen:
                seen.add(key)
                out.append(b)
                if len(out) > cap:
                    raise GroupCapExceeded(f"group has more than {cap} elements")
    return out


def order_profile(elements) -> dict[int, int]:
    """Multiset of element orders as ``{order: count}``."""
    return dict(sorted(Counter(perm_order(e) for e in elements).items()))


# -- linear algebra over GF(q) --------------------------------------------------

def nullspace(F: Field, rows) -> np.ndarray:
    """Basis (as rows) of ``{c : A c = 0}`` for the matrix with the given rows."""
    rows = [list(map(int, r)) for r in rows]
    width = len(rows[0]) if rows else 0
    R = F.rref(rows)
    pivots = []
    for r in R:
        pivots.append(next(j for j, x in enumerate(r) if x))
    free = [j for j in range(width) if j not in pivots]
    basis = []
    for f in free:
        c = [0] * width
        c[f] = 1
        for r, pj in zip(R, pivots):
            c[pj] = F.neg(r[f])
        basis.append(c)
    return np.array(basis, dtype=np.int64).reshape(len(basis), width)


def matrix_from_permutation(G, perm, frob: int = 0) -> np.ndarray | None:
    """Recover ``g`` (up to scalar) with ``x^sigma g = perm[x]`` on generators, or None."""
    S: FormSpace = G.form
    F = S.field
    D = S.dim
    M = G.subspaces
    if frob:
        M = F.frobenius_table(frob)[M]
    eqs: list[np.ndarray] = []
    order = np.random.default_rng(0).permutation(G.n)
    sol = None
    for start in range(0, G.n, 40):
        for x in order[start:start + 40]:
            N = nullspace(F, G.subspaces[perm[x]].tolist())  # columns c with M_y c = 0
            for r in M[x]:
                for c in N:
                    eqs.append(F.vmul(r[:, None], c[None, :]).reshape(-1))
        sol = nullspace(F, np.array(eqs).tolist())
        if len(sol) <= 1:
            break
    if sol is None or len(sol) != 1:
        return None
    g = sol[0].reshape(D, D)
    if F.rank(g.tolist()) != D:
        return None
    return g


# -- random isometries -----------------------------------------------------------

def _generator_elements(S: FormSpace, v: np.ndarray, a: int) -> np.ndarray | None:
    """Reflection (Q, odd q) or transvection (W) along ``v``; None if not applicable."""
    F = S.field
    D = S.dim
    I = np.eye(D, dtype=np.int64)
    Bv = S.form_vector(v)  # x -> B(x, v) is x . Bv
    if S.family == "Q":
        if F.p == 2:
            return None
        qv = int(S.quadratic(v[None, :])[0])
        if qv == 0:
            return None
        # x -> x - B(x,v)/Q(v) v, with B(x,x) = 2Q(x)
        coef = F.neg(F.inv(qv))
        return F.vadd(I, F.vmul(F.vmul(Bv[:, None], v[None, :]), coef))
    if S.family == "W":
        if a == 0:
            return None
        return F.vadd(I, F.vmul(F.vmul(Bv[:, None], v[None, :]), a))
    return None


def random_isometry(S: FormSpace, rng: np.random.Generator, length: int = 12) -> np.ndarray:
    """Product of ``length`` random reflections or transvections (Q with odd q, or W)."""
    F = S.field
    g = np.eye(S.dim, dtype=np.int64)
    done = 0
    while done < length:
        v = rng.integers(0, F.q, S.dim)
        h = _generator_elements(S, v, int(rng.integers(1, F.q)))
        if h is None:
            if S.family == "H" or (S.family == "Q" and F.p == 2):
                raise NotImplementedError("random isometries are implemented for Q (odd q) and W")
            continue
        g = F.matmul(g, h)
        done += 1
    return g
