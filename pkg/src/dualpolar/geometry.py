"""Dual polar spaces as point-line geometries with a collinearity graph."""

from __future__ import annotations

import hashlib
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .polar import FormSpace, enumerate_generators, hyperplane_kernels

# Full distance matrices are kept up to this many points.
DENSE_DISTANCE_LIMIT = 4096


class GeometryError(ValueError):
    pass


class Geometry:
    """Finite point-line geometry on points ``0..n-1``.

    ``lines`` is a list of ascending point-index tuples. ``subspaces``, when
    present, holds the RREF basis of the generator behind each point.
    """

    def __init__(self, n: int, lines, *, name: str = "", family: str | None = None,
                 q: int | None = None, d: int | None = None,
                 form: FormSpace | None = None, subspaces: np.ndarray | None = None):
        self.n = int(n)
        self.lines = [tuple(int(x) for x in ln) for ln in lines]
        self.name = name
        self.family = family
        self.q = q
        self.d = d
        self.form = form
        self.subspaces = subspaces
        for ln in self.lines:
            if list(ln) != sorted(set(ln)) or ln[0] < 0 or ln[-1] >= self.n:
                raise GeometryError(f"line {ln} is not an ascending tuple of valid point indices")

    def __repr__(self) -> str:
        return f"Geometry({self.name or '?'}, n={self.n}, lines={len(self.lines)})"

    # -- incidence ----------------------------------------------------------
    @cached_property
    def point_lines(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for j, ln in enumerate(self.lines):
            for x in ln:
                out[x].append(j)
        return out

    @cached_property
    def line_array(self) -> np.ndarray:
        """Lines as an ``(L, s+1)`` array; requires constant line size."""
        return np.array(self.lines, dtype=np.int64).reshape(len(self.lines), self.s + 1)

    @cached_property
    def s(self) -> int:
        sizes = {len(ln) for ln in self.lines}
        if len(sizes) != 1:
            raise GeometryError(f"lines have differing sizes {sorted(sizes)}")
        return sizes.pop() - 1

    @cached_property
    def t(self) -> int:
        counts = {len(pl) for pl in self.point_lines}
        if len(counts) != 1:
            raise GeometryError(f"points lie on differing numbers of lines {sorted(counts)}")
        return counts.pop() - 1

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        L = self.line_array
        k = L.shape[1]
        ii, jj = np.nonzero(~np.eye(k, dtype=bool))
        rows, cols = L[:, ii].ravel(), L[:, jj].ravel()
        A = sp.coo_matrix((np.ones(len(rows), dtype=np.int32), (rows, cols)), shape=(self.n, self.n))
        A = A.tocsr()
        if A.nnz and A.max() > 1:
            raise GeometryError("two points lie on more than one common line")
        A.sort_indices()
        return A

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        A = self.adjacency
        return [A.indices[A.indptr[x]:A.indptr[x + 1]] for x in range(self.n)]

    @cached_property
    def adj_bits(self) -> list[int]:
        """Neighbourhoods as Python-int bitsets (bit y set iff y ~ x)."""
        bits = [0] * self.n
        for ln in self.lines:
            mask = 0
            for x in ln:
                mask |= 1 << x
            for x in ln:
                bits[x] |= mask
        return [b & ~(1 << x) for x, b in enumerate(bits)]

    # -- distances ----------------------------------------------------------
    @cached_property
    def distance_matrix(self) -> np.ndarray | None:
        if self.n > DENSE_DISTANCE_LIMIT:
            return None
        n = self.n
        A = self.adjacency.astype(np.float32)
        dist = np.full((n, n), 255, dtype=np.uint8)
        np.fill_diagonal(dist, 0)
        frontier = np.eye(n, dtype=np.float32)
        reached = np.eye(n, dtype=bool)
        level = 0
        while True:
            level += 1
            nxt = (A @ frontier) > 0
            nxt &= ~reached
            if not nxt.any():
                break
            dist[nxt] = level
            reached |= nxt
            frontier = nxt.astype(np.float32)
        if not reached.all():
            raise GeometryError("collinearity graph is disconnected")
        return dist

    def bfs_row(self, x: int) -> np.ndarray:
        """Distances from ``x`` to every point (255 for unreachable)."""
        self._check(x)
        D = self.distance_matrix
        if D is not None:
            return D[x]
        cache = self.__dict__.setdefault("_bfs_cache", {})
        row = cache.get(x)
        if row is None:
            row = np.full(self.n, 255, dtype=np.uint8)
            row[x] = 0
            frontier = np.zeros(self.n, dtype=bool)
            frontier[x] = True
            level = 0
            A = self.adjacency
            while frontier.any():
                level += 1
                nxt = (A @ frontier.astype(np.int32)) > 0
                nxt &= row == 255
                row[nxt] = level
                frontier = nxt
            if len(cache) > 4096:
                cache.clear()
            cache[x] = row
        return row

    @cached_property
    def diameter(self) -> int:
        D = self.distance_matrix
        if D is not None:
            return int(D.max())
        return int(self.bfs_row(0).max())

    def distance(self, x: int, y: int) -> int:
        self._check(x)
        self._check(y)
        D = self.distance_matrix
        if D is not None:
            return int(D[x, y])
        if self.subspaces is not None:
            return self.subspace_distance(x, y)
        return int(self.bfs_row(x)[y])

    def subspace_distance(self, x: int, y: int) -> int:
        """``d - dim(x meet y)`` computed from the generators."""
        if self.subspaces is None:
            raise GeometryError("geometry carries no subspace data")
        F = self.form.field
        stacked = np.concatenate([self.subspaces[x], self.subspaces[y]])
        return F.rank(stacked.tolist()) - self.d

    def sphere(self, x: int, i: int) -> np.ndarray:
        """Sorted indices of the points at distance ``i`` from ``x``."""
        if not 0 <= i <= self.diameter:
            raise GeometryError(f"distance {i} outside [0, {self.diameter}]")
        return np.flatnonzero(self.bfs_row(x) == i)

    def _check(self, x: int) -> None:
        if not 0 <= x < self.n:
            raise IndexError(f"point {x} out of range [0, {self.n})")

    # -- identity -----------------------------------------------------------
    def serialize(self) -> bytes:
        from .formats import serialize_geometry

        return serialize_geometry(self)

    @cached_property
    def content_hash(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()


def build_dual_polar(S: FormSpace, max_count: int = 25_000) -> Geometry:
    """Points: generators of ``S``; lines: next-to-maximal subspaces."""
    maximals, _ = enumerate_generators(S, max_count=max_count)
    G = Geometry(len(maximals), _lines_from_generators(S, maximals), name=S.dual_name,
                 family=S.family, q=S.q, d=S.d, form=S, subspaces=maximals)
    if G.s < 1 or G.t < 0:  # evaluating s, t also enforces constant orders
        raise GeometryError(f"degenerate geometry {G}")
    return G


def _lines_from_generators(S: FormSpace, maximals: np.ndarray) -> list[tuple[int, ...]]:
    F = S.field
    n, d, dim = maximals.shape
    kernels = hyperplane_kernels(F, d)  # (h, d-1, d)
    hyper = F.matmul(kernels[None, :, :, :], maximals[:, None, :, :])  # (n, h, d-1, dim)
    keys = hyper.reshape(n * len(kernels), -1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    owners = np.repeat(np.arange(n), len(kernels))
    order = np.lexsort((owners, inverse))
    bounds = np.flatnonzero(np.diff(inverse[order])) + 1
    groups = np.split(owners[order], bounds)
    return [tuple(int(x) for x in g) for g in groups]


def check_near_polygon(G: Geometry) -> tuple[bool, str]:
    """Full scan of the near-polygon axioms; returns ``(ok, message)``.

    Checks that two points share at most one line and that for every point
    and line there is a unique point of the line nearest to the point.
    """
    try:
        G.adjacency
    except GeometryError as exc:
        return False, str(exc)
    lines = G.line_array
    for x in range(G.n):
        row = G.bfs_row(x)
        dl = row[lines]
        mins = dl.min(axis=1)
        if np.any((dl == mins[:, None]).sum(axis=1) != 1):
            j = int(np.flatnonzero((dl == mins[:, None]).sum(axis=1) != 1)[0])
            return False, f"point {x} has no unique nearest point on line {j}"
    return True, "ok"
