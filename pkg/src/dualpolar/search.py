"""Exact m-ovoid search: constraint-propagating DFS over points or orbits.

Every line gives the constraint "exactly m chosen points". With a prescribed
group the variables are point orbits and a line constraint becomes a weighted
sum over the orbits it meets. Propagation is bound propagation on those sums;
branching picks the constraint with the fewest undecided variables (ties by
lowest index) and its lowest undecided variable, trying "in" before "out".

The top of the search tree is cut into root-level tasks. Completed tasks are
journaled to an append-only checkpoint file, which is also how work is handed
to worker processes.
"""

from __future__ import annotations

import hashlib
import heapq
import json
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import Geometry
from .ovoid import OvoidCertificate, certify

log = logging.getLogger(__name__)

GROUP_CAVEAT = ("EXHAUSTED under a prescribed group: the search is complete only for "
                "m-ovoids invariant under that group")


class SearchError(ValueError):
    pass


class GroupError(SearchError):
    pass


# -- prescribed groups ---------------------------------------------------------------

@dataclass
class PrescribedGroup:
    gens: list[np.ndarray]
    frobs: list[int]
    perms: list[np.ndarray]
    orbit_of: np.ndarray  # point -> orbit id; ids ordered by smallest member
    orbits: list[np.ndarray]

    @property
    def digest(self) -> str:
        h = hashlib.sha256()
        for p in self.perms:
            h.update(np.asarray(p, dtype=np.int64).tobytes())
        return h.hexdigest()


def _scaled_by(F, X: np.ndarray, Y: np.ndarray) -> int | None:
    """Return lam with X == lam * Y, or None."""
    nz = np.argwhere(Y != 0)
    if len(nz) == 0:
        return 0 if not X.any() else None
    i, j = nz[0]
    lam = F.div(int(X[i, j]), int(Y[i, j]))
    return lam if np.array_equal(F.vmul(Y, lam), X) else None


def preserves_form(S, g: np.ndarray, frob: int = 0) -> bool:
    """``v -> v^sigma g`` preserves the form of S up to a nonzero scalar."""
    F = S.field
    g = np.asarray(g, dtype=np.int64)
    if S.family == "Q":
        C = F.matmul(F.matmul(g, S.quad), g.T)
        fold = np.triu(F.vadd(C, C.T), 1) + np.diag(np.diag(C))
        lam = _scaled_by(F, fold, S.quad)
    elif S.family == "W":
        lam = _scaled_by(F, F.matmul(F.matmul(g, S.gram), g.T), S.gram)
    else:
        lam = _scaled_by(F, F.matmul(F.matmul(g, S.gram), S.conj[g].T), S.gram)
    return bool(lam)


def _point_index(G: Geometry) -> dict[bytes, int]:
    cache = G.__dict__.get("_point_index")
    if cache is None:
        cache = {G.subspaces[x].tobytes(): x for x in range(G.n)}
        G.__dict__["_point_index"] = cache
    return cache


def batch_rref(F, M: np.ndarray) -> np.ndarray | None:
    """RREF of a stack of full-row-rank matrices ``(n, r, D)``; None if some has lower rank."""
    M = np.array(M, dtype=np.int64)
    n, r, D = M.shape
    idx = np.arange(n)
    row = np.zeros(n, dtype=np.int64)  # next pivot row per matrix
    for c in range(D):
        active = row < r
        if not active.any():
            break
        col = M[:, :, c]
        cand = (col != 0) & (np.arange(r)[None, :] >= row[:, None]) & active[:, None]
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = np.argmax(cand, axis=1)
        sel = idx[has]
        pr, tr = piv[has], row[has]
        top = M[sel, pr].copy()
        M[sel, pr] = M[sel, tr]
        M[sel, tr] = top
        inv = F.inv_table[M[sel, tr, c]]
        M[sel, tr] = F.vmul(M[sel, tr], inv[:, None])
        for i in range(r):
            f = M[sel, i, c].copy()
            f[tr == i] = 0
            if f.any():
                M[sel, i] = F.vadd(M[sel, i], F.vmul(F.vneg(f)[:, None], M[sel, tr]))
        row[has] += 1
    if np.any(row < r):
        return None
    return M


def act_on_points(G: Geometry, g: np.ndarray, frob: int = 0) -> np.ndarray:
    """Permutation of point indices induced by ``v -> v^sigma g`` (sigma = p^frob power)."""
    if G.form is None or G.subspaces is None:
        raise GroupError("geometry carries no subspace data; rebuild it from its family/q/d")
    S = G.form
    F = S.field
    M = G.subspaces
    if frob:
        M = F.frobenius_table(frob)[M]
    images = batch_rref(F, F.matmul(M, np.asarray(g, dtype=np.int64)))
    if images is None:
        raise GroupError("matrix is singular on a generator")
    index = _point_index(G)
    perm = np.empty(G.n, dtype=np.int64)
    for x in range(G.n):
        y = index.get(images[x].tobytes())
        if y is None:
            raise GroupError(f"image of point {x} is not a generator")
        perm[x] = y
    if len(np.unique(perm)) != G.n:
        raise GroupError("matrix does not permute the points")
    return perm


def orbits_from_perms(n: int, perms: list[np.ndarray]) -> tuple[np.ndarray, list[np.ndarray]]:
    if perms:
        src = np.concatenate([np.arange(n)] * len(perms))
        dst = np.concatenate(perms)
        graph = coo_matrix((np.ones(len(src)), (src, dst)), shape=(n, n))
        _, labels = connected_components(graph, directed=True, connection="weak")
    else:
        labels = np.arange(n)
    # renumber by smallest member
    first: dict[int, int] = {}
    for x, lab in enumerate(labels.tolist()):
        first.setdefault(lab, len(first))
    orbit_of = np.array([first[lab] for lab in labels.tolist()], dtype=np.int64)
    orbits = [np.flatnonzero(orbit_of == o) for o in range(len(first))]
    return orbit_of, orbits


def _check_lines(G: Geometry, perm: np.ndarray) -> None:
    L = G.line_array
    image = np.sort(perm[L], axis=1)
    both = np.concatenate([L, image])
    if len(np.unique(both, axis=0)) != len(L):
        raise GroupError("permutation does not map lines to lines")


def induce_permutations(G: Geometry, gens, frobs=None) -> PrescribedGroup:
    gens = [np.asarray(g, dtype=np.int64) for g in gens]
    frobs = list(frobs) if frobs is not None else [0] * len(gens)
    if G.form is None:
        raise GroupError("geometry carries no form; rebuild it from its family/q/d")
    S = G.form
    perms = []
    for g, fr in zip(gens, frobs):
        if g.shape != (S.dim, S.dim):
            raise GroupError(f"generator is {g.shape}, expected {S.dim}x{S.dim}")
        if np.any((g < 0) | (g >= S.field.q)):
            raise GroupError("matrix entries are not field elements")
        if S.field.rank(g.tolist()) != S.dim:
            raise GroupError("matrix is singular")
        if not preserves_form(S, g, fr):
            raise GroupError("matrix does not preserve the form up to a scalar")
        perm = act_on_points(G, g, fr)
        _check_lines(G, perm)
        perms.append(perm)
    orbit_of, orbits = orbits_from_perms(G.n, perms)
    return PrescribedGroup(gens, frobs, perms, orbit_of, orbits)


def permutation_group(G: Geometry, perms) -> PrescribedGroup:
    """Prescribed group given directly by point permutations (no matrices)."""
    perms = [np.asarray(p, dtype=np.int64) for p in perms]
    for p in perms:
        if p.shape != (G.n,) or not np.array_equal(np.sort(p), np.arange(G.n)):
            raise GroupError("not a permutation of the points")
        _check_lines(G, p)
    orbit_of, orbits = orbits_from_perms(G.n, perms)
    return PrescribedGroup([], [], perms, orbit_of, orbits)


# -- the propagation engine ------------------------------------------------------------

@dataclass
class Problem:
    """Weighted exact-sum constraints over binary variables."""

    nvars: int
    cons: list[tuple[tuple[int, int], ...]]  # ((var, weight), ...)
    target: int
    var_points: list[np.ndarray]

    @classmethod
    def from_geometry(cls, G: Geometry, m: int, group: PrescribedGroup | None = None) -> "Problem":
        if group is None:
            var_of = np.arange(G.n)
            var_points = [np.array([x]) for x in range(G.n)]
        else:
            var_of = group.orbit_of
            var_points = group.orbits
        seen = set()
        cons = []
        for ln in G.lines:
            key = tuple(sorted(Counter(var_of[list(ln)].tolist()).items()))
            if key not in seen:
                seen.add(key)
                cons.append(key)
        return cls(len(var_points), cons, m, var_points)


class _Budget(Exception):
    pass


@dataclass
class Stats:
    nodes: int = 0
    propagations: int = 0
    max_depth: int = 0

    def add(self, other: "Stats") -> None:
        self.nodes += other.nodes
        self.propagations += other.propagations
        self.max_depth = max(self.max_depth, other.max_depth)


class Engine:
    """Mutable search state: values, per-constraint counters and a trail."""

    def __init__(self, prob: Problem):
        self.prob = prob
        nv, nc = prob.nvars, len(prob.cons)
        self.val = [-1] * nv
        self.var_cons: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
        self.con_vars = [list(c) for c in prob.cons]
        for ci, c in enumerate(prob.cons):
            for v, w in c:
                self.var_cons[v].append((ci, w))
        self.unit = all(w == 1 for c in prob.cons for _, w in c)
        self.rem = [prob.target] * nc
        self.und = [sum(w for _, w in c) for c in prob.cons]
        self.cnt = [len(c) for c in prob.cons]
        self.trail: list[int] = []
        self.heap = [(self.cnt[c], c) for c in range(nc)]
        heapq.heapify(self.heap)
        self.stats = Stats()
        self.budget: int | None = None

    def mark(self) -> int:
        return len(self.trail)

    # state changes
    def _set(self, v: int, b: int, queue: list[int]) -> bool:
        self.val[v] = b
        self.trail.append(v)
        ok = True
        rem, und, cnt, heap = self.rem, self.und, self.cnt, self.heap
        for c, w in self.var_cons[v]:
            und[c] -= w
            cnt[c] -= 1
            if b:
                rem[c] -= w
            r, u = rem[c], und[c]
            if r < 0 or u < r:
                ok = False
            elif cnt[c]:
                heapq.heappush(heap, (cnt[c], c))
                queue.append(c)
        return ok

    def undo(self, mark: int) -> None:
        trail, val = self.trail, self.val
        rem, und, cnt, heap = self.rem, self.und, self.cnt, self.heap
        while len(trail) > mark:
            v = trail.pop()
            b = val[v]
            val[v] = -1
            for c, w in self.var_cons[v]:
                und[c] += w
                cnt[c] += 1
                if b:
                    rem[c] += w
                heapq.heappush(heap, (cnt[c], c))
        if len(heap) > 16 * len(cnt) + 1024:
            self.heap = [(cnt[c], c) for c in range(len(cnt)) if cnt[c]]
            heapq.heapify(self.heap)

    def assign(self, v: int, b: int) -> bool:
        """Set ``v = b`` and propagate to a fixpoint; False on conflict."""
        queue: list[int] = []
        if not self._set(v, b, queue):
            return False
        return self.propagate(queue)

    def propagate(self, queue: list[int]) -> bool:
        val, rem, und, con_vars = self.val, self.rem, self.und, self.con_vars
        unit = self.unit
        while queue:
            c = queue.pop()
            r = rem[c]
            if unit:
                if r == 0:
                    forced = 0
                elif und[c] == r:
                    forced = 1
                else:
                    continue
                for u, _ in con_vars[c]:
                    if val[u] < 0:
                        self.stats.propagations += 1
                        if not self._set(u, forced, queue):
                            return False
                continue
            for u, w in con_vars[c]:
                if val[u] >= 0:
                    continue
                r, uu = rem[c], und[c]
                if w > r:
                    forced = 0
                elif uu - w < r:
                    forced = 1
                else:
                    continue
                self.stats.propagations += 1
                if not self._set(u, forced, queue):
                    return False
        return True

    def propagate_all(self) -> bool:
        return self.propagate(list(range(len(self.con_vars))))

    def select(self) -> int | None:
        """Branch variable, or None when every variable is decided."""
        heap, cnt = self.heap, self.cnt
        while heap:
            k, c = heap[0]
            if k and cnt[c] == k:
                for u, _ in self.con_vars[c]:
                    if self.val[u] < 0:
                        return u
            heapq.heappop(heap)
        for v, x in enumerate(self.val):
            if x < 0:
                return v
        return None

    def solution(self) -> list[int]:
        pts = [self.prob.var_points[v] for v, x in enumerate(self.val) if x == 1]
        return sorted(int(p) for arr in pts for p in arr) if pts else []

    def _count_node(self) -> None:
        self.stats.nodes += 1
        if self.budget is not None and self.stats.nodes > self.budget:
            raise _Budget

    def dfs(self, first: bool, sink) -> bool:
        """Exhaust the subtree below the current state; True if stopped early."""
        stack: list[list[int]] = []
        while True:
            descend = False
            v = self.select()
            if v is None:
                sink(self.solution())
                if first:
                    return True
            else:
                self._count_node()
                mark = len(self.trail)
                stack.append([v, 1, mark])
                if len(stack) > self.stats.max_depth:
                    self.stats.max_depth = len(stack)
                descend = self.assign(v, 1)
            if descend:
                continue
            while stack:
                v, tried, mark = stack[-1]
                self.undo(mark)
                if tried == 1:
                    stack[-1][1] = 0
                    self._count_node()
                    if self.assign(v, 0):
                        break
                else:
                    stack.pop()
            else:
                return False


# -- tasks and checkpoints ------------------------------------------------------------------

def root_tasks(engine, depth: int) -> tuple[list[tuple[str, tuple[tuple[int, int], ...]]], int]:
    """Decision prefixes of the top ``depth`` levels, in DFS order, with ids like "1.0".

    Also returns the number of branch nodes spent expanding them.
    """
    out = []
    nodes = 0

    def expand(prefix, ident, level):
        v = engine.select()
        if level == depth or v is None:
            out.append((ident or "root", tuple(prefix)))
            return
        nonlocal nodes
        for b in (1, 0):
            nodes += 1
            mark = engine.mark()
            if engine.assign(v, b):
                expand(prefix + [(v, b)], f"{ident}.{b}" if ident else str(b), level + 1)
            engine.undo(mark)

    mark = engine.mark()
    if engine.propagate_all():
        expand([], "", 0)
    engine.undo(mark)
    return out, nodes


class Checkpoint:
    """Append-only journal: header, then per finished task its solutions and a done line."""

    def __init__(self, path: str | Path, geom_hash: str, m: int, options_digest: str):
        self.path = Path(path)
        self.header = ["CKPT 1", f"geom {geom_hash}", f"m {m}", f"options {options_digest}"]
        self.done: dict[str, int] = {}
        self.solutions: list[list[int]] = []
        if self.path.exists() and self.path.stat().st_size:
            self._load()
        else:
            self.path.write_text("\n".join(self.header) + "\n")

    def _load(self) -> None:
        lines = self.path.read_text().split("\n")
        if lines[:4] != self.header:
            raise SearchError(f"checkpoint {self.path} was written for a different geometry, m or options")
        pending: list[list[int]] = []
        for ln in lines[4:]:
            if ln.startswith("sol "):
                body = ln[4:].strip()
                pending.append([int(x) for x in body.split(",")] if body else [])
            elif ln.startswith("task "):
                parts = ln.split()
                self.done[parts[1]] = int(parts[3])
                self.solutions.extend(pending)
                pending = []

    def record(self, task_id: str, nodes: int, sols: list[list[int]]) -> None:
        text = "".join("sol " + ",".join(map(str, s)) + "\n" for s in sols)
        text += f"task {task_id} nodes {nodes} sols {len(sols)}\n"
        with self.path.open("a") as fh:
            fh.write(text)
            fh.flush()
        self.done[task_id] = nodes
        self.solutions.extend(sols)


# -- driver ---------------------------------------------------------------------------------

@dataclass
class SearchResult:
    status: str  # "FOUND", "EXHAUSTED" or "BUDGET"
    certificates: list[OvoidCertificate]
    stats: Stats
    tasks_total: int = 0
    tasks_done: int = 0
    caveat: str | None = None

    def summary(self) -> str:
        lines = [f"status {self.status}", f"solutions {len(self.certificates)}",
                 f"nodes {self.stats.nodes}", f"propagations {self.stats.propagations}",
                 f"max_depth {self.stats.max_depth}", f"tasks {self.tasks_done}/{self.tasks_total}"]
        if self.caveat:
            lines.append(f"note {self.caveat}")
        return "\n".join(lines)


@dataclass
class SearchOptions:
    mode: str = "first"  # "first" or "all"
    group: PrescribedGroup | None = None
    checkpoint: str | Path | None = None
    node_budget: int | None = None
    split_depth: int = 6
    threads: int = 1
    engine: str = "fast"  # "fast" (compiled kernel) or "python" (reference)

    def digest(self) -> str:
        payload = {"mode": self.mode, "split_depth": self.split_depth,
                   "group": self.group.digest if self.group else None}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def make_engine(prob: Problem, kind: str = "fast"):
    if kind == "python":
        return Engine(prob)
    if kind == "fast":
        from .kernel import FastEngine

        return FastEngine(prob)
    raise SearchError(f"unknown engine {kind!r}")


class _TaskBudget(Exception):
    def __init__(self, sols, stats):
        super().__init__("node budget exhausted")
        self.sols = sols
        self.stats = stats


def _run_task(engine, prefix, first: bool) -> tuple[list[list[int]], Stats]:
    """Exhaust one root task; raises _TaskBudget carrying partial results."""
    sols: list[list[int]] = []
    before = engine.stats
    before = Stats(before.nodes, before.propagations, before.max_depth)
    mark = engine.mark()

    def delta() -> Stats:
        now = engine.stats
        return Stats(now.nodes - before.nodes, now.propagations - before.propagations, now.max_depth)

    try:
        ok = engine.propagate_all()
        for v, b in prefix:
            if not ok:
                break
            ok = engine.assign(v, b)
        if ok:
            engine.dfs(first, sols.append)
    except _Budget:
        raise _TaskBudget(sols, delta()) from None
    finally:
        engine.undo(mark)
    return sols, delta()


_WORKER: dict = {}


def _worker_init(prob: Problem, budget: int | None, kind: str) -> None:
    _WORKER["engine"] = make_engine(prob, kind)
    _WORKER["engine"].budget = budget


def _worker_run(args):
    ident, prefix, first = args
    eng = _WORKER["engine"]
    eng.stats = Stats()
    try:
        sols, st = _run_task(eng, prefix, first)
    except _TaskBudget as exc:
        return ident, None, exc.stats, exc.sols
    return ident, sols, st, []


def search(G: Geometry, m: int, options: SearchOptions | None = None, **kw) -> SearchResult:
    """Find one (mode "first") or all (mode "all") m-ovoids of G.

    With ``threads > 1`` root tasks run in worker processes and the node budget
    applies to each task separately; results are merged in task order.
    """
    opts = options or SearchOptions(**kw)
    if not 0 <= m <= G.s + 1:
        raise SearchError(f"m={m} outside [0, {G.s + 1}]")
    if opts.mode not in ("first", "all"):
        raise SearchError(f"unknown mode {opts.mode!r}")
    prob = Problem.from_geometry(G, m, opts.group)
    engine = make_engine(prob, opts.engine)
    tasks, root_nodes = root_tasks(engine, opts.split_depth)
    ckpt = Checkpoint(opts.checkpoint, G.content_hash, m, opts.digest()) if opts.checkpoint else None
    done = dict(ckpt.done) if ckpt else {}
    found: list[list[int]] = list(ckpt.solutions) if ckpt else []
    stats = Stats(nodes=root_nodes)
    first = opts.mode == "first"
    pending = [(i, p) for i, p in tasks if i not in done]
    status = None

    def finish(ident, sols, st):
        stats.add(st)
        found.extend(sols)
        if ckpt:
            ckpt.record(ident, st.nodes, sols)
        done[ident] = st.nodes

    if first and found:
        status = "FOUND"
    elif opts.threads <= 1 or len(pending) <= 1:
        for ident, prefix in pending:
            remaining = None if opts.node_budget is None else opts.node_budget - stats.nodes
            engine.budget = None if remaining is None else engine.stats.nodes + remaining
            try:
                sols, st = _run_task(engine, prefix, first)
            except _TaskBudget as exc:
                stats.add(exc.stats)
                found.extend(exc.sols)
                status = "BUDGET"
                break
            finish(ident, sols, st)
            if first and found:
                status = "FOUND"
                break
    else:
        with ProcessPoolExecutor(opts.threads, initializer=_worker_init,
                                 initargs=(prob, opts.node_budget, opts.engine)) as pool:
            results = list(pool.map(_worker_run, [(i, p, first) for i, p in pending]))
        for ident, sols, st, partial in results:  # task order, so output is thread-count independent
            if sols is None:
                stats.add(st)
                found.extend(partial)
                status = "BUDGET"
                continue
            finish(ident, sols, st)
        if first and found:
            status = "FOUND"
            found = found[:1]
    if status is None:
        status = "FOUND" if first and found else "EXHAUSTED"
    if first:
        found = found[:1]
    if first and status == "BUDGET" and found:
        status = "FOUND"

    certs = []
    for sol in sorted(found):
        cert = certify(G, sol)
        if cert.m != m and sol:
            raise AssertionError(f"search emitted a {cert.m}-ovoid while looking for m={m}")
        certs.append(OvoidCertificate(cert.geom_hash, m, cert.members, True))
    caveat = GROUP_CAVEAT if opts.group is not None and status == "EXHAUSTED" else None
    return SearchResult(status, certs, stats, len(tasks), len(done), caveat)
