"""Compiled search kernel (numba) with the same semantics as ``search.Engine``.

State lives in flat int64 arrays so the DFS can stop at a solution or at the
node budget and be resumed. ``ctr`` holds the scalar state:
[trail length, stack length, nodes, propagations, max depth, node limit].
"""

from __future__ import annotations

import numpy as np
from numba import njit

TL, SL, NODES, PROPS, DEPTH, LIMIT = range(6)

EXHAUSTED, SOLUTION, BUDGET = 0, 1, 2


@njit(cache=True)
def _set(v, b, val, trail, ctr, vc_ptr, vc_c, vc_w, rem, und, cnt, queue, qn):
    val[v] = b
    trail[ctr[TL]] = v
    ctr[TL] += 1
    ok = True
    for k in range(vc_ptr[v], vc_ptr[v + 1]):
        c = vc_c[k]
        w = vc_w[k]
        und[c] -= w
        cnt[c] -= 1
        if b:
            rem[c] -= w
        if rem[c] < 0 or und[c] < rem[c]:
            ok = False
        elif cnt[c] > 0:
            queue[qn[0]] = c
            qn[0] += 1
    return ok


@njit(cache=True)
def _propagate(val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w, rem, und, cnt, queue, qn):
    while qn[0] > 0:
        qn[0] -= 1
        c = queue[qn[0]]
        for k in range(cv_ptr[c], cv_ptr[c + 1]):
            u = cv_v[k]
            if val[u] >= 0:
                continue
            w = cv_w[k]
            if w > rem[c]:
                forced = 0
            elif und[c] - w < rem[c]:
                forced = 1
            else:
                continue
            ctr[PROPS] += 1
            if not _set(u, forced, val, trail, ctr, vc_ptr, vc_c, vc_w, rem, und, cnt, queue, qn):
                qn[0] = 0
                return False
    return True


@njit(cache=True)
def assign(v, b, val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w, rem, und, cnt, queue, qn):
    qn[0] = 0
    if not _set(v, b, val, trail, ctr, vc_ptr, vc_c, vc_w, rem, und, cnt, queue, qn):
        qn[0] = 0
        return False
    return _propagate(val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w, rem, und, cnt, queue, qn)


@njit(cache=True)
def propagate_all(val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w, rem, und, cnt, queue, qn):
    nc = len(cnt)
    for c in range(nc):
        if rem[c] < 0 or und[c] < rem[c]:
            return False
    qn[0] = 0
    for c in range(nc - 1, -1, -1):
        if cnt[c] > 0:
            queue[qn[0]] = c
            qn[0] += 1
    return _propagate(val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w, rem, und, cnt, queue, qn)


@njit(cache=True)
def undo(mark, val, trail, ctr, vc_ptr, vc_c, vc_w, rem, und, cnt):
    while ctr[TL] > mark:
        ctr[TL] -= 1
        v = trail[ctr[TL]]
        b = val[v]
        val[v] = -1
        for k in range(vc_ptr[v], vc_ptr[v + 1]):
            c = vc_c[k]
            w = vc_w[k]
            und[c] += w
            cnt[c] += 1
            if b:
                rem[c] += w


@njit(cache=True)
def select(val, cv_ptr, cv_v, cnt):
    best = -1
    bk = 1 << 62
    for c in range(len(cnt)):
        k = cnt[c]
        if k > 0 and k < bk:
            bk = k
            best = c
    if best >= 0:
        for k in range(cv_ptr[best], cv_ptr[best + 1]):
            if val[cv_v[k]] < 0:
                return cv_v[k]
    for v in range(len(val)):
        if val[v] < 0:
            return v
    return -1


@njit(cache=True)
def dfs(resume, val, trail, ctr, st_v, st_t, st_m, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w,
        rem, und, cnt, queue, qn):
    """Run until a solution (state left at it), exhaustion, or the node limit."""
    backtrack = resume
    while True:
        if not backtrack:
            v = select(val, cv_ptr, cv_v, cnt)
            if v < 0:
                return SOLUTION
            if ctr[NODES] >= ctr[LIMIT]:
                return BUDGET
            ctr[NODES] += 1
            sl = ctr[SL]
            st_v[sl] = v
            st_t[sl] = 1
            st_m[sl] = ctr[TL]
            ctr[SL] = sl + 1
            if sl + 1 > ctr[DEPTH]:
                ctr[DEPTH] = sl + 1
            if assign(v, 1, val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w, rem, und, cnt, queue, qn):
                continue
        backtrack = False
        while True:
            sl = ctr[SL]
            if sl == 0:
                return EXHAUSTED
            top = sl - 1
            undo(st_m[top], val, trail, ctr, vc_ptr, vc_c, vc_w, rem, und, cnt)
            if st_t[top] == 1:
                st_t[top] = 0
                if ctr[NODES] >= ctr[LIMIT]:
                    st_t[top] = 1  # leave the frame retryable
                    return BUDGET
                ctr[NODES] += 1
                if assign(st_v[top], 0, val, trail, ctr, vc_ptr, vc_c, vc_w, cv_ptr, cv_v, cv_w,
                          rem, und, cnt, queue, qn):
                    break
            else:
                ctr[SL] = top


class FastEngine:
    """Array-backed engine driving the compiled kernel; same interface as ``Engine``."""

    def __init__(self, prob):
        nv, nc = prob.nvars, len(prob.cons)
        var_cons: list[list[tuple[int, int]]] = [[] for _ in range(nv)]
        for ci, c in enumerate(prob.cons):
            for v, w in c:
                var_cons[v].append((ci, w))
        self.prob = prob
        self.vc_ptr = np.cumsum([0] + [len(x) for x in var_cons]).astype(np.int64)
        self.vc_c = np.array([c for x in var_cons for c, _ in x], dtype=np.int64)
        self.vc_w = np.array([w for x in var_cons for _, w in x], dtype=np.int64)
        self.cv_ptr = np.cumsum([0] + [len(c) for c in prob.cons]).astype(np.int64)
        self.cv_v = np.array([v for c in prob.cons for v, _ in c], dtype=np.int64)
        self.cv_w = np.array([w for c in prob.cons for _, w in c], dtype=np.int64)
        self.val = np.full(nv, -1, dtype=np.int64)
        self.rem = np.full(nc, prob.target, dtype=np.int64)
        self.und = np.array([sum(w for _, w in c) for c in prob.cons], dtype=np.int64)
        self.cnt = np.array([len(c) for c in prob.cons], dtype=np.int64)
        self.trail = np.zeros(nv, dtype=np.int64)
        self.queue = np.zeros(len(self.vc_c) + nc + 1, dtype=np.int64)
        self.qn = np.zeros(1, dtype=np.int64)
        self.ctr = np.zeros(6, dtype=np.int64)
        self.st_v = np.zeros(nv + 1, dtype=np.int64)
        self.st_t = np.zeros(nv + 1, dtype=np.int64)
        self.st_m = np.zeros(nv + 1, dtype=np.int64)
        self.budget: int | None = None

    @property
    def stats(self):
        from .search import Stats

        return Stats(int(self.ctr[NODES]), int(self.ctr[PROPS]), int(self.ctr[DEPTH]))

    @stats.setter
    def stats(self, value) -> None:
        self.ctr[NODES] = value.nodes
        self.ctr[PROPS] = value.propagations
        self.ctr[DEPTH] = value.max_depth

    def _core(self):
        return (self.vc_ptr, self.vc_c, self.vc_w, self.cv_ptr, self.cv_v, self.cv_w,
                self.rem, self.und, self.cnt, self.queue, self.qn)

    def mark(self) -> int:
        return int(self.ctr[TL])

    def assign(self, v: int, b: int) -> bool:
        return bool(assign(v, b, self.val, self.trail, self.ctr, *self._core()))

    def propagate_all(self) -> bool:
        return bool(propagate_all(self.val, self.trail, self.ctr, *self._core()))

    def undo(self, mark: int) -> None:
        undo(mark, self.val, self.trail, self.ctr, self.vc_ptr, self.vc_c, self.vc_w,
             self.rem, self.und, self.cnt)

    def select(self) -> int | None:
        v = int(select(self.val, self.cv_ptr, self.cv_v, self.cnt))
        return None if v < 0 else v

    def solution(self) -> list[int]:
        pts = [self.prob.var_points[v] for v in np.flatnonzero(self.val == 1)]
        return sorted(int(p) for arr in pts for p in arr) if pts else []

    def dfs(self, first: bool, sink) -> bool:
        from .search import _Budget

        self.ctr[SL] = 0
        self.ctr[LIMIT] = np.iinfo(np.int64).max if self.budget is None else self.budget
        resume = False
        while True:
            code = dfs(resume, self.val, self.trail, self.ctr, self.st_v, self.st_t, self.st_m,
                       *self._core())
            if code == SOLUTION:
                sink(self.solution())
                if not first:
                    resume = True
                    continue
            if self.ctr[SL]:  # unwind to the entry state
                self.undo(int(self.st_m[0]))
            self.ctr[SL] = 0
            if code == BUDGET:
                raise _Budget
            return code == SOLUTION
