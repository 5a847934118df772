"""Classical polar spaces and their totally isotropic subspaces.

Three families are supported, each in a fixed standard coordinate system:

* ``Q``: parabolic quadric Q(2d, q), form x0^2 + x1 x2 + ... + x_{2d-1} x_{2d};
* ``W``: symplectic W(2d-1, q), Gram matrix [[0, I], [-I, 0]];
* ``H``: Hermitian H(2d-1, q^2), Gram matrix the antidiagonal of ones with
  conjugation x -> x^q on the second argument.

Subspaces are stored in reduced row echelon form, which makes them canonical
and hashable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .fields import Field, FieldError, field_make, prime_power

FAMILIES = ("Q", "W", "H")
_ALIASES = {"q": "Q", "dq": "Q", "w": "W", "dw": "W", "h": "H", "dh": "H"}


class PolarError(ValueError):
    pass


class EnumerationLimit(PolarError):
    pass


def normalize_family(family: str) -> str:
    try:
        return _ALIASES[family.lower()]
    except KeyError:
        raise PolarError(f"unknown family {family!r}; expected one of Q, W, H") from None


def generator_count(family: str, d: int, q: int) -> int:
    """Number of maximal totally isotropic subspaces (points of the dual polar space)."""
    family = normalize_family(family)
    out = 1
    for i in range(1, d + 1):
        out *= q ** (2 * i - 1) + 1 if family == "H" else q**i + 1
    return out


@dataclass(frozen=True, eq=False)
class FormSpace:
    family: str
    d: int
    q: int
    field: Field
    dim: int
    gram: np.ndarray  # bilinear / sesquilinear part
    quad: np.ndarray | None = None  # upper-triangular coefficients of Q (family Q only)
    conj: np.ndarray | None = field(default=None, repr=False)

    @property
    def name(self) -> str:
        if self.family == "Q":
            return f"Q({self.dim - 1},{self.q})"
        if self.family == "W":
            return f"W({self.dim - 1},{self.q})"
        return f"H({self.dim - 1},{self.q}^2)"

    @property
    def dual_name(self) -> str:
        if self.family == "H":
            return f"DH({self.dim - 1},{self.q ** 2})"
        return f"D{self.name}"

    def _second(self, v: np.ndarray) -> np.ndarray:
        return self.conj[v] if self.conj is not None else v

    def form_vector(self, v) -> np.ndarray:
        """``w`` with ``B(u, v) = u . w`` for every u."""
        v = self._second(np.asarray(v, dtype=np.int64))
        return self.field.matmul(self.gram, v[:, None])[:, 0]

    def bilinear(self, u, v) -> int:
        return int(self.field.vdot(np.asarray(u, dtype=np.int64), self.form_vector(v)))

    def quadratic(self, U) -> np.ndarray:
        """Value of the defining form on each row of ``U`` (Q(u) or h(u, u); zero for W)."""
        F = self.field
        U = np.asarray(U, dtype=np.int64)
        if self.family == "W":
            return np.zeros(U.shape[:-1], dtype=np.int64)
        if self.family == "Q":
            acc = np.zeros(U.shape[:-1], dtype=np.int64)
            for i, j in zip(*np.nonzero(self.quad)):
                term = F.vmul(F.vmul(U[..., i], U[..., j]), int(self.quad[i, j]))
                acc = F.vadd(acc, term)
            return acc
        V = self.conj[U]
        GV = F.matmul(V, self.gram.T)  # rows: G conj(u)
        acc = np.zeros(U.shape[:-1], dtype=np.int64)
        for j in range(self.dim):
            acc = F.vadd(acc, F.vmul(U[..., j], GV[..., j]))
        return acc


def form_make(family: str, d: int, q: int) -> FormSpace:
    family = normalize_family(family)
    if d < 2:
        raise PolarError("rank d must be at least 2")
    try:
        p, k = prime_power(q)
        F = field_make(p, 2 * k if family == "H" else k)
    except FieldError as exc:
        raise PolarError(str(exc)) from exc

    if family == "Q":
        dim = 2 * d + 1
        quad = np.zeros((dim, dim), dtype=np.int64)
        quad[0, 0] = 1
        for i in range(d):
            quad[2 * i + 1, 2 * i + 2] = 1
        gram = F.vadd(quad, quad.T)
        return FormSpace("Q", d, q, F, dim, gram, quad=quad)
    if family == "W":
        dim = 2 * d
        gram = np.zeros((dim, dim), dtype=np.int64)
        minus_one = F.neg(1)
        for i in range(d):
            gram[i, d + i] = 1
            gram[d + i, i] = minus_one
        return FormSpace("W", d, q, F, dim, gram)
    dim = 2 * d
    gram = np.fliplr(np.eye(dim, dtype=np.int64)).copy()
    return FormSpace("H", d, q, F, dim, gram, conj=F.conj_table())


@dataclass(frozen=True)
class Subspace:
    """A projective subspace given by its reduced row echelon basis."""

    rows: tuple[tuple[int, ...], ...]

    @classmethod
    def from_rows(cls, F: Field, rows) -> "Subspace":
        return cls(tuple(tuple(r) for r in F.rref(rows)))

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def proj_dim(self) -> int:
        return len(self.rows) - 1

    def key(self, q: int) -> bytes:
        width = 1 if q <= 256 else 2
        return b"".join(x.to_bytes(width, "big") for r in self.rows for x in r)

    def array(self) -> np.ndarray:
        return np.array(self.rows, dtype=np.int64)


def is_totally_isotropic(S: FormSpace, U: Subspace | np.ndarray) -> bool:
    rows = U.array() if isinstance(U, Subspace) else np.asarray(U, dtype=np.int64)
    if rows.ndim != 2 or rows.shape[1] != S.dim:
        raise PolarError(f"subspace lives in dimension {rows.shape[-1]}, form in {S.dim}")
    F = S.field
    for i in range(len(rows)):
        w = S.form_vector(rows[i])
        if np.any(F.vdot(rows[: i + 1], w) != 0):
            return False
    if S.family == "Q":
        if F.p == 2:
            # degenerate polarisation: check Q on the whole span
            span = _span(F, rows)
            return bool(np.all(S.quadratic(span) == 0))
        return bool(np.all(S.quadratic(rows) == 0))
    if S.family == "H":
        return bool(np.all(S.quadratic(rows) == 0))
    return True


def _all_tuples(q: int, length: int) -> np.ndarray:
    if length == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((q,) * length).reshape(length, -1)
    return grids.T.astype(np.int64)


def _span(F: Field, rows: np.ndarray) -> np.ndarray:
    return F.matmul(_all_tuples(F.q, len(rows)), rows)


class _CandidateCache:
    """Isotropic vectors in RREF-row shape, keyed by (pivot, fixed zero columns)."""

    def __init__(self, S: FormSpace):
        self.S = S
        self.cache: dict[tuple[int, frozenset], np.ndarray] = {}

    def get(self, pivot: int, zeros: frozenset) -> np.ndarray:
        key = (pivot, zeros)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        S = self.S
        free = [c for c in range(pivot + 1, S.dim) if c not in zeros]
        vals = _all_tuples(S.field.q, len(free))
        cand = np.zeros((len(vals), S.dim), dtype=np.int64)
        cand[:, pivot] = 1
        cand[:, free] = vals
        cand = cand[S.quadratic(cand) == 0]
        self.cache[key] = cand
        return cand


def enumerate_generators(S: FormSpace, max_count: int = 25_000):
    """All totally isotropic subspaces of projective dimension d-1 and d-2.

    Returns ``(maximals, next_to_maximals)`` as arrays of shape
    ``(N, rank, dim)`` holding RREF bases, each sorted lexicographically by
    canonical bytes. Every isotropic RREF basis is grown once, from its last
    row upwards: a new top row has a smaller pivot, zeros in the pivot columns
    below it, and must be isotropic and orthogonal to the rows already chosen.
    """
    expected = generator_count(S.family, S.d, S.q)
    if expected > max_count:
        raise EnumerationLimit(
            f"{S.dual_name} has {expected} points, above the enumeration cap {max_count}"
        )
    F = S.field
    cache = _CandidateCache(S)
    found: dict[int, list[np.ndarray]] = {S.d: [], S.d - 1: []}

    def extend(rows: list[np.ndarray], forms: list[np.ndarray], top: int, pivots: frozenset):
        depth = len(rows)
        if depth in found:
            found[depth].append(np.array(rows[::-1]))
            if depth == S.d:
                return
        for c in range(top):
            cand = cache.get(c, pivots)
            for w in forms:
                if len(cand) == 0:
                    break
                cand = cand[F.vdot(cand, w) == 0]
            if len(cand) == 0:
                continue
            new_pivots = pivots | {c}
            for v in cand:
                extend(rows + [v], forms + [S.form_vector(v)], c, new_pivots)

    extend([], [], S.dim, frozenset())
    maximals = _sorted_stack(found[S.d], S.d, S.dim)
    nexts = _sorted_stack(found[S.d - 1], S.d - 1, S.dim)
    if len(maximals) != expected:
        raise PolarError(f"enumerated {len(maximals)} generators, expected {expected}")
    return maximals, nexts


def _sorted_stack(items: list[np.ndarray], rank: int, dim: int) -> np.ndarray:
    if not items:
        return np.zeros((0, rank, dim), dtype=np.int64)
    arr = np.stack(items)
    flat = arr.reshape(len(arr), -1)
    order = np.lexsort(flat.T[::-1])
    return arr[order]


def subspaces_of(arr: np.ndarray) -> list[Subspace]:
    return [Subspace(tuple(tuple(int(x) for x in r) for r in m)) for m in arr]


def hyperplane_kernels(F: Field, r: int) -> np.ndarray:
    """RREF bases (shape ``(count, r-1, r)``) of all hyperplanes of GF(q)^r.

    If ``M`` is an RREF basis of an r-space then ``K @ M`` is already the RREF
    basis of the corresponding hyperplane of ``M``.
    """
    kernels = []
    for f in _projective_points(F, r):
        # kernel of the functional x -> x . f
        piv = next(j for j in range(r) if f[j])
        inv = F.inv(f[piv])
        basis = []
        for j in range(r):
            if j == piv:
                continue
            v = [0] * r
            v[j] = 1
            v[piv] = F.neg(F.mul(inv, f[j]))
            basis.append(v)
        kernels.append(F.rref(basis))
    return np.array(kernels, dtype=np.int64).reshape(-1, r - 1, r)


def _projective_points(F: Field, r: int):
    for vec in itertools.product(range(F.q), repeat=r):
        nz = next((x for x in vec if x), 0)
        if nz == 1:
            yield vec
