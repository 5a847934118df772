"""Table-driven arithmetic in small finite fields GF(p^k).

Elements are plain integers. The element with polynomial-basis coefficients
``(c_0, ..., c_{k-1})`` is encoded as ``sum(c_i * p**i)``, so 0 is zero and 1
is one. Defining polynomials are Conway polynomials, fixed in source so that
encodings (and therefore every file written by this package) are stable.
"""

from __future__ import annotations

import functools

import numpy as np

MAX_ORDER = 1 << 16
# Full q*q addition/multiplication tables are kept up to this order.
TABLE_LIMIT = 1024

# Conway polynomials, coefficients listed from the constant term upwards.
# Degree 1 is computed (x - smallest primitive root), see conway_polynomial().
CONWAY = {
    (2, 2): (1, 1, 1),
    (2, 3): (1, 1, 0, 1),
    (2, 4): (1, 1, 0, 0, 1),
    (2, 5): (1, 0, 1, 0, 0, 1),
    (2, 6): (1, 1, 0, 1, 1, 0, 1),
    (2, 7): (1, 1, 0, 0, 0, 0, 0, 1),
    (2, 8): (1, 0, 1, 1, 1, 0, 0, 0, 1),
    (3, 2): (2, 2, 1),
    (3, 3): (1, 2, 0, 1),
    (3, 4): (2, 0, 0, 2, 1),
    (3, 5): (1, 2, 0, 0, 0, 1),
    (3, 6): (2, 2, 1, 0, 2, 0, 1),
    (5, 2): (2, 4, 1),
    (5, 3): (3, 3, 0, 1),
    (5, 4): (2, 4, 4, 0, 1),
    (7, 2): (3, 6, 1),
    (7, 3): (4, 0, 6, 1),
    (7, 4): (3, 4, 5, 0, 1),
    (11, 2): (2, 7, 1),
    (13, 2): (2, 12, 1),
}


class FieldError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def prime_power(q: int) -> tuple[int, int]:
    """Split ``q`` into ``(p, k)`` with ``q == p**k``; raise if q is not a prime power."""
    if q < 2:
        raise FieldError(f"{q} is not a prime power")
    p = 2
    while q % p:
        p += 1
    k, r = 0, q
    while r % p == 0:
        r //= p
        k += 1
    if r != 1:
        raise FieldError(f"{q} is not a prime power")
    return p, k


def _prime_factors(n: int) -> list[int]:
    out, f = [], 2
    while f * f <= n:
        if n % f == 0:
            out.append(f)
            while n % f == 0:
                n //= f
        f += 1
    if n > 1:
        out.append(n)
    return out


def conway_polynomial(p: int, k: int) -> tuple[int, ...]:
    if k == 1:
        phi = p - 1
        factors = _prime_factors(phi)
        for g in range(1, p):
            if all(pow(g, phi // f, p) != 1 for f in factors):
                return ((-g) % p, 1)
        raise FieldError(f"no primitive root mod {p}")  # unreachable for primes
    try:
        return CONWAY[(p, k)]
    except KeyError:
        raise FieldError(f"unsupported field GF({p}^{k}): no Conway polynomial in table") from None


class Field:
    """GF(p^k) with log/exp tables and Zech logarithms.

    Scalar operations take and return ints; the ``v*`` methods operate
    elementwise on integer numpy arrays.
    """

    def __init__(self, p: int, k: int = 1):
        if not is_prime(p):
            raise FieldError(f"{p} is not prime")
        if k < 1:
            raise FieldError("extension degree must be >= 1")
        if p**k > MAX_ORDER:
            raise FieldError(f"GF({p}^{k}) exceeds the supported range q <= {MAX_ORDER}")
        self.p, self.k, self.q = p, k, p**k
        self.modulus = conway_polynomial(p, k)
        q = self.q
        self._digits = np.array(
            [[(e // p**i) % p for i in range(k)] for e in range(q)], dtype=np.int64
        ).reshape(q, k)
        self._weights = np.array([p**i for i in range(k)], dtype=np.int64)

        # powers of the root of the defining polynomial, as coefficient vectors
        exp = np.zeros(2 * (q - 1), dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        coeffs = [1] + [0] * (k - 1)
        top = [(-c) % p for c in self.modulus[:k]]  # x^k = -(c_0 + ... + c_{k-1} x^{k-1})
        for i in range(q - 1):
            e = sum(c * p**j for j, c in enumerate(coeffs))
            if log[e] != -1:
                raise FieldError(f"defining polynomial for GF({q}) is not primitive")
            exp[i] = exp[i + q - 1] = e
            log[e] = i
            lead = coeffs[-1]
            coeffs = [0] + coeffs[:-1]
            coeffs = [(c + lead * t) % p for c, t in zip(coeffs, top)]
        self.exp = exp
        self.log = log

        # zech[n] = log(1 + g^n), -1 when 1 + g^n = 0
        one_plus = self.from_digits((self._digits[exp[: q - 1]] + self._digits[1]) % p)
        self.zech = np.where(one_plus == 0, -1, log[one_plus])
        self._exp_list = exp.tolist()
        self._log_list = log.tolist()
        self._zech_list = self.zech.tolist()

        self.add_table = self.mul_table = None
        if q <= TABLE_LIMIT:
            a = np.arange(q)
            self.add_table = self.from_digits(
                (self._digits[a][:, None, :] + self._digits[a][None, :, :]) % p
            ).astype(np.int64)
            la, lb = log[:, None], log[None, :]
            mt = exp[(la + lb) % (q - 1)]
            mt[0, :] = 0
            mt[:, 0] = 0
            self.mul_table = mt
        self.neg_table = self.from_digits((-self._digits) % p)
        self.inv_table = np.zeros(q, dtype=np.int64)
        self.inv_table[1:] = exp[(-log[1:]) % (q - 1)]

    def __repr__(self) -> str:
        return f"Field(GF({self.q}))"

    def __eq__(self, other) -> bool:
        return isinstance(other, Field) and (self.p, self.k) == (other.p, other.k)

    def __hash__(self) -> int:
        return hash((self.p, self.k))

    def __reduce__(self):
        return (field_make, (self.p, self.k))

    # -- encoding -----------------------------------------------------------
    def digits(self, x: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self._digits[x])

    def from_digits(self, digits) -> np.ndarray:
        return np.asarray(digits, dtype=np.int64) @ self._weights

    def elements(self) -> range:
        return range(self.q)

    # -- scalar arithmetic ---------------------------------------------------
    def add(self, a: int, b: int) -> int:
        if a == 0:
            return b
        if b == 0:
            return a
        la = self._log_list[a]
        z = self._zech_list[(self._log_list[b] - la) % (self.q - 1)]
        if z < 0:
            return 0
        return self._exp_list[la + z]

    def neg(self, a: int) -> int:
        return int(self.neg_table[a])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, int(self.neg_table[b]))

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self._exp_list[self._log_list[a] + self._log_list[b]]

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in GF(%d)" % self.q)
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, a: int, e: int) -> int:
        if a == 0:
            if e < 0:
                raise ZeroDivisionError("negative power of zero")
            return 1 if e == 0 else 0
        return self._exp_list[(self._log_list[a] * e) % (self.q - 1)]

    def frobenius(self, x: int, r: int = 1) -> int:
        """Return ``x ** (p ** r)``; the identity for ``r == 0``."""
        return int(self.frobenius_table(r)[x])

    @functools.lru_cache(maxsize=None)
    def frobenius_table(self, r: int) -> np.ndarray:
        if not 0 <= r < self.k:
            raise FieldError(f"Frobenius power r={r} outside [0, {self.k})")
        t = np.zeros(self.q, dtype=np.int64)
        t[1:] = self.exp[(self.log[1:] * self.p**r) % (self.q - 1)]
        t.setflags(write=False)
        return t

    def conj_table(self) -> np.ndarray:
        """Involutory automorphism ``x -> x^sqrt(q)``; needs even degree."""
        if self.k % 2:
            raise FieldError(f"GF({self.q}) has no involutory automorphism")
        return self.frobenius_table(self.k // 2)

    # -- vectorised arithmetic ----------------------------------------------
    def vadd(self, a, b) -> np.ndarray:
        a, b = np.asarray(a), np.asarray(b)
        if self.add_table is not None:
            return self.add_table[a, b]
        return self.from_digits((self._digits[a] + self._digits[b]) % self.p)

    def vneg(self, a) -> np.ndarray:
        return self.neg_table[np.asarray(a)]

    def vmul(self, a, b) -> np.ndarray:
        a, b = np.asarray(a), np.asarray(b)
        if self.mul_table is not None:
            return self.mul_table[a, b]
        r = self.exp[(self.log[a] + self.log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, r)

    def vdot(self, A, w) -> np.ndarray:
        """Row-wise dot products ``A[..., :] . w`` over the field."""
        A = np.asarray(A)
        w = np.asarray(w)
        if self.k == 1:
            return (A @ w) % self.p
        acc = np.zeros(A.shape[:-1], dtype=np.int64)
        for j in range(A.shape[-1]):
            if w[j]:
                acc = self.vadd(acc, self.vmul(A[..., j], w[j]))
        return acc

    def matmul(self, A, B) -> np.ndarray:
        """Matrix product over the field; broadcasts over leading axes like ``@``."""
        A = np.asarray(A, dtype=np.int64)
        B = np.asarray(B, dtype=np.int64)
        if self.k == 1:
            return (A @ B) % self.p
        acc = None
        for j in range(A.shape[-1]):
            term = self.vmul(A[..., :, j, None], B[..., j, None, :])
            acc = term if acc is None else self.vadd(acc, term)
        return acc

    # -- linear algebra helpers (small matrices, scalar arithmetic) --------
    def rref(self, rows) -> list[list[int]]:
        """Reduced row echelon form with zero rows dropped."""
        M = [list(map(int, r)) for r in rows]
        out: list[list[int]] = []
        ncols = len(M[0]) if M else 0
        r = 0
        for c in range(ncols):
            piv = next((i for i in range(r, len(M)) if M[i][c]), None)
            if piv is None:
                continue
            M[r], M[piv] = M[piv], M[r]
            inv = self.inv(M[r][c])
            M[r] = [self.mul(inv, x) for x in M[r]]
            for i in range(len(M)):
                if i != r and M[i][c]:
                    f = self.neg(M[i][c])
                    M[i] = [self.add(x, self.mul(f, y)) for x, y in zip(M[i], M[r])]
            r += 1
            if r == len(M):
                break
        out = M[:r]
        return out

    def rank(self, rows) -> int:
        return len(self.rref(rows)) if len(rows) else 0

    def mat_inverse(self, M) -> list[list[int]]:
        n = len(M)
        aug = [list(map(int, row)) + [1 if i == j else 0 for j in range(n)] for i, row in enumerate(M)]
        R = self.rref(aug)
        if len(R) < n or any(R[i][i] != 1 for i in range(n)):
            raise FieldError("matrix is singular")
        return [row[n:] for row in R]


@functools.lru_cache(maxsize=None)
def field_make(p: int, k: int = 1) -> Field:
    """Cached constructor; fields are immutable so sharing instances is safe."""
    return Field(p, k)


def field_of_order(q: int) -> Field:
    p, k = prime_power(q)
    return field_make(p, k)
