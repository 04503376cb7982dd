"""Linear algebra over F_p and F_{p^2}, batched with numpy.

F_{p^2} is F_p[s]/(s^2 - nu) with nu the least quadratic non-residue; an element
is stored as a pair of int64 arrays (a, b) standing for a + b*s. Prime fields
use the same representation with b = 0, so one code path serves both.
"""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .primes import least_nonresidue


class GF:
    """The field with p^ext elements, ext in {1, 2}; vectorized element operations."""

    def __init__(self, p: int, ext: int = 1):
        if ext not in (1, 2):
            raise ValueError("only ext = 1 or 2 is supported")
        if p >= (1 << 31):
            raise ValueError("vectorized field arithmetic needs p < 2^31")
        self.p = int(p)
        self.ext = ext
        self.q = p ** ext
        self.nu = least_nonresidue(p) if ext == 2 and p > 2 else 0
        if ext == 2 and p == 2:
            raise ValueError("F_4 is not represented")

    # element constructors
    def elements(self) -> Tuple[np.ndarray, np.ndarray]:
        """All q elements, ordered by index a + p*b."""
        idx = np.arange(self.q, dtype=np.int64)
        return idx % self.p, idx // self.p

    def index(self, x) -> np.ndarray:
        return x[0] + self.p * x[1]

    def const(self, a, shape=()) -> Tuple[np.ndarray, np.ndarray]:
        a = np.broadcast_to(np.asarray(a, dtype=np.int64) % self.p, shape).copy()
        return a, np.zeros_like(a)

    def add(self, x, y):
        p = self.p
        return (x[0] + y[0]) % p, (x[1] + y[1]) % p

    def sub(self, x, y):
        p = self.p
        return (x[0] - y[0]) % p, (x[1] - y[1]) % p

    def neg(self, x):
        return (-x[0]) % self.p, (-x[1]) % self.p

    def mul(self, x, y):
        p = self.p
        if self.ext == 1:
            return (x[0] * y[0]) % p, np.zeros_like(np.broadcast_arrays(x[0], y[0])[0])
        a = (x[0] * y[0] + (x[1] * y[1]) % p * self.nu) % p
        b = (x[0] * y[1] + x[1] * y[0]) % p
        return a, b

    def scale(self, x, c: int):
        return (x[0] * c) % self.p, (x[1] * c) % self.p

    def is_zero(self, x) -> np.ndarray:
        return (x[0] == 0) & (x[1] == 0)

    def norm(self, x) -> np.ndarray:
        """Field norm to F_p (identity for ext = 1)."""
        if self.ext == 1:
            return x[0] % self.p
        p = self.p
        return (x[0] * x[0] - (x[1] * x[1]) % p * self.nu) % p

    def inv(self, x):
        p = self.p
        nrm = self.norm(x)
        ninv = _inv_mod_array(nrm, p)
        if self.ext == 1:
            return ninv, np.zeros_like(ninv)
        return (x[0] * ninv) % p, ((-x[1]) % p * ninv) % p

    def pow(self, x, e: int):
        out = self.const(1, np.shape(x[0]))
        base = (x[0].copy(), x[1].copy())
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def is_square(self, x) -> np.ndarray:
        """True for nonzero squares; zero reports False."""
        r = self.pow(x, (self.q - 1) // 2)
        return (r[0] == 1) & (r[1] == 0)

    def sqrt_one(self, a: int, b: int) -> Optional[Tuple[int, int]]:
        """A square root of a single element by search (q small)."""
        xs = self.elements()
        sq = self.mul(xs, xs)
        hit = np.nonzero((sq[0] == a % self.p) & (sq[1] == b % self.p))[0]
        if hit.size == 0:
            return None
        return int(xs[0][hit[0]]), int(xs[1][hit[0]])


def _inv_mod_array(a: np.ndarray, p: int) -> np.ndarray:
    # Fermat inverse, vectorized; zero maps to zero
    a = np.asarray(a, dtype=np.int64) % p
    out = np.ones_like(a)
    base = a.copy()
    e = p - 2
    while e:
        if e & 1:
            out = out * base % p
        base = base * base % p
        e >>= 1
    return np.where(a == 0, 0, out)


def batch_rref(F: GF, A) -> Tuple[Tuple[np.ndarray, np.ndarray], np.ndarray, np.ndarray]:
    """Reduced row echelon form of a batch of matrices over F.

    A is a pair of arrays of shape (N, m, n). Returns (R, rank, pivcol) where pivcol[i, r]
    is the pivot column of row r of R[i] (or -1).
    """
    a = A[0].copy() % F.p
    b = A[1].copy() % F.p
    N, m, n = a.shape
    rank = np.zeros(N, dtype=np.int64)
    pivcol = -np.ones((N, m), dtype=np.int64)
    ar = np.arange(N)
    for c in range(n):
        nz = ~F.is_zero((a[:, :, c], b[:, :, c]))
        rows = np.arange(m)[None, :]
        cand = nz & (rows >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        j = np.argmax(cand, axis=1)
        idx = ar[has]
        r = rank[has]
        jj = j[has]
        # swap rows r and jj
        for arr in (a, b):
            tmp = arr[idx, r].copy()
            arr[idx, r] = arr[idx, jj]
            arr[idx, jj] = tmp
        piv = (a[idx, r, c], b[idx, r, c])
        pinv = F.inv(piv)
        prow = F.mul((a[idx, r], b[idx, r]), (pinv[0][:, None], pinv[1][:, None]))
        a[idx, r], b[idx, r] = prow
        # eliminate column c from all other rows
        fac = (a[idx, :, c].copy(), b[idx, :, c].copy())
        fac[0][np.arange(idx.size), r] = 0
        fac[1][np.arange(idx.size), r] = 0
        upd = F.mul((fac[0][:, :, None], fac[1][:, :, None]), (prow[0][:, None, :], prow[1][:, None, :]))
        a[idx], b[idx] = F.sub((a[idx], b[idx]), upd)
        pivcol[idx, r] = c
        rank[idx] += 1
    return (a, b), rank, pivcol


def batch_null_vector(F: GF, A):
    """One nonzero null vector per matrix (shape (N, n) pairs), plus ranks.

    The vector sets the first free column to 1. Rows with full column rank get zeros.
    """
    (a, b), rank, pivcol = batch_rref(F, A)
    N, m, n = a.shape
    xa = np.zeros((N, n), dtype=np.int64)
    xb = np.zeros((N, n), dtype=np.int64)
    for i in range(N):
        pcs = [int(c) for c in pivcol[i] if c >= 0]
        free = [c for c in range(n) if c not in set(pcs)]
        if not free:
            continue
        f = free[0]
        xa[i, f] = 1
        for r, c in enumerate(pcs):
            xa[i, c] = (-a[i, r, f]) % F.p
            xb[i, c] = (-b[i, r, f]) % F.p
    return (xa, xb), rank


def rank_mod_p(M, p: int) -> int:
    A = np.asarray(M, dtype=object) % p
    A = A.astype(np.int64)[None]
    F = GF(p, 1)
    _, rank, _ = batch_rref(F, (A, np.zeros_like(A)))
    return int(rank[0])


def nullspace_mod_p(M, p: int) -> np.ndarray:
    """Basis of the right null space over F_p, as columns."""
    A = (np.asarray(M, dtype=object) % p).astype(np.int64)
    F = GF(p, 1)
    (R, _), rank, pivcol = batch_rref(F, (A[None], np.zeros_like(A)[None]))
    R = R[0]
    n = A.shape[1]
    pcs = [int(c) for c in pivcol[0] if c >= 0]
    free = [c for c in range(n) if c not in set(pcs)]
    basis = []
    for f in free:
        x = np.zeros(n, dtype=np.int64)
        x[f] = 1
        for r, c in enumerate(pcs):
            x[c] = (-R[r, f]) % p
        basis.append(x)
    if not basis:
        return np.zeros((n, 0), dtype=np.int64)
    return np.stack(basis, axis=1)


def symmetric_diagonalize_mod_p(M, p: int) -> List[int]:
    """Diagonal entries of a form congruent to the symmetric matrix M over F_p (p odd)."""
    A = [[int(v) % p for v in row] for row in M]
    n = len(A)
    diag: List[int] = []
    active = list(range(n))
    while active:
        i0 = next((i for i in active if A[i][i]), None)
        if i0 is None:
            pair = next(((i, j) for i in active for j in active if i < j and A[i][j]), None)
            if pair is None:
                diag.extend([0] * len(active))
                break
            i, j = pair
            # replace e_i by e_i + e_j: A[i][i] becomes 2*A[i][j] != 0 (p odd)
            for t in range(n):
                A[i][t] = (A[i][t] + A[j][t]) % p
            for t in range(n):
                A[t][i] = (A[t][i] + A[t][j]) % p
            i0 = i
        piv = A[i0][i0]
        inv = pow(piv, -1, p)
        diag.append(piv)
        rest = [t for t in active if t != i0]
        for s in rest:
            f = A[s][i0] * inv % p
            if f:
                for t in rest:
                    A[s][t] = (A[s][t] - f * A[i0][t]) % p
        for s in rest:
            A[s][i0] = A[i0][s] = 0
        active = rest
    return diag
