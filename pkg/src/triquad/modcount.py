"""Exact solution counts modulo prime powers.

N(n; q): points x mod q with Q(x) = n mod q, by vectorized enumeration of the value
table, CRT over prime powers and a Hensel shortcut on smooth fibers.
Z(a, q): kernel counts of 2(a.Q) (or a.Q) mod q, via a local Smith form.
Hypersurface counts N(p^l) for a single form, through the (alpha, beta) stratification.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import budget
from . import exactpoly as ep
from .errors import InputError
from .primes import factorize

TAIL_POINTS = 1 << 20
# above this many points per modulus, counts go through characters or lifting
DIRECT_POINTS = 1 << 24


@dataclass
class CountResult:
    value: int
    modulus: int
    method: str
    elapsed_ms: float = 0.0

    def to_dict(self):
        return {"value": int(self.value), "modulus": self.modulus, "method": self.method,
                "elapsed_ms": round(self.elapsed_ms, 3)}


@dataclass
class HenselProfile:
    p: int
    alpha: int
    beta_hist: Dict[int, int] = field(default_factory=dict)
    # False when the search stopped at ell; alpha is then only a lower bound
    alpha_resolved: bool = True

    @property
    def beta_max(self) -> int:
        return max((b for b, m in self.beta_hist.items() if m), default=0)


# ---------------------------------------------------------------------------
# value tables

def _grid(q: int, r: int) -> np.ndarray:
    """All vectors of (Z/q)^r in row-major order, shape (q^r, r)."""
    if r == 0:
        return np.zeros((1, 0), dtype=np.int64)
    g = np.indices((q,) * r, dtype=np.int64).reshape(r, -1).T
    return np.ascontiguousarray(g)


def _table_chunk(Q: np.ndarray, q: int, kh: int, heads: np.ndarray) -> np.ndarray:
    """Histogram of value triples contributed by the given head vectors."""
    k = Q.shape[1]
    kt = k - kh
    T = _grid(q, kt)
    A = Q[:, :kh, :kh] % q
    Bm = Q[:, :kh, kh:] % q
    C = Q[:, kh:, kh:] % q
    tct = np.stack([np.einsum("ni,ij,nj->n", T, C[s], T) % q for s in range(3)])
    hist = np.zeros(q ** 3, dtype=np.int64)
    for h in heads:
        code = np.zeros(T.shape[0], dtype=np.int64)
        for s in range(3):
            hah = int(h @ A[s] @ h) % q
            lin = (2 * (h @ Bm[s])) % q
            v = (hah + T @ lin + tct[s]) % q
            code += v * q ** s
        hist += np.bincount(code, minlength=q ** 3)
    return hist


def value_table(sys_, q: int, workers: int = 1) -> np.ndarray:
    """counts[v1, v2, v3] = #{x mod q : Q(x) = v mod q}; cached on the system.

    Indexed as table[v1, v2, v3] (first form first).
    """
    if q < 1:
        raise InputError("modulus must be >= 1", "q")
    key = ("table", q)
    if key in sys_._cache:
        return sys_._cache[key]
    k = sys_.k
    budget.check(q ** k, f"enumeration of (Z/{q})^{k}")
    kt = k
    while kt > 0 and q ** kt > TAIL_POINTS:
        kt -= 1
    kh = k - kt
    Q = sys_.Q.astype(np.int64)
    heads = _grid(q, kh)
    if workers > 1 and len(heads) > 1:
        from concurrent.futures import ProcessPoolExecutor
        chunks = np.array_split(heads, workers)
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_table_chunk, [Q] * len(chunks), [q] * len(chunks),
                                [kh] * len(chunks), chunks))
        hist = sum(parts)
    else:
        hist = _table_chunk(Q, q, kh, heads)
    # code = v1 + q v2 + q^2 v3  ->  reshape gives [v3, v2, v1]
    table = hist.reshape(q, q, q).transpose(2, 1, 0).copy()
    sys_._cache[key] = table
    return table


# ---------------------------------------------------------------------------
# N(n; q)

def _grid_chunks(q: int, r: int, rows: int = 1 << 20):
    """(Z/q)^r in row-major blocks of at most about `rows` vectors."""
    rt = r
    while rt > 0 and q ** rt > rows:
        rt -= 1
    T = _grid(q, rt)
    for h in _grid(q, r - rt):
        yield np.concatenate([np.broadcast_to(h, (T.shape[0], r - rt)), T], axis=1)


def _fiber_mod_p(Q: np.ndarray, n, p: int) -> np.ndarray:
    k = Q.shape[1]
    budget.check(p ** k, f"enumeration of (Z/{p})^{k}")
    nv = np.array(n, dtype=np.int64) % p
    out = []
    for X in _grid_chunks(p, k):
        vals = np.einsum("ni,sij,nj->ns", X, Q, X) % p
        out.append(X[(vals == nv).all(axis=1)])
    return np.concatenate(out)


def _lift_fiber(Q: np.ndarray, n, X: np.ndarray, p: int, j: int, count_only: bool):
    """Points mod p^(j+1) over the fiber points X mod p^j (j >= 1).

    Q(X + p^j h) = Q(X) + 2 p^j h.QX mod p^(j+1), so the condition on h is linear mod p.
    """
    k = Q.shape[1]
    m = p ** j
    H = _grid(p, k)
    nv = np.array(n, dtype=np.int64)
    total, out = 0, []
    step = max(1, (1 << 23) // (3 * H.shape[0]))
    for s in range(0, X.shape[0], step):
        B = X[s:s + step]
        QX = np.einsum("sij,nj->nsi", Q, B)
        c = ((np.einsum("nsi,ni->ns", QX, B) - nv) // m) % p
        R = (c[:, :, None] + np.einsum("nsi,hi->nsh", 2 * QX % p, H)) % p
        ok = (R == 0).all(axis=1)
        if count_only:
            total += int(ok.sum())
        else:
            ni, hi = np.nonzero(ok)
            out.append(B[ni] + m * H[hi])
    if count_only:
        return total
    return np.concatenate(out) if out else np.zeros((0, k), dtype=np.int64)


def lift_fiber_count(sys_, n, p: int, e: int) -> int:
    """N(n; p^e) by lifting the fiber points one p-adic digit at a time."""
    Q = sys_.Q.astype(np.int64)
    X = _fiber_mod_p(Q, n, p)
    if e == 1:
        return int(X.shape[0])
    for j in range(1, e - 1):
        X = _lift_fiber(Q, n, X, p, j, False)
    return _lift_fiber(Q, n, X, p, e - 1, True)


def _count_prime_power(sys_, n, p: int, e: int, fast_path: bool, workers: int) -> Tuple[int, str]:
    from .quadsys import fiber_smooth_mod_p
    q = p ** e
    k = sys_.k
    if e >= 2 and fast_path and p != 2 and fiber_smooth_mod_p(sys_, n, p):
        base, _ = _count_prime_power(sys_, n, p, 1, fast_path, workers)
        return p ** ((k - 3) * (e - 1)) * base, "hensel"
    if fast_path and q ** k > DIRECT_POINTS:
        if e == 1 and p > 2:
            from .expsum import count_N_character
            return count_N_character(sys_, n, p), "character"
        if e >= 2:
            return lift_fiber_count(sys_, n, p, e), "hensel"
    t = value_table(sys_, q, workers)
    return int(t[n[0] % q, n[1] % q, n[2] % q]), "enumerate"


def count_N(sys_, n: Sequence[int], q: int, fast_path: bool = True, workers: int = 1) -> CountResult:
    """#{x mod q : Q(x) = n mod q}."""
    if q < 1:
        raise InputError("modulus must be >= 1", "q")
    t0 = time.perf_counter()
    n = tuple(int(v) for v in n)
    if q == 1:
        return CountResult(1, 1, "enumerate", 0.0)
    fac = factorize(q)
    value, methods = 1, []
    for p, e in sorted(fac.items()):
        v, m = _count_prime_power(sys_, n, p, e, fast_path, workers)
        value *= v
        methods.append(m)
    method = methods[0] if len(fac) == 1 else "crt"
    return CountResult(value, q, method, (time.perf_counter() - t0) * 1e3)


# ---------------------------------------------------------------------------
# kernel counts

def _valuation(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0 and v < cap:
        x //= p
        v += 1
    return v


def local_smith_valuations(M, p: int, e: int) -> List[int]:
    """Valuations (capped at e) of the Smith invariants of an integer matrix over Z/p^e."""
    q = p ** e
    A = [[int(v) % q for v in row] for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    vals = []
    r0 = 0
    active_cols = list(range(cols))
    active_rows = list(range(rows))
    while active_rows and active_cols:
        best = None
        for i in active_rows:
            for j in active_cols:
                if A[i][j]:
                    v = _valuation(A[i][j], p, e)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, i, j = best
        vals.append(v)
        piv = A[i][j]
        unit = (piv // p ** v) % q
        uinv = pow(unit, -1, q)
        # eliminate column j and row i (entries there are divisible by p^v)
        for s in active_rows:
            if s != i and A[s][j]:
                f = (A[s][j] // p ** v) * uinv % q
                A[s] = [(a - f * b) % q for a, b in zip(A[s], A[i])]
        for t in active_cols:
            if t != j and A[i][t]:
                f = (A[i][t] // p ** v) * uinv % q
                for s in active_rows:
                    A[s][t] = (A[s][t] - f * A[s][j]) % q
        active_rows.remove(i)
        active_cols.remove(j)
        r0 += 1
    vals.extend([e] * (min(rows, cols) - len(vals)))
    return vals


def count_Z(sys_, a: Sequence[int], q: int, variant: str = "general") -> CountResult:
    """#{z mod q : q | 2 z^T (a.Q)} (general) or #{z mod q : q | z^T (a.Q)} (homogeneous0)."""
    if q < 1:
        raise InputError("modulus must be >= 1", "q")
    if variant not in ("general", "homogeneous0"):
        raise InputError(f"unknown variant {variant!r}", "variant")
    t0 = time.perf_counter()
    M = sys_.pencil([int(v) for v in a])
    if variant == "general":
        M = 2 * M
    value = 1
    k = sys_.k
    fac = factorize(q) if q > 1 else {}
    for p, e in fac.items():
        vals = local_smith_valuations(M.tolist(), p, e)
        value *= p ** sum(min(v, e) for v in vals) * p ** (e * (k - len(vals)))
    return CountResult(value, q, "crt" if len(fac) > 1 else "enumerate",
                       (time.perf_counter() - t0) * 1e3)


# ---------------------------------------------------------------------------
# single-form counts

class _ArrayPoly:
    """Vectorized evaluation of an IntPoly modulo m (< 2^31) on integer arrays."""

    def __init__(self, P: ep.IntPoly):
        self.P = P
        self.r = len(P.vars)
        self.maxdeg = [max(P.degree(v), 0) if P.terms else 0 for v in P.vars]

    def __call__(self, X: np.ndarray, m: int) -> np.ndarray:
        X = X % m
        pw = []
        for i in range(self.r):
            cur = [np.ones(X.shape[0], dtype=np.int64)]
            for _ in range(self.maxdeg[i]):
                cur.append(cur[-1] * X[:, i] % m)
            pw.append(cur)
        out = np.zeros(X.shape[0], dtype=np.int64)
        for e, c in self.P.terms.items():
            t = np.full(X.shape[0], c % m, dtype=np.int64)
            for i, k in enumerate(e):
                if k:
                    t = t * pw[i][k] % m
            out = (out + t) % m
        return out


def _primitive_mask(X: np.ndarray, p: int) -> np.ndarray:
    return (X % p != 0).any(axis=1)


def _lift(Z: np.ndarray, p: int, j: int, fe: _ArrayPoly, primitive: bool) -> np.ndarray:
    """Zeros mod p^(j+1) lying over the zeros Z mod p^j."""
    r = fe.r
    H = _grid(p, r)
    out = []
    step = max(1, (1 << 22) // max(1, H.shape[0]))
    m = p ** (j + 1)
    for s in range(0, Z.shape[0], step):
        block = Z[s:s + step]
        X = (block[:, None, :] + (p ** j) * H[None, :, :]).reshape(-1, r)
        keep = fe(X, m) == 0
        out.append(X[keep])
    if not out:
        return np.zeros((0, r), dtype=np.int64)
    return np.concatenate(out)


def _zeros_mod_p(fe: _ArrayPoly, p: int, primitive: bool) -> np.ndarray:
    X = _grid(p, fe.r)
    keep = fe(X, p) == 0
    if primitive:
        keep &= _primitive_mask(X, p)
    return X[keep]


def hensel_count(f: ep.IntPoly, p: int, ell: int, alpha_cap: int = 12
                 ) -> Tuple[CountResult, HenselProfile]:
    """Primitive zeros of the form f modulo p^ell, with the (alpha, beta) profile.

    alpha is the least a with no primitive x satisfying f = grad f = 0 mod p^a.  The
    closed formula applies once ell >= alpha + beta_max; the search for alpha never
    runs past ell, since alpha > ell already places ell below the stable range.
    """
    if ell < 0:
        raise InputError("ell must be >= 0", "ell")
    t0 = time.perf_counter()
    r = len(f.vars)
    if ell == 0:
        return CountResult(1, 1, "enumerate", 0.0), HenselProfile(p, 1, {})
    if p ** (ell + 1) >= (1 << 31) and ell > alpha_cap:
        raise InputError(f"modulus p^{ell} too large for the lifting search", "ell")
    fe = _ArrayPoly(f)
    grads = [_ArrayPoly(ep.partial(f, v)) for v in f.vars]
    levels = {1: _zeros_mod_p(fe, p, primitive=True)}

    def level(j):
        while j not in levels:
            i = max(levels)
            budget.check(levels[i].shape[0] * p ** r, f"lifting zeros to p^{i + 1}")
            levels[i + 1] = _lift(levels[i], p, i, fe, True)
        return levels[j]

    def elapsed():
        return (time.perf_counter() - t0) * 1e3

    # P(a) = level(a) restricted to grad f = 0 mod p^a; P(a+1) lies over P(a)
    alpha = None
    P = levels[1]
    for a in range(1, min(ell, alpha_cap) + 1):
        m = p ** a
        sing = np.ones(P.shape[0], dtype=bool)
        for g in grads:
            sing &= g(P, m) == 0
        P = P[sing]
        if P.shape[0] == 0:
            alpha = a
            break
        if a < ell:
            P = _lift(P, p, a, fe, True)
    if alpha is None:
        if ell > alpha_cap:
            raise InputError(f"alpha search exceeded cap {alpha_cap} at p={p}; "
                             "the form may have a vanishing discriminant", "alpha")
        prof = HenselProfile(p, ell + 1, {}, alpha_resolved=False)
        return CountResult(int(level(ell).shape[0]), p ** ell, "enumerate", elapsed()), prof
    Za = level(alpha)
    m = p ** alpha
    beta = np.full(Za.shape[0], alpha, dtype=np.int64)
    for g in grads:
        gv = g(Za, m)
        vv = np.array([_valuation(int(t), p, alpha) for t in gv], dtype=np.int64)
        beta = np.minimum(beta, vv)
    hist: Dict[int, int] = {}
    for b in sorted(set(beta.tolist())):
        sel = Za[beta == b]
        ok = fe(sel, p ** (alpha + b)) == 0
        hist[int(b)] = int(ok.sum())
    prof = HenselProfile(p, alpha, hist)
    if ell >= alpha + prof.beta_max:
        val = p ** ((ell - alpha) * (r - 1)) * sum(p ** b * c for b, c in hist.items())
        return CountResult(val, p ** ell, "hensel", elapsed()), prof
    return CountResult(int(level(ell).shape[0]), p ** ell, "enumerate", elapsed()), prof


def count_F_zeros(sys_, p: int, u: int) -> CountResult:
    """#{x mod p^u : (x, p) = 1, p^u | F(x)}."""
    if u == 0:
        return CountResult(1, 1, "enumerate", 0.0)
    res, _ = hensel_count(sys_.F, p, u)
    return res


def sublevel_padic(P: ep.IntPoly, p: int, f: int) -> CountResult:
    """#{x mod p^f : p^f | P(x)}, by lifting zeros one digit at a time."""
    if P.is_zero():
        raise InputError("P must be nonzero", "P")
    t0 = time.perf_counter()
    fe = _ArrayPoly(P)
    if f == 0:
        return CountResult(1, 1, "enumerate", 0.0)
    Z = _zeros_mod_p(fe, p, primitive=False)
    for j in range(1, f):
        Z = _lift(Z, p, j, fe, False)
    return CountResult(int(Z.shape[0]), p ** f, "hensel", (time.perf_counter() - t0) * 1e3)


def brute_primitive_zeros(f: ep.IntPoly, p: int, ell: int) -> int:
    """Reference count by full enumeration of (Z/p^ell)^r; for tests."""
    fe = _ArrayPoly(f)
    X = _grid(p ** ell, len(f.vars))
    keep = (fe(X, p ** ell) == 0) & _primitive_mask(X, p)
    return int(keep.sum())
