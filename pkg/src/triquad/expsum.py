"""Complete exponential sums, local densities and the truncated singular series.

S_q(a; n) = e_q(-a.n) * sum_{x mod q} e_q(a.Q(x)),   T(n; q) = sum_{(a,q)=1} S_q(a; n),
S(l; q)   = sum_{(a,q)=1} sum_{r1,r2} e_q(a.Q(r1) - a.Q(r2) + l1.r1 + l2.r2).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import budget
from .errors import InputError
from .ffield import rank_mod_p, symmetric_diagonalize_mod_p
from .modcount import _ArrayPoly, _grid, _grid_chunks, count_N, value_table
from .primes import factorize, is_prime, legendre, primes_upto

EPS = np.finfo(float).eps


@dataclass
class ExpValue:
    re: float
    im: float
    err: float = 0.0
    exact_int: Optional[int] = None

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)

    def to_dict(self) -> Dict[str, Any]:
        d = {"re": self.re, "im": self.im, "err": self.err}
        if self.exact_int is not None:
            d["exact_int"] = str(self.exact_int)
        return d


def _phase_sum(counts: np.ndarray, q: int) -> ExpValue:
    """sum_t counts[t] e_q(t) with compensated accumulation."""
    t = np.arange(len(counts))
    ang = 2 * np.pi * t / q
    c = np.asarray(counts, dtype=float)
    re = math.fsum((c * np.cos(ang)).tolist())
    im = math.fsum((c * np.sin(ang)).tolist())
    err = 4 * EPS * float(np.abs(c).sum())
    return ExpValue(re, im, err)


def _round_int(v: ExpValue, what: str) -> int:
    r = round(v.re)
    if abs(v.re - r) > 0.25 + v.err or abs(v.im) > 0.25 + v.err:
        raise ArithmeticError(f"{what}: {v.re}+{v.im}i is not within rounding range of an integer")
    return int(r)


def _sum_values(sys_, q: int) -> np.ndarray:
    """Q(x) mod q for every x mod q, shape (q^k, 3); for direct summation."""
    k = sys_.k
    budget.check(q ** k, f"direct sum over (Z/{q})^{k}")
    Q = sys_.Q.astype(np.int64)
    parts = [np.einsum("ni,sij,nj->ns", X, Q, X) % q for X in _grid_chunks(q, k)]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# complete sums

def _gauss_eps(p: int) -> complex:
    return 1.0 if p % 4 == 1 else 1j


def _gauss_pencil(sys_, a, p: int) -> Tuple[int, int]:
    """(rank, product of Legendre symbols of the nonzero diagonal) of a.Q over F_p."""
    d = [v for v in symmetric_diagonalize_mod_p(sys_.pencil(a).tolist(), p) if v]
    chi = 1
    for v in d:
        chi *= legendre(v, p)
    return len(d), chi


def complete_sum(sys_, a: Sequence[int], n: Sequence[int], q: int, backend: str = "brute") -> ExpValue:
    """S_q(a; n)."""
    if q < 1:
        raise InputError("q must be >= 1", "q")
    a = [int(v) for v in a]
    n = [int(v) for v in n]
    an = sum(x * y for x, y in zip(a, n))
    k = sys_.k
    if backend == "gauss":
        if q % 2 == 0 or not is_prime(q):
            raise InputError("gauss backend needs an odd prime modulus", "q")
        p = q
        r, chi = _gauss_pencil(sys_, [v % p for v in a], p)
        mag = p ** (k - r) * p ** (r / 2)
        z = chi * mag * _gauss_eps(p) ** r * np.exp(-2j * np.pi * (an % p) / p)
        return ExpValue(z.real, z.imag, 8 * EPS * mag)
    if backend != "brute":
        raise InputError(f"unknown backend {backend!r}", "backend")
    V = _sum_values(sys_, q)
    t = (V @ np.array(a, dtype=np.int64) - an) % q
    return _phase_sum(np.bincount(t, minlength=q), q)


def all_complete_sums(sys_, q: int) -> np.ndarray:
    """S_q(a) for every a mod q, as a complex array indexed [a1, a2, a3], from the value table."""
    T = value_table(sys_, q).astype(float)
    return np.fft.ifftn(T) * q ** 3


def _a_histograms(sys_, q: int, coprime_only: bool) -> Tuple[np.ndarray, np.ndarray]:
    """(A, H) with H[i, s] = #{x : a_i.Q(x) = s mod q}; cached per system."""
    key = ("ahist", q, coprime_only)
    if key not in sys_._cache:
        V = _sum_values(sys_, q)
        A = _grid(q, 3)
        if coprime_only:
            A = A[np.gcd.reduce(np.concatenate([A, np.full((len(A), 1), q)], axis=1), axis=1) == 1]
        H = np.stack([np.bincount((V @ a) % q, minlength=q) for a in A])
        sys_._cache[key] = (A, H)
    return sys_._cache[key]


def residue_histograms(sys_, q: int, n: Sequence[int], coprime_only: bool) -> np.ndarray:
    """Integer h[s] = #{(a, x): a.Q(x) - a.n = s mod q}, a over all or over primitive a.

    sum_s h[s] e_q(s) is sum_a S_q(a; n); this is the direct, per-a summation.
    """
    A, H = _a_histograms(sys_, q, coprime_only)
    n = np.array([int(v) for v in n], dtype=np.int64)
    shift = (A @ n) % q
    idx = (np.arange(q)[None, :] + shift[:, None]) % q
    return np.take_along_axis(H, idx, axis=1).sum(axis=0)


def full_sum(sys_, n: Sequence[int], q: int) -> int:
    """sum over all a mod q of S_q(a; n), summed directly and rounded to the integer it must be."""
    return _round_int(_phase_sum(residue_histograms(sys_, q, n, False), q), "full sum")


def count_N_character(sys_, n: Sequence[int], p: int) -> int:
    """N(n; p) = p^-3 sum_a S_p(a; n), each S_p(a) from the Gauss-sum product (odd prime p)."""
    if p == 2 or not is_prime(p):
        raise InputError("character route needs an odd prime", "p")
    k = sys_.k
    A = _grid(p, 3)[1:]
    Fv = _ArrayPoly(sys_.F)(A, p)
    chi = np.ones(len(A), dtype=np.int64)
    base, e = Fv.copy(), (p - 1) // 2
    while e:
        if e & 1:
            chi = chi * base % p
        base = base * base % p
        e >>= 1
    chi = np.where(chi == p - 1, -1, chi)
    t = (-(A @ np.array(n, dtype=np.int64))) % p
    by_rank: Dict[int, np.ndarray] = {}
    full = Fv != 0
    by_rank[k] = np.bincount(t[full], weights=chi[full], minlength=p).astype(np.int64)
    for i in np.nonzero(~full)[0]:
        r, c = _gauss_pencil(sys_, A[i].tolist(), p)
        by_rank.setdefault(r, np.zeros(p, dtype=np.int64))[t[i]] += c
    eps = _gauss_eps(p)
    re, im, err = [], [], 0.0
    for r, C in by_rank.items():
        s = _phase_sum(C, p)
        z = complex(s.re, s.im) * eps ** r * p ** (k - r) * p ** (r / 2)
        re.append(z.real)
        im.append(z.imag)
        err += s.err * p ** (k - r / 2) + 8 * EPS * abs(z)
    total = ExpValue(math.fsum(re) + p ** k, math.fsum(im), err)
    scaled = ExpValue(total.re / p ** 3, total.im / p ** 3, total.err / p ** 3)
    return _round_int(scaled, f"N(n;{p}) via characters")


# ---------------------------------------------------------------------------
# T(n; q) and local densities

def _N_cached(sys_, n, q: int) -> int:
    key = ("N", q, tuple(int(v) % q for v in n))
    if key not in sys_._cache:
        sys_._cache[key] = count_N(sys_, n, q).value
    return sys_._cache[key]


def T_prime_power(sys_, n, p: int, e: int) -> int:
    """T(n; p^e) = p^{3e} N(n; p^e) - p^{k+3(e-1)} N(n; p^{e-1}), exactly."""
    if e == 0:
        return 1
    k = sys_.k
    return p ** (3 * e) * _N_cached(sys_, n, p ** e) - p ** (k + 3 * (e - 1)) * _N_cached(sys_, n, p ** (e - 1))


def T_sum(sys_, n: Sequence[int], q: int, path: str = "counting") -> ExpValue:
    if q < 1:
        raise InputError("q must be >= 1", "q")
    n = [int(v) for v in n]
    if path == "counting":
        val = 1
        for p, e in factorize(q).items():
            val *= T_prime_power(sys_, n, p, e)
        return ExpValue(float(val), 0.0, 0.0, val)
    if path == "direct":
        if q == 1:
            return ExpValue(1.0, 0.0, 0.0)
        S = all_complete_sums(sys_, q)
        idx = np.indices((q, q, q)).reshape(3, -1).T
        cop = np.gcd.reduce(np.concatenate([idx, np.full((len(idx), 1), q)], axis=1), axis=1) == 1
        ph = np.exp(-2j * np.pi * ((idx @ np.array(n)) % q) / q)
        terms = (S.reshape(-1) * ph)[cop]
        re = math.fsum(terms.real.tolist())
        im = math.fsum(terms.imag.tolist())
        err = 16 * EPS * q ** sys_.k * len(terms) * max(1.0, math.log2(q ** 3))
        return ExpValue(re, im, err)
    if path == "summed":
        return _phase_sum(residue_histograms(sys_, q, n, True), q)
    raise InputError(f"unknown path {path!r}", "path")


@dataclass
class DensityEstimate:
    n: Tuple[int, int, int]
    truncation: int
    value: float
    tail_bound: float
    factors: Dict[int, Dict[str, Any]] = field(default_factory=dict)
    exact: Optional[Fraction] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": list(self.n), "truncation": self.truncation, "value": self.value,
                "tail_bound": self.tail_bound,
                "exact": None if self.exact is None else str(self.exact),
                "factors": {str(p): f for p, f in self.factors.items()}, "notes": self.notes}


def local_density(sys_, n: Sequence[int], p: int, E: int) -> DensityEstimate:
    """sigma_p(n; E) in series form and in telescoped form p^{E(3-k)} N(n; p^E)."""
    if E < 0:
        raise InputError("E must be >= 0", "E")
    n = tuple(int(v) for v in n)
    k = sys_.k
    terms = [Fraction(T_prime_power(sys_, n, p, e), p ** (e * k)) for e in range(E + 1)]
    series = sum(terms, Fraction(0))
    tele = Fraction(_N_cached(sys_, n, p ** E) * p ** (3 * E), p ** (E * k)) if E else Fraction(1)
    tail = abs(float(terms[-1])) if E >= 1 else 0.0
    fac = {"series": str(series), "telescoped": str(tele), "equal": series == tele,
           "terms": [str(t) for t in terms]}
    return DensityEstimate(n, E, float(series), tail, {p: fac}, series)


def singular_series(sys_, n: Sequence[int], Qmax: int, classify: bool = True,
                    seed: int = 0) -> DensityEstimate:
    """sum_{q <= Qmax} q^-k T(n; q) by multiplicativity, with a dyadic tail estimate."""
    if Qmax < 1:
        raise InputError("Qmax must be >= 1", "Qmax")
    n = tuple(int(v) for v in n)
    k = sys_.k
    notes = []
    if k <= 6:
        warnings.warn(f"singular series need not converge for k={k} <= 6", RuntimeWarning)
        notes.append("k <= 6: convergence not expected")
    Tpp: Dict[Tuple[int, int], int] = {}
    factors: Dict[int, Dict[str, Any]] = {}
    for p in primes_upto(Qmax):
        e, terms = 1, []
        while p ** e <= Qmax:
            Tpp[(p, e)] = T_prime_power(sys_, n, p, e)
            terms.append(Fraction(Tpp[(p, e)], p ** (e * k)))
            e += 1
        f: Dict[str, Any] = {"sigma_partial": float(1 + sum(terms)), "E": len(terms),
                             "terms": [float(t) for t in terms]}
        if classify:
            from .quadsys import classify_prime
            pc = classify_prime(sys_, p, n, seed=seed)
            f["kind"] = pc.kind
            if pc.kind == "Bad" and len(terms) >= 2 and abs(terms[-1]) >= abs(terms[-2]) > 0:
                f["warning"] = "partial factor terms are not decreasing"
                notes.append(f"p={p}: bad prime without visible convergence")
        factors[p] = f
    total = Fraction(1)
    blocks: Dict[int, Fraction] = {}
    for q in range(2, Qmax + 1):
        t = 1
        for p, e in factorize(q).items():
            t *= Tpp[(p, e)]
            if t == 0:
                break
        if t:
            term = Fraction(t, q ** k)
            total += term
            j = (q - 1).bit_length()  # block (2^{j-1}, 2^j]
            blocks[j] = blocks.get(j, Fraction(0)) + term
    tail = 0.0
    if blocks:
        jmax = max(blocks)
        last = abs(float(blocks[jmax]))
        prev = abs(float(blocks.get(jmax - 1, 0)))
        ratio = last / prev if prev else 0.0
        tail = last * ratio / (1 - ratio) if ratio < 1 else last * 2 ** jmax
        if ratio >= 1:
            notes.append("last dyadic block did not shrink; tail bound is crude")
    return DensityEstimate(n, Qmax, float(total), tail, factors, total, notes)


# ---------------------------------------------------------------------------
# minor-arc sums S(l; q)

def _split_l(l: Sequence[int], k: int) -> Tuple[np.ndarray, np.ndarray]:
    l = np.array([int(v) for v in l], dtype=np.int64)
    if l.shape != (2 * k,):
        raise InputError(f"l must have length 2k={2 * k}", "l")
    return l[:k], l[k:]


def _primitive_a(q: int) -> np.ndarray:
    A = _grid(q, 3)
    return A[np.gcd.reduce(np.concatenate([A, np.full((len(A), 1), q)], axis=1), axis=1) == 1]


def minor_sum(sys_, l: Sequence[int], q: int, path: str = "reduced") -> ExpValue:
    """S(l; q).  brute: exact pair-residue counts over (r1, r2); reduced: the r2 sum done
    in closed form, leaving q^k sum_a sum_{h : q | 2(a.Q)h + l3} e_q(a.Q(h) + l1.h)."""
    k = sys_.k
    l1, l2 = _split_l(l, k)
    if q == 1:
        return ExpValue(1.0, 0.0, 0.0)
    A = _primitive_a(q)
    R = np.concatenate(list(_grid_chunks(q, k)))
    V = _sum_values(sys_, q)
    h = np.zeros(q, dtype=np.int64)
    if path == "brute":
        budget.check(len(A) * q ** (2 * k), "brute S(l;q)")
        for a in A:
            av = V @ a
            c1 = np.bincount((av + R @ l1) % q, minlength=q)
            c2 = np.bincount((-av + R @ l2) % q, minlength=q)
            # pair counts by residue of the sum: cyclic convolution of integer histograms
            for s in range(q):
                if c1[s]:
                    h += c1[s] * np.roll(c2, s)
        return _phase_sum(h, q)
    if path == "reduced":
        l3 = l1 + l2
        Q = sys_.Q.astype(np.int64)
        for a in A:
            M = np.tensordot(a, Q, axes=1)
            ok = ((2 * R @ M + l3) % q == 0).all(axis=1)
            h += np.bincount((V[ok] @ a + R[ok] @ l1) % q, minlength=q)
        v = _phase_sum(h, q)
        return ExpValue(v.re * q ** k, v.im * q ** k, v.err * q ** k)
    raise InputError(f"unknown path {path!r}", "path")


def minor_sum_table(sys_, q: int) -> np.ndarray:
    """S(l; q) for all l mod q as a (q^k, q^k) complex array, rows l1, columns l2
    (row-major residue order)."""
    key = ("Sl", q)
    if key in sys_._cache:
        return sys_._cache[key]
    k = sys_.k
    budget.check(q ** (2 * k) * 4, f"S(l;{q}) table")
    V = _sum_values(sys_, q)
    G = []
    for a in _primitive_a(q):
        E = np.exp(2j * np.pi * ((V @ a) % q) / q).reshape((q,) * k)
        G.append((np.fft.ifftn(E) * q ** k).reshape(-1))
    G = np.array(G)
    neg = (-_grid(q, k)) % q
    flat_neg = np.ravel_multi_index(tuple(neg.T), (q,) * k)
    S = G.T @ np.conj(G[:, flat_neg])
    sys_._cache[key] = S
    return S


def minor_matrix(sys_, b: Sequence[int], l3, l4, p: int) -> np.ndarray:
    """M(b; l3, l4) over F_p: b.Q bordered by the column l4 and the row l3."""
    k = sys_.k
    M = np.zeros((k + 1, k + 1), dtype=np.int64)
    M[:k, :k] = sys_.pencil(b) % p
    M[:k, k] = np.asarray(l4) % p
    M[k, :k] = np.asarray(l3) % p
    return M


def fg_counts(sys_, l: Sequence[int], p: int) -> Tuple[int, int]:
    """f = #{b : det M(b; l3, l4) = 0 mod p}, g = #{b : rank M(b; l3, l4) <= k-1}."""
    if p == 2 or not is_prime(p):
        raise InputError("p must be an odd prime", "p")
    k = sys_.k
    l1, l2 = _split_l(l, k)
    l3, l4 = l1 + l2, l1 - l2
    f = g = 0
    for b in _grid(p, 3):
        r = rank_mod_p(minor_matrix(sys_, b.tolist(), l3, l4, p), p)
        f += r <= k
        g += r <= k - 1
    return int(f), int(g)


def _l_box(L: int, k: int) -> np.ndarray:
    return np.indices((2 * L + 1,) * (2 * k)).reshape(2 * k, -1).T - L


def avg_minor_probe(sys_, Qmax: int, L: int) -> Dict[str, Any]:
    """sum_{q <= Qmax} sum_{|l| <= L} |S(l; q)|, with per-q totals."""
    k = sys_.k
    box = _l_box(L, k)
    per_q = {}
    for q in range(1, Qmax + 1):
        if q == 1:
            per_q[q] = float(len(box))
            continue
        S = minor_sum_table(sys_, q)
        m = box % q
        i1 = np.ravel_multi_index(tuple(m[:, :k].T), (q,) * k)
        i2 = np.ravel_multi_index(tuple(m[:, k:].T), (q,) * k)
        per_q[q] = math.fsum(np.abs(S[i1, i2]).tolist())
    total = math.fsum(per_q.values())
    shape = Qmax ** (k + 3) * (2 * L + 1) ** (2 * k) + Qmax ** (k + 4) * (2 * L + 1) ** k
    return {"Q": Qmax, "L": L, "total": total, "per_q": per_q, "bound_shape": shape,
            "ratio": total / shape}
