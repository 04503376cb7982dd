"""Assembly: the generating sum S(alpha), weighted representation counts R_B(n), exact DFT
recovery, major arcs, the minor-arc Poisson probe, and predictions against true counts.

S(alpha) = sum_x e(alpha.Q(x)) w(x/B),   R_B(n) = sum_{Q(x) = n} w(x/B).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import budget
from .arch import Weight, _gl, osc_integral_box, singular_integral, singular_integral_oracle
from .errors import InputError
from .expsum import ExpValue, minor_sum_table, singular_series, _primitive_a
from .modcount import _grid, count_N
from .primes import factorize, primes_upto


# ---------------------------------------------------------------------------
# support points

def support_radius(w: Weight, B: float) -> int:
    """Largest integer coordinate with w(x/B) possibly nonzero."""
    if w.kind == "gaussian":
        # e^{-pi 36} is below double precision relative to w(0)
        return int(math.floor(6 * w.scale * B))
    r = w.scale * B
    return int(math.ceil(r) - 1)


def _split(k: int, side: int, rows: int) -> int:
    kt = k
    while kt > 0 and side ** kt > rows:
        kt -= 1
    return kt


def _point_chunks(k: int, rad: int, rows: int = 1 << 20):
    side = 2 * rad + 1
    kt = _split(k, side, rows)
    T = _grid(side, kt) - rad
    for h in _grid(side, k - kt) - rad:
        yield np.concatenate([np.broadcast_to(h, (T.shape[0], k - kt)), T], axis=1)


def support_points(sys_, B: float, w: Weight):
    """Yields (X, weights) blocks over integer points with w(x/B) > 0."""
    k = sys_.k
    rad = support_radius(w, B)
    budget.check((2 * rad + 1) ** k, f"support sweep of (2*{rad}+1)^{k} points")
    for X in _point_chunks(k, rad):
        wx = w(X / B)
        keep = wx > 0
        if keep.any():
            yield X[keep], wx[keep]


def _sweep(sys_, B: float, w: Weight, rows: int = 1 << 20):
    """Yields (values (m, 3) int64, weights) over the support, head block by head block.

    With x = (h, t), Q(x) = Q(h) + 2 h^T Q_ht t + Q(t); Q(t) over the tail grid is
    computed once and each head costs one (m, kt) x (kt, 3) product.
    """
    k = sys_.k
    rad = support_radius(w, B)
    side = 2 * rad + 1
    budget.check(side ** k, f"support sweep of (2*{rad}+1)^{k} points")
    kt = _split(k, side, rows)
    kh = k - kt
    Q = sys_.Q.astype(np.int64)
    T = _grid(side, kt) - rad
    Qt = np.stack([np.einsum("ni,ij,nj->n", T, Q[s, kh:, kh:], T) for s in range(3)], axis=1)
    if w.is_product:
        f = w.factor(np.arange(-rad, rad + 1) / B)
        wt = np.prod(f[T + rad], axis=1)
    else:
        wt = None
    for h in _grid(side, kh) - rad:
        base = np.array([h @ Q[s, :kh, :kh] @ h for s in range(3)], dtype=np.int64)
        lin = 2 * np.stack([h @ Q[s, :kh, kh:] for s in range(3)], axis=1)
        vals = Qt + base + T @ lin
        if wt is not None:
            wx = wt * np.prod(f[h + rad]) if kh else wt
        else:
            X = np.concatenate([np.broadcast_to(h, (T.shape[0], kh)), T], axis=1)
            wx = w(X / B)
        keep = wx > 0
        if keep.all():
            yield vals, wx
        elif keep.any():
            yield vals[keep], wx[keep]


# ---------------------------------------------------------------------------
# generating sum and representation counts

def gen_sum(sys_, alpha: Sequence[float], B: float, w: Weight = Weight()) -> ExpValue:
    alpha = np.asarray(alpha, dtype=float)
    re, im, mass = [], [], 0.0
    for vals, wx in _sweep(sys_, B, w):
        # reduce the phase mod 1 exactly on the integer parts
        ph = np.zeros(len(vals))
        for j in range(3):
            a = alpha[j]
            ph = ph + (a * vals[:, j]) % 1.0
        z = wx * np.exp(2j * np.pi * ph)
        re.append(math.fsum(z.real.tolist()))
        im.append(math.fsum(z.imag.tolist()))
        mass += float(wx.sum())
    return ExpValue(math.fsum(re), math.fsum(im), 64 * np.finfo(float).eps * max(mass, 1.0))


def gen_sum_many(sys_, alphas: np.ndarray, B: float, w: Weight = Weight()) -> np.ndarray:
    """S(alpha) for a batch of alpha (M, 3), summed over points in fixed order."""
    alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
    out = np.zeros(len(alphas), dtype=complex)
    for vals, wx in _sweep(sys_, B, w):
        vals = vals.astype(float)
        step = max(1, (1 << 22) // max(1, len(vals)))
        for s in range(0, len(alphas), step):
            ph = alphas[s:s + step] @ vals.T
            out[s:s + step] += np.exp(2j * np.pi * ph) @ wx
    return out


@dataclass
class RepTable:
    B: float
    weight: Dict[str, Any]
    keys: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self._index = {tuple(int(v) for v in k): i for i, k in enumerate(self.keys)}

    def get(self, n: Sequence[int]) -> float:
        i = self._index.get(tuple(int(v) for v in n))
        return 0.0 if i is None else float(self.values[i])

    def count(self, n: Sequence[int]) -> int:
        i = self._index.get(tuple(int(v) for v in n))
        return 0 if i is None else int(self.counts[i])

    def total(self) -> float:
        return math.fsum(self.values.tolist())

    def __len__(self):
        return len(self.keys)

    def to_dict(self) -> Dict[str, Any]:
        return {"B": self.B, "weight": self.weight,
                "entries": [[k.tolist(), float(v), int(c)]
                            for k, v, c in zip(self.keys, self.values, self.counts)]}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "RepTable":
        ent = d["entries"]
        keys = np.array([e[0] for e in ent], dtype=np.int64).reshape(-1, 3)
        return cls(d["B"], d["weight"], keys, np.array([e[1] for e in ent], dtype=float),
                   np.array([e[2] for e in ent], dtype=np.int64))


def _key_codec(sys_, rad: int):
    """Offsets and bases packing a value triple Q(x), |x_i| <= rad, into one int64."""
    bound = np.abs(sys_.Q.astype(np.int64)).sum(axis=(1, 2)) * rad * rad
    base = 2 * bound + 1
    if float(np.prod(base.astype(float))) >= 2.0 ** 62:
        raise InputError("value range too large to pack", "B")
    return bound, base


def count_reps(sys_, B: float, w: Weight = Weight(),
               targets: Optional[Sequence[Sequence[int]]] = None) -> RepTable:
    """One sweep over the support accumulating w(x/B) into the bucket Q(x).

    With `targets`, only those n are kept (the full table grows like the value box,
    which at k = 7, B = 8 is far larger than memory).
    """
    off, base = _key_codec(sys_, support_radius(w, B))
    keys, vals, cnts = [], [], []
    want = None
    if targets is not None:
        tg = np.asarray(targets, dtype=np.int64).reshape(-1, 3) + off
        inside = ((tg >= 0) & (tg < base)).all(axis=1)
        tg = tg[inside]
        want = np.unique((tg[:, 0] * base[1] + tg[:, 1]) * base[2] + tg[:, 2])

    def merge():
        K = np.concatenate(keys)
        u, inv = np.unique(K, return_inverse=True)
        V = np.bincount(inv, weights=np.concatenate(vals), minlength=len(u))
        C = np.bincount(inv, weights=np.concatenate(cnts), minlength=len(u))
        return u, V, C

    for n, wx in _sweep(sys_, B, w):
        n = n + off
        code = (n[:, 0] * base[1] + n[:, 1]) * base[2] + n[:, 2]
        if want is not None:
            sel = np.isin(code, want)
            if not sel.any():
                continue
            code, wx = code[sel], wx[sel]
        u, inv = np.unique(code, return_inverse=True)
        keys.append(u)
        vals.append(np.bincount(inv, weights=wx, minlength=len(u)))
        cnts.append(np.bincount(inv, minlength=len(u)).astype(float))
        if sum(len(k) for k in keys) > (1 << 22):
            u, V, C = merge()
            keys, vals, cnts = [u], [V], [C]
    if not keys:
        z = np.zeros((0, 3), dtype=np.int64)
        return RepTable(B, w.to_dict(), z, np.zeros(0), np.zeros(0, dtype=np.int64))
    u, V, C = merge()
    K = np.stack([u // (base[1] * base[2]), (u // base[2]) % base[1], u % base[2]], axis=1) - off
    return RepTable(B, w.to_dict(), K, V, np.rint(C).astype(np.int64))


def value_range(sys_, B: float, w: Weight) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.full(3, np.iinfo(np.int64).max)
    hi = np.full(3, np.iinfo(np.int64).min)
    for n, _ in _sweep(sys_, B, w):
        lo = np.minimum(lo, n.min(axis=0))
        hi = np.maximum(hi, n.max(axis=0))
    return lo, hi


def dft_recover(sys_, B: float, w: Weight = Weight(), grid: Optional[Sequence[int]] = None
                ) -> Tuple[RepTable, Dict[str, Any]]:
    """R_B(n) from samples of S(alpha) on a uniform grid, by an inverse discrete transform.

    S is a trigonometric polynomial whose frequencies lie in the box [lo, hi] of attained
    values, so any grid with more points per axis than hi - lo + 1 recovers every
    coefficient exactly.  The default grid is the smallest power of two above that.
    """
    lo, hi = value_range(sys_, B, w)
    span = hi - lo + 1
    if grid is None:
        grid = [1 << int(math.ceil(math.log2(s + 1))) for s in span]
    grid = [int(g) for g in grid]
    if any(g < s for g, s in zip(grid, span)):
        raise InputError(f"grid {grid} too small for value span {span.tolist()}: aliasing", "grid")
    budget.check(int(np.prod(grid)) * 8, "DFT grid")
    G1, G2, G3 = grid
    S = np.zeros((G1, G2, G3), dtype=complex)
    a1, a2, a3 = (np.arange(g) for g in grid)
    for n, wx in _sweep(sys_, B, w):
        # e(a_j n_j / G_j) with the integer product reduced mod G_j
        E1 = np.exp(2j * np.pi * (np.multiply.outer(a1, n[:, 0]) % G1) / G1) * wx
        E2 = np.exp(2j * np.pi * (np.multiply.outer(a2, n[:, 1]) % G2) / G2)
        E3 = np.exp(2j * np.pi * (np.multiply.outer(a3, n[:, 2]) % G3) / G3)
        for i in range(G1):
            S[i] += (E2 * E1[i]) @ E3.T
    # R(n) = (1/G) sum_alpha S(alpha) e(-alpha.n)
    coef = np.fft.fftn(S) / (G1 * G2 * G3)
    idx = np.indices(coef.shape).reshape(3, -1).T
    vals = coef.reshape(-1).real
    # map residues back into [lo, lo + G)
    nvals = lo + (idx - lo) % np.array(grid)
    keep = np.abs(vals) > 1e-9
    table = RepTable(B, w.to_dict(), nvals[keep].astype(np.int64), vals[keep],
                     np.zeros(int(keep.sum()), dtype=np.int64))
    parseval_lhs = math.fsum((coef.reshape(-1).real ** 2).tolist()) + \
        math.fsum((coef.reshape(-1).imag ** 2).tolist())
    parseval_rhs = float((np.abs(S) ** 2).sum()) / (G1 * G2 * G3)
    info = {"grid": grid, "span": span.tolist(), "S0": float(S[0, 0, 0].real),
            "max_imag": float(np.abs(coef.imag).max()),
            "parseval_lhs": parseval_lhs, "parseval_rhs": parseval_rhs}
    return table, info


# ---------------------------------------------------------------------------
# arcs

def jordan_totient3(q: int) -> int:
    v = q ** 3
    for p in factorize(q) if q > 1 else {}:
        v = v // p ** 3 * (p ** 3 - 1)
    return v


def arcs(delta: float, B: float, check: bool = True) -> Dict[str, Any]:
    """Major boxes prod_j [a_j/q - B^d/B^2, a_j/q + B^d/B^2], q <= B^d, (a, q) = 1."""
    if not 0 < delta < 2 / 3:
        raise InputError("delta must lie in (0, 2/3)", "delta")
    Qm = int(math.floor(B ** delta + 1e-12))
    half = B ** delta / B ** 2
    centers = []
    for q in range(1, Qm + 1):
        for a in _primitive_a(q):
            centers.append(a / q)
    C = np.array(centers)
    disjoint = True
    if check and len(C) > 1:
        step = max(1, (1 << 24) // len(C))
        for s in range(0, len(C), step):
            d = np.abs(C[s:s + step, None, :] - C[None, :, :])
            d = np.minimum(d, 1 - d)
            sep = (d > 2 * half).any(axis=2)
            idx = np.arange(s, min(s + step, len(C)))
            sep[np.arange(len(idx)), idx] = True
            if not sep.all():
                disjoint = False
                break
    vol = (2 * half) ** 3
    formula = sum(jordan_totient3(q) for q in range(1, Qm + 1)) * vol
    return {"delta": delta, "B": B, "qmax": Qm, "boxes": len(C), "half_width": half,
            "disjoint": disjoint, "measure": len(C) * vol, "measure_formula": formula,
            "shape": B ** (-6 + 7 * delta)}


# ---------------------------------------------------------------------------
# minor-arc probe

@dataclass
class ArcProbe:
    L: int
    phi: Tuple[float, float, float]
    direct: float
    poisson: float
    ledger: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def rel_diff(self) -> float:
        m = max(abs(self.direct), abs(self.poisson))
        return abs(self.direct - self.poisson) / m if m else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"L": self.L, "phi": list(self.phi), "direct": self.direct, "poisson": self.poisson,
                "rel_diff": self.rel_diff, "ledger": self.ledger}


def _phi_nodes(phi, m: int):
    """Gauss-Legendre nodes on {phi} with theta_1 > 0 (the half with theta_1 < 0 mirrors it)."""
    axes = []
    for j, f in enumerate(phi):
        t, wt = _gl(m, f, 2 * f)
        if j == 0:
            axes.append((t, wt))
        else:
            axes.append((np.concatenate([-t[::-1], t]), np.concatenate([wt[::-1], wt])))
    T = np.stack(np.meshgrid(*[a[0] for a in axes], indexing="ij"), axis=-1).reshape(-1, 3)
    W = np.prod(np.stack(np.meshgrid(*[a[1] for a in axes], indexing="ij"), axis=-1).reshape(-1, 3), axis=1)
    return T, 2 * W


def minor_arc_probe(sys_, B: float, L: int, phi: Sequence[float], w: Weight = Weight(),
                    m: int = 3, n_grid: int = 32, lam_max: float = 6.0) -> ArcProbe:
    """Sigma(L, phi) computed directly and through Poisson summation on the same theta nodes.

    direct:  sum_{L <= q < 2L} sum_{(a,q)=1} int_{phi} |S(a/q + theta)|^2
    poisson: B^{2k} sum_q q^{-2k} sum_l S(l; q) int_{phi} I(B^2 theta; B l1/q) conj(I(B^2 theta; -B l2/q))
    The l-sum keeps |l_i| <= M with B M/q <= lam_max (M >= 1); I decays faster than any power
    in lambda, and the node count grows with B M/q so that e(-lambda x) stays resolved.
    """
    phi = tuple(float(f) for f in phi)
    k = sys_.k
    if L < 1:
        raise InputError("L must be >= 1", "L")
    if min(phi) <= 0:
        return ArcProbe(L, phi, 0.0, 0.0, [{"note": "degenerate region"}])
    T, W = _phi_nodes(phi, m)
    direct = poisson = 0.0
    ledger = []
    for q in range(L, 2 * L):
        A = _primitive_a(q)
        # direct: S at a/q + theta for every a and node
        alphas = (A[:, None, :] / q + T[None, :, :]).reshape(-1, 3)
        Sv = gen_sum_many(sys_, alphas, B, w).reshape(len(A), len(T))
        d_q = float(((np.abs(Sv) ** 2).sum(axis=0) * W).sum())
        # Poisson side
        M = max(1, int(math.floor(lam_max * q / B)))
        ms = np.arange(-M, M + 1)
        nodes = max(n_grid, int(math.ceil(3 * B * M / q * w.scale)) + 16)
        Sl = minor_sum_table(sys_, q) if q > 1 else np.ones((1, 1), dtype=complex)
        neg = np.ravel_multi_index(tuple(((-_grid(q, k)) % q).T), (q,) * k) if q > 1 else np.zeros(1, int)
        p_q = 0.0
        for th, wt in zip(T, W):
            Ibox = osc_integral_box(sys_, B * B * th, B * ms / q, w, nodes)
            Ares = np.zeros((q,) * k, dtype=complex)
            res = ms % q
            for idx in itertools.product(range(len(ms)), repeat=k):
                Ares[tuple(res[list(idx)])] += Ibox[idx]
            a = Ares.reshape(-1)
            val = (a @ Sl @ np.conj(a[neg])).real
            p_q += wt * val
        p_q *= B ** (2 * k) / q ** (2 * k)
        ledger.append({"q": q, "direct": d_q, "poisson": p_q, "l_cut": M, "nodes": nodes})
        direct += d_q
        poisson += p_q
    return ArcProbe(L, phi, direct, poisson, ledger)


# ---------------------------------------------------------------------------
# predictions

@dataclass
class Prediction:
    n: Tuple[int, int, int]
    B: float
    sseries: float
    sseries_tail: float
    sintegral: float
    sintegral_err: float
    main_term: float
    R_B: Optional[float] = None
    flags: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"n": list(self.n), "R_B": self.R_B, "prediction": self.main_term,
                "sseries": self.sseries, "sseries_tail": self.sseries_tail,
                "sintegral": self.sintegral, "sintegral_err": self.sintegral_err, "flags": self.flags}


LIFT_POINTS = 1 << 26


def _euler_depth(p: int, k: int, Pmax: int) -> int:
    """Largest E with p^E <= Pmax^2 whose lifting cost p^((k-3)(E-1)+k) fits LIFT_POINTS."""
    E = max(1, int(math.floor(math.log(Pmax * Pmax) / math.log(p) + 1e-12)))
    while E > 1 and p ** ((k - 3) * (E - 1) + k) > LIFT_POINTS:
        E -= 1
    return E


def euler_series(sys_, n: Sequence[int], Pmax: int, classify: bool = True, seed: int = 0
                 ) -> Tuple[float, Dict[int, Any]]:
    """prod_{p <= Pmax} sigma_p(n; E_p).  E_p = 1 at Type I primes, where the higher terms
    vanish; elsewhere E_p comes from _euler_depth and the factor is a truncation."""
    from .expsum import T_prime_power
    from .quadsys import classify_prime
    k = sys_.k
    val = 1.0
    factors = {}
    for p in primes_upto(Pmax):
        kind = classify_prime(sys_, p, n, seed=seed).kind if classify else "unknown"
        E = 1 if kind == "GoodTypeI" else _euler_depth(p, k, Pmax)
        terms = [T_prime_power(sys_, n, p, e) / p ** (e * k) for e in range(1, E + 1)]
        sig = 1.0 + math.fsum(terms)
        factors[p] = {"kind": kind, "E": E, "sigma": sig, "last_term": terms[-1]}
        val *= sig
    return val, factors


def predict(sys_, n: Sequence[int], B: float, Qmax: int = 20, R: float = 64,
            w: Weight = Weight(), method: str = "oracle", series: str = "euler",
            eps: float = 1e-2, samples: int = 1 << 22, seed: int = 0,
            truth: Optional[RepTable] = None, solubility_pmax: int = 20) -> Prediction:
    """Main term S(n) J_w(n/B^2) B^(k-6)."""
    n = tuple(int(v) for v in n)
    k = sys_.k
    flags: Dict[str, Any] = {}
    if k <= 6:
        flags["k_le_6"] = True
    if series == "euler":
        ss, factors = euler_series(sys_, n, Qmax, seed=seed)
        tail = abs(ss) * sum(1.0 / p ** 2 for p in range(Qmax + 1, 50 * Qmax))
        flags["primes"] = {str(p): f["kind"] for p, f in factors.items()}
    else:
        de = singular_series(sys_, n, Qmax, seed=seed)
        ss, tail = de.value, de.tail_bound
        flags["primes"] = {str(p): f.get("kind") for p, f in de.factors.items()}
    sol = {}
    for p in primes_upto(solubility_pmax):
        e = 3 if p == 2 else 1
        sol[str(p)] = count_N(sys_, n, p ** e).value > 0
    flags["locally_soluble"] = all(sol.values())
    flags["solubility"] = sol
    mu = np.array(n, dtype=float) / B ** 2
    if method == "oracle":
        J = singular_integral_oracle(sys_, mu, eps, w, samples=samples, seed=seed)
    elif method == "fourier":
        J = singular_integral(sys_, mu, R, w)
    else:
        raise InputError(f"unknown method {method!r}", "method")
    jv = float(np.real(J.value))
    main = ss * jv * B ** (k - 6)
    rb = truth.get(n) if truth is not None else None
    return Prediction(n, B, ss, tail, jv, J.est_error, main, rb, flags)


def predict_many(sys_, ns: Sequence[Sequence[int]], B: float, Qmax: int = 20,
                 w: Weight = Weight(), eps: float = 1e-2, samples: int = 1 << 22, seed: int = 0,
                 truth: Optional[RepTable] = None) -> List[Prediction]:
    """predict() for several n sharing one oracle sample set."""
    ns = [tuple(int(v) for v in n) for n in ns]
    k = sys_.k
    mus = np.array(ns, dtype=float) / B ** 2
    J = singular_integral_oracle(sys_, mus, eps, w, samples=samples, seed=seed)
    out = []
    for n, row in zip(ns, J.table):
        ss, factors = euler_series(sys_, n, Qmax, seed=seed)
        sol = {str(p): count_N(sys_, n, p ** (3 if p == 2 else 1)).value > 0 for p in primes_upto(20)}
        flags = {"primes": {str(p): f["kind"] for p, f in factors.items()},
                 "locally_soluble": all(sol.values()), "solubility": sol, "J_hits": row["hits"]}
        tail = abs(ss) * sum(1.0 / p ** 2 for p in range(Qmax + 1, 50 * Qmax))
        main = ss * row["J"] * B ** (k - 6)
        out.append(Prediction(n, B, ss, tail, row["J"], row["stderr"], main,
                              truth.get(n) if truth is not None else None, flags))
    return out


def exception_scan(sys_, B: float, window: Sequence[Tuple[int, int]], thresholds=(0.5, 1.0),
                   w: Weight = Weight(), Qmax: int = 10, eps: float = 1e-2,
                   samples: int = 1 << 20, seed: int = 0,
                   table: Optional[RepTable] = None) -> Dict[str, Any]:
    """Normalized discrepancies |R_B(n) - main(n)| / B^(k-6) over a window of n."""
    if len(window) != 3:
        raise InputError("window needs one (lo, hi) pair per coordinate", "window")
    k = sys_.k
    table = table if table is not None else count_reps(sys_, B, w)
    ns = [n for n in itertools.product(*[range(int(a), int(b) + 1) for a, b in window])]
    if table is not None and len(table):
        lo, hi = table.keys.min(axis=0), table.keys.max(axis=0)
        ns = [n for n in ns if all(lo[j] <= n[j] <= hi[j] for j in range(3))]
    records = []
    if ns:
        preds = predict_many(sys_, ns, B, Qmax, w, eps, samples, seed, table)
        for pr in preds:
            if pr.main_term == 0:
                continue
            d = (pr.R_B - pr.main_term) / B ** (k - 6)
            records.append({"n": list(pr.n), "R_B": pr.R_B, "prediction": pr.main_term,
                            "discrepancy": d})
    ms = float(np.mean([r["discrepancy"] ** 2 for r in records])) if records else 0.0
    frac = {str(t): (float(np.mean([abs(r["discrepancy"]) > t for r in records])) if records else 0.0)
            for t in thresholds}
    out = {"B": B, "window": [list(map(int, wn)) for wn in window], "count": len(records),
           "mean_square": ms, "fraction_above": frac, "records": records}
    if k <= 6:
        # local densities need not converge here, n = 0 in particular
        out["note"] = f"k={k} <= 6: the main term is not expected to be meaningful"
    return out


def report_roundtrip(report: Dict[str, Any]) -> Dict[str, Any]:
    return json.loads(json.dumps(report))
