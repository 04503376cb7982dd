"""Systems of three integral quadratic forms: validation, the determinant form,
nonsingularity certification, prime classification and Jacobian minors.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import exactpoly as ep
from .errors import InputError
from .ffield import GF, batch_null_vector, rank_mod_p
from .primes import prime_stream

VARS = ("x", "y", "z")


@dataclass(frozen=True)
class QuadForm:
    matrix: Tuple[Tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.matrix)

    @cached_property
    def array(self) -> np.ndarray:
        return np.array(self.matrix, dtype=np.int64)

    @cached_property
    def norm(self) -> float:
        """sup of |Q(x)| over the Euclidean unit sphere."""
        return float(np.max(np.abs(np.linalg.eigvalsh(self.array.astype(float)))))

    def __call__(self, x):
        x = np.asarray(x)
        return np.einsum("...i,ij,...j->...", x, self.array, x)


class TripleSystem:
    """Three symmetric integer k x k matrices Q1, Q2, Q3 with k >= 4."""

    def __init__(self, mats, name: str = ""):
        arr = _validate(mats)
        self.Q = arr
        self.k = arr.shape[1]
        self.forms = tuple(QuadForm(tuple(tuple(int(v) for v in row) for row in m)) for m in arr)
        self.name = name
        self._cache: Dict[Any, Any] = {}

    def __repr__(self):
        return f"TripleSystem(k={self.k}{', ' + self.name if self.name else ''})"

    @cached_property
    def F(self) -> ep.IntPoly:
        return ep.det_pencil([m.tolist() for m in self.Q], VARS)

    @cached_property
    def partials(self) -> Tuple[ep.IntPoly, ep.IntPoly, ep.IntPoly]:
        return tuple(ep.partial(self.F, v) for v in VARS)

    @cached_property
    def norm(self) -> float:
        return max(f.norm for f in self.forms)

    def values(self, x) -> np.ndarray:
        """(Q1(x), Q2(x), Q3(x)) for x of shape (..., k)."""
        x = np.asarray(x)
        return np.einsum("...i,sij,...j->...s", x, self.Q.astype(x.dtype) if x.dtype != object
                         else self.Q.astype(object), x)

    def pencil(self, lam: Sequence) -> np.ndarray:
        lam = [l if isinstance(l, (int, Fraction)) else int(l) for l in lam]
        out = np.zeros((self.k, self.k), dtype=object)
        for l, m in zip(lam, self.Q):
            out = out + l * m.astype(object)
        return out

    def transformed(self, U: Sequence[Sequence[int]]) -> "TripleSystem":
        """The system whose determinant form is F(U v): Q'_j = sum_i U[i][j] Q_i."""
        U = np.array(U, dtype=np.int64)
        mats = np.einsum("ij,ikl->jkl", U, self.Q)
        return TripleSystem(mats, name=f"{self.name}*U" if self.name else "")

    def is_diagonal(self) -> bool:
        off = self.Q.copy()
        for m in off:
            np.fill_diagonal(m, 0)
        return not off.any()

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "Q": self.Q.tolist()})


def _validate(mats) -> np.ndarray:
    if not isinstance(mats, (list, tuple, np.ndarray)) or len(mats) != 3:
        raise InputError("expected exactly three matrices", "Q")
    rows = []
    k = None
    for s, m in enumerate(mats):
        if not isinstance(m, (list, tuple, np.ndarray)):
            raise InputError("matrix must be a list of rows", f"Q[{s}]")
        if k is None:
            k = len(m)
        if len(m) != k:
            raise InputError(f"size {len(m)} differs from {k}", f"Q[{s}]")
        mat = []
        for i, row in enumerate(m):
            if not isinstance(row, (list, tuple, np.ndarray)) or len(row) != k:
                raise InputError(f"row must have {k} entries", f"Q[{s}][{i}]")
            r = []
            for j, v in enumerate(row):
                if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                    if isinstance(v, float) and v.is_integer():
                        v = int(v)
                    else:
                        raise InputError(f"entry {v!r} is not an integer", f"Q[{s}][{i}][{j}]")
                r.append(int(v))
            mat.append(r)
        rows.append(mat)
    arr = np.array(rows, dtype=np.int64)
    for s in range(3):
        bad = np.argwhere(arr[s] != arr[s].T)
        if bad.size:
            i, j = bad[0]
            raise InputError("matrix is not symmetric", f"Q[{s}][{i}][{j}]")
    if k < 4:
        raise InputError(f"k={k}; at least 4 variables are required", "k")
    return arr


def load_system(spec: Union[str, bytes, Dict]) -> TripleSystem:
    """Build a TripleSystem from JSON text (or an already parsed dict)."""
    if isinstance(spec, (str, bytes)):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON ({exc.msg})", "") from None
    if not isinstance(spec, dict) or "Q" not in spec:
        raise InputError("missing field", "Q")
    sys_ = TripleSystem(spec["Q"], name=str(spec.get("name", "")))
    if "k" in spec and int(spec["k"]) != sys_.k:
        raise InputError(f"declared k={spec['k']} but matrices are {sys_.k}x{sys_.k}", "k")
    return sys_


# ---------------------------------------------------------------------------
# reference systems

def band_system(k: int = 10) -> TripleSystem:
    Q1 = np.eye(k, dtype=np.int64)
    Q2 = np.diag(np.arange(1, k + 1))
    Q3 = np.eye(k, dtype=np.int64) + np.eye(k, k, 1, dtype=np.int64) + np.eye(k, k, -1, dtype=np.int64)
    return TripleSystem([Q1, Q2, Q3], name="band")


def four_lines_system() -> TripleSystem:
    return TripleSystem([np.diag([0, 0, 1, 1]), np.diag([1, 1, 1, 0]), np.diag([1, 2, 1, 1])],
                        name="four-lines")


def random_system(k: int, seed: int = 0, kind: str = "tridiagonal", height: int = 2) -> TripleSystem:
    """Random integral system; `kind` is tridiagonal, dense or diagonal."""
    rng = np.random.default_rng(seed)
    mats = []
    for _ in range(3):
        if kind == "diagonal":
            m = np.diag(rng.integers(-height, height + 1, k))
        else:
            m = rng.integers(-height, height + 1, (k, k))
            m = np.triu(m)
            m = m + np.triu(m, 1).T
            if kind == "tridiagonal":
                m = np.triu(np.tril(m, 1), -1)
                if len(mats) == 2:
                    # keep the band connected: a block-diagonal system has reducible F
                    sup = np.diagonal(m, 1).copy()
                    sup[sup == 0] = rng.choice([-1, 1], int((sup == 0).sum()))
                    idx = np.arange(k - 1)
                    m[idx, idx + 1] = m[idx + 1, idx] = sup
        mats.append(m)
    return TripleSystem(mats, name=f"random-{kind}-{k}-{seed}")


# ---------------------------------------------------------------------------
# certification

@dataclass
class Cond2Certificate:
    status: str
    witness: Optional[Tuple] = None
    evidence: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"status": self.status,
                "witness": None if self.witness is None else [str(v) for v in self.witness],
                "evidence": self.evidence}


class _Frame:
    """F in a coordinate frame v -> U v, with lazily computed resultant-chain pieces."""

    def __init__(self, sys_: TripleSystem, U):
        self.U = [list(r) for r in U]
        self.sys = sys_ if U == IDENTITY3 else sys_.transformed(U)
        self.k = sys_.k
        self._R: Dict[str, ep.IntPoly] = {}
        self._z0: Optional[int] = None

    @property
    def F(self) -> ep.IntPoly:
        return self.sys.F

    @property
    def D(self) -> int:
        return (self.k - 1) ** 2

    def exact(self, which: str) -> ep.IntPoly:
        if which not in self._R:
            Fx, Fy, Fz = self.sys.partials
            other = Fy if which == "R1" else Fz
            self._R[which] = ep.resultant(Fx, other, "x", self.k - 1, self.k - 1)
        return self._R[which]

    def chain_mod_p(self, p: int) -> int:
        Fx, Fy, Fz = self.sys.partials
        kk = self.k - 1
        R1 = ep.resultant_mod_p(Fx, Fy, "x", p, kk, kk, exact=self._R.get("R1"))
        R2 = ep.resultant_mod_p(Fx, Fz, "x", p, kk, kk, exact=self._R.get("R2"))
        a = _binary(R1, self.D)
        b = _binary(R2, self.D)
        return ep.resultant_value_mod_p(a, b, p, self.D, self.D)

    def chain_exact(self, workers: int = 1) -> int:
        a = _binary(self.exact("R1"), self.D)
        b = _binary(self.exact("R2"), self.D)
        return ep.resultant_value(a, b, self.D, self.D, workers=workers)

    def z0_value(self) -> int:
        """Res_x of the two partials of det(x Q1' + y Q2') at y = 1, exact."""
        if self._z0 is None:
            G = ep.IntPoly(VARS, {e: c for e, c in self.F.terms.items() if e[2] == 0})
            a = ep.univariate_coeffs(ep.partial(G, "x"), "x", {"y": 1})
            b = ep.univariate_coeffs(ep.partial(G, "y"), "x", {"y": 1})
            kk = self.k - 1
            a = a + [0] * (kk + 1 - len(a))
            b = b + [0] * (kk + 1 - len(b))
            self._z0 = ep.resultant_value(a, b, kk, kk)
        return self._z0

    def corner_partials(self) -> Tuple[int, int, int]:
        return tuple(ep.eval_poly(P, (1, 0, 0)) for P in self.sys.partials)


IDENTITY3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def _binary(R, D: int) -> List[int]:
    """Coefficients in y (low to high) of a form in (y, z) of degree D, z set to 1."""
    out = [0] * (D + 1)
    for e, c in R.terms.items():
        out[e[1]] += c
    return out


def _unimodular(rng: random.Random) -> List[List[int]]:
    L = [[1, 0, 0], [rng.randint(-3, 3), 1, 0], [rng.randint(-3, 3), rng.randint(-3, 3), 1]]
    Up = [[1, rng.randint(-3, 3), rng.randint(-3, 3)], [0, 1, rng.randint(-3, 3)], [0, 0, 1]]
    M = [[sum(L[i][t] * Up[t][j] for t in range(3)) for j in range(3)] for i in range(3)]
    perm = rng.sample(range(3), 3)
    return [M[i] for i in perm]


def _frames(sys_: TripleSystem, count: int, seed: int) -> List[_Frame]:
    key = ("frames", seed)
    frames = sys_._cache.setdefault(key, [])
    rng = random.Random(f"frames:{seed}")
    mats = [IDENTITY3] + [_unimodular(rng) for _ in range(count - 1)]
    while len(frames) < count:
        frames.append(_Frame(sys_, mats[len(frames)]))
    return frames[:count]


def find_rational_witness(sys_: TripleSystem, height: int = 3) -> Optional[Tuple[int, int, int]]:
    """A small integer projective point where F and all partials vanish, if one exists."""
    if sys_.is_diagonal():
        lines = [tuple(int(sys_.Q[s, i, i]) for s in range(3)) for i in range(sys_.k)]
        for L in lines:
            if not any(L):
                return (1, 0, 0)
        for L1, L2 in itertools.combinations(lines, 2):
            w = _cross(L1, L2)
            if any(w):
                return _primitive(w)
        # all lines proportional: any point on the common line
        L = lines[0]
        w = _cross(L, (1, 0, 0)) if any(_cross(L, (1, 0, 0))) else _cross(L, (0, 1, 0))
        return _primitive(w)
    polys = (sys_.F,) + sys_.partials
    rng = range(-height, height + 1)
    for pt in itertools.product(rng, repeat=3):
        if not any(pt) or _primitive(pt) != pt:
            continue
        if all(ep.eval_poly(P, pt) == 0 for P in polys):
            return pt
    return None


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def _primitive(v):
    g = 0
    for t in v:
        g = gcd(g, int(t))
    v = tuple(int(t) // g for t in v) if g else tuple(v)
    for t in v:
        if t:
            return v if t > 0 else tuple(-s for s in v)
    return v


def certify_cond2(sys_: TripleSystem, mode: str = "fast-modular", nprimes: int = 3, seed: int = 0,
                  frames: int = 3, workers: int = 1) -> Cond2Certificate:
    """Decide projective nonsingularity of F = det(x Q1 + y Q2 + z Q3) = 0."""
    if mode not in ("fast-modular", "exact-long"):
        raise InputError(f"unknown mode {mode!r}", "mode")
    evidence: Dict[str, Any] = {"mode": mode, "frames": []}
    if nprimes < 1:
        raise InputError("need at least one prime", "nprimes")
    for fr in _frames(sys_, frames, seed):
        info: Dict[str, Any] = {"U": fr.U}
        Fx, Fy, Fz = fr.sys.partials
        kk = sys_.k - 1
        info["lc_x"] = [str(ep.univariate_coeffs(P, "x", {"y": 1, "z": 1})[kk])
                        if P.degree("x") == kk else "0" for P in (Fx, Fy, Fz)]
        corner = fr.corner_partials()
        info["corner_partials"] = [str(v) for v in corner]
        z0 = fr.z0_value()
        info["z0_resultant_nonzero"] = z0 != 0
        info["z0_resultant_bits"] = abs(z0).bit_length()
        z0_ok = z0 != 0 and any(corner)
        chain_nonzero = False
        if mode == "fast-modular":
            primes = []
            for p in itertools.islice(prime_stream(lo=1 << 29, seed=seed), nprimes):
                c = fr.chain_mod_p(p)
                primes.append({"p": p, "chain_mod_p": c})
                chain_nonzero = chain_nonzero or c != 0
            info["primes"] = primes
        else:
            c = fr.chain_exact(workers=workers)
            info["chain_exact_bits"] = abs(c).bit_length()
            info["chain_exact_sign"] = (c > 0) - (c < 0)
            info["chain_exact_mod_1e9+7"] = c % 1000000007
            chain_nonzero = c != 0
        info["chain_degree_in_z"] = ((sys_.k - 1) ** 2) ** 2
        evidence["frames"].append(info)
        if chain_nonzero and z0_ok:
            return Cond2Certificate("certified-nonsingular", None, evidence)
    w = find_rational_witness(sys_)
    if w is not None:
        evidence["witness_check"] = "F and all partials vanish exactly"
        return Cond2Certificate("singular-with-witness", w, evidence)
    return Cond2Certificate("inconclusive", None, evidence)


# ---------------------------------------------------------------------------
# ranks and minors

def rank_pencil(sys_: TripleSystem, lam: Sequence, field: Union[str, int] = "Q") -> int:
    if not any(lam):
        raise InputError("lambda must be nonzero", "lambda")
    if field in ("Q", "rationals", None):
        fr = [Fraction(l) for l in lam]
        den = 1
        for f in fr:
            den = den * f.denominator // gcd(den, f.denominator)
        ints = [int(f * den) for f in fr]
        return rank_integer(sys_.pencil(ints))
    p = int(field)
    if all(int(l) % p == 0 for l in lam):
        raise InputError(f"lambda vanishes mod {p}", "lambda")
    return rank_mod_p(sys_.pencil([int(l) for l in lam]), p)


def rank_integer(M) -> int:
    """Rank over Q by fraction-free elimination."""
    A = [[int(v) for v in row] for row in M]
    rows, cols = len(A), len(A[0]) if A else 0
    r = 0
    prev = 1
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i][c]), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        for i in range(r + 1, rows):
            for j in range(c + 1, cols):
                A[i][j] = (A[i][j] * A[r][c] - A[i][c] * A[r][j]) // prev
            A[i][c] = 0
        prev = A[r][c]
        r += 1
        if r == rows:
            break
    return r


@dataclass
class JacobianMinors:
    x: Tuple[int, ...]
    values: Dict[Tuple[int, int, int], int]

    def minor(self, i: int, j: int, l: int) -> int:
        idx = (i, j, l)
        if len(set(idx)) < 3:
            return 0
        order = sorted(range(3), key=lambda t: idx[t])
        sign = _perm_sign(order)
        return sign * self.values[tuple(sorted(idx))]


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    perm = list(perm)
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def jacobian_minors(sys_: TripleSystem, x: Sequence[int]) -> JacobianMinors:
    xv = np.array([int(t) for t in x], dtype=object)
    rows = [2 * (sys_.Q[s].astype(object) @ xv) for s in range(3)]
    vals = {}
    for cols in itertools.combinations(range(sys_.k), 3):
        m = [[rows[s][c] for c in cols] for s in range(3)]
        vals[cols] = ep.det_bareiss(m)
    return JacobianMinors(tuple(int(t) for t in x), vals)


# ---------------------------------------------------------------------------
# forms over finite fields

def _plane_points(F: GF):
    """Projective plane over F as three charts: (1,b,c), (0,1,c), (0,0,1)."""
    els = F.elements()
    q = F.q
    one = F.const(1, (q * q,))
    b = (np.repeat(els[0], q), np.repeat(els[1], q))
    c = (np.tile(els[0], q), np.tile(els[1], q))
    chart1 = (one, b, c)
    chart2 = (F.const(0, (q,)), F.const(1, (q,)), els)
    chart3 = (F.const(0, (1,)), F.const(0, (1,)), F.const(1, (1,)))
    return [chart1, chart2, chart3]


def eval_form(F: GF, P: ep.IntPoly, pts) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate an integer ternary polynomial at field points (pairs of arrays per coordinate)."""
    shape = pts[0][0].shape
    maxdeg = [max(P.degree(v), 0) for v in VARS]
    powers = []
    for i in range(3):
        pw = [F.const(1, shape)]
        for _ in range(maxdeg[i]):
            pw.append(F.mul(pw[-1], pts[i]))
        powers.append(pw)
    acc = F.const(0, shape)
    for e, c in P.terms.items():
        t = F.mul(F.mul(powers[0][e[0]], powers[1][e[1]]), powers[2][e[2]])
        acc = F.add(acc, F.scale(t, c % F.p))
    return acc


def _eval_chart1(F: GF, P: ep.IntPoly) -> Tuple[np.ndarray, np.ndarray]:
    """P(1, b, c) for all (b, c) in F^2, flattened with c varying fastest."""
    els = F.elements()
    q = F.q
    dy, dz = max(P.degree("y"), 0), max(P.degree("z"), 0)
    bp = [F.const(1, (q,))]
    for _ in range(dy):
        bp.append(F.mul(bp[-1], els))
    cp = [F.const(1, (q,))]
    for _ in range(dz):
        cp.append(F.mul(cp[-1], els))
    G = {}
    for e, c in P.terms.items():
        t = F.scale(bp[e[1]], c % F.p)
        G[e[2]] = F.add(G[e[2]], t) if e[2] in G else t
    acc = F.const(0, (q, q))
    for l, g in G.items():
        acc = F.add(acc, F.mul((g[0][:, None], g[1][:, None]), (cp[l][0][None, :], cp[l][1][None, :])))
    return acc[0].reshape(-1), acc[1].reshape(-1)


def _chart_values(F: GF, P: ep.IntPoly, ci: int, chart):
    if ci == 0:
        return _eval_chart1(F, P)
    return eval_form(F, P, chart)


def _field_points_of(F: GF, P: ep.IntPoly, extra: Sequence[ep.IntPoly] = ()):
    """Points of P^2(F) where P and all `extra` vanish, as a list of index-ordered triples."""
    out = []
    for ci, chart in enumerate(_plane_points(F)):
        mask = F.is_zero(_chart_values(F, P, ci, chart))
        for Q in extra:
            if not mask.any():
                break
            sub = tuple((c[0][mask], c[1][mask]) for c in chart)
            m2 = F.is_zero(eval_form(F, Q, sub))
            idx = np.nonzero(mask)[0]
            mask = np.zeros_like(mask)
            mask[idx[m2]] = True
        idx = np.nonzero(mask)[0]
        for i in idx:
            out.append(tuple((int(c[0][i]), int(c[1][i])) for c in chart))
    return out


def _curve_points(F: GF, P: ep.IntPoly):
    """Points of P = 0 in P^2(F), returned as three coordinate pairs of arrays."""
    parts = [([], []) for _ in range(3)]
    for ci, chart in enumerate(_plane_points(F)):
        mask = F.is_zero(_chart_values(F, P, ci, chart))
        for i in range(3):
            parts[i][0].append(chart[i][0][mask])
            parts[i][1].append(chart[i][1][mask])
    return tuple((np.concatenate(a), np.concatenate(b)) for a, b in parts)


# ---------------------------------------------------------------------------
# prime classification

@dataclass
class PrimeClass:
    p: int
    kind: str
    n: Optional[Tuple[int, int, int]] = None
    witness: Optional[Dict[str, Any]] = None
    notes: List[str] = field(default_factory=list)

    @property
    def good(self) -> bool:
        return self.kind != "Bad"

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "kind": self.kind, "n": list(self.n) if self.n else None,
                "witness": self.witness, "notes": self.notes}


class PencilRankError(RuntimeError):
    """A pencil member over F_p has corank >= 2 at a prime presumed good."""


def prime_badness(sys_: TripleSystem, p: int, seed: int = 0, frames: int = 3) -> Tuple[bool, Dict]:
    """(is_bad, info). Cached per system and prime."""
    key = ("bad", p)
    if key in sys_._cache:
        return sys_._cache[key]
    info: Dict[str, Any] = {}
    if p == 2:
        res = (True, {"reason": "p = 2"})
        sys_._cache[key] = res
        return res
    quick = _field_points_of(GF(p, 1), sys_.F, sys_.partials)
    if quick:
        res = (True, {"reason": "singular point of F over F_p", "witness": {"ext": 1, "point": quick[0]}})
        sys_._cache[key] = res
        return res
    for fr in _frames(sys_, frames, seed):
        if p <= fr.D + 1:
            # too few points to interpolate mod p: reduce the exact (cached) resultants
            fr.exact("R1")
            fr.exact("R2")
        c = fr.chain_mod_p(p)
        z0 = fr.z0_value() % p
        corner = [v % p for v in fr.corner_partials()]
        if c and z0 and any(corner):
            res = (False, {"reason": "chain nonzero mod p", "U": fr.U})
            sys_._cache[key] = res
            return res
    info["reason"] = "resultant chain vanishes mod p in every frame"
    for ext in (1, 2):
        Fq = GF(p, ext)
        pts = _field_points_of(Fq, sys_.F, sys_.partials)
        if pts:
            info["witness"] = {"ext": ext, "point": pts[0]}
            break
    else:
        info["witness"] = None
        info["note"] = "no singular point found over F_p or F_p^2; classified Bad conservatively"
    res = (True, info)
    sys_._cache[key] = res
    return res


def singular_fiber_scan(sys_: TripleSystem, n: Sequence[int], p: int, ext: int = 2,
                        check_good: bool = True) -> Optional[Dict[str, Any]]:
    """Look for x != 0 or x = 0 over F_{p^ext} with Q(x) = n and a dependent Jacobian.

    Returns a witness dict or None. Raises PencilRankError when some lambda on the curve
    has a null space of dimension >= 2.
    """
    if p == 2:
        raise InputError("p = 2 is always bad", "p")
    if check_good and prime_badness(sys_, p)[0]:
        raise InputError(f"p = {p} is bad for this system", "p")
    n = tuple(int(v) % p for v in n)
    if not any(n):
        return {"x": [0] * sys_.k, "lambda": None, "ext": ext, "reason": "n = 0 mod p, x = 0"}
    F = GF(p, ext)
    lam = _curve_points(F, sys_.F)
    N = lam[0][0].shape[0]
    if N == 0:
        return None
    k = sys_.k
    Q = sys_.Q % p
    Ma = np.zeros((N, k, k), dtype=np.int64)
    Mb = np.zeros((N, k, k), dtype=np.int64)
    for s in range(3):
        Ma = (Ma + lam[s][0][:, None, None] * Q[s][None]) % p
        Mb = (Mb + lam[s][1][:, None, None] * Q[s][None]) % p
    (xa, xb), rank = batch_null_vector(F, (Ma, Mb))
    if (rank < k - 1).any():
        i = int(np.nonzero(rank < k - 1)[0][0])
        raise PencilRankError(f"pencil member of rank {int(rank[i])} over F_{p}^{ext}")
    # v_s = x0^T Q_s x0
    v = []
    for s in range(3):
        ya = (np.einsum("ij,nj->ni", Q[s], xa) % p, np.einsum("ij,nj->ni", Q[s], xb) % p)
        prod = F.mul((xa, xb), ya)
        v.append((prod[0].sum(axis=1) % p, prod[1].sum(axis=1) % p))
    nn = [F.const(t, (N,)) for t in n]
    # proportionality v x n = 0 and v != 0
    ok = np.ones(N, dtype=bool)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        d = F.sub(F.mul(v[i], nn[j]), F.mul(v[j], nn[i]))
        ok &= F.is_zero(d)
    nonzero = ~(F.is_zero(v[0]) & F.is_zero(v[1]) & F.is_zero(v[2]))
    ok &= nonzero
    if not ok.any():
        return None
    # s = n_i / v_i must be a nonzero square in F
    i0 = next(i for i in range(3) if n[i])
    s = F.mul(nn[i0], F.inv(v[i0]))
    sq = F.is_square(s) & ok & ~F.is_zero(v[i0])
    hits = np.nonzero(sq)[0]
    if hits.size == 0:
        return None
    h = int(hits[0])
    t = F.sqrt_one(int(s[0][h]), int(s[1][h]))
    x = [(int(xa[h, j]), int(xb[h, j])) for j in range(k)]
    if t is not None:
        xt = F.mul((xa[h], xb[h]), (np.full(k, t[0]), np.full(k, t[1])))
        x = [(int(xt[0][j]), int(xt[1][j])) for j in range(k)]
    lam_h = [(int(lam[s_][0][h]), int(lam[s_][1][h])) for s_ in range(3)]
    if ext == 1:
        x = [a for a, _ in x]
        lam_h = [a for a, _ in lam_h]
    return {"x": x, "lambda": lam_h, "ext": ext, "reason": "lambda.Q x = 0 and Q(x) = n"}


def classify_prime(sys_: TripleSystem, p: int, n: Sequence[int] = (0, 0, 0), ext: int = 2,
                   seed: int = 0) -> PrimeClass:
    n = tuple(int(v) for v in n)
    key = ("class", p, tuple(v % p for v in n), ext)
    if key in sys_._cache:
        return sys_._cache[key]
    bad, info = prime_badness(sys_, p, seed=seed)
    if bad:
        pc = PrimeClass(p, "Bad", n, info.get("witness"), [info.get("reason", "")])
    else:
        try:
            w = singular_fiber_scan(sys_, n, p, ext, check_good=False)
        except PencilRankError as exc:
            pc = PrimeClass(p, "Bad", n, None, [f"reclassified: {exc}"])
        else:
            pc = PrimeClass(p, "GoodTypeII" if w else "GoodTypeI", n, w)
            if not w:
                pc.notes.append(f"no singular fiber point over F_{p}^{ext}")
    sys_._cache[key] = pc
    return pc


def fiber_smooth_mod_p(sys_: TripleSystem, n: Sequence[int], p: int) -> bool:
    """True when every F_p-point of Q(x) = n mod p has a Jacobian of rank 3 (good p only)."""
    if p == 2 or prime_badness(sys_, p)[0]:
        return False
    try:
        return singular_fiber_scan(sys_, n, p, 1, check_good=False) is None
    except PencilRankError:
        return False
