"""Exact multivariate integer polynomials, determinant pencils and resultants.

Large computations (determinants of polynomial matrices, resultants) go through
evaluation at points modulo word-size primes, univariate interpolation and
Chinese remaindering against a rigorous coefficient bound.
"""

from __future__ import annotations

import re
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .primes import prime_stream

Exp = Tuple[int, ...]


class PolyError(ValueError):
    pass


class IntPoly:
    """Sparse polynomial with integer coefficients in a fixed tuple of variables."""

    __slots__ = ("vars", "terms")

    def __init__(self, vars: Sequence[str], terms: Optional[Dict[Exp, int]] = None):
        self.vars = tuple(vars)
        clean: Dict[Exp, int] = {}
        if terms:
            nv = len(self.vars)
            for e, c in terms.items():
                e = tuple(int(v) for v in e)
                if len(e) != nv:
                    raise PolyError(f"exponent {e} does not match vars {self.vars}")
                c = int(c)
                if c:
                    clean[e] = clean.get(e, 0) + c
                    if clean[e] == 0:
                        del clean[e]
        self.terms = clean

    # construction helpers
    @classmethod
    def const(cls, vars: Sequence[str], c: int) -> "IntPoly":
        return cls(vars, {(0,) * len(vars): c})

    @classmethod
    def var(cls, vars: Sequence[str], name: str) -> "IntPoly":
        e = [0] * len(vars)
        e[list(vars).index(name)] = 1
        return cls(vars, {tuple(e): 1})

    def _like(self, terms: Dict[Exp, int]) -> "IntPoly":
        out = IntPoly.__new__(IntPoly)
        out.vars = self.vars
        out.terms = {e: c for e, c in terms.items() if c}
        return out

    def _check(self, other: "IntPoly") -> None:
        if self.vars != other.vars:
            raise PolyError(f"variable mismatch {self.vars} vs {other.vars}")

    def __add__(self, other):
        if isinstance(other, int):
            other = IntPoly.const(self.vars, other)
        self._check(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return self._like(t)

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return self._like({e: c * other for e, c in self.terms.items()})
        self._check(other)
        t: Dict[Exp, int] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return self._like(t)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = IntPoly.const(self.vars, 1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, int):
            other = IntPoly.const(self.vars, other)
        return isinstance(other, IntPoly) and self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def __repr__(self):
        return f"IntPoly({self.vars}, {to_text(self)!r})"

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self, var: Optional[str] = None) -> int:
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        i = self._index(var)
        return max(e[i] for e in self.terms)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def _index(self, var: str) -> int:
        try:
            return self.vars.index(var)
        except ValueError:
            raise PolyError(f"unknown variable {var!r}; have {self.vars}") from None

    def content(self) -> int:
        from math import gcd
        g = 0
        for c in self.terms.values():
            g = gcd(g, c)
        return g

    def norm1(self) -> int:
        return sum(abs(c) for c in self.terms.values())

    def coeff(self, exp: Sequence[int]) -> int:
        return self.terms.get(tuple(exp), 0)

    def coeffs_in(self, var: str) -> Dict[int, "IntPoly"]:
        """Split as sum over d of (coefficient polynomial) * var^d; coefficients keep all vars."""
        i = self._index(var)
        out: Dict[int, Dict[Exp, int]] = {}
        for e, c in self.terms.items():
            d = e[i]
            e2 = e[:i] + (0,) + e[i + 1:]
            out.setdefault(d, {})[e2] = c
        return {d: self._like(t) for d, t in out.items()}

    def substitute_linear(self, mat: Sequence[Sequence[int]]) -> "IntPoly":
        """Return P(M v), i.e. variable i replaced by sum_j mat[i][j] * v_j."""
        lin = []
        for row in mat:
            t = {}
            for j, a in enumerate(row):
                if a:
                    e = [0] * len(self.vars)
                    e[j] = 1
                    t[tuple(e)] = a
            lin.append(self._like(t))
        out = IntPoly(self.vars)
        for e, c in self.terms.items():
            m = IntPoly.const(self.vars, c)
            for i, k in enumerate(e):
                if k:
                    m = m * lin[i] ** k
            out = out + m
        return out

    def reduce(self, p: int) -> "ModPoly":
        return ModPoly(self.vars, self.terms, p)


class ModPoly:
    """Polynomial with coefficients in Z/pZ, same layout as IntPoly."""

    __slots__ = ("vars", "terms", "p")

    def __init__(self, vars: Sequence[str], terms: Dict[Exp, int], p: int):
        self.vars = tuple(vars)
        self.p = int(p)
        self.terms = {tuple(e): c % self.p for e, c in terms.items() if c % self.p}

    def __eq__(self, other):
        return (isinstance(other, ModPoly) and self.p == other.p and self.vars == other.vars
                and self.terms == other.terms)

    def __repr__(self):
        return f"ModPoly({self.vars}, p={self.p}, {len(self.terms)} terms)"

    def lift(self) -> IntPoly:
        return IntPoly(self.vars, self.terms)

    def eval(self, point: Sequence[int]) -> int:
        return eval_poly(self.lift(), point, self.p)


# ---------------------------------------------------------------------------
# text form

def _mono_text(vars: Sequence[str], e: Exp) -> str:
    parts = []
    for v, k in zip(vars, e):
        if k == 1:
            parts.append(v)
        elif k > 1:
            parts.append(f"{v}^{k}")
    return "*".join(parts)


def grlex_key(e: Exp) -> Tuple:
    return (sum(e), e)


def to_text(P: IntPoly) -> str:
    """Canonical form: graded-lex descending terms, explicit integer coefficients."""
    if not P.terms:
        return "0"
    out = []
    for e in sorted(P.terms, key=grlex_key, reverse=True):
        c = P.terms[e]
        m = _mono_text(P.vars, e)
        body = f"{abs(c)}*{m}" if m else f"{abs(c)}"
        if not out:
            out.append(("-" if c < 0 else "") + body)
        else:
            out.append((" - " if c < 0 else " + ") + body)
    return "".join(out)


_TERM = re.compile(r"\s*([+-])?\s*(\d+)((?:\*[A-Za-z_]\w*(?:\^\d+)?)*)\s*")


def from_text(text: str, vars: Sequence[str]) -> IntPoly:
    vars = tuple(vars)
    text = text.strip()
    if text == "0":
        return IntPoly(vars)
    terms: Dict[Exp, int] = {}
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise PolyError(f"cannot parse polynomial near {text[pos:pos + 20]!r}")
        sign = -1 if m.group(1) == "-" else 1
        e = [0] * len(vars)
        for factor in filter(None, m.group(3).split("*")):
            name, _, k = factor.partition("^")
            if name not in vars:
                raise PolyError(f"unknown variable {name!r}")
            e[vars.index(name)] += int(k or 1)
        terms[tuple(e)] = terms.get(tuple(e), 0) + sign * int(m.group(2))
        pos = m.end()
    return IntPoly(vars, terms)


# ---------------------------------------------------------------------------
# basic operations

def partial(P: IntPoly, var: str) -> IntPoly:
    i = P._index(var)
    t = {}
    for e, c in P.terms.items():
        if e[i]:
            e2 = list(e)
            e2[i] -= 1
            t[tuple(e2)] = c * e[i]
    return P._like(t)


def eval_poly(P: IntPoly, point: Sequence[int], modulus: Optional[int] = None) -> int:
    if len(point) != len(P.vars):
        raise PolyError(f"point has {len(point)} coordinates, polynomial has {len(P.vars)} vars")
    total = 0
    if modulus is None:
        for e, c in P.terms.items():
            m = c
            for a, k in zip(point, e):
                if k:
                    m *= a ** k
            total += m
        return total
    q = int(modulus)
    pt = [int(a) % q for a in point]
    for e, c in P.terms.items():
        m = c % q
        for a, k in zip(pt, e):
            if k:
                m = m * pow(a, k, q) % q
        total += m
    return total % q


# ---------------------------------------------------------------------------
# modular linear algebra and interpolation

def det_mod_p(M, p: int) -> int:
    """Determinant of a square integer matrix modulo a prime p."""
    n = len(M)
    if n == 0:
        return 1 % p
    if p < (1 << 31):
        A = np.array(M, dtype=object) % p
        A = A.astype(np.int64)
        det = 1
        for c in range(n):
            nz = np.nonzero(A[c:, c])[0]
            if nz.size == 0:
                return 0
            r = c + int(nz[0])
            if r != c:
                A[[c, r]] = A[[r, c]]
                det = -det
            piv = int(A[c, c])
            det = det * piv % p
            inv = pow(piv, -1, p)
            if c + 1 < n:
                f = (A[c + 1:, c] * inv) % p
                A[c + 1:, c:] = (A[c + 1:, c:] - (f[:, None] * A[c, c:][None, :]) % p) % p
        return det % p
    A = [[int(v) % p for v in row] for row in M]
    det = 1
    for c in range(n):
        r = next((i for i in range(c, n) if A[i][c]), None)
        if r is None:
            return 0
        if r != c:
            A[c], A[r] = A[r], A[c]
            det = -det
        piv = A[c][c]
        det = det * piv % p
        inv = pow(piv, -1, p)
        for i in range(c + 1, n):
            f = A[i][c] * inv % p
            if f:
                rowc = A[c]
                A[i] = [(a - f * b) % p for a, b in zip(A[i], rowc)]
    return det % p


def det_bareiss(M) -> int:
    """Exact integer determinant by fraction-free elimination."""
    A = [[int(v) for v in row] for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for c in range(n - 1):
        if A[c][c] == 0:
            r = next((i for i in range(c + 1, n) if A[i][c]), None)
            if r is None:
                return 0
            A[c], A[r] = A[r], A[c]
            sign = -sign
        for i in range(c + 1, n):
            for j in range(c + 1, n):
                A[i][j] = (A[i][j] * A[c][c] - A[i][c] * A[c][j]) // prev
        prev = A[c][c]
    return sign * A[n - 1][n - 1]


def interpolate_mod_p(xs: Sequence[int], ys: Sequence[int], p: int) -> List[int]:
    """Coefficients (low to high) of the polynomial through (xs, ys) over F_p (Newton form)."""
    n = len(xs)
    dd = [y % p for y in ys]
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) * pow(xs[i] - xs[i - j], -1, p) % p
    coef = [0] * n
    for i in range(n - 1, -1, -1):
        # coef <- coef * (x - xs[i]) + dd[i]
        new = [0] * n
        for j in range(n - 1):
            if coef[j]:
                new[j + 1] = (new[j + 1] + coef[j]) % p
                new[j] = (new[j] - coef[j] * xs[i]) % p
        new[0] = (new[0] + dd[i]) % p
        coef = new
    return coef


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> Tuple[int, int]:
    t = (r2 - r1) * pow(m1, -1, m2) % m2
    return r1 + m1 * t, m1 * m2


def symmetric_residue(r: int, m: int) -> int:
    r %= m
    return r - m if r > m // 2 else r


def sylvester(P: Sequence[int], Q: Sequence[int], n: Optional[int] = None,
              m: Optional[int] = None) -> List[List[int]]:
    """Sylvester matrix of univariate coefficient lists (low to high) with formal degrees n, m."""
    n = len(P) - 1 if n is None else n
    m = len(Q) - 1 if m is None else m
    P = list(P) + [0] * (n + 1 - len(P))
    Q = list(Q) + [0] * (m + 1 - len(Q))
    size = n + m
    S = [[0] * size for _ in range(size)]
    for i in range(m):
        for j in range(n + 1):
            S[i][i + j] = P[n - j]
    for i in range(n):
        for j in range(m + 1):
            S[m + i][i + j] = Q[m - j]
    return S


# ---------------------------------------------------------------------------
# modular reconstruction engine

def _kronecker(bounds: Sequence[int]) -> List[int]:
    K = [1]
    for d in bounds[:-1]:
        K.append(K[-1] * (d + 1))
    return K


def _kron_layout(vars, bounds, homog):
    free = [v for v in vars if homog is None or v != homog[0]]
    fb = [bounds[vars.index(v)] for v in free]
    K = _kronecker(fb) if free else []
    top = sum(d * k for d, k in zip(fb, K)) if free else 0
    return free, K, top + 1


def _coeffs_mod_p(vars, K, free, npts, evaluator, homog, p) -> List[int]:
    xs = list(range(npts))
    ys = []
    for t in xs:
        pt = []
        for v in vars:
            if homog is not None and v == homog[0]:
                pt.append(1)
            else:
                pt.append(pow(t, K[free.index(v)], p))
        ys.append(evaluator(pt, p))
    return interpolate_mod_p(xs, ys, p)


def _assemble(vars, K, free, homog, coeffs, modulus: Optional[int]) -> Dict[Exp, int]:
    terms: Dict[Exp, int] = {}
    for idx, c in enumerate(coeffs):
        if modulus is not None:
            c = symmetric_residue(c, modulus)
        if not c:
            continue
        e_free = []
        rem = idx
        for j in range(len(free) - 1, -1, -1):
            e_free.append(rem // K[j])
            rem %= K[j]
        e_free.reverse()
        e = []
        for v in vars:
            if homog is not None and v == homog[0]:
                e.append(homog[1] - sum(e_free))
            else:
                e.append(e_free[free.index(v)])
        if any(x < 0 for x in e):
            raise PolyError("reconstruction inconsistent with homogeneity")
        terms[tuple(e)] = c
    return terms


def _reconstruct(vars: Sequence[str], bounds: Sequence[int],
                 evaluator: Callable[[Sequence[int], int], int], coeff_bound: int,
                 homog: Optional[Tuple[str, int]] = None, seed: int = 0) -> IntPoly:
    """Recover an integer polynomial in `vars` from modular point values.

    `bounds[i]` bounds the degree in vars[i]; `evaluator(point, p)` returns the value mod p.
    If `homog=(v, D)` the polynomial is a form of degree D and v is set to 1 during evaluation.
    """
    vars = tuple(vars)
    free, K, npts = _kron_layout(vars, bounds, homog)
    target = 2 * coeff_bound + 1
    modulus, acc = 1, None
    for p in prime_stream(lo=1 << 30, seed=seed):
        if p <= npts:
            continue
        coef = _coeffs_mod_p(vars, K, free, npts, evaluator, homog, p)
        if acc is None:
            acc, modulus = coef, p
        else:
            acc = [crt_pair(a, modulus, c, p)[0] for a, c in zip(acc, coef)]
            modulus *= p
        if modulus >= target:
            break
    return IntPoly(vars, _assemble(vars, K, free, homog, acc, modulus))


def _univariate_mod_p(P: IntPoly, var: str, point: Sequence[int], p: int, deg: int) -> List[int]:
    """Coefficient list (low to high) in `var` of P with the other vars specialized mod p."""
    i = P._index(var)
    pt = [int(a) % p for a in point]
    out = [0] * (deg + 1)
    for e, c in P.terms.items():
        m = c % p
        for j, (a, k) in enumerate(zip(pt, e)):
            if k and j != i:
                m = m * pow(a, k, p) % p
        out[e[i]] = (out[e[i]] + m) % p
    return out


# ---------------------------------------------------------------------------
# determinant pencil and resultants

def det_pencil(mats: Sequence, vars: Sequence[str] = ("x", "y", "z"), seed: int = 0) -> IntPoly:
    """det(v1*M1 + v2*M2 + ...), expanded exactly; a form of degree k."""
    mats = [np.array(m, dtype=object) for m in mats]
    if len(mats) != len(vars) or not mats:
        raise PolyError("need one matrix per variable")
    k = mats[0].shape[0]
    for m in mats:
        if m.ndim != 2 or m.shape != (k, k):
            raise PolyError("matrices must be square of equal size")
    ints = [[[int(v) for v in row] for row in m] for m in mats]
    # Hadamard-type bound: product over rows of the l1-mass of that row across the pencil
    bound = 1
    for i in range(k):
        bound *= sum(abs(m[i][j]) for m in ints for j in range(k))

    def evaluator(pt, p):
        A = [[sum(pt[s] * ints[s][i][j] for s in range(len(ints))) % p for j in range(k)]
             for i in range(k)]
        return det_mod_p(A, p)

    return _reconstruct(vars, [k] * len(vars), evaluator, bound, homog=(vars[0], k), seed=seed)


def resultant(P: IntPoly, Q: IntPoly, var: str, n: Optional[int] = None,
              m: Optional[int] = None, seed: int = 0) -> IntPoly:
    """Sylvester resultant eliminating `var`, with formal degrees n = deg_var P, m = deg_var Q.

    The result lives in the same variable tuple (with exponent 0 in `var`).
    """
    P._check(Q)
    n = P.degree(var) if n is None else n
    m = Q.degree(var) if m is None else m
    if n < 0 or m < 0:
        raise PolyError("zero polynomial has no resultant")
    if n == 0 and m == 0:
        raise PolyError(f"both inputs constant in {var!r}")
    vars = P.vars
    iv = P._index(var)
    others = [v for v in vars if v != var]
    bounds = []
    for v in vars:
        if v == var:
            bounds.append(0)
        else:
            bounds.append(m * max(P.degree(v), 0) + n * max(Q.degree(v), 0))
    coeff_bound = P.norm1() ** m * Q.norm1() ** n
    homog = None
    if P.is_homogeneous() and Q.is_homogeneous() and others:
        D = P.degree() * m + Q.degree() * n - n * m
        homog = (others[-1], D)

    def evaluator(pt, p):
        a = _univariate_mod_p(P, var, pt, p, n)
        b = _univariate_mod_p(Q, var, pt, p, m)
        return det_mod_p(sylvester(a, b, n, m), p)

    if not others:
        raise PolyError("resultant of univariate polynomials: use resultant_value")
    R = _reconstruct(vars, bounds, evaluator, coeff_bound, homog=homog, seed=seed)
    assert all(e[iv] == 0 for e in R.terms)
    return R


def univariate_coeffs(P: IntPoly, var: str, others_at: Optional[Dict[str, int]] = None) -> List[int]:
    """Integer coefficient list (low to high) in `var` after substituting the other vars."""
    others_at = others_at or {}
    pt = [others_at.get(v, 0) if v != var else 0 for v in P.vars]
    i = P._index(var)
    out = [0] * (max(P.degree(var), 0) + 1)
    for e, c in P.terms.items():
        mval = c
        for j, (a, k) in enumerate(zip(pt, e)):
            if k and j != i:
                mval *= a ** k
        out[e[i]] += mval
    return out


def resultant_value_mod_p(a: Sequence[int], b: Sequence[int], p: int,
                          n: Optional[int] = None, m: Optional[int] = None) -> int:
    return det_mod_p(sylvester([x % p for x in a], [x % p for x in b], n, m), p)


def resultant_value(a: Sequence[int], b: Sequence[int], n: Optional[int] = None,
                    m: Optional[int] = None, seed: int = 0, workers: int = 1) -> int:
    """Exact Sylvester resultant of two integer univariate polynomials (coefficients low to high)."""
    n = len(a) - 1 if n is None else n
    m = len(b) - 1 if m is None else m
    bound = sum(abs(x) for x in a) ** m * sum(abs(x) for x in b) ** n
    target = 2 * bound + 1
    primes = []
    modulus = 1
    for p in prime_stream(lo=1 << 30, seed=seed):
        primes.append(p)
        modulus *= p
        if modulus >= target:
            break
    residues = _map(lambda p: resultant_value_mod_p(a, b, p, n, m), primes, workers)
    r, mod = 0, 1
    for p, v in zip(primes, residues):
        r, mod = crt_pair(r, mod, v, p)
    return symmetric_residue(r, mod)


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def binary_form_coeffs(P: IntPoly, var: str, deg: int) -> List[int]:
    """Coefficients (low to high in `var`) of a binary form, i.e. P(var, other=1)."""
    other = [v for v in P.vars if v != var and P.degree(v) > 0]
    i = P._index(var)
    out = [0] * (deg + 1)
    for e, c in P.terms.items():
        if any(e[j] for j, v in enumerate(P.vars) if v != var and v not in other):
            raise PolyError("not a binary form in the expected variables")
        out[e[i]] += c
    return out


def lead_content(P: IntPoly, var: str) -> Tuple[int, IntPoly]:
    """Write P = c * var^j * rest with c the signed content (sign of the leading term)."""
    if not P.terms:
        return 0, P
    c = P.content()
    if P.terms[max(P.terms, key=grlex_key)] < 0:
        c = -c
    i = P._index(var)
    j = min(e[i] for e in P.terms)
    t = {}
    for e, v in P.terms.items():
        e2 = list(e)
        e2[i] -= j
        t[tuple(e2)] = v // c
    return c, P._like(t)


def iter_terms(P: IntPoly) -> Iterable[Tuple[Exp, int]]:
    for e in sorted(P.terms, key=grlex_key, reverse=True):
        yield e, P.terms[e]


def resultant_mod_p(P: IntPoly, Q: IntPoly, var: str, p: int, n: Optional[int] = None,
                    m: Optional[int] = None, exact: Optional[IntPoly] = None) -> ModPoly:
    """Resultant reduced mod p, computed modularly when p exceeds the interpolation size.

    For small p there are too few evaluation points, so the exact resultant (passed in or
    computed) is reduced instead; both agree because the Sylvester determinant with formal
    degrees commutes with reduction.
    """
    n = P.degree(var) if n is None else n
    m = Q.degree(var) if m is None else m
    vars = P.vars
    others = [v for v in vars if v != var]
    bounds = [0 if v == var else m * max(P.degree(v), 0) + n * max(Q.degree(v), 0) for v in vars]
    homog = None
    if P.is_homogeneous() and Q.is_homogeneous() and others:
        homog = (others[-1], P.degree() * m + Q.degree() * n - n * m)
    free, K, npts = _kron_layout(vars, bounds, homog)
    if p <= npts:
        R = exact if exact is not None else resultant(P, Q, var, n, m)
        return R.reduce(p)

    def evaluator(pt, pp):
        a = _univariate_mod_p(P, var, pt, pp, n)
        b = _univariate_mod_p(Q, var, pt, pp, m)
        return det_mod_p(sylvester(a, b, n, m), pp)

    coef = _coeffs_mod_p(vars, K, free, npts, evaluator, homog, p)
    return ModPoly(vars, _assemble(vars, K, free, homog, coef, None), p)
