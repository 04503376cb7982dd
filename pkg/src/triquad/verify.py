"""Invariant suite behind `triquad verify`.  Each check returns one record with an ok flag."""

from __future__ import annotations

import itertools
import time
from math import gcd
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from . import exactpoly as ep
from .arch import Weight
from .circle import count_reps, dft_recover, minor_arc_probe
from .expsum import T_sum, complete_sum, fg_counts, full_sum, local_density, minor_sum_table
from .modcount import brute_primitive_zeros, count_N, count_Z, hensel_count
from .primes import primes_upto
from .quadsys import classify_prime, four_lines_system, random_system


def _check(name: str, fn: Callable[[], Dict[str, Any]]) -> Dict[str, Any]:
    t = time.perf_counter()
    try:
        rec = fn()
    except Exception as exc:  # a crash is a failed invariant, reported rather than raised
        rec = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    rec = {"check": name, **rec, "elapsed_ms": round((time.perf_counter() - t) * 1000, 1)}
    rec["ok"] = bool(rec["ok"])
    return rec


def run_invariants(sys_=None, quick: bool = False, seed: int = 0) -> List[Dict[str, Any]]:
    S = sys_ if sys_ is not None else random_system(4, seed, height=1)
    rng = np.random.default_rng(seed)
    ns = [tuple(int(v) for v in rng.integers(-20, 21, 3)) for _ in range(3)]
    small = S.k <= 5
    out = []

    def full():
        bad = [(n, q) for n in ns for q in range(2, 7 if small else 4)
               if full_sum(S, n, q) != q ** 3 * count_N(S, n, q).value]
        return {"ok": not bad, "failures": [list(n) + [q] for n, q in bad]}

    def mult():
        bad = []
        for n in ns:
            t2, t3, t6 = (int(round(T_sum(S, n, q).re)) for q in (2, 3, 6))
            if t6 != t2 * t3:
                bad.append(list(n))
        return {"ok": not bad, "failures": bad}

    def paths():
        n = ns[0]
        a = T_sum(S, n, 5, "counting").value
        b = T_sum(S, n, 5, "direct").value
        return {"ok": abs(a - b) <= 1e-6 * max(1.0, abs(a)), "counting": a.real, "direct": b.real}

    def gauss():
        p = 5
        worst = 0.0
        for a in rng.integers(0, p, (6, 3)):
            d = complete_sum(S, a, ns[1], p, "brute").value - complete_sum(S, a, ns[1], p, "gauss").value
            worst = max(worst, abs(d))
        return {"ok": worst <= 1e-8 * p ** (S.k / 2), "max_diff": worst}

    def hensel():
        f = ep.from_text("1*x^2 + 1*y^2 + 1*z^2", ("x", "y", "z"))
        bad = [(p, l) for p in (3, 5) for l in (1, 2)
               if hensel_count(f, p, l)[0].value != brute_primitive_zeros(f, p, l)]
        return {"ok": not bad, "failures": bad}

    def density():
        d = local_density(S, ns[2], 3, 2)
        return {"ok": all(f["equal"] for f in d.factors.values()), "value": d.value}

    def dft():
        if not small:
            return {"ok": True, "skipped": "k > 5"}
        w = Weight()
        tab = count_reps(S, 3, w)
        rec, info = dft_recover(S, 3, w)
        keys = np.concatenate([tab.keys, rec.keys])
        err = max(abs(tab.get(k) - rec.get(k)) for k in keys)
        pars = abs(info["parseval_lhs"] - info["parseval_rhs"]) / info["parseval_rhs"]
        nonneg = bool((tab.values >= 0).all())
        return {"ok": err <= 1e-6 and pars <= 1e-6 and nonneg, "max_abs": err, "parseval_rel": pars}

    def singular():
        from .quadsys import certify_cond2
        st = certify_cond2(four_lines_system()).status
        return {"ok": st == "singular-with-witness", "status": st}

    def probe():
        if not small:
            return {"ok": True, "skipped": "k > 5"}
        pr = minor_arc_probe(S, 4, 1, (0.01, 0.01, 0.01))
        return {"ok": pr.rel_diff <= 0.05, "direct": pr.direct, "poisson": pr.poisson}

    checks = [("full-sum", full), ("multiplicativity", mult), ("T-paths", paths),
              ("gauss-backend", gauss), ("hensel", hensel), ("local-density", density),
              ("dft-inversion", dft), ("four-lines-singular", singular)]
    if not quick:
        checks.append(("poisson-probe", probe))
    for name, fn in checks:
        out.append(_check(name, fn))
    return out


# ---------------------------------------------------------------------------
# bound observatories: measured constants for the exponential-sum and kernel bounds

def _obs_S1(S, qmax: int) -> Dict[str, Any]:
    k = S.k
    per_q = {}
    for q in range(2, qmax + 1):
        per_q[str(q)] = float(np.abs(minor_sum_table(S, q)).max()) / q ** (k + 3)
    return {"C": max(per_q.values()), "per_q": per_q, "shape": "q^(k+3)"}


def _obs_S2(S, primes, samples: int, seed: int) -> Dict[str, Any]:
    k = S.k
    rng = np.random.default_rng(seed)
    worst, rows = 0.0, []
    for p in primes:
        tab = minor_sum_table(S, p)
        for _ in range(samples):
            l = rng.integers(0, p, 2 * k)
            f, g = fg_counts(S, l.tolist(), p)
            i1 = np.ravel_multi_index(tuple(l[:k]), (p,) * k)
            i2 = np.ravel_multi_index(tuple(l[k:]), (p,) * k)
            bound = (k + 1) * p ** (k + 3) * (1 / p + f / p ** 3 + g / p ** 2)
            c = float(abs(tab[i1, i2])) / bound
            worst = max(worst, c)
            rows.append({"p": p, "l": l.tolist(), "f": f, "g": g, "ratio": c})
    return {"C": worst, "samples": len(rows), "max_f": max(r["f"] for r in rows),
            "max_g": max(r["g"] for r in rows), "shape": "(k+1) p^(k+3) (1/p + f/p^3 + g/p^2)"}


def _obs_T1(S, pmax: int, emax: int, ns) -> Dict[str, Any]:
    k = S.k
    worst, per_p = 0.0, {}
    for p in primes_upto(pmax):
        if p == 2 or not classify_prime(S, p).good:
            continue
        for e in range(1, emax + 1):
            for n in ns:
                c = abs(T_sum(S, n, p ** e).value) / p ** (e * (3 + k / 2))
                key = f"{p}^{e}"
                per_p[key] = max(per_p.get(key, 0.0), c)
                worst = max(worst, c)
    return {"A": worst, "per_modulus": per_p, "shape": "p^(e(3+k/2))"}


def _obs_Z(S, primes, emax: int) -> Dict[str, Any]:
    k = S.k
    checked, violations, worst = 0, [], 0.0
    for p in primes:
        for e in range(1, emax + 1):
            q = p ** e
            for a in itertools.product(range(q), repeat=3):
                z = count_Z(S, a, q).value
                g = gcd(ep.det_bareiss(S.pencil(list(a)).tolist()), p ** (k * e))
                checked += 1
                worst = max(worst, z / g)
                if z > g:
                    violations.append({"p": p, "e": e, "a": list(a), "Z": z, "gcd": g})
    return {"C": worst, "checked": checked, "violations": violations[:10], "ok": not violations}


def observatories(sys_=None, seed: int = 0, quick: bool = False) -> Dict[str, Any]:
    """Measured constants for the S(l;q), S(l;p), T(n;p^e) and Z(a,p^e) bounds on a k=4 system."""
    S = sys_ if sys_ is not None else random_system(4, 1, "dense")
    rng = np.random.default_rng(seed)
    ns = [tuple(int(v) for v in rng.integers(-20, 21, 3)) for _ in range(2 if quick else 4)]
    t = time.perf_counter()
    out = {"system": S.name, "k": S.k,
           "S1": _obs_S1(S, 4 if quick else 6),
           "S2": _obs_S2(S, (3, 5), 4 if quick else 12, seed),
           "T1": _obs_T1(S, 7 if quick else 13, 2, ns),
           "Z": _obs_Z(S, (3,) if quick else (3, 5), 2)}
    out["elapsed_s"] = round(time.perf_counter() - t, 1)
    return out
