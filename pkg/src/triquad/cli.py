"""triquad command line.

Every command writes JSON lines (one record per result) to stdout or --out; --format csv
flattens the same records.  Exit codes: 0 ok, 1 verify failure, 2 usage or input error,
3 budget exceeded.  TRIQUAD_BUDGET overrides the point-visit budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from typing import Any, Dict, Iterable, List, Optional

import numpy as np

from . import budget
from .errors import BudgetError, InputError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _triple(text: str) -> List[int]:
    v = _ints(text)
    if len(v) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated integers")
    return v


def _floats(text: str) -> List[float]:
    try:
        v = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if len(v) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated numbers")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _window(text: str) -> List[List[int]]:
    """'-N..N' for all three coordinates, or 'a..b,c..d,e..f'."""
    parts = text.split(",")
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("window is LO..HI or three LO..HI ranges")
    out = []
    for p in parts:
        try:
            lo, hi = p.split("..")
            out.append([int(lo), int(hi)])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad range {p!r}")
        if out[-1][0] > out[-1][1]:
            raise argparse.ArgumentTypeError(f"empty range {p!r}")
    return out


def _weight(args):
    from .arch import Weight
    return Weight(args.weight, args.scale, args.flat)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="system JSON file {\"k\": k, \"Q\": [Q1, Q2, Q3]}; "
                        "also accepts builtin:band[:k], builtin:four-lines, builtin:random:k:seed[:height]")
    common.add_argument("--workers", type=_positive, default=1, help="worker processes (default 1)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--force", action="store_true", help="ignore the point-visit budget")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="json lines (default) or csv")
    common.add_argument("--out", help="write the report here instead of stdout")

    wt = argparse.ArgumentParser(add_help=False)
    wt.add_argument("--weight", default="product-bump",
                    choices=("product-bump", "radial-bump", "gaussian", "plateau"),
                    help="smooth weight w (default product-bump)")
    wt.add_argument("--scale", type=float, default=1.0, help="weight support scale C")
    wt.add_argument("--flat", type=float, default=0.5, help="plateau flat fraction")

    ap = _Parser(prog="triquad", description="Circle-method tools for three integral quadratic forms.")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("certify", parents=[common], help="decide nonsingularity of det(xQ1+yQ2+zQ3)=0")
    p.add_argument("--mode", choices=("fast", "exact"), default="fast",
                   help="fast: chain mod random 30-bit primes; exact: outer resultant over Z")
    p.add_argument("--nprimes", type=_positive, default=3, help="primes per frame in fast mode")

    p = sub.add_parser("classify", parents=[common], help="Bad / GoodTypeI / GoodTypeII per prime")
    p.add_argument("--n", type=_triple, default=[0, 0, 0], help="target n1,n2,n3 for the Type split")
    p.add_argument("--p", type=_ints, help="primes (comma separated)")
    p.add_argument("--pmax", type=_positive, default=20, help="all primes up to this when --p is absent")

    p = sub.add_parser("count", parents=[common], help="N(n; q) = #{x mod q : Q(x) = n mod q}")
    p.add_argument("--n", type=_triple, required=True, help="target n1,n2,n3")
    p.add_argument("--q", type=_positive, required=True, help="modulus")
    p.add_argument("--no-fast-path", action="store_true", help="disable the smooth-fiber shortcut")

    p = sub.add_parser("tsum", parents=[common], help="complete sum T(n; q)")
    p.add_argument("--n", type=_triple, required=True, help="target n1,n2,n3")
    p.add_argument("--q", type=_positive, required=True, help="modulus")
    p.add_argument("--path", choices=("counting", "direct", "summed", "all"), default="counting",
                   help="counting: exact from N(n;p^e); direct: FFT of S_q(a); summed: per-a residues")

    p = sub.add_parser("series", parents=[common], help="truncated singular series")
    p.add_argument("--n", type=_triple, required=True, help="target n1,n2,n3")
    p.add_argument("--qmax", type=_positive, default=100, help="truncation point")

    p = sub.add_parser("jint", parents=[common, wt], help="singular integral J_w(mu)")
    p.add_argument("--mu", type=_floats, required=True, help="mu1,mu2,mu3")
    p.add_argument("--R", type=float, default=64.0, help="outer radius of the theta box")
    p.add_argument("--r0", type=float, default=1.0, help="first dyadic radius")
    p.add_argument("--oracle", action="store_true", help="Monte Carlo kernel oracle instead")
    p.add_argument("--eps", type=float, default=1e-2, help="oracle kernel width")
    p.add_argument("--samples", type=_positive, default=1 << 22, help="oracle Monte Carlo samples")

    for name, hlp in (("predict", "main-term prediction for given n"),
                      ("scan", "discrepancy scan over a window of n")):
        p = sub.add_parser(name, parents=[common, wt], help=hlp)
        if name == "predict":
            p.add_argument("--n", type=_triple, action="append", required=True,
                           help="target (repeatable)")
            p.add_argument("--truth", action="store_true", help="also count R_B(n) by brute force")
            p.add_argument("--method", choices=("oracle", "fourier"), default="oracle",
                           help="how the singular integral is evaluated")
            p.add_argument("--R", type=float, default=64.0, help="theta box radius for --method fourier")
        else:
            p.add_argument("--window", type=_window, required=True, help="-N..N or a..b,c..d,e..f")
            p.add_argument("--thresholds", type=lambda s: [float(t) for t in s.split(",")],
                           default=[0.5, 1.0], help="discrepancy thresholds (comma separated)")
        p.add_argument("--B", type=float, required=True, help="box size")
        p.add_argument("--qmax", type=_positive, default=20, help="singular series prime cutoff")
        p.add_argument("--eps", type=float, default=1e-2, help="oracle kernel width")
        p.add_argument("--samples", type=_positive, default=1 << 22, help="oracle Monte Carlo samples")

    p = sub.add_parser("probe", parents=[common, wt], help="minor-arc mean square, direct vs Poisson")
    p.add_argument("--B", type=float, required=True, help="box size")
    p.add_argument("--L", type=_positive, default=1, help="q range L <= q < 2L")
    p.add_argument("--phi", type=_floats, default=[0.01, 0.01, 0.01], help="box half-widths phi1,phi2,phi3")

    p = sub.add_parser("verify", parents=[common], help="run the invariant suite; nonzero exit on failure")
    p.add_argument("--quick", action="store_true", help="skip the slower checks")
    p.add_argument("--observatories", action="store_true",
                   help="also log the measured bound constants (k=4 system unless --system is given)")
    return ap


def _system(args):
    from .quadsys import band_system, four_lines_system, load_system, random_system
    spec = args.system
    if spec is None:
        raise InputError("--system is required", "system")
    if spec.startswith("builtin:"):
        parts = spec.split(":")[1:]
        name = parts[0]
        try:
            if name == "band":
                return band_system(int(parts[1]) if len(parts) > 1 else 10)
            if name == "four-lines":
                return four_lines_system()
            if name == "random":
                return random_system(int(parts[1]), int(parts[2]) if len(parts) > 2 else 0,
                                     height=int(parts[3]) if len(parts) > 3 else 2)
        except ValueError:
            pass
        raise InputError(f"unknown builtin system {spec!r}", "system")
    try:
        with open(spec) as fh:
            return load_system(fh.read())
    except OSError as exc:
        raise InputError(f"cannot read ({exc.strerror})", "system") from None


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, complex):
        return [v.real, v.imag]
    return str(v)


def _flatten(rec: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    out = {}
    for k, v in rec.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = json.dumps(v, default=_jsonable)
        else:
            out[key] = v
    return out


def emit(records: Iterable[Dict[str, Any]], fmt: str, stream) -> None:
    records = list(records)
    if fmt == "json":
        for r in records:
            stream.write(json.dumps(r, default=_jsonable, sort_keys=True) + "\n")
        return
    flat = [_flatten(r) for r in records]
    cols: List[str] = []
    for r in flat:
        cols += [c for c in r if c not in cols]
    wr = csv.DictWriter(stream, fieldnames=cols, lineterminator="\n")
    wr.writeheader()
    for r in flat:
        wr.writerow(r)


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, round((time.perf_counter() - t) * 1000, 3)


def cmd_certify(args):
    from .quadsys import certify_cond2
    S = _system(args)
    mode = {"fast": "fast-modular", "exact": "exact-long"}[args.mode]
    cert, ms = _timed(lambda: certify_cond2(S, mode, nprimes=args.nprimes, seed=args.seed,
                                            workers=args.workers))
    rec = cert.to_dict()
    rec["elapsed_ms"] = ms
    return [rec]


def cmd_classify(args):
    from .primes import is_prime, primes_upto
    from .quadsys import classify_prime
    S = _system(args)
    ps = args.p if args.p else primes_upto(args.pmax)
    for p in ps:
        if not is_prime(p):
            raise InputError(f"{p} is not prime", "p")
    return [classify_prime(S, p, args.n, seed=args.seed).to_dict() for p in ps]


def cmd_count(args):
    from .modcount import count_N
    S = _system(args)
    r = count_N(S, args.n, args.q, fast_path=not args.no_fast_path, workers=args.workers)
    return [{"n": args.n, "q": args.q, **r.to_dict()}]


def cmd_tsum(args):
    from .expsum import T_sum
    S = _system(args)
    paths = ("counting", "direct", "summed") if args.path == "all" else (args.path,)
    rec: Dict[str, Any] = {"n": args.n, "q": args.q}
    for p in paths:
        v, ms = _timed(lambda: T_sum(S, args.n, args.q, path=p))
        rec[p] = {**v.to_dict(), "elapsed_ms": ms}
    return [rec]


def cmd_series(args):
    from .expsum import singular_series
    S = _system(args)
    d, ms = _timed(lambda: singular_series(S, args.n, args.qmax, seed=args.seed))
    return [{**d.to_dict(), "elapsed_ms": ms}]


def cmd_jint(args):
    from .arch import singular_integral, singular_integral_oracle
    S = _system(args)
    w = _weight(args)
    if args.oracle:
        r, ms = _timed(lambda: singular_integral_oracle(S, args.mu, args.eps, w, args.samples, args.seed))
    else:
        r, ms = _timed(lambda: singular_integral(S, args.mu, args.R, w, r0=args.r0))
    return [{"mu": args.mu, **r.to_dict(), "elapsed_ms": ms}]


def cmd_predict(args):
    from .circle import count_reps, predict
    S = _system(args)
    w = _weight(args)
    truth = count_reps(S, args.B, w, targets=args.n) if args.truth else None
    out = []
    for n in args.n:
        pr = predict(S, n, args.B, args.qmax, args.R, w, args.method, eps=args.eps,
                     samples=args.samples, seed=args.seed, truth=truth)
        out.append(pr.to_dict())
    return out


def cmd_scan(args):
    from .circle import exception_scan
    S = _system(args)
    rep = exception_scan(S, args.B, args.window, args.thresholds, _weight(args), args.qmax,
                         args.eps, args.samples, args.seed)
    recs = rep.pop("records")
    return recs + [{"summary": rep}]


def cmd_probe(args):
    from .circle import minor_arc_probe
    S = _system(args)
    pr, ms = _timed(lambda: minor_arc_probe(S, args.B, args.L, args.phi, _weight(args)))
    return [{**pr.to_dict(), "elapsed_ms": ms}]


def cmd_verify(args):
    from .verify import run_invariants
    S = _system(args) if args.system else None
    out = run_invariants(S, quick=args.quick, seed=args.seed)
    if args.observatories:
        import math
        from .verify import observatories
        obs = observatories(S, seed=args.seed, quick=args.quick)
        consts = [obs["S1"]["C"], obs["S2"]["C"], obs["T1"]["A"], obs["Z"]["C"]]
        out.append({"check": "observatories", "ok": obs["Z"]["ok"] and all(map(math.isfinite, consts)),
                    **obs})
    return out


COMMANDS = {"certify": cmd_certify, "classify": cmd_classify, "count": cmd_count, "tsum": cmd_tsum,
            "series": cmd_series, "jint": cmd_jint, "predict": cmd_predict, "scan": cmd_scan,
            "probe": cmd_probe, "verify": cmd_verify}


def dispatch(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        with budget.forced(args.force):
            records = COMMANDS[args.cmd](args)
    except InputError as exc:
        print(f"triquad {args.cmd}: input error: {exc}", file=stderr)
        return EXIT_USAGE
    except BudgetError as exc:
        print(f"triquad {args.cmd}: {exc}; rerun with --force or raise TRIQUAD_BUDGET", file=stderr)
        return EXIT_BUDGET
    buf = io.StringIO()
    emit(records, args.format, buf)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        stdout.write(buf.getvalue())
    if args.cmd == "verify" and not all(r.get("ok", True) for r in records):
        return EXIT_FAIL
    return EXIT_OK


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
