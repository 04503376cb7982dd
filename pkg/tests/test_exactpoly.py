import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triquad import exactpoly as ep

V = ("x", "y", "z")


def test_text_roundtrip():
    P = ep.from_text("3*x^2*y - 1*z^3 + 7", V)
    assert ep.from_text(ep.to_text(P), V) == P
    assert ep.to_text(ep.IntPoly(V)) == "0"


def test_text_is_grlex_sorted():
    P = ep.from_text("1*z + 1*x^2 + 1*x*y", V)
    assert ep.to_text(P) == "1*x^2 + 1*x*y + 1*z"


def test_bad_text():
    with pytest.raises(ep.PolyError):
        ep.from_text("x^2+y", V)


def test_det_pencil_matches_numeric():
    rng = np.random.default_rng(0)
    mats = []
    for _ in range(3):
        m = rng.integers(-3, 4, (4, 4))
        mats.append(m + m.T)
    F = ep.det_pencil(mats)
    for pt in [(1, 0, 0), (2, -1, 3), (5, 7, -2)]:
        M = sum(c * m for c, m in zip(pt, mats))
        assert ep.eval_poly(F, pt) == ep.det_bareiss(M.tolist())


def test_det_bareiss_and_mod_p_agree():
    M = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    assert ep.det_bareiss(M) == 18
    assert ep.det_mod_p(M, 7) == 18 % 7


def test_resultant_vanishes_on_common_root():
    # (x - y)(x + 2) and (x - y)(x - 5) share the factor x - y
    P = ep.from_text("1*x^2 - 1*x*y + 2*x - 2*y", V)
    Q = ep.from_text("1*x^2 - 1*x*y - 5*x + 5*y", V)
    assert ep.resultant(P, Q, "x").terms == {}


def test_resultant_linear():
    # Res_x(x - a, x - b) = b - a  (up to the sign convention of the Sylvester matrix)
    P = ep.from_text("1*x - 1*y", V)
    Q = ep.from_text("1*x - 1*z", V)
    R = ep.resultant(P, Q, "x")
    assert ep.to_text(R) in ("1*y - 1*z", "-1*y + 1*z")


@given(st.lists(st.integers(-50, 50), min_size=2, max_size=6),
       st.lists(st.integers(-50, 50), min_size=2, max_size=6))
@settings(max_examples=40, deadline=None)
def test_univariate_resultant_mod_p(a, b):
    if a[-1] == 0 or b[-1] == 0:
        return
    p = 1000003
    exact = ep.resultant_value(a, b)
    assert exact % p == ep.resultant_value_mod_p(a, b, p) % p


def test_crt_pair():
    r, m = ep.crt_pair(2, 3, 3, 5)
    assert (r % 3, r % 5, m) == (2, 3, 15)
    assert ep.symmetric_residue(14, 15) == -1


def test_interpolation_mod_p():
    p = 101
    coeffs = [3, 0, 5, 7]
    xs = list(range(1, 5))
    ys = [sum(c * x ** i for i, c in enumerate(coeffs)) % p for x in xs]
    assert ep.interpolate_mod_p(xs, ys, p) == coeffs


def test_partial():
    P = ep.from_text("1*x^3*y + 2*y^2", V)
    assert ep.to_text(ep.partial(P, "x")) == "3*x^2*y"
    assert ep.to_text(ep.partial(P, "y")) == "1*x^3 + 4*y"
