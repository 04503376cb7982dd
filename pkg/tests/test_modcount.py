import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from triquad import budget
from triquad import exactpoly as ep
from triquad.errors import BudgetError, InputError
from triquad.modcount import (brute_primitive_zeros, count_N, count_Z, hensel_count,
                              lift_fiber_count, value_table)
from triquad.quadsys import TripleSystem, random_system

V = ("x", "y", "z")


def brute_N(S, n, q):
    Q = S.Q.astype(np.int64)
    c = 0
    for x in itertools.product(range(q), repeat=S.k):
        x = np.array(x)
        if all((x @ Q[s] @ x - n[s]) % q == 0 for s in range(3)):
            c += 1
    return c


def test_sum_of_squares_q2():
    S = TripleSystem([np.eye(4, dtype=int), np.diag([1, 1, 0, 0]), np.diag([0, 0, 1, 1])])
    assert count_N(S, (0, 0, 0), 2).value == brute_N(S, (0, 0, 0), 2)


def test_value_table_sums_to_grid(small4):
    for q in (2, 3, 5):
        assert value_table(small4, q).sum() == q ** 4


@pytest.mark.parametrize("q", [2, 3, 4, 5, 6])
def test_count_matches_brute(small4, q):
    n = (1, -2, 3)
    assert count_N(small4, n, q).value == brute_N(small4, n, q)


def test_crt_consistency(small4):
    n = (2, 0, -1)
    for q1, q2 in [(2, 3), (3, 4), (4, 5), (5, 7), (7, 8)]:
        a = count_N(small4, n, q1).value * count_N(small4, n, q2).value
        assert count_N(small4, n, q1 * q2).value == a


@pytest.mark.parametrize("p, e", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2)])
def test_lifting_route_matches_enumeration(small4, p, e):
    n = (1, 2, 3)
    t = value_table(small4, p ** e)
    assert lift_fiber_count(small4, n, p, e) == t[n[0] % p ** e, n[1] % p ** e, n[2] % p ** e]


def test_fast_path_matches_enumeration(small4):
    n = (1, 2, 3)
    for q in (9, 25, 27):
        assert count_N(small4, n, q).value == count_N(small4, n, q, fast_path=False).value


def test_bad_modulus():
    S = random_system(4, 0)
    with pytest.raises(InputError):
        count_N(S, (0, 0, 0), 0)


def test_budget_guard(monkeypatch):
    S = random_system(6, 0)
    monkeypatch.setenv("TRIQUAD_BUDGET", "1000")
    with pytest.raises(BudgetError) as exc:
        count_N(S, (0, 0, 0), 16, fast_path=False)
    assert exc.value.estimate > exc.value.budget
    with budget.forced():
        budget.check(10 ** 12, "anything")


def test_count_Z_examples(small4):
    # q = 2 kills every constraint in the general variant
    for a in [(1, 0, 0), (1, 1, 1), (0, 1, 1)]:
        assert count_Z(small4, a, 2).value == 2 ** 4
    M = small4.pencil((1, 0, 0))
    d = ep.det_bareiss(M.tolist())
    q = next(q for q in (3, 5, 7, 11, 13) if d % q)
    assert count_Z(small4, (1, 0, 0), q).value == 1


def test_count_Z_brute(small4):
    p = 3
    Q = small4.Q.astype(np.int64)
    for a in itertools.product(range(p), repeat=3):
        M = np.tensordot(np.array(a), Q, axes=1)
        brute = sum(1 for z in itertools.product(range(p), repeat=4)
                    if not ((2 * np.array(z) @ M) % p).any())
        brute0 = sum(1 for z in itertools.product(range(p), repeat=4)
                     if not ((np.array(z) @ M) % p).any())
        assert count_Z(small4, a, p).value == brute
        assert count_Z(small4, a, p, "homogeneous0").value == brute0


def test_hensel_small_form():
    f = ep.from_text("1*x^2 + 1*y^2 + 1*z^2", V)
    for p, top in ((3, 3), (5, 3), (7, 2)):
        for ell in range(1, top + 1):
            r, prof = hensel_count(f, p, ell)
            assert r.value == brute_primitive_zeros(f, p, ell)
    assert hensel_count(f, 5, 1)[1].alpha == 1


def test_hensel_level_zero():
    f = ep.from_text("1*x^2 + 1*y^2 + 1*z^2", V)
    assert hensel_count(f, 3, 0)[0].value == 1
    with pytest.raises(InputError):
        hensel_count(f, 3, -1)


@given(st.lists(st.integers(-3, 3), min_size=6, max_size=6), st.sampled_from([3, 5]))
@settings(max_examples=25, deadline=None)
def test_hensel_ternary_forms(c, p):
    # diagonal-plus-cross ternary quadratic forms
    text = " + ".join(f"{v}*{m}" for v, m in zip(c, ["x^2", "x*y", "x*z", "y^2", "y*z", "z^2"]))
    f = ep.from_text(text.replace("+ -", "- "), V)
    if not f.terms:
        return
    try:
        got = hensel_count(f, p, 2, alpha_cap=4)[0].value
    except InputError:
        return
    assert got == brute_primitive_zeros(f, p, 2)
