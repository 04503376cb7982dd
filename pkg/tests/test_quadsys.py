import json

import numpy as np
import pytest

from triquad import exactpoly as ep
from triquad.errors import InputError
from triquad.ffield import rank_mod_p, symmetric_diagonalize_mod_p
from triquad.quadsys import (TripleSystem, band_system, certify_cond2, classify_prime,
                             fiber_smooth_mod_p, find_rational_witness, four_lines_system,
                             jacobian_minors, load_system, random_system, rank_integer,
                             rank_pencil)


def test_load_roundtrip(sys_a):
    again = load_system(sys_a.to_json())
    assert np.array_equal(again.Q, sys_a.Q)


@pytest.mark.parametrize("doc, path", [
    ('{"Q": [[[1]], [[1]]]}', "Q"),
    ('{"Q": [[[1, 2], [3, 1]], [[1, 0], [0, 1]], [[1, 0], [0, 1]]]}', "Q[0][0][1]"),
    ('{"k": 5, "Q": [[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],'
     '[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]],[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]]}', "k"),
    ('{"Q": [[[0.5]], [[1]], [[1]]]}', "Q[0][0][0]"),
    ('not json', ""),
])
def test_load_errors_name_the_field(doc, path):
    with pytest.raises(InputError) as exc:
        load_system(doc)
    assert exc.value.path == path


def test_small_k_rejected():
    with pytest.raises(InputError):
        TripleSystem([np.eye(3, dtype=int)] * 3)


def test_det_form_of_band_at_points(sys_a):
    F = sys_a.F
    for pt in [(1, 0, 0), (0, 1, 0), (1, -2, 3)]:
        M = sys_a.pencil(pt)
        assert ep.eval_poly(F, pt) == ep.det_bareiss(M.tolist())


def test_four_lines_witness(sys_b):
    w = find_rational_witness(sys_b)
    assert w is not None
    F = sys_b.F
    assert ep.eval_poly(F, w) == 0
    for v in "xyz":
        assert ep.eval_poly(ep.partial(F, v), w) == 0


def test_certify_random_nonsingular():
    assert certify_cond2(random_system(4, 0, "dense")).status == "certified-nonsingular"


def test_certify_bad_mode():
    with pytest.raises(InputError):
        certify_cond2(four_lines_system(), mode="nope")


def test_rank_pencil_fields(sys_a):
    assert rank_pencil(sys_a, (1, 0, 0)) == 10
    assert rank_pencil(sys_a, (0, 0, 1), field=3) == rank_mod_p(sys_a.pencil((0, 0, 1)), 3)
    with pytest.raises(InputError):
        rank_pencil(sys_a, (0, 0, 0))
    with pytest.raises(InputError):
        rank_pencil(sys_a, (3, 6, 9), field=3)


def test_rank_integer():
    assert rank_integer([[1, 2], [2, 4]]) == 1
    assert rank_integer([[0, 0], [0, 0]]) == 0
    assert rank_integer([[2, 1, 0], [1, 2, 1], [0, 1, 2]]) == 3


def test_symmetric_diagonalize_preserves_rank_and_discriminant_class():
    rng = np.random.default_rng(3)
    p = 7
    for _ in range(20):
        m = rng.integers(0, p, (5, 5))
        m = (m + m.T) % p
        d = symmetric_diagonalize_mod_p(m, p)
        assert sum(1 for v in d if v % p) == rank_mod_p(m, p)
        if rank_mod_p(m, p) == 5:
            det = ep.det_mod_p(m.tolist(), p)
            prod = 1
            for v in d:
                prod = prod * v % p
            # same square class
            assert pow(det * pow(prod, -1, p) % p, (p - 1) // 2, p) == 1


def test_jacobian_minor_antisymmetry(sys_a):
    J = jacobian_minors(sys_a, [1, 2, 0, 1, 0, 0, 1, 0, 0, 3])
    assert J.minor(0, 1, 2) == -J.minor(1, 0, 2)
    assert J.minor(0, 0, 2) == 0


def test_classification_at_odd_primes(sys_a):
    # the band system is bad at 2 by definition
    assert classify_prime(sys_a, 2, (2, 5, 3)).kind == "Bad"
    kinds = {p: classify_prime(sys_a, p, (2, 5, 3)).kind for p in (13, 17, 19)}
    assert all(k == "GoodTypeI" for k in kinds.values())
    assert fiber_smooth_mod_p(sys_a, (2, 5, 3), 13)


def test_type_two_has_witness(sys_a):
    pc = classify_prime(sys_a, 13, (1, 1, 1))
    assert pc.kind == "GoodTypeII"
    assert pc.witness is not None


def test_random_tridiagonal_band_connected():
    S = random_system(7, 5)
    assert (np.diagonal(S.Q[2], 1) != 0).all()
    assert np.array_equal(S.Q[2], S.Q[2].T)
