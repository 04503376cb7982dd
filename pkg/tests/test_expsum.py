from fractions import Fraction

import numpy as np
import pytest

from triquad.errors import InputError
from triquad.expsum import (T_sum, all_complete_sums, avg_minor_probe, complete_sum,
                            count_N_character, fg_counts, full_sum, local_density, minor_sum,
                            minor_sum_table, singular_series)
from triquad.modcount import count_N, value_table
from triquad.quadsys import random_system


def test_trivial_modulus(small4):
    v = complete_sum(small4, (0, 0, 0), (1, 2, 3), 1)
    assert v.value == 1
    with pytest.raises(InputError):
        complete_sum(small4, (0, 0, 0), (1, 2, 3), 0)


def test_zero_a_counts_points(small4):
    assert complete_sum(small4, (0, 0, 0), (5, 1, 2), 6).value == 6 ** 4


def test_all_sums_match_single(small4):
    q = 4
    A = all_complete_sums(small4, q)
    for a in [(1, 0, 3), (2, 2, 1)]:
        for n in [(0, 0, 0), (1, 3, 2)]:
            ref = complete_sum(small4, a, n, q).value
            # all_complete_sums holds sum_x e(a.Q(x)/q); n enters as e(-a.n/q)
            ph = np.exp(-2j * np.pi * np.dot(a, n) / q)
            assert abs(A[a] * ph - ref) < 1e-9


def test_full_sum_identity(small4):
    for q in (2, 3, 4, 6):
        assert full_sum(small4, (1, -1, 2), q) == q ** 3 * count_N(small4, (1, -1, 2), q).value


def test_gauss_backend(small4):
    rng = np.random.default_rng(0)
    for p in (3, 5, 7):
        for _ in range(4):
            a, n = rng.integers(0, p, 3), rng.integers(-9, 9, 3)
            b = complete_sum(small4, a, n, p, "brute").value
            g = complete_sum(small4, a, n, p, "gauss").value
            assert abs(b - g) <= 1e-8 * p ** 2


def test_character_route(small4):
    for p in (3, 5, 7):
        t = value_table(small4, p)
        assert count_N_character(small4, (1, 2, 3), p) == t[1 % p, 2 % p, 3 % p]


def test_T_paths_and_conjugation(small4):
    n = (1, 2, 3)
    for q in (3, 4, 5):
        c = T_sum(small4, n, q, "counting")
        d = T_sum(small4, n, q, "direct")
        s = T_sum(small4, n, q, "summed")
        assert abs(c.value - d.value) <= 1e-6 * max(1, abs(c.value))
        assert abs(c.value - s.value) <= 1e-6 * max(1, abs(c.value))
        assert c.im == 0 and c.exact_int is not None


def test_local_density_forms_agree(small4):
    d = local_density(small4, (1, 2, 3), 3, 3)
    assert d.factors[3]["equal"]
    assert local_density(small4, (1, 2, 3), 3, 0).value == 1


def test_series_trivial_and_warning(small4):
    with pytest.warns(RuntimeWarning):
        s = singular_series(small4, (1, 2, 3), 1)
    assert s.value == 1
    assert s.exact == Fraction(1)


def test_minor_sum_paths(small4):
    rng = np.random.default_rng(7)
    for q in (2, 3, 4):
        tab = minor_sum_table(small4, q)
        for _ in range(3):
            l = rng.integers(-3, 4, 8)
            b = minor_sum(small4, l, q, "brute").value
            r = minor_sum(small4, l, q, "reduced").value
            i1 = np.ravel_multi_index(tuple(l[:4] % q), (q,) * 4)
            i2 = np.ravel_multi_index(tuple(l[4:] % q), (q,) * 4)
            assert abs(b - r) < 1e-6 and abs(b - tab[i1, i2]) < 1e-6
    assert minor_sum(small4, [0] * 8, 1).value == 1


def test_fg_counts_zero_l(small4):
    f, g = fg_counts(small4, [0] * 8, 5)
    assert f == 125 and g <= f


def test_avg_probe_q1(small4):
    r = avg_minor_probe(small4, 1, 1)
    assert round(r["total"]) == 3 ** 8
