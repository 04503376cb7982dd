import json

import numpy as np
import pytest

from triquad.arch import Weight, osc_integral
from triquad.circle import (RepTable, arcs, count_reps, dft_recover, exception_scan, gen_sum,
                            gen_sum_many, jordan_totient3, minor_arc_probe, support_points)
from triquad.errors import InputError
from triquad.expsum import complete_sum
from triquad.quadsys import random_system


@pytest.fixture(scope="module")
def tiny():
    return random_system(4, 1, height=1)


def brute_table(S, B, w):
    ref = {}
    for X, wx in support_points(S, B, w):
        for x, v in zip(X, wx):
            n = tuple(int(x @ S.Q[s] @ x) for s in range(3))
            ref[n] = ref.get(n, 0.0) + v
    return ref


@pytest.mark.parametrize("kind", ["product-bump", "radial-bump", "plateau"])
def test_count_reps_brute(tiny, kind):
    w = Weight(kind, 1.0)
    tab = count_reps(tiny, 3, w)
    ref = brute_table(tiny, 3, w)
    assert len(tab) == len(ref)
    assert max(abs(tab.get(n) - v) for n, v in ref.items()) < 1e-12
    assert (tab.values > 0).all()


def test_count_reps_targets(tiny):
    w = Weight()
    full = count_reps(tiny, 3, w)
    pick = [tuple(k) for k in full.keys[::7]] + [(10 ** 4, 0, 0)]
    part = count_reps(tiny, 3, w, targets=pick)
    for n in pick:
        assert part.get(n) == full.get(n)


def test_table_symmetry_and_total(tiny):
    w = Weight()
    tab = count_reps(tiny, 3, w)
    mass = sum(float(v.sum()) for _, v in support_points(tiny, 3, w))
    assert abs(tab.total() - mass) < 1e-9
    again = RepTable.from_dict(json.loads(json.dumps(tab.to_dict())))
    assert np.array_equal(again.keys, tab.keys) and np.allclose(again.values, tab.values)


def test_gen_sum_at_zero_is_mass(tiny):
    w = Weight()
    tab = count_reps(tiny, 3, w)
    assert abs(gen_sum(tiny, [0, 0, 0], 3, w).value - tab.total()) < 1e-9


def test_gen_sum_batch_matches_single(tiny):
    al = np.array([[0.1, 0.2, 0.3], [0.5, -0.25, 0.125]])
    many = gen_sum_many(tiny, al, 3)
    for a, v in zip(al, many):
        assert abs(gen_sum(tiny, a, 3).value - v) < 1e-9


def test_dft_refuses_aliasing(tiny):
    with pytest.raises(InputError):
        dft_recover(tiny, 3, Weight(), grid=[2, 2, 2])


def test_dft_recover_exact(tiny):
    tab = count_reps(tiny, 3, Weight())
    rec, info = dft_recover(tiny, 3, Weight())
    assert max(abs(tab.get(k) - rec.get(k)) for k in np.concatenate([tab.keys, rec.keys])) < 1e-9
    assert abs(info["parseval_lhs"] - info["parseval_rhs"]) < 1e-9 * info["parseval_rhs"]


def test_jordan_totient():
    assert [jordan_totient3(q) for q in (1, 2, 3, 4, 6)] == [1, 7, 26, 56, 182]


def test_arcs_measure_and_disjointness():
    a = arcs(0.3, 16)
    assert a["disjoint"]
    assert abs(a["measure"] - a["measure_formula"]) < 1e-15
    with pytest.raises(InputError):
        arcs(0.7, 16)


def test_major_arc_residual_shrinks():
    # S(a/q + theta) ~ q^-k B^k S_q(a) I(B^2 theta) on a major box; the residual
    # relative to B^k drops with B
    S = random_system(4, 2, "tridiagonal", height=1)
    w = Weight()
    res = []
    for B in (8, 16):
        worst = 0.0
        for a, q, th in [((1, 0, 1), 2, (0.3, -0.2, 0.1)), ((1, 2, 0), 3, (-0.1, 0.2, 0.25))]:
            theta = np.array(th) / B ** 2
            alpha = np.array(a) / q + theta
            lhs = gen_sum(S, alpha, B, w).value
            Sq = complete_sum(S, a, (0, 0, 0), q).value
            rhs = q ** -4 * B ** 4 * Sq * osc_integral(S, B * B * theta, w=w).value
            worst = max(worst, abs(lhs - rhs))
        res.append(worst / B ** 4)
    assert res[0] / max(res[1], 1e-300) >= 1.5


def test_probe_degenerate(tiny):
    pr = minor_arc_probe(tiny, 3, 1, (0.0, 0.01, 0.01))
    assert pr.direct == pr.poisson == 0.0
    with pytest.raises(InputError):
        minor_arc_probe(tiny, 3, 0, (0.01, 0.01, 0.01))


def test_scan_report_roundtrip(tiny):
    rep = exception_scan(tiny, 3, [(0, 1), (0, 1), (0, 1)], samples=1 << 12, Qmax=3)
    assert json.loads(json.dumps(rep)) == rep
    with pytest.raises(InputError):
        exception_scan(tiny, 3, [(0, 1)])
