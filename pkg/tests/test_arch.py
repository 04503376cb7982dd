import math

import numpy as np
import pytest
from scipy import integrate

from triquad.arch import (Weight, _dense, batch_eigs, decay_slope, gaussian_I, min_rho2,
                          osc_integral, osc_integral_batch, osc_integral_box, pencil_eigs_signed,
                          pencil_matrices, singular_integral, singular_integral_oracle)
from triquad import exactpoly as ep
from triquad.errors import InputError
from triquad.quadsys import band_system, random_system


@pytest.fixture(scope="module")
def tri4():
    return random_system(4, 2, "tridiagonal")


def test_weight_validation():
    with pytest.raises(InputError):
        Weight("triangle")
    with pytest.raises(InputError):
        Weight(scale=0)
    with pytest.raises(InputError):
        Weight("plateau", flat=1.0)


@pytest.mark.parametrize("kind", ["product-bump", "plateau", "gaussian"])
def test_weight_integral_1d(kind):
    w = Weight(kind, 0.8)
    lim = 8 if kind == "gaussian" else 0.8
    ref, _ = integrate.quad(lambda t: float(w.factor(np.array([t]))[0]), -lim, lim, limit=200)
    assert abs(w.integral(1) - ref) < 1e-9
    assert abs(w.integral(3) - ref ** 3) < 1e-9


def test_radial_weight_integral_2d():
    w = Weight("radial-bump", 1.0)
    ref, _ = integrate.dblquad(lambda y, x: float(w(np.array([x, y]))), -1, 1, -1, 1)
    assert abs(w.integral(2) - ref) < 1e-7


def test_plateau_is_one_on_flat_part():
    w = Weight("plateau", 1.0, 0.5)
    assert w(np.array([0.49, -0.3, 0.0])) == 1.0
    assert w(np.array([1.0, 0.0, 0.0])) == 0.0


def test_pencil_determinant_is_F():
    A = band_system(6)
    nu = [0.3, -0.7, 1.1]
    ev = pencil_eigs_signed(A, nu)
    F = ep.eval_poly(A.F, [3, -7, 11]) / 10 ** 6
    assert abs(np.prod(ev) - F) < 1e-9 * max(1, abs(F))


def test_batch_eigs_shape(tri4):
    th = np.random.default_rng(0).normal(size=(5, 3))
    ev = batch_eigs(tri4, th)
    assert ev.shape == (5, 4)
    for i in range(5):
        assert np.allclose(np.sort(ev[i]), np.sort(np.linalg.eigvalsh(pencil_matrices(tri4, th[i])[0])))


def test_I_at_zero_is_mass(tri4):
    w = Weight()
    r = osc_integral(tri4, [0, 0, 0], w=w)
    assert abs(r.value - w.integral(4)) < 1e-10


def test_transfer_matches_dense(tri4):
    w = Weight()
    for th in ([0.3, -0.2, 0.5], [2, 1, -1]):
        a = osc_integral_batch(tri4, [th], w, n=48)[0]
        b = _dense(pencil_matrices(tri4, [th]), np.zeros((1, 4)), w, 48)[0]
        assert abs(a - b) < 1e-10


def test_gaussian_closed_form(tri4):
    g = Weight("gaussian", 0.5)
    th = [0.3, -0.2, 0.5]
    lam = np.array([[0.5, 0.0, 1.0, -0.3]])
    closed = osc_integral(tri4, th, lam[0], g).value
    # the weight is below 1e-30 beyond 5C; integrate it as an explicit factor on that box
    t, wt = np.polynomial.legendre.leggauss(64)
    t, wt = 2.5 * t, 2.5 * wt
    X = np.stack(np.meshgrid(*([t] * 4), indexing="ij"), -1).reshape(-1, 4)
    W = np.prod(np.stack(np.meshgrid(*([wt] * 4), indexing="ij"), -1).reshape(-1, 4), axis=1)
    A = pencil_matrices(tri4, [th])[0]
    ph = np.einsum("ni,ij,nj->n", X, A, X) - X @ lam[0]
    quad = np.sum(W * g(X) * np.exp(2j * np.pi * ph))
    assert abs(closed - quad) < 1e-9


def test_box_matches_pointwise(tri4):
    w = Weight()
    freqs = np.array([-1.0, 0.0, 2.0])
    box = osc_integral_box(tri4, [0.1, 0.2, -0.1], freqs, w, 40)
    pt = osc_integral(tri4, [0.1, 0.2, -0.1], [2.0, -1.0, 0.0, 2.0], w).value
    assert abs(box[2, 0, 1, 2] - pt) < 1e-8


def test_I_decays(tri4):
    w = Weight("gaussian", 0.7)
    a = abs(osc_integral(tri4, [4, 4, 4], w=w).value)
    b = abs(osc_integral(tri4, [16, 16, 16], w=w).value)
    assert b < a


def test_min_rho2_positive():
    assert min_rho2(band_system(6), 8) > 0


def test_decay_slope_of_power_law():
    radii = (2, 4, 8, 16, 32)
    table = [{"R": R, "J": 1 - R ** -2.0} for R in radii]
    for prev, row in zip(table, table[1:]):
        row["increment"] = abs(row["J"] - prev["J"])
    assert abs(decay_slope(table) + 2) < 1e-9


def test_oracle_matches_gaussian_fourier_k4():
    # small k, Gaussian weight: both routes are cheap
    S = random_system(4, 2, "tridiagonal")
    w = Weight("gaussian", 0.7)
    mu = [0.1, 0.05, 0.2]
    f = singular_integral(S, mu, 16, w, r0=1.0)
    o = singular_integral_oracle(S, mu, 5e-2, w, samples=1 << 21)
    assert abs(o.value.real - f.value.real) < 4 * o.est_error + 0.05 * abs(f.value)


def test_oracle_deterministic():
    S = random_system(4, 2)
    a = singular_integral_oracle(S, [0.1, 0.1, 0.1], 0.1, Weight(), samples=1 << 14, seed=5)
    b = singular_integral_oracle(S, [0.1, 0.1, 0.1], 0.1, Weight(), samples=1 << 14, seed=5)
    assert a.value == b.value
    with pytest.raises(InputError):
        singular_integral_oracle(S, [0, 0, 0], 0)
