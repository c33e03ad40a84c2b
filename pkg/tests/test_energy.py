import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from binmix.energy import (DomainError, DoubleWell, EntropyMatrix, EQShiftError, FloryHuggins,
                           PengRobinson, RepulsionSingularityError, bulk_grad_h, bulk_h,
                           bulk_hessian_h, eq_vars, mass_to_molar, modified_h_m, molar_to_mass,
                           pr_mixture_coeffs, two_phase_equilibrium)


def make_pr(**kw):
    return PengRobinson(Tc=[2.2626, 0.6980], Pc=[1.3495, 2.9513], omega=[0.4884, 0.01142],
                        molar_mass=[8.8688, 1.0], R=1.4566, T=1.2088, **kw)


@pytest.fixture(scope="module")
def pr():
    return make_pr()


def fd_grad(model, r1, r2, step=1e-6):
    g1 = (bulk_h(model, r1 + step, r2) - bulk_h(model, r1 - step, r2)) / (2 * step)
    g2 = (bulk_h(model, r1, r2 + step) - bulk_h(model, r1, r2 - step)) / (2 * step)
    return g1, g2


# values ------------------------------------------------------------------------

def test_double_well_values():
    dw = DoubleWell()
    assert bulk_h(dw, 0.0, 0.0) == 0.0
    assert bulk_h(dw, 0.5, 0.5) == pytest.approx(0.125, abs=1e-15)
    assert bulk_grad_h(dw, 0.5, 0.3)[0] == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(bulk_grad_h(dw, 1.0, 1.0), 0.0)
    h11, h12, h22 = bulk_hessian_h(dw, 0.5, 0.5)
    assert h11 == pytest.approx(-1.0, abs=1e-12) and h12 == 0.0
    q, _, _ = eq_vars(dw, 0.0, 0.0)
    assert q == pytest.approx(1.0)


def test_flory_huggins_midpoint():
    fh = FloryHuggins(1.0, 1.0, 2.5)
    assert bulk_h(fh, 0.5, 0.5) == pytest.approx(math.log(0.5) + 0.625, abs=1e-14)
    assert bulk_h(fh, 0.5, 0.5) == pytest.approx(-0.0681472, abs=1e-7)


def test_flory_huggins_exchange_symmetry():
    a = FloryHuggins(2.0, 3.0, 1.7)
    b = FloryHuggins(3.0, 2.0, 1.7)
    assert bulk_h(a, 0.3, 0.8) == pytest.approx(bulk_h(b, 0.8, 0.3), rel=1e-14)


def test_flory_huggins_domain_error():
    fh = FloryHuggins()
    with pytest.raises(DomainError):
        bulk_h(fh, 0.0, 0.5)
    with pytest.raises(DomainError):
        bulk_h(fh, -0.1, 0.5)


# derivatives -------------------------------------------------------------------

models = {
    "dw": (DoubleWell(), ((0.1, 1.5), (0.1, 1.5))),
    "fh": (FloryHuggins(1.0, 1.0, 2.5), ((0.05, 1.5), (0.05, 1.5))),
    "fh2": (FloryHuggins(2.0, 0.7, 1.3, prefactor=0.8), ((0.05, 1.5), (0.05, 1.5))),
}


@pytest.mark.parametrize("name", sorted(models))
@settings(max_examples=25, deadline=None)
@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_gradient_matches_finite_difference(name, a, b):
    model, ((l1, h1), (l2, h2)) = models[name]
    r1, r2 = l1 + a * (h1 - l1), l2 + b * (h2 - l2)
    g = np.array(bulk_grad_h(model, r1, r2))
    f = np.array(fd_grad(model, r1, r2))
    assert np.allclose(g, f, rtol=1e-5, atol=1e-7)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.02, 0.95), b=st.floats(0.02, 0.95))
def test_pr_gradient_matches_finite_difference(a, b):
    pr = make_pr()
    # molar densities inside the covolume limit
    bmax = 1.0 / pr.b_i
    n1, n2 = a * 0.5 * bmax[0], b * 0.5 * bmax[1]
    r1, r2 = molar_to_mass(pr, n1, n2)
    g = np.array(bulk_grad_h(pr, r1, r2))
    f = np.array(fd_grad(pr, r1, r2, step=1e-6 * max(r1, r2)))
    assert np.allclose(g, f, rtol=1e-5, atol=1e-6)


def test_hessians_symmetric_and_fd(pr):
    fh = FloryHuggins(1.0, 1.0, 2.5)
    h11, h12, h22 = bulk_hessian_h(fh, 0.5, 0.5)
    s = 1e-6
    g1p, g2p = bulk_grad_h(fh, 0.5 + s, 0.5)
    g1m, g2m = bulk_grad_h(fh, 0.5 - s, 0.5)
    assert h11 == pytest.approx((g1p - g1m) / (2 * s), abs=1e-5)
    assert h12 == pytest.approx((g2p - g2m) / (2 * s), abs=1e-5)
    # FH at (1/2, 1/2): h11 = 1/rho1 - 1/rho - 2 chi rho2^2/rho^3
    assert h11 == pytest.approx(2.0 - 1.0 - 2 * 2.5 * 0.25, rel=1e-9)
    r1, r2 = molar_to_mass(pr, 1.0, 3.0)
    a, b, c = bulk_hessian_h(pr, r1, r2)
    assert np.isfinite([a, b, c]).all()


def test_eq_vars_identities(rng):
    for model in (DoubleWell(), FloryHuggins()):
        r1 = rng.uniform(0.05, 1.2, 50)
        r2 = rng.uniform(0.05, 1.2, 50)
        q, d1, d2 = eq_vars(model, r1, r2)
        assert np.allclose(q ** 2 - model.A, bulk_h(model, r1, r2), rtol=1e-13, atol=1e-14)
        s = 1e-6
        fd1 = (eq_vars(model, r1 + s, r2)[0] - eq_vars(model, r1 - s, r2)[0]) / (2 * s)
        assert np.allclose(d1, fd1, rtol=1e-6, atol=1e-9)


def test_eq_shift_error():
    with pytest.raises(EQShiftError):
        eq_vars(DoubleWell(A=-1.0), 0.0, 0.0)


def test_fh_default_shift_dominates():
    fh = FloryHuggins()
    assert fh.A > 1.0
    fh.check_shift(((1e-6, 2.0), (1e-6, 2.0)))


# entropy matrix ----------------------------------------------------------------

def test_entropy_matrix_checks():
    K = EntropyMatrix(1e-4, 0.0, 1e-4)
    assert np.array_equal(K.as_array(), np.diag([1e-4, 1e-4]))
    with pytest.raises(ValueError):
        EntropyMatrix(1.0, 2.0, 1.0)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        EntropyMatrix(1e-4, 0.0, 0.0)
        assert w
    Km = EntropyMatrix.from_molar(0.0018, 1.4398e-4, 4.5961e-5, (8.8688, 1.0))
    assert Km.k11 == pytest.approx(0.0018 / 8.8688 ** 2)
    assert np.allclose(Km.to_molar((8.8688, 1.0)), (0.0018, 1.4398e-4, 4.5961e-5))


# Peng-Robinson -----------------------------------------------------------------

def test_pr_methane_inputs(pr):
    assert pr.Tc[1] == 0.6980 and pr.Pc[1] == 2.9513 and pr.masses[1] == 1.0
    assert pr.masses[0] == 8.8688


def test_pr_mixture_single_component(pr):
    a, b, ai, bi = pr_mixture_coeffs(pr, 2.0, 0.0)
    assert a == pytest.approx(ai[0], rel=1e-14) and b == pytest.approx(bi[0], rel=1e-14)


def test_pr_mixture_double_sum(pr):
    a, b, ai, bi = pr_mixture_coeffs(pr, 1.0, 1.0)
    y = [0.5, 0.5]
    ref = 0.0
    for i in range(2):
        for j in range(2):
            ref += y[i] * y[j] * math.sqrt(ai[i] * ai[j]) * (1 - 0.0)
    assert a == pytest.approx(ref, rel=1e-14)
    # standard correlations
    R, T = 1.4566, 1.2088
    k = 0.37464 + 1.54226 * 0.01142 - 0.26992 * 0.01142 ** 2
    alpha = (1 + k * (1 - math.sqrt(T / 0.6980))) ** 2
    assert ai[1] == pytest.approx(0.45724 * R ** 2 * 0.6980 ** 2 / 2.9513 * alpha, rel=1e-14)
    assert bi[1] == pytest.approx(0.07780 * R * 0.6980 / 2.9513, rel=1e-14)


def test_pr_repulsion_singularity(pr):
    n1 = 1.01 / pr.b_i[0]
    with pytest.raises(RepulsionSingularityError):
        pr.molar_h(n1, 0.0)


def test_pr_regularized_ideal_is_c1(pr):
    eps = pr.eps_reg
    below = np.nextafter(eps, 0.0)
    assert pr._ideal(np.array(eps)) == pytest.approx(pr._ideal(np.array(below)), abs=1e-18)
    assert pr._ideal_prime(np.array(eps)) == pytest.approx(pr._ideal_prime(np.array(below)), abs=1e-9)
    # both branches at exactly the threshold
    reg = eps * (math.log(eps) - 1) + (eps * eps / (2 * eps) - eps / 2)
    assert reg == pytest.approx(eps * (math.log(eps) - 1), abs=1e-22)
    assert math.log(eps) - 1 + eps / eps == pytest.approx(math.log(eps), abs=1e-15)


def test_pr_shift_positive_on_box(pr):
    pr.check_shift(pr.box)
    assert pr.A > 1.0


def test_modified_energy(pr):
    assert modified_h_m(pr, 1.0, 2.0, 0.0, 0.0) == pytest.approx(pr.molar_h(1.0, 2.0))
    d = modified_h_m(pr, 1.0, 2.0, 2.0, -1.0) - modified_h_m(pr, 1.0, 2.0, 1.0, -0.5)
    assert d == pytest.approx(-(1.0 * 1.0 - 0.5 * 2.0), abs=1e-12)


def test_two_phase_equilibrium_common_tangent(pr):
    nl, ng, mu = two_phase_equilibrium(pr, (3.8146, 3.5132), (0.0265, 7.1339))
    assert nl[0] > 10 * ng[0]
    hl = modified_h_m(pr, nl[0], nl[1], mu[0], mu[1])
    hg = modified_h_m(pr, ng[0], ng[1], mu[0], mu[1])
    assert hl == pytest.approx(hg, abs=1e-10)
    assert np.allclose(pr.molar_grad(ng[0], ng[1]), mu, atol=1e-10)


def test_mass_molar_round_trip(pr, rng):
    n1, n2 = rng.uniform(0, 3, 20), rng.uniform(0, 3, 20)
    r1, r2 = molar_to_mass(pr, n1, n2)
    assert np.allclose(r1, 8.8688 * n1)
    b1, b2 = molar_to_mass(pr, *mass_to_molar(pr, r1, r2))
    assert np.allclose(b1, r1, rtol=1e-15) and np.allclose(b2, r2, rtol=1e-15)
    dw = DoubleWell()
    assert molar_to_mass(dw, 0.3, 0.4) == (0.3, 0.4)
