import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcurv import neck_gluing as ng
from qcurv.exceptions import BadInput, InsideUnitBall, StencilOutOfRegion


def _e(r, n=6):
    p = np.zeros(n)
    p[0] = r
    return p


def test_theta_and_smoothstep():
    assert ng.theta1(0.5) == 1 and ng.theta1(1.0) == 1
    assert ng.theta1(5.0) == 0 and ng.theta1(4.0) == 0
    t = np.geomspace(0.5, 5, 2001)
    assert np.all(np.diff(ng.theta1(t)) <= 1e-14)
    # C^4 at both ends: first four derivatives of the polynomial vanish
    poly = np.polynomial.Polynomial([0, 0, 0, 0, 0, 126, -420, 540, -315, 70])
    for k in range(1, 5):
        d = poly.deriv(k)
        assert abs(d(0.0)) < 1e-12 and abs(d(1.0)) < 1e-9
    assert poly(1.0) == pytest.approx(1.0)
    s = np.linspace(0, 1, 11)
    assert np.allclose(ng.smoothstep9(s), poly(s))


def test_cutoff_identities():
    rng = np.random.default_rng(0)
    t = np.exp(rng.uniform(np.log(0.1), np.log(100), 1000))
    c = ng.cutoffs(t, ng.GluingParams(1 / 64))
    assert np.all(c.gamma1 + c.gamma2 == 1)
    assert np.array_equal(c.beta1 * c.gamma1, c.gamma1)
    assert np.array_equal(c.beta2 * c.gamma2, c.gamma2)
    for arr in (c.beta1, c.beta2, c.gamma1, c.gamma2):
        assert np.all((arr >= 0) & (arr <= 1))


def test_gluing_params():
    p = ng.GluingParams(2.0**-5)
    assert p.a == 2.0**-20 and p.ab == 2.0**-25
    assert p.lam == pytest.approx(1 / (5 * math.log(2)))
    with pytest.raises(BadInput):
        ng.GluingParams(0.3)
    with pytest.raises(BadInput):
        ng.GluingParams(0.1, a=0.5)
    assert ng.GluingParams(0.1, a=0.5, coupling=False).a == 0.5
    with pytest.raises(BadInput):
        ng.GluingParams(0.1, coupling=False)


def test_curvature_tensor_symmetries():
    R = ng.round_curvature_tensor(6)
    ng.check_curvature_tensor(R)
    ric = np.einsum("ikil->kl", R)  # trace over the first and third index
    assert np.allclose(ric, 5 * np.eye(6))
    bad = R.copy()
    bad[0, 1, 0, 1] += 1
    with pytest.raises(BadInput):
        ng.check_curvature_tensor(bad)
    with pytest.raises(BadInput):
        ng.check_curvature_tensor(np.zeros((3, 3, 3)))


def test_flat_neck_is_identity():
    Z = np.zeros((6, 6, 6, 6))
    neck = ng.NeckMetric(Z, Z, 0.0, ng.GluingParams(2.0**-5))
    z = np.random.default_rng(1).normal(size=(20, 6)) * 10
    z = z[np.linalg.norm(z, axis=1) >= 1]
    assert np.array_equal(ng.g_N_inverted(z, neck), np.broadcast_to(np.eye(6), (len(z), 6, 6)))


def test_g_N_far_field():
    neck = ng.NeckMetric.default()
    norm_R = float(np.max(np.abs(neck.curvature_at_p)))
    g = ng.g_N_inverted(_e(1e6), neck)
    assert np.max(np.abs(g - np.eye(6))) < 2e-6 * (abs(neck.mass_coefficient) + norm_R)
    for r in (1e3, 1e4, 1e5):
        d = (ng.g_N_inverted(_e(r), neck) - np.eye(6)) * r
        assert np.max(np.abs(d - neck.mass_coefficient * np.eye(6))) < 1.0 / r
    with pytest.raises(InsideUnitBall):
        ng.g_N_inverted(_e(0.5), neck)


def test_generic_curvature_branch():
    R = ng.round_curvature_tensor(6)
    z = np.random.default_rng(2).normal(size=(10, 6)) * 5 + 3
    # product curvature takes the generic path; the quartic terms cancel
    P = np.zeros((6, 6, 6, 6))
    P[:3, :3, :3, :3] = ng.round_curvature_tensor(3)
    P[3:, 3:, 3:, 3:] = -ng.round_curvature_tensor(3)
    neck_p = ng.NeckMetric(P, R, 0.0, ng.GluingParams(2.0**-5))
    assert neck_p.kappa_p is None
    zz = z[0]
    r2 = zz @ zz
    expected = np.eye(6) - np.einsum("pkql,k,l->pq", P, zz, zz) / (3 * r2 * r2)
    assert np.allclose(ng.g_N_inverted(zz, neck_p), expected, atol=1e-15)


def test_approximate_metric_regions():
    neck = ng.NeckMetric.default()
    p = neck.params
    u = _e(8 * p.b)
    got = ng.approximate_metric(u, neck).g[0]
    assert np.array_equal(got, np.eye(6) + ng.space_form_eta(u, 1.0)[0])
    z = _e(0.5 / p.a)
    got = ng.approximate_metric(z * p.ab, neck).g[0]
    want = ng.g_N_inverted(z * p.ab / p.ab, neck)
    assert np.max(np.abs(got - want)) < 1e-15
    lo = ng.approximate_metric(_e(4 * p.b * (1 - 1e-13)), neck).g[0]
    hi = ng.approximate_metric(_e(4 * p.b * (1 + 1e-13)), neck).g[0]
    assert np.max(np.abs(lo - hi)) < 1e-12
    with pytest.raises(InsideUnitBall):
        ng.approximate_metric(_e(0.5 * p.ab), neck)
    samples = ng.approximate_metric(np.geomspace(p.ab, 1.0, 50)[:, None] * np.eye(6)[0], neck)
    assert np.all(samples.min_eigenvalue() > 0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-6, 0.9))
def test_space_form_eta_branches_agree(r):
    x = _e(r)
    eta = ng.space_form_eta(x, 1.0)[0]
    s = math.sin(r) / r
    expected = np.diag([0.0] + [s * s - 1] * 5)
    assert np.max(np.abs(eta - expected)) < 1e-14


def test_fd_flat_and_round():
    flat = ng.fd_curvature(ng.FlatSampler(6), _e(0.3))
    assert max(abs(flat.R), abs(flat.Q), abs(flat.lap_R)) < 1e-10
    sph = ng.fd_curvature(ng.SpaceFormSampler(6, 1.0), _e(0.3), h=0.01)
    assert abs(sph.R - 30) < 1e-6 and abs(sph.Q - 24) < 1e-4
    g = np.eye(6) + ng.space_form_eta(_e(0.3), 1.0)[0]
    assert np.max(np.abs(sph.Ric - 5 * g)) < 1e-6


def test_fd_product_metric():
    s = ng.ProductSampler([ng.SpaceFormSampler(3, 1.0), ng.SpaceFormSampler(3, -1.0)])
    x = np.array([0.2, -0.1, 0.15, 0.1, 0.2, -0.05])
    res = ng.fd_curvature(s, x, h=0.01)
    assert abs(res.R) < 1e-6 and abs(res.Q + 3) < 1e-4


def test_fd_convergence_order():
    s = ng.ConformallyFlatSampler(6, amplitude=0.2, width=0.7)
    x = np.array([0.3, 0.1, -0.2, 0.05, 0.0, 0.1])
    exact = float(s.exact_scalar_curvature(x)[0])
    errs = [abs(ng.fd_curvature(s, x, h=h).R - exact) for h in (0.04, 0.02)]
    assert math.log2(errs[0] / errs[1]) >= 3.5


def test_stencil_region_guard():
    neck = ng.NeckMetric.default()
    with pytest.raises(StencilOutOfRegion):
        ng.fd_curvature(ng.InvertedNeckSampler(neck), _e(1.05), h=0.05)
    with pytest.raises(BadInput):
        ng.fd_curvature(ng.FlatSampler(6), np.zeros(5))


def test_neck_with_b_and_nu():
    neck = ng.NeckMetric.default()
    assert neck.nu == 24.0 and neck.n == 6
    other = neck.with_b(2.0**-7)
    assert other.params.b == 2.0**-7 and other.params.a == 2.0**-28
    trunc = ng.NeckMetric(neck.curvature_at_p, neck.curvature_at_q, 1.0, neck.params, g2_exact=False)
    with pytest.raises(BadInput):
        trunc.nu


def test_neck_q_tail_decays():
    tail = ng.neck_q_tail(ng.NeckMetric.default(), radii=np.geomspace(2.0, 16.0, 4))
    assert tail["slope"] < -4


def test_small_sweep_structure():
    res = ng.scaling_sweep(b_list=[2.0**-5, 2.0**-6], per_region=6)
    assert set(res.slopes) == {"dphi", "d2phi", "sup_Q_annulus", "weighted_Q_minus_nu"}
    assert res.expected == {"dphi": 1.0, "sup_Q_annulus": -2.0, "weighted_Q_minus_nu": 2.5}
    assert len(res.csv_rows()) == 2 * 5
    assert res.summary()["delta"] == -0.5
    with pytest.raises(BadInput):
        ng.scaling_sweep(b_list=[2.0**-5])
