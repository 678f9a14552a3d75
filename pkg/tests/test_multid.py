import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vacuumfront.gas import DomainError, GasLaw
from vacuumfront.multid import (ETERNAL, FORCED, FORWARD, IMPOSSIBLE, INCONCLUSIVE, RULE_1D, RULE_EVEN,
                                RULE_FORWARD, RULE_JACOBIAN, RULE_MONO, RULE_ODD, InitialData, ball, box,
                                bump_density, chemin_check, classify, dispersion_exponent, jacobian_integral,
                                linear_field, mass_and_inertia, ray_distance, rotation_field,
                                spectrum_condition, symmetric_functions, volume_polynomial)

N = 100_000


def data(d, gamma="3", matrix=None, domain=None, amplitude=1.0, A=1.0):
    law = GasLaw.from_text(gamma, A)
    dom = domain or ball(d)
    if matrix is None:
        u0, grad = linear_field(np.zeros((d, d)))
    else:
        u0, grad = linear_field(matrix)
    return InitialData(d, law, dom, u0, bump_density(amplitude), grad)


ROT = [[0.0, -1.0], [1.0, 0.0]]


# volume polynomial and J

def test_volume_zero_field_is_constant():
    q = volume_polynomial(data(2), N, seed=1)
    assert q.coefficients[0].within(np.pi)
    assert all(c.value == 0.0 and c.error == 0.0 for c in q.coefficients[1:])


def test_volume_identity_in_one_dimension():
    q = volume_polynomial(data(1, matrix=[[1.0]]), N)
    assert q.values == pytest.approx([2.0, 2.0], rel=1e-12)


def test_volume_rotation_disk():
    u0, grad = rotation_field()
    q = volume_polynomial(InitialData(2, GasLaw(2.0, 1.0), ball(2), u0, bump_density(), grad), N, seed=0)
    for c, target in zip(q.coefficients, (np.pi, 0.0, np.pi)):
        assert c.within(target, atol=1e-12)
    assert q(2.0) == pytest.approx(5 * np.pi, rel=0.02)


def test_error_bars_are_calibrated():
    # ten batch means give a t-distributed score with 9 degrees of freedom;
    # about 1.5% of seeds should land beyond 3 sigma
    u0, grad = rotation_field()
    d = InitialData(2, GasLaw(2.0, 1.0), ball(2), u0, bump_density(), grad)
    z = []
    for seed in range(40):
        c = volume_polynomial(d, 20_000, seed=seed).coefficients[0]
        z.append((c.value - np.pi) / c.error)
    z = np.array(z)
    assert np.mean(np.abs(z) > 3) <= 0.1
    assert 0.6 < np.std(z) < 1.6


def test_jacobian_examples():
    assert jacobian_integral(data(3), N).value == 0.0
    assert jacobian_integral(data(2, matrix=ROT), N).within(np.pi)
    assert jacobian_integral(data(1, matrix=[[-1.0]]), N).value == pytest.approx(-2.0, rel=1e-12)


def test_leading_coefficient_equals_direct_jacobian():
    a = np.array([[0.3, -1.0, 0.2], [0.5, 0.1, 0.0], [0.0, 0.4, -0.7]])
    dd = data(3, matrix=a)
    q = volume_polynomial(dd, N, seed=11)
    J = jacobian_integral(dd, N, seed=11)
    assert q.coefficients[-1].value == pytest.approx(J.value, rel=1e-12)
    assert J.within(np.linalg.det(a) * 4 * np.pi / 3)


def test_box_domain_is_exact_for_linear_fields():
    u0, grad = linear_field([[1.0, 0.0], [0.0, 2.0]])
    d = InitialData(2, GasLaw(2.0, 1.0), box([0, 0], [2, 1]), u0, lambda p: np.ones(len(p)), grad)
    q = volume_polynomial(d, N)
    # stratified grid on a box with a constant integrand: every batch is identical
    assert q.values == pytest.approx([2.0, 6.0, 4.0], rel=1e-3)


def test_odd_dimension_leading_coefficient_vanishes():
    # u0 = x keeps Q positive for t >= 0 but not for all t; a rotation in the
    # x-y plane with a zero third row keeps det(I + t A) = 1 + t^2 > 0 always
    a = [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
    q = volume_polynomial(data(3, matrix=a), N, seed=5)
    assert abs(q.coefficients[3].value) <= 3 * q.coefficients[3].error + 1e-12
    assert np.all(q(np.linspace(-10, 10, 41)) > 0)


def test_jacobian_depends_only_on_boundary_values():
    a = np.array([[1.0, 0.2, 0.0], [0.0, 0.8, 0.3], [0.1, 0.0, 1.2]])
    u_lin, _ = linear_field(a)

    def u_pert(p):
        q = 1.0 - np.sum(p * p, axis=1) / 0.6 ** 2
        phi = np.where(q > 0, q, 0.0) ** 4
        return u_lin(p) + phi[:, None] * np.array([0.7, -0.5, 0.9]) * np.sin(3 * p[:, [1, 2, 0]])

    law = GasLaw(1.4, 1.0)
    J0 = jacobian_integral(InitialData(3, law, ball(3), u_lin, bump_density()), N, seed=2)
    J1 = jacobian_integral(InitialData(3, law, ball(3), u_pert, bump_density()), N, seed=2)
    assert J0.within(np.linalg.det(a) * 4 * np.pi / 3)
    assert abs(J1.value - J0.value) <= 3 * np.hypot(J0.error, J1.error)


def test_volume_errors():
    with pytest.raises(DomainError):
        volume_polynomial(data(2), 999)
    empty = InitialData(2, GasLaw(2.0, 1.0), box([0, 0], [0, 1]), *linear_field(np.zeros((2, 2)))[:1],
                        bump_density(), linear_field(np.zeros((2, 2)))[1])
    with pytest.raises(DomainError):
        volume_polynomial(empty, N)
    with pytest.raises(DomainError):
        InitialData(2, GasLaw(2.0, 1.0), ball(3), *rotation_field()[:1], bump_density())


def test_finite_difference_jacobian_matches_analytic():
    a = np.array([[0.2, -1.0], [0.7, 0.4]])
    u0, grad = linear_field(a)
    law = GasLaw(2.0, 1.0)
    fd = InitialData(2, law, ball(2), lambda p: u0(p) + 0.1 * p ** 2, bump_density())
    pts = np.array([[0.1, 0.2], [-0.3, 0.4]])
    want = a + np.stack([np.diag(0.2 * p) for p in pts])
    assert np.max(np.abs(fd.jacobian(pts) - want)) < 1e-8


# mass, inertia and scaling

def test_mass_and_inertia_of_bump():
    # unit ball in 3-D, rho0 = (1 - r^2)^2: M = 4 pi * 8/105, I = 2 pi * 8/315
    m, i = mass_and_inertia(data(3), N, seed=4)
    assert m.within(32 * np.pi / 105)
    assert i.within(16 * np.pi / 315)
    bad = InitialData(2, GasLaw(2.0, 1.0), ball(2), *linear_field(np.zeros((2, 2))))
    bad = InitialData(2, bad.law, bad.domain, bad.u0, lambda p: -np.ones(len(p)), bad.grad_u0)
    with pytest.raises(DomainError):
        mass_and_inertia(bad, N)


@pytest.mark.parametrize("s", [1e-3, 0.5, 7.0])
def test_classify_is_scale_consistent(s):
    base = data(3, gamma="3/2", matrix=np.diag([0.5, 0.4, 0.3]))
    r0 = classify(base, 20_000, seed=9)
    r1 = classify(base.scaled(s), 20_000, seed=9)
    assert r1.mass.value == pytest.approx(s * r0.mass.value, rel=1e-9)
    assert r1.inertia.value == pytest.approx(s * r0.inertia.value, rel=1e-9)
    g, d = 1.5, 3
    assert r1.mono_bound == pytest.approx(r0.mono_bound * s ** ((g - 1) * d / 2), rel=1e-9)


# spectrum

def test_spectrum_examples():
    rot = spectrum_condition(data(2, matrix=ROT), 10_000)
    assert (rot.off_negative_axis, rot.off_real_axis) == ("pass", "pass")
    neg = spectrum_condition(data(1, matrix=[[-1.0]]), 10_000)
    assert neg.off_negative_axis == "fail"
    diag = spectrum_condition(data(2, matrix=np.diag([1.0, 2.0])), 10_000)
    assert (diag.off_negative_axis, diag.off_real_axis) == ("pass", "fail")
    near = spectrum_condition(data(2, matrix=np.diag([1e-4, 2.0])), 10_000)
    assert near.off_negative_axis == "marginal"
    with pytest.raises(DomainError):
        spectrum_condition(data(2), 10)


def test_spectrum_skips_nonfinite_samples():
    law = GasLaw(2.0, 1.0)

    def grad(p):
        g = np.broadcast_to(np.array(ROT), (len(p), 2, 2)).copy()
        g[p[:, 0] > 0.999] = np.nan
        return g
    rep = spectrum_condition(InitialData(2, law, ball(2), rotation_field()[0], bump_density(), grad), 10_000)
    assert rep.off_real_axis == "pass"

    def bad(p):
        g = np.broadcast_to(np.array(ROT), (len(p), 2, 2)).copy()
        g[p[:, 0] > 0.5] = np.nan
        return g
    with pytest.raises(RuntimeError):
        spectrum_condition(InitialData(2, law, ball(2), rotation_field()[0], bump_density(), bad), 10_000)


@settings(max_examples=50, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5))
def test_ray_distance_property(re, im):
    z = complex(re, im)
    ts = np.linspace(-20, 0, 200001)
    brute = np.min(np.abs(z - ts))
    assert ray_distance(z) == pytest.approx(brute, abs=2e-4)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 32 - 1), st.floats(-3, 3))
def test_symmetric_functions_expand_determinant(d, seed, t):
    m = np.random.default_rng(seed).normal(size=(3, d, d))
    e = symmetric_functions(m)
    for k in range(3):
        lhs = np.linalg.det(np.eye(d) + t * m[k])
        rhs = np.polyval(e[k][::-1], t)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    assert e[:, 0] == pytest.approx(np.ones(3))
    assert e[:, -1] == pytest.approx(np.linalg.det(m), rel=1e-9, abs=1e-12)


# classifier

def test_classify_three_dimensional_zero_field():
    r = classify(data(3, gamma="7/5"), N, seed=7)
    assert r.verdict == FORCED and r.triggering_rule == RULE_JACOBIAN
    tags = [t for t, _ in r.rules]
    assert RULE_ODD in tags
    assert r.thresholds == {"monoatomic": pytest.approx(5 / 3), "theorem": 1.5}


def test_classify_even_dimension_rotation():
    r = classify(data(2, gamma="2", matrix=ROT, amplitude=1e-3), N, seed=0)
    assert r.verdict == ETERNAL and r.triggering_rule == RULE_EVEN
    assert RULE_FORWARD in [t for t, _ in r.rules]
    assert r.thresholds == {"monoatomic": 2.0, "theorem": 2.0}
    assert any("candidate" in n for n in r.notes)


def test_classify_one_dimension_uses_riccati_rule():
    for gamma in ("3", "5/3", "7"):
        r = classify(data(1, gamma=gamma, matrix=[[0.5]]), 10_000)
        assert r.verdict == IMPOSSIBLE and r.triggering_rule == RULE_1D
        assert r.thresholds["theorem"] is None
        assert json.loads(r.to_json())["thresholds"]["theorem"] is None


def test_classify_mono_rule_at_threshold():
    # d = 2, gamma = 2 exactly, positive J below the bound
    r = classify(data(2, gamma="2", matrix=np.diag([0.1, 0.1]), A=1.0), N)
    tags = dict(r.rules)
    assert RULE_MONO in tags and RULE_JACOBIAN not in tags
    assert r.J.value < r.mono_bound
    assert r.verdict == FORCED
    # just off the threshold the equality rule must not fire
    r = classify(data(2, gamma="2.000001", matrix=np.diag([0.1, 0.1])), N)
    assert RULE_MONO not in dict(r.rules)


def test_classify_forward_candidate_and_inconclusive():
    r = classify(data(3, gamma="2", matrix=np.eye(3)), 10_000)
    assert r.verdict == FORWARD and r.triggering_rule == RULE_FORWARD
    r = classify(data(3, gamma="2", matrix=-np.eye(3)), 10_000)
    assert r.verdict == INCONCLUSIVE and r.triggering_rule is None and r.rules == []


def test_classify_report_json_is_strict_and_sorted():
    r = classify(data(4, gamma="4/3"), 10_000, seed=3)
    doc = json.loads(r.to_json())
    assert doc["seed"] == 3 and doc["verdict"] == r.verdict
    assert len(doc["volume_coefficients"]) == 5
    assert list(doc) == sorted(doc)


def test_classify_is_independent_of_worker_count():
    d = data(3, gamma="7/5", matrix=np.diag([0.2, -0.1, 0.3]))
    assert classify(d, 20_000, seed=5, jobs=1).to_json() == classify(d, 20_000, seed=5, jobs=4).to_json()
    assert classify(d, 20_000, seed=5).to_json() != classify(d, 20_000, seed=6).to_json()


# trajectory functionals

def test_chemin_check_runs(hyperbola_run_400, impulsive_run_400):
    law = GasLaw(3.0, 1 / 3)
    rep = chemin_check(hyperbola_run_400, law)
    assert rep.passed and rep.relative_spread < 0.03
    assert chemin_check(impulsive_run_400, law).passed


def test_chemin_check_single_snapshot():
    class One:
        times = np.array([0.0])

        def column(self, name):
            return np.array([1.0])
    assert chemin_check(One(), GasLaw(3.0, 1.0)).passed


def test_chemin_check_detects_growth():
    class Growing:
        times = np.linspace(0, 1, 11)

        def column(self, name):
            return 1 + self.times if name == "chemin" else np.zeros(11)
    assert not chemin_check(Growing(), GasLaw(3.0, 1.0)).passed


def test_dispersion_hyperbola_matches_closed_form(hyperbola_run_long):
    t = hyperbola_run_long.times
    m = (t >= 1.0 - 1e-12) & (t <= 16 + 1e-12)
    oracle = dispersion_exponent((t[m], (3 * np.pi / 8) / (1 + t[m] ** 2)))
    fit = dispersion_exponent(hyperbola_run_long, (1.0, 16.0))
    assert fit.slope == pytest.approx(oracle.slope, abs=0.02)
    # the log-log curve is not a straight line on [1, 16]: the exact slope is near -2.27
    assert oracle.slope == pytest.approx(-2.2721, abs=1e-3)


def test_dispersion_impulsive_matches_quadrature_oracle():
    # brute-force quadrature of the integral of rho^3 for the impulsive flow at 16 times on [1, 16]
    from scipy.integrate import quad

    from vacuumfront.exact import impulsive_flow
    f = impulsive_flow()
    t = np.linspace(1.0, 16.0, 16)
    P = []
    for tt in t:
        a, b = f.front(tt)
        P.append(quad(lambda x: f.eval(np.array([x]), tt).rho[0] ** 3, a, b, limit=400)[0])
    fit = dispersion_exponent((t, np.array(P)))
    assert fit.slope == pytest.approx(-2.264, abs=2e-3)
    assert fit.slope == pytest.approx(-2.2573, abs=0.01)


def test_dispersion_examples_and_errors():
    t = np.linspace(1, 16, 20)
    assert dispersion_exponent((t, np.full(20, 3.0))).slope == pytest.approx(0.0, abs=1e-12)
    assert dispersion_exponent((t, (1 + t) ** -2.0)).slope == pytest.approx(-2.0, abs=1e-12)
    with pytest.raises(ValueError):
        dispersion_exponent((t[:4], np.ones(4)))
    with pytest.raises(ValueError):
        dispersion_exponent((np.linspace(1, 3, 10), np.ones(10)))
    with pytest.raises(ValueError):
        dispersion_exponent((t, np.r_[np.ones(19), 0.0]))
