"""Property tests for the stated invariants of each module."""
import math

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from qpjacobi import cocycle as cc
from qpjacobi import domination as dom
from qpjacobi import spectrum as sp
from qpjacobi import weyl
from qpjacobi.model import GOLDEN, JacobiModel, TrigPoly, mean_log_abs, preset, translate

PRESETS = [preset(n) for n in ("free", "almost-mathieu", "singular-harper")]
SLOW = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])

coef = st.floats(-2, 2, allow_nan=False)
phase = st.floats(0, 1, allow_nan=False, exclude_max=True)
models = st.sampled_from(PRESETS)


@st.composite
def hermitian_polys(draw):
    K = draw(st.integers(0, 3))
    terms = {0: complex(draw(coef), 0)}
    for k in range(1, K + 1):
        a = complex(draw(coef), draw(coef))
        terms[k] = a
        terms[-k] = a.conjugate()
    return TrigPoly(terms)


@st.composite
def complex_energies(draw, im_lo=0.1, im_hi=2.0):
    return complex(draw(st.floats(-4, 4)), draw(st.floats(im_lo, im_hi)))


@given(hermitian_polys(), st.lists(phase, min_size=1, max_size=50))
def test_hermitian_poly_is_real(p, xs):
    assert np.max(np.abs(np.imag(p(np.array(xs))))) <= 1e-12


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=4))
@SLOW
def test_mean_log_roots_vs_quadrature(cs):
    p = TrigPoly(dict(enumerate(cs)))
    assume(not p.is_zero() and abs(cs[-1]) > 1e-3)
    assume(all(abs(abs(r) - 1) > 1e-3 for r in np.roots(cs[::-1])))
    assert abs(mean_log_abs(p, "roots") - mean_log_abs(p, "quadrature")) <= 1e-6


@given(phase, st.integers(-10**6, 10**6), st.integers(-10**6, 10**6))
def test_translate_composes(x, a, b):
    m = PRESETS[0]
    y = translate(m, translate(m, x, a), b)
    z = translate(m, x, a + b)
    d = abs(y - z)
    assert min(d, 1 - d) <= 1e-12


@given(models, phase, st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_det_identity(m, x, E):
    rep = cc.det_identity_check(m, E, x)
    assert rep["det_A"] <= 1e-14 * max(1.0, abs(E)) ** 2


@given(models, phase, complex_energies(0.0, 2.0), st.integers(1, 40), st.integers(1, 40))
@SLOW
def test_iterate_cocycle_property(m, x, E, n1, n2):
    P, s = cc.iterate(m, "A", E, x, n1 + n2)
    P1, s1 = cc.iterate(m, "A", E, x, n1)
    P2, s2 = cc.iterate(m, "A", E, translate(m, x, n1), n2)
    Q = P2 @ P1
    nq = np.linalg.norm(Q, 2)
    assume(nq > 1e-300)
    assert abs(s1 + s2 + math.log(nq) - s) <= 1e-10 * max(1.0, abs(s))
    np.testing.assert_allclose(Q / nq, P, atol=1e-10)


@given(models, phase, complex_energies(0.5, 2.0))
@SLOW
def test_lyapunov_shift_invariance_and_nondegeneracy(m, x, E):
    n = 4000
    _, s0 = cc.iterate(m, "A", E, x, n)
    _, s1 = cc.iterate(m, "A", E, translate(m, x, 1), n)
    assert abs(s0 - s1) / n <= 2e-3
    assert s0 / n > mean_log_abs(m.c) / 2 + 0.05


@given(models, phase, complex_energies())
@settings(max_examples=100, deadline=None)
def test_m_bound_and_herglotz(m, x, E):
    for fn in (weyl.m_minus_truncated, weyl.m_plus_truncated):
        v = fn(m, E, x).value
        assert abs(v) < 1 / E.imag
        assert v.imag > 0


@given(models, phase, complex_energies())
@settings(max_examples=500, deadline=None)
def test_riccati_agrees_with_truncation(m, x, E):
    r = weyl.m_minus_riccati(m, E, x, K=1000)
    t = weyl.m_minus_truncated(m, E, x).value
    assert abs(r - t) <= 1e-6


@given(models, phase, st.floats(0.2, 3.0), st.booleans())
@SLOW
def test_green_matches_direct_solve(m, x, gap, above):
    E = (m.operator_bound() + gap) * (1 if above else -1)
    assert abs(weyl.green_diag(m, E, x) - weyl.green_diag_direct(m, E, x)) <= 1e-6


mat = st.tuples(*[st.complex_numbers(max_magnitude=5, allow_nan=False)] * 4)


@given(mat, st.complex_numbers(max_magnitude=100, allow_nan=False))
@settings(max_examples=2000)
def test_proj_action_chart_agrees(entries, z):
    D = np.array(entries).reshape(2, 2)
    assume(abs(np.linalg.det(D)) > 1e-6)
    a = dom.ProjPoint.from_value(dom.mobius(D, z))
    assert a.chordal(dom.proj_action(D, z)) <= 1e-12


@given(mat, st.complex_numbers(max_magnitude=3, allow_nan=False))
def test_finite_difference_derivative(entries, z):
    D = np.array(entries).reshape(2, 2)
    den = D[0, 0] + D[0, 1] * z
    assume(abs(den) > 0.1 and abs(np.linalg.det(D)) > 1e-3)
    h = 1e-6
    fd = (dom.mobius(D, z + h) - dom.mobius(D, z - h)) / (2 * h)
    d = dom.mobius_derivative(D, z)
    assert abs(fd - d) <= 1e-6 * max(abs(d), 1e-2)


@given(models, phase)
@SLOW
def test_section_derivative_closed_form(m, x):
    E = m.operator_bound() + 0.5
    s = weyl.section_pair(m, E, np.array([[x]]))["u_minus"][:, 0]
    z = weyl.section_value(s)
    assume(math.isfinite(abs(z)))
    closed = dom.section_derivative(m, E, x)
    generic = dom.proj_derivative(m, E, x, z)
    assert abs(closed - generic) <= 1e-8 * max(1.0, abs(generic))


finite_sets = st.lists(st.floats(-10, 10), min_size=1, max_size=20)


@given(finite_sets, finite_sets, finite_sets)
def test_hausdorff_metric(a, b, c):
    assert sp.hausdorff(a, b) == sp.hausdorff(b, a)
    assert sp.hausdorff(a, a) == 0
    assert sp.hausdorff(a, c) <= sp.hausdorff(a, b) + sp.hausdorff(b, c) + 1e-12


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), max_size=5))
@settings(max_examples=30, deadline=None)
def test_persist_roundtrip(tmp_path_factory, vals):
    from qpjacobi.domination import DominationCertificate, Status
    rows = [sp.ScanRow(v, DominationCertificate(Status.DS, 3, v, v, v, v), v, v, v) for v in vals]
    path = str(tmp_path_factory.mktemp("rt") / "s.csv")
    sp.persist(sp.ScanResult(rows, {}), path)
    back = sp.load(path)
    assert [b["energy"] for b in back] == sorted(vals)
    assert all(b["le_B"] == b["energy"] and b["N"] == 3 for b in back)


@given(st.floats(0.01, 0.3))
@SLOW
def test_far_energies_always_certified(extra):
    m = PRESETS[2]
    E = m.operator_bound() + extra
    assert dom.certify(m, E, grid=None).status is dom.Status.DS
