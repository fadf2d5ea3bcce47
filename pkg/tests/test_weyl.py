import math

import numpy as np
import pytest

import oracles
from qpjacobi import weyl
from qpjacobi.exceptions import DomainError, UsageError
from qpjacobi.model import GOLDEN, JacobiModel, TrigPoly, preset, uniform_grid

FREE = preset("free")
AMO = preset("almost-mathieu")
SH = preset("singular-harper")


def test_free_m_values():
    assert weyl.m_minus_truncated(FREE, 3, 0.2).value == pytest.approx(oracles.M_FREE_3, abs=1e-10)
    assert weyl.m_plus_truncated(FREE, 3, 0.2).value == pytest.approx(oracles.M_FREE_3, abs=1e-10)
    assert weyl.m_plus_truncated(FREE, -3, 0.2).value == pytest.approx(-oracles.M_FREE_3,
                                                                      abs=1e-10)


def test_shifted_free_energy_covariance():
    m = JacobiModel((GOLDEN,), TrigPoly.constant(1.0), TrigPoly.constant(5.0))
    assert weyl.m_minus_truncated(m, 8, 0.0).value == pytest.approx(oracles.M_FREE_3, abs=1e-10)


def test_complex_energy_bound_and_riccati():
    v = weyl.m_minus_truncated(FREE, 2j, 0.0).value
    assert abs(v) < 0.5
    assert v == pytest.approx(oracles.M_FREE_2I, abs=1e-9)
    assert weyl.m_minus_riccati(FREE, 2j, 0.0, K=1000) == pytest.approx(oracles.M_FREE_2I,
                                                                      abs=1e-12)
    assert weyl.m_minus_riccati(FREE, 3 + 1e-3j, 0.0, K=20000) == pytest.approx(
        oracles.M_FREE_3, abs=1e-3)


def test_riccati_domain():
    with pytest.raises(DomainError):
        weyl.m_minus_riccati(FREE, 3.0, 0.0)


def test_riccati_decoupled_step():
    # c(T^-1 x) = 0 at x = 1/2 + alpha, so one step gives -1/(E - v(x))
    x = 0.5 + SH.alpha[0]
    E = 1 + 1j
    expected = -1 / (E - SH.v(x))
    assert weyl.m_minus_riccati(SH, E, SH.translate(x, 1), K=5) == pytest.approx(expected,
                                                                                 abs=1e-14)


def test_amo_truncated_converges():
    r = weyl.m_plus_truncated(AMO, 3 + 0j, 0.1)
    assert math.isfinite(abs(r.value)) and r.residual <= 1e-8


def test_m_field_matches_scalar_solves():
    g = uniform_grid(1, 16)
    for side, fn in (("minus", weyl.m_minus_truncated), ("plus", weyl.m_plus_truncated)):
        f = weyl.m_field(AMO, 2.8, g, side)
        direct = [fn(AMO, 2.8, x).value for x in g.points[:, 0]]
        np.testing.assert_allclose(f.values, direct, atol=1e-8)
    with pytest.raises(UsageError):
        weyl.m_field(AMO, 2.8, g, "left")


def test_free_sections():
    g = uniform_grid(1, 8)
    sm = weyl.sections(FREE, 3, g, "s_minus").values
    sp = weyl.sections(FREE, 3, g, "s_plus").values
    np.testing.assert_allclose(sm, oracles.S_MINUS_FREE_3, atol=1e-10)
    np.testing.assert_allclose(sp, oracles.S_PLUS_FREE_3, atol=1e-10)


def test_section_is_zero_where_c_vanishes():
    # x with c(T^-1 x) = 0
    x = 0.5 + SH.alpha[0]
    g = uniform_grid(1, 4)
    pts = np.array([[x]])
    pair = weyl.section_pair(SH, 6.0, pts)
    assert pair["u_minus"][1, 0] == 0
    assert weyl.section_value(pair["u_minus"][:, 0]) == 0
    assert len(weyl.sections(SH, 6.0, g, "s_tilde_plus").values) == 4


def test_constant_coupling_section_is_minus_m():
    g = uniform_grid(1, 32)
    s = weyl.sections(AMO, 2.9, g, "s_minus").values
    m = weyl.m_field(AMO, 2.9, g, "minus").values
    np.testing.assert_allclose(s, -m, atol=1e-12)


def test_invariance_residuals():
    g = uniform_grid(1, 2048)
    assert weyl.invariance_residual(FREE, 3, g) <= 1e-10
    assert weyl.invariance_residual(AMO, 3, g) <= 1e-7
    assert weyl.invariance_residual(AMO, 3, g, kind="A_tilde") <= 1e-7
    assert weyl.invariance_residual(SH, 5.5, g, side="plus") <= 1e-7


def test_free_spectrum_sections_do_not_converge():
    pair = weyl.section_pair(FREE, 0.0, uniform_grid(1, 16).points)
    assert not pair["converged"]


def test_green_free():
    assert weyl.green_diag(FREE, 3, 0.3) == pytest.approx(oracles.G_FREE_3, abs=1e-10)
    assert weyl.green_diag_direct(FREE, 3, 0.3) == pytest.approx(oracles.G_FREE_3, abs=1e-10)
    assert weyl.green_diag(FREE, 2j, 0.3) == pytest.approx(weyl.green_diag_direct(FREE, 2j, 0.3),
                                                         abs=1e-8)


def test_green_far_energy_bound():
    for m in (FREE, AMO, SH):
        E = m.operator_bound() + 10
        assert abs(weyl.green_diag(m, E, 0.17)) <= 0.1 + 1e-9


def test_inverse_green_bounds_distance():
    pts = uniform_grid(1, 64).points
    f = weyl.inverse_green(FREE, 2.5, pts)
    # G = -1 / sqrt(E^2 - 4) for the free model above the band
    np.testing.assert_allclose(f, -1.5, atol=1e-9)
    assert np.min(np.abs(f)) >= 0.5


def test_transversality():
    g = uniform_grid(1, 256)
    assert weyl.transversality_gap(FREE, 3, g) == pytest.approx(oracles.GAP_FREE_3, abs=1e-10)
    assert weyl.transversality_gap(FREE, 2.1, g) >= 0.1
    assert weyl.transversality_gap(SH, 5.5, g) >= 0.25


def test_section_gap_infinity_rules():
    um = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0]])
    up = np.array([[0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    np.testing.assert_array_equal(weyl.section_gap(um, up), [0.0, np.inf, np.inf])


def test_field_csv(tmp_path):
    g = uniform_grid(1, 4)
    path = tmp_path / "m.csv"
    weyl.m_field(FREE, 3, g).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,re,im,is_infinity,truncation_M,residual"
    assert len(lines) == 5
