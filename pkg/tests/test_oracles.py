import mpmath as mp
import numpy as np
import pytest

import oracles


@pytest.fixture(autouse=True)
def _precision():
    with mp.workdps(40):
        yield


def test_constant_matrix_exponent():
    ev = mp.eig(mp.matrix([[3, -1], [1, 0]]))[0]
    assert float(mp.log(max(abs(e) for e in ev))) == pytest.approx(oracles.L_FREE_3, abs=1e-15)


def test_free_weyl_values():
    roots = mp.polyroots([1, 3, 1])
    m = min(roots, key=abs)
    assert float(m) == pytest.approx(oracles.M_FREE_3, abs=1e-15)
    assert float(-m) == pytest.approx(oracles.S_MINUS_FREE_3, abs=1e-15)
    assert float(-1 / m) == pytest.approx(oracles.S_PLUS_FREE_3, abs=1e-15)
    assert float(1 / (-m - (-1 / m))) == pytest.approx(oracles.G_FREE_3, abs=1e-15)
    assert float(abs(-1 / m + m)) == pytest.approx(oracles.GAP_FREE_3, abs=1e-15)
    assert float(m * m) == pytest.approx(oracles.DERIV_FREE_3, abs=1e-15)


def test_free_green_function_by_contour():
    # G(0,0; E) = (1/2pi) int_0^{2pi} dk / (2 cos k - E)
    g = mp.quad(lambda k: 1 / (2 * mp.cos(k) - 3), [0, 2 * mp.pi]) / (2 * mp.pi)
    assert float(g) == pytest.approx(oracles.G_FREE_3, abs=1e-15)


def test_riccati_fixed_point():
    roots = mp.polyroots([1, 2j, 1])
    herglotz = [r for r in roots if mp.im(r) > 0]
    assert len(herglotz) == 1
    assert complex(herglotz[0]) == pytest.approx(oracles.M_FREE_2I, abs=1e-15)


def test_mahler_measure():
    assert float(mp.quad(lambda t: mp.log(abs(2 + mp.expjpi(2 * t))), [0, 1])) == pytest.approx(
        oracles.LOG_2, abs=1e-12)
    assert np.log(2) == pytest.approx(oracles.LOG_2, abs=1e-16)
