import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import sph_harm_y
from sympy import S
from sympy.physics.quantum.cg import CG

from rotorwp.angular import (
    AngularIndex,
    cg_stretched,
    cg_zero_projection,
    clebsch_gordan,
    legendre_table,
    log_mod_sph_bessel_i,
    mod_sph_bessel_i,
    spherical_harmonic,
)
from rotorwp.errors import InvalidArgumentError


def exact_cg(l, lp, m, mp, I, M):
    return float(CG(S(l), S(m), S(lp), S(mp), S(I), S(M)).doit())


def series_i(I, x, dps=50):
    """i_I(x) = sum_k x^(2k+I) / (2^k k! (2I+2k+1)!!), summed in high precision."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        term = x ** I / mpmath.fac2(2 * I + 1)
        total, k = term, 0
        while abs(term) > total * mpmath.mpf(10) ** (-dps + 5):
            k += 1
            term *= x * x / (2 * k * (2 * I + 2 * k + 1))
            total += term
        return float(total)


class TestAngularIndex:
    def test_rejects_m_beyond_i(self):
        with pytest.raises(InvalidArgumentError):
            AngularIndex(2, 3)

    def test_rejects_negative_i(self):
        with pytest.raises(InvalidArgumentError):
            AngularIndex(-1, 0)

    def test_valid(self):
        assert AngularIndex(3, -3) == AngularIndex(3, -3)


class TestClebschGordan:
    def test_known_values(self):
        assert clebsch_gordan(1, 1, 0, 0, 2, 0) == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
        assert clebsch_gordan(1, 1, 1, -1, 0, 0) == pytest.approx(1 / math.sqrt(3), abs=1e-15)

    @pytest.mark.parametrize("l,m", [(0, 0), (3, -2), (7, 7), (12, 5)])
    def test_coupling_with_zero_is_identity(self, l, m):
        assert clebsch_gordan(l, 0, m, 0, l, m) == pytest.approx(1.0, abs=1e-14)

    def test_selection_rules_give_exact_zero(self):
        assert clebsch_gordan(2, 1, 1, 0, 3, 0) == 0.0
        assert clebsch_gordan(1, 1, 0, 0, 3, 0) == 0.0

    def test_negative_momentum_rejected(self):
        with pytest.raises(InvalidArgumentError):
            clebsch_gordan(-1, 1, 0, 0, 1, 0)

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 8), st.integers(0, 8), st.data())
    def test_matches_exact_rational_oracle(self, l, lp, data):
        m = data.draw(st.integers(-l, l))
        mp = data.draw(st.integers(-lp, lp))
        I = data.draw(st.integers(max(abs(l - lp), abs(m + mp)), l + lp))
        assert clebsch_gordan(l, lp, m, mp, I, m + mp) == pytest.approx(
            exact_cg(l, lp, m, mp, I, m + mp), abs=1e-13
        )

    @pytest.mark.parametrize("l,lp", [(3, 5), (7, 7), (12, 9), (12, 12)])
    def test_orthogonality(self, l, lp):
        Is = range(abs(l - lp), l + lp + 1)
        for M in (0, 1, -3):
            rows = []
            for I in Is:
                if abs(M) > I:
                    continue
                rows.append([clebsch_gordan(l, lp, m, M - m, I, M)
                             if abs(M - m) <= lp else 0.0 for m in range(-l, l + 1)])
            G = np.array(rows) @ np.array(rows).T
            assert np.abs(G - np.eye(len(rows))).max() < 1e-10

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 10), st.integers(0, 10), st.data())
    def test_exchange_symmetry(self, l, lp, data):
        m = data.draw(st.integers(-l, l))
        mp = data.draw(st.integers(-lp, lp))
        I = data.draw(st.integers(max(abs(l - lp), abs(m + mp)), l + lp))
        a = clebsch_gordan(l, lp, m, mp, I, m + mp)
        b = clebsch_gordan(lp, l, mp, m, I, m + mp)
        assert a == pytest.approx((-1) ** (l + lp - I) * b, abs=1e-12)

    def test_closed_forms_match_racah_sum(self):
        for l in range(0, 14):
            for lp in range(0, 14):
                for I in range(abs(l - lp), l + lp + 1):
                    z = float(cg_zero_projection(l, lp, I))
                    assert z == pytest.approx(clebsch_gordan(l, lp, 0, 0, I, 0), abs=1e-12)
                    if abs(l - lp) <= I:
                        s = float(cg_stretched(l, lp, I))
                        assert s == pytest.approx(clebsch_gordan(l, lp, l, -lp, I, l - lp), abs=1e-12)

    def test_large_arguments_stay_finite(self):
        v = float(cg_zero_projection(60, 62, 100))
        assert math.isfinite(v)
        assert v == pytest.approx(exact_cg(60, 62, 0, 0, 100, 0), rel=1e-10)


class TestSphericalHarmonic:
    def test_constant_mode(self):
        assert spherical_harmonic((0, 0), 1.1, 2.3) == pytest.approx(1 / math.sqrt(4 * math.pi))

    def test_pole_value(self):
        assert spherical_harmonic((1, 0), 0.0, 0.0) == pytest.approx(math.sqrt(3 / (4 * math.pi)))

    def test_theta_range_checked(self):
        with pytest.raises(InvalidArgumentError):
            spherical_harmonic((1, 0), -0.1, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 40), st.data(), st.floats(0, math.pi), st.floats(-7, 7))
    def test_matches_scipy(self, I, data, theta, phi):
        M = data.draw(st.integers(-I, I))
        ref = complex(sph_harm_y(I, M, theta, phi))
        assert abs(spherical_harmonic((I, M), theta, phi) - ref) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 30), st.data(), st.floats(0, math.pi), st.floats(-4, 4))
    def test_negative_m_conjugation(self, I, data, theta, phi):
        M = data.draw(st.integers(1, I))
        a = spherical_harmonic((I, -M), theta, phi)
        b = (-1) ** M * spherical_harmonic((I, M), theta, phi).conjugate()
        assert abs(a - b) < 1e-13

    def test_addition_theorem(self):
        theta = np.linspace(0, math.pi, 23)
        P = legendre_table(30, np.cos(theta), np.sin(theta))
        for I in range(31):
            total = P[:, I, 0] ** 2 + 2 * np.sum(P[:, I, 1 : I + 1] ** 2, axis=1)
            assert np.abs(total - (2 * I + 1) / (4 * math.pi)).max() < 1e-10

    def test_normalisation_by_quadrature(self):
        x, w = np.polynomial.legendre.leggauss(40)
        P = legendre_table(30, x)
        norms = 2 * math.pi * np.einsum("k,kim->im", w, P ** 2)
        mask = np.tril(np.ones((31, 31), dtype=bool))
        assert np.abs(norms[mask] - 1.0).max() < 1e-10

    def test_high_degree_table_finite(self):
        P = legendre_table(150, np.linspace(-1, 1, 101))
        assert np.all(np.isfinite(P))


class TestModSphBessel:
    @pytest.mark.parametrize("x", [1e-3, 0.5, 2.0, 14.0, 110.0])
    def test_order_zero_closed_form(self, x):
        assert mod_sph_bessel_i(0, x) == pytest.approx(math.sinh(x) / x, rel=1e-14)

    def test_series_value(self):
        assert mod_sph_bessel_i(1, 2.0) == pytest.approx(series_i(1, 2.0), rel=1e-14)

    @pytest.mark.parametrize("x", [0.3, 2.0, 14.0, 60.0, 110.0])
    def test_against_series_oracle(self, x):
        logs = log_mod_sph_bessel_i(60, x)
        for I in range(0, 61, 3):
            ref = series_i(I, x)
            assert logs[I] == pytest.approx(math.log(ref), abs=1e-12 * max(1.0, abs(math.log(ref))))

    def test_decreasing_in_order(self):
        vals = np.exp(log_mod_sph_bessel_i(40, 14.0))
        assert np.all(np.diff(vals) < 0)

    def test_zero_argument(self):
        assert mod_sph_bessel_i(0, 0.0) == 1.0
        assert mod_sph_bessel_i(3, 0.0) == 0.0

    def test_negative_argument_rejected(self):
        with pytest.raises(InvalidArgumentError):
            mod_sph_bessel_i(1, -1.0)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(1.0, 150.0), st.integers(1, 59))
    def test_three_term_recurrence(self, x, I):
        v = np.exp(log_mod_sph_bessel_i(60, x))
        lhs = v[I - 1] - v[I + 1]
        rhs = (2 * I + 1) / x * v[I]
        assert lhs == pytest.approx(rhs, rel=1e-9)
