import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotorwp.carpets import density
from rotorwp.errors import FormatError, InvalidArgumentError, TruncationError
from rotorwp.wavepacket import (
    Frame,
    SHExpansion,
    Symmetry,
    TruncationPolicy,
    WavePacketSpec,
    build,
    build_asymmetric,
    build_linear,
    coherent_coefficients,
    intelligent_residual,
    observables,
    read_coefficients,
    shift_phi,
    symmetric_factor,
    symmetrize,
    write_coefficients,
)

from conftest import circular, linear


def packet_on_sphere(N, eta, theta, phi):
    pref = math.sqrt(2 * N / (4 * math.pi * math.sinh(2 * N)))
    return pref * np.exp(N * np.sin(theta) * (np.cos(phi) + 1j * eta * np.sin(phi)))


def quadrature_coefficients(N, eta, i_max, n_theta=64, n_phi=128):
    """b_IM = <Y_IM | Psi> by Gauss-Legendre in cos(theta) and a uniform phi rule."""
    from scipy.special import sph_harm_y

    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(x)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    T, P = np.meshgrid(theta, phi, indexing="ij")
    psi = packet_on_sphere(N, eta, T, P)
    out = np.zeros((i_max + 1, 2 * i_max + 1), dtype=complex)
    for I in range(i_max + 1):
        for M in range(-I, I + 1):
            Y = sph_harm_y(I, M, T, P)
            out[I, M + i_max] = np.sum(w[:, None] * np.conj(Y) * psi) * (2 * np.pi / n_phi)
    return out


class TestSpec:
    @pytest.mark.parametrize("N,eta", [(0.0, 1.0), (-1.0, 0.5), (3.0, 1.5), (3.0, -0.1)])
    def test_invalid(self, N, eta):
        with pytest.raises(InvalidArgumentError):
            WavePacketSpec(N, eta)


class TestCoefficientOracle:
    @pytest.mark.parametrize("N", [0.5, 1.5, 3.0])
    @pytest.mark.parametrize("eta", [0.0, 0.35, 1.0])
    def test_double_sum_matches_quadrature(self, N, eta):
        ref = quadrature_coefficients(N, eta, 12)
        got = coherent_coefficients(N, eta, 12)
        assert np.abs(got - ref).max() < 1e-8

    def test_packet_points_along_x(self):
        wp = circular(14.0)
        d0 = density(wp, math.pi / 2, 0.0)
        for th, ph in [(math.pi / 2, math.pi), (0.3, 0.0), (math.pi / 2, 0.2), (1.4, -0.1)]:
            assert density(wp, th, ph) < d0


class TestAsymmetric:
    def test_circular_only_m_equals_i(self):
        wp = circular(14.0)
        for (I, M), _ in wp.items():
            assert M == I

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.2, 20.0), st.floats(0.0, 1.0))
    def test_unit_norm(self, N, eta):
        wp = build(WavePacketSpec(N, eta))
        assert wp.norm() == pytest.approx(1.0, abs=1e-12)
        assert np.all((np.abs(wp.coeffs) == 0) | (np.abs(wp.coeffs) >= 1e-16))

    @pytest.mark.parametrize("N,tol", [(14.0, 1e-2), (110.0, 1e-3)])
    def test_mean_lz_large_n(self, N, tol):
        obs = observables(circular(N))
        assert obs.Lz == pytest.approx(N - 0.5, rel=tol)

    def test_truncation_failure_reports_weight(self):
        with pytest.raises(TruncationError) as info:
            build_asymmetric(WavePacketSpec(14.0, 1.0, truncation=TruncationPolicy(1e-12, 10)))
        assert 0.0 < info.value.captured_weight < 1.0
        assert info.value.i_cap == 10


class TestLinear:
    def test_only_m_zero(self):
        wp = linear(110.0)
        assert wp.frame is Frame.Z
        assert all(M == 0 for (_, M), _ in wp.items())

    def test_mean_spin(self):
        assert observables(linear(110.0)).i_bar == pytest.approx(10.0, abs=0.5)

    def test_coefficients_real_positive(self):
        wp = linear(110.0)
        b = wp.coeffs[:, wp.i_max]
        assert np.all(b.imag == 0)
        assert np.all(b.real[:11] > 0)

    def test_matches_rotated_coherent_packet(self):
        # the x-axis eta = 0 packet has the same I-weights as the z-axis one
        N = 6.0
        wx = build(WavePacketSpec(N, 0.0))
        wz = build_linear(N)
        L = min(wx.i_max, wz.i_max)
        assert np.abs(wx.weights_by_I()[: L + 1] - wz.weights_by_I()[: L + 1]).max() < 1e-12


class TestSymmetrize:
    def test_odd_i_vanish(self):
        wp = circular(14.0, symmetric=True)
        assert not np.any(wp.coeffs[1::2])
        assert wp.norm() == pytest.approx(1.0, abs=1e-12)

    def test_close_to_root_two(self):
        a, s = circular(14.0), circular(14.0, symmetric=True)
        even = np.abs(a.coeffs[::2]) > 1e-8
        ratio = s.coeffs[::2][even] / a.coeffs[::2][even]
        assert np.abs(ratio / math.sqrt(2) - 1).max() < 1e-6

    @pytest.mark.parametrize("N,eta", [(0.7, 1.0), (2.0, 0.3), (1.0, 0.0)])
    def test_exact_factor_gives_unit_norm_before_renormalising(self, N, eta):
        a = build(WavePacketSpec(N, eta))
        even = np.array(a.coeffs)
        even[1::2] = 0
        assert np.linalg.norm(even) * symmetric_factor(N, eta) == pytest.approx(1.0, abs=1e-10)

    def test_rejects_mismatched_parameters(self):
        with pytest.raises(InvalidArgumentError):
            symmetrize(circular(14.0), WavePacketSpec(10.0, 1.0, Symmetry.SYMMETRIC))

    @pytest.mark.parametrize("N,eta", [(14.0, 1.0), (5.0, 0.4)])
    def test_antipodal_density(self, N, eta):
        wp = circular(N, symmetric=True, eta=eta)
        th = np.linspace(0, math.pi, 19)[:, None]
        ph = np.linspace(0, 2 * math.pi, 37)[None, :]
        assert np.abs(density(wp, th, ph) - density(wp, math.pi - th, ph + math.pi)).max() < 1e-10


class TestObservables:
    def test_circular_centroid(self):
        obs = observables(circular(14.0))
        assert abs(obs.Lx) < 1e-12 and abs(obs.Ly) < 1e-12

    def test_circular_minimum_uncertainty(self):
        obs = observables(circular(14.0))
        assert obs.var_Lx * obs.var_Ly == pytest.approx(0.25 * obs.Lz ** 2, rel=1e-8)

    def test_elliptic_variance_ratio(self):
        obs = observables(circular(14.0, eta=0.5))
        assert obs.var_Lx / obs.var_Ly == pytest.approx(0.25, rel=1e-6)

    def test_mean_spin_identity(self):
        obs = observables(circular(14.0))
        assert obs.i_bar * (obs.i_bar + 1) == pytest.approx(obs.L2, rel=1e-14)
        assert obs.L2 >= obs.Lz ** 2

    def test_single_eigenstate(self):
        wp = SHExpansion.from_items([((10, 3), 1.0)])
        obs = observables(wp)
        assert obs.i_bar == pytest.approx(10.0, abs=1e-12)
        assert obs.Lz == pytest.approx(3.0)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.3, 16.0), st.floats(0.0, 1.0), st.booleans())
    def test_moment_invariants(self, N, eta, sym):
        wp = build(WavePacketSpec(N, eta, Symmetry.SYMMETRIC if sym else Symmetry.ASYMMETRIC))
        obs = observables(wp)
        assert obs.var_Lx >= 0 and obs.var_Ly >= 0
        assert obs.L2 >= obs.Lz ** 2 - 1e-9


class TestIntelligentResidual:
    @pytest.mark.parametrize("N,eta", [(14.0, 1.0), (6.0, 0.3), (6.0, 0.0), (20.0, 0.7)])
    def test_asymmetric_is_annihilated(self, N, eta):
        assert intelligent_residual(circular(N, eta=eta), eta) < 1e-8

    @pytest.mark.parametrize("N,eta", [(14.0, 1.0), (6.0, 0.3)])
    def test_symmetric_is_also_annihilated(self, N, eta):
        assert intelligent_residual(circular(N, symmetric=True, eta=eta), eta) < 1e-8

    def test_perturbation_detected(self):
        wp = circular(14.0)
        c = np.array(wp.coeffs)
        c[10, 9 + wp.i_max] += 0.1  # an M = I entry would still be annihilated by L+
        assert intelligent_residual(wp.replace(c).normalized(), 1.0) > 1e-3


class TestCoefficientFile:
    def test_round_trip(self, tmp_path):
        wp = circular(5.0, eta=0.4)
        path = tmp_path / "wp.txt"
        write_coefficients(wp, path, {"note": "x"})
        back = read_coefficients(path)
        assert back.i_max == wp.i_max and back.frame is wp.frame
        assert np.array_equal(back.coeffs, wp.coeffs)
        assert back.meta["N"] == 5.0 and back.meta["note"] == "x"

    def test_header_order(self, tmp_path):
        path = tmp_path / "wp.txt"
        write_coefficients(linear(20.0), path)
        head = [l for l in path.read_text().splitlines() if l.startswith("# ")][1:6]
        assert [l.split(":")[0][2:] for l in head] == ["N", "eta", "symmetry", "frame", "i_max"]

    @pytest.mark.parametrize("line", ["1 0 0.5", "2 3 1 0", "a 0 1 0"])
    def test_bad_lines(self, tmp_path, line):
        path = tmp_path / "bad.txt"
        path.write_text(f"# N: 1\n0 0 1 0\n{line}\n")
        with pytest.raises(FormatError):
            read_coefficients(path)


class TestRotation:
    @settings(max_examples=30, deadline=None)
    @given(st.floats(-7, 7), st.floats(0.1, 3.0), st.floats(-3, 3))
    def test_shift_rotates_density(self, alpha, theta, phi):
        wp = circular(4.0, eta=0.6)
        assert density(shift_phi(wp, alpha), theta, phi) == pytest.approx(
            density(wp, theta, phi + alpha), abs=1e-12
        )
