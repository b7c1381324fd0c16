"""Core model kernel: fluxes, Jacobian, discriminant, diffusion, region map."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, assume, settings
from hypothesis import strategies as st

from pedflow.model import (
    VelocityParams,
    classify_hyperbolicity_map,
    diffusion_coefficient,
    flux_f,
    flux_g,
    flux_g_prime,
    hyperbolicity_discriminant,
    jacobian,
    jacobian_trace,
    write_hyperbolicity_csv,
)

V_REF = VelocityParams(1.0, 0.5, 0.5, 0.25)


def discriminant_oracle(rho_plus, rho_minus, v):
    """Literal longhand evaluation, independent of the library's grouping."""
    f = lambda u: u * (1.0 - u)
    fp = lambda u: 1.0 - 2.0 * u
    g = lambda u: (v.c3 - v.c2 - v.c1 + v.c0) * u**2 + (v.c2 + v.c1 - 2.0 * v.c0) * u + v.c0
    gp = lambda u: 2.0 * (v.c3 - v.c2 - v.c1 + v.c0) * u + (v.c2 + v.c1 - 2.0 * v.c0)
    return (fp(rho_minus) * g(rho_plus) + fp(rho_plus) * g(rho_minus)) ** 2 - 4.0 * f(
        rho_minus
    ) * f(rho_plus) * gp(rho_minus) * gp(rho_plus)


@st.composite
def velocity_params(draw):
    c0 = draw(st.floats(0.1, 5.0))
    c1 = c0 * draw(st.floats(0.05, 1.0))
    c2 = c0 * draw(st.floats(0.05, 1.0))
    c3 = min(c1, c2) * draw(st.floats(0.05, 1.0))
    return VelocityParams(c0, c1, c2, c3)


densities = st.floats(0.0, 1.0)


class TestVelocityParams:
    def test_derived_coefficients(self):
        v = V_REF
        assert v.g_a == 0.25 and v.g_b == -1.0 and v.g_c == 1.0
        assert v.alpha1 == 0.5 and v.alpha3 == 0.25

    def test_from_slowdown(self):
        v = VelocityParams.from_slowdown(2, c0=0.8)
        assert (v.c0, v.c1, v.c2, v.c3) == (0.8, 0.4, 0.4, 0.2)

    @pytest.mark.parametrize(
        "c",
        [
            (1.0, 0.5, 0.5, 0.0),  # c3 must be positive
            (1.0, 0.5, 0.5, 0.6),  # c3 above min(c1, c2)
            (1.0, 1.2, 0.5, 0.25),  # c1 above c0
            (-1.0, -0.5, -0.5, -0.25),
        ],
    )
    def test_rejects_bad_ordering(self, c):
        with pytest.raises(ValueError):
            VelocityParams(*c)

    def test_degenerate_equalities_allowed(self):
        VelocityParams(1.0, 1.0, 1.0, 1.0)


class TestFluxes:
    def test_f_values(self):
        assert flux_f(0.0) == 0.0
        assert flux_f(1.0) == 0.0
        assert flux_f(0.5) == 0.25

    def test_g_endpoints_reference(self):
        assert flux_g(0.0, V_REF) == 1.0
        assert flux_g(1.0, V_REF) == 0.25

    def test_g_midpoint(self):
        # quadratic 0.25 u^2 - u + 1 at u = 0.5
        assert flux_g(0.5, V_REF) == pytest.approx(0.5625, abs=1e-15)

    @given(velocity_params())
    def test_g_boundary_identity(self, v):
        assert abs(flux_g(0.0, v) - v.c0) <= 4 * math.ulp(v.c0)
        assert abs(flux_g(1.0, v) - v.c3) <= 4 * math.ulp(v.c3)

    @given(velocity_params(), densities)
    def test_g_matches_polynomial(self, v, u):
        poly = (v.g_a * u + v.g_b) * u + v.g_c
        assert flux_g(u, v) == pytest.approx(poly, abs=1e-14 * v.c0)

    def test_g_prime(self):
        assert flux_g_prime(0.6, V_REF) == pytest.approx(-0.7, abs=1e-15)


class TestJacobian:
    def test_vacuum(self):
        assert np.allclose(jacobian(0.0, 0.0, V_REF), [[1.0, 0.0], [0.0, -1.0]], atol=0)

    def test_jammed(self):
        assert np.allclose(jacobian(1.0, 1.0, V_REF), [[-0.25, 0.0], [0.0, 0.25]], atol=1e-15)

    def test_interior_point(self):
        j = jacobian(0.6, 0.6, V_REF)
        assert np.allclose(j, [[-0.098, -0.168], [0.168, 0.098]], atol=1e-12)

    @given(velocity_params(), densities)
    def test_trace_vanishes_at_symmetric_states(self, v, r):
        assert np.trace(jacobian(r, r, v)) == 0.0
        assert jacobian_trace(r, r, v) == 0.0

    @given(velocity_params(), densities, densities)
    def test_eigenvalue_consistency(self, v, rp, rm):
        d = hyperbolicity_discriminant(rp, rm, v)
        j = jacobian(rp, rm, v)
        tr = j[0, 0] + j[1, 1]
        det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
        scale = max(tr * tr, abs(4.0 * det), 1e-30)
        assert abs((tr * tr - 4.0 * det) - d) <= 1e-12 * scale
        if d > 1e-10 * scale:
            eigs = np.linalg.eigvals(j)
            assert np.max(np.abs(eigs.imag)) == 0.0
            lam_hi = 0.5 * (tr + math.sqrt(d))
            assert lam_hi == pytest.approx(float(np.max(eigs.real)), abs=1e-10 * max(1.0, v.c0))


class TestDiscriminant:
    def test_frozen_values_against_oracle(self):
        d_non = hyperbolicity_discriminant(0.6, 0.6, V_REF)
        d_hyp = hyperbolicity_discriminant(0.1, 0.1, V_REF)
        assert abs(d_non - discriminant_oracle(0.6, 0.6, V_REF)) <= 1e-10
        assert abs(d_hyp - discriminant_oracle(0.1, 0.1, V_REF)) <= 1e-10
        assert d_non == pytest.approx(-0.07448, abs=1e-12)
        assert d_hyp == pytest.approx(2.055895, abs=1e-12)
        assert d_non < 0.0 < d_hyp

    def test_vacuum_value(self):
        assert hyperbolicity_discriminant(0.0, 0.0, V_REF) == 4.0 * V_REF.c0**2

    @given(velocity_params(), densities, densities)
    def test_swap_symmetry_exact(self, v, rp, rm):
        assert hyperbolicity_discriminant(rp, rm, v) == hyperbolicity_discriminant(rm, rp, v)

    @given(velocity_params(), densities, densities, st.floats(0.1, 10.0))
    def test_scale_covariance(self, v, rp, rm, lam):
        d = hyperbolicity_discriminant(rp, rm, v)
        d_scaled = hyperbolicity_discriminant(rp, rm, v.scaled(lam))
        assert d_scaled == pytest.approx(lam * lam * d, rel=1e-12, abs=1e-13 * lam * lam * v.c0**2)
        assume(abs(d) > 1e-12 * v.c0**2)
        assert (d_scaled <= 0.0) == (d <= 0.0)

    @given(velocity_params(), densities, densities, st.floats(0.1, 10.0))
    def test_jacobian_scales_linearly(self, v, rp, rm, lam):
        j = jacobian(rp, rm, v)
        j_scaled = jacobian(rp, rm, v.scaled(lam))
        assert np.allclose(j_scaled, lam * j, rtol=1e-12, atol=1e-13 * lam * v.c0)


class TestDiffusion:
    def test_empty_opposite_lane(self):
        assert diffusion_coefficient(0.0, V_REF, 1.0) == 0.5 * V_REF.c0

    def test_jammed_opposite_lane(self):
        v = VelocityParams(0.8, 0.4, 0.4, 0.2)
        assert diffusion_coefficient(1.0, v, 1.0) == pytest.approx(0.5 * v.c3, abs=1e-15)

    def test_midpoint(self):
        assert diffusion_coefficient(0.5, V_REF, 1.0) == pytest.approx(0.28125, abs=1e-15)

    def test_scales_with_eps(self):
        assert diffusion_coefficient(0.3, V_REF, 2.0) == 2.0 * diffusion_coefficient(
            0.3, V_REF, 1.0
        )

    def test_rejects_negative_eps(self):
        with pytest.raises(ValueError):
            diffusion_coefficient(0.3, V_REF, -1.0)

    @given(velocity_params(), densities, st.floats(0.0, 5.0))
    def test_positive_inside_box(self, v, r, eps):
        assert diffusion_coefficient(r, v, eps) >= 0.0


class TestHyperbolicityMap:
    def test_rejects_small_resolution(self):
        with pytest.raises(ValueError):
            classify_hyperbolicity_map(V_REF, 1)

    def test_flags_center_nonhyperbolic(self):
        rm, rp, flags = classify_hyperbolicity_map(V_REF, 64)
        i = int(np.argmin(np.abs(rm - 0.6)))
        j = int(np.argmin(np.abs(rp - 0.6)))
        assert flags[i, j]

    def test_near_corner_cells_hyperbolic(self):
        _, _, flags = classify_hyperbolicity_map(V_REF, 64)
        assert not flags[0, 0] and not flags[0, -1] and not flags[-1, 0] and not flags[-1, -1]

    def test_swap_symmetry(self):
        _, _, flags = classify_hyperbolicity_map(V_REF, 33)
        assert np.array_equal(flags, flags.T)

    def test_ratio_invariance_dyadic(self):
        _, _, flags_1 = classify_hyperbolicity_map(V_REF, 40)
        _, _, flags_2 = classify_hyperbolicity_map(VelocityParams(2.0, 1.0, 1.0, 0.5), 40)
        assert np.array_equal(flags_1, flags_2)

    def test_csv_round_trip(self, tmp_path):
        rm, rp, flags = classify_hyperbolicity_map(V_REF, 5)
        path = tmp_path / "map.csv"
        write_hyperbolicity_csv(path, rm, rp, flags)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 25
        assert set(rows[0]) == {"rho_minus", "rho_plus", "nonhyperbolic"}
        k = 0
        for i in range(5):
            for j in range(5):
                assert float(rows[k]["rho_minus"]) == rm[i]
                assert float(rows[k]["rho_plus"]) == rp[j]
                assert int(rows[k]["nonhyperbolic"]) == int(flags[i, j])
                k += 1
