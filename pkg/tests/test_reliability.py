import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from oracles import matching_system
from qreliability.model import DomainError, ModelParams, NumericError
from qreliability.reliability import (
    DegenerateRegimeError,
    FitError,
    InsufficientDataError,
    ReliabilityReport,
    applicability_min_field,
    characteristic_length,
    error_derivative,
    measurement_pipeline,
    reading,
    relation_fit,
    scaling_fit,
    sensitivity,
    sweep,
)
from qreliability.scattering import scatter_spinor

# fast particle through a long field region: t1 = 0.6 as in the reference
# configuration, but scattering reduces to pure precession and the magnet
# separates the spins completely; a wider difference step keeps the rounding
# noise of the large transit phase out of the derivative
IDEAL = ModelParams(k0=1e3, a=600.0, b=1e5)
H_IDEAL = 1e-4


def synthetic(xs, ys, Bx=1.0):
    """Reports whose S |delta_B| and 1 - R are prescribed."""
    out = []
    for x, y in zip(xs, ys):
        out.append(ReliabilityReport(1 - y, 0.5, 0.5, Bx + 0.01, 0.01, x / 0.01, (5.0, 35.0, Bx)))
    return out


class TestPipeline:
    def test_reference_point_against_quadrature(self):
        p = ModelParams()
        r = measurement_pipeline(p)
        tp = matching_system(p.k0, p.Bx, p.a)[0]
        tm = matching_system(p.k0, -p.Bx, p.a)[0]
        c1, c2 = (tp + tm) / 2, (tp - tm) / 2
        # spin-up packet: centre f t2^2/2, s = sigma^2 + i (t1 + t2)/2
        s = 0.25 + 0.5j * (p.t1 + p.t2)
        var = abs(s) ** 2 / s.real
        d = p.t2**2 / 2
        rho = lambda z: math.exp(-((z - d) ** 2) / (2 * var)) / math.sqrt(2 * math.pi * var)
        pos, _ = integrate.quad(rho, 0, np.inf, epsabs=1e-15)
        # the spin-down packet mirrors the spin-up one
        expected = (abs(c1) ** 2 + abs(c2) ** 2) * pos
        assert r.R == pytest.approx(expected, abs=1e-12)
        assert r.R == pytest.approx(0.99559881252108406, abs=1e-12)
        assert math.isfinite(r.delta_B)
        assert 0 < r.R < 1

    @given(st.floats(0.3, 20.0), st.floats(0.5, 80.0), st.floats(0.0, 6.0), st.floats(0.5, 5.0))
    def test_bounds(self, k0, b, Bx, a):
        r = measurement_pipeline(ModelParams(k0=k0, b=b, Bx=Bx, a=a))
        assert 0.0 <= r.R <= 1.0
        assert r.R <= r.transmitted + 1e-12

    def test_random_configurations_bounded(self):
        rng = np.random.default_rng(7)
        for k0, b, Bx in zip(rng.uniform(0.3, 20, 2000), rng.uniform(0.5, 80, 2000), rng.uniform(0, 6, 2000)):
            r = measurement_pipeline(ModelParams(k0=k0, b=b, Bx=Bx))
            assert 0.0 <= r.R <= r.transmitted + 1e-12 <= 1.0 + 1e-12

    @pytest.mark.parametrize("k0, Bx", [(5.0, 2.0), (12.0, 1.0), (3.0, 0.5)])
    def test_long_magnet_recovers_transmission(self, k0, Bx):
        r = measurement_pipeline(ModelParams(k0=k0, Bx=Bx, b=4000.0))
        assert r.R == pytest.approx(r.transmitted, abs=1e-6)

    def test_no_field_long_magnet(self):
        r = measurement_pipeline(ModelParams(Bx=0.0, b=2000.0))
        assert r.R == pytest.approx(1.0, abs=1e-6)
        assert abs(r.delta_B) < 1e-9
        assert r.degenerate and r.sensitivity == 0.0

    def test_no_field_short_magnet_is_biased(self):
        # spin-up mass leaking below z = 0 reads as a spurious field
        p = ModelParams(Bx=0.0)
        r = measurement_pipeline(p)
        assert r.delta_B == pytest.approx(math.atan(math.sqrt(r.beta_tilde / r.alpha_tilde)) / p.t1)
        assert r.delta_B > 0

    def test_config_echo(self):
        r = measurement_pipeline(ModelParams(k0=7.0, b=12.0, Bx=1.5))
        assert (r.k0, r.b, r.Bx) == (7.0, 12.0, 1.5)


class TestSensitivity:
    def test_ideal_process(self):
        Bx = 1.0
        S = sensitivity(IDEAL.with_(Bx=Bx), h=H_IDEAL)
        t1 = IDEAL.t1
        assert S == pytest.approx(t1 * math.sin(2 * Bx * t1), abs=1e-6)

    def test_ideal_maximal_at_symmetric_point(self):
        B_star = math.pi / (4 * IDEAL.t1)
        peak = sensitivity(IDEAL.with_(Bx=B_star), h=H_IDEAL)
        for B in (B_star - 0.2, B_star + 0.2):
            assert sensitivity(IDEAL.with_(Bx=B), h=H_IDEAL) < peak

    def test_ideal_zero_field(self):
        assert sensitivity(IDEAL.with_(Bx=1e-6), h=1e-6) == pytest.approx(0.0, abs=1e-6)

    def test_field_reading(self):
        # the inferred field tracks the true field in the ideal limit
        assert sensitivity(IDEAL.with_(Bx=1.0), h=H_IDEAL, which="B_measured") == pytest.approx(1.0, abs=1e-6)
        assert reading(IDEAL.with_(Bx=1.0), "B_measured") == pytest.approx(1.0, abs=1e-6)

    def test_step_checks(self):
        p = ModelParams(Bx=2.0)
        with pytest.raises(DomainError):
            sensitivity(p, h=0.0)
        with pytest.raises(DomainError):
            sensitivity(p, h=3.0)
        with pytest.raises(NumericError):
            sensitivity(p, h=1e-14)
        with pytest.raises(DomainError):
            reading(p, "alpha")


class TestErrorDerivative:
    def test_ideal_limit(self):
        assert error_derivative(IDEAL.with_(Bx=1.0), h=H_IDEAL) == pytest.approx(0.0, abs=1e-6)

    @given(st.floats(4.0, 15.0), st.floats(10.0, 50.0), st.floats(0.5, 2.0))
    def test_matches_difference_of_error(self, k0, b, Bx):
        p = ModelParams(k0=k0, b=b, Bx=Bx)
        H = 1e-4
        dB = lambda B: measurement_pipeline(p.with_(Bx=B)).delta_B
        direct = (dB(Bx + H) - dB(Bx - H)) / (2 * H)
        assert error_derivative(p) == pytest.approx(direct, abs=1e-6)

    def test_reference_point(self):
        p = ModelParams()
        d = error_derivative(p)
        assert math.isfinite(d)
        H = 0.05
        trend = measurement_pipeline(p.with_(Bx=2 + H)).delta_B - measurement_pipeline(p.with_(Bx=2 - H)).delta_B
        assert np.sign(d) == np.sign(trend)

    def test_degenerate(self):
        with pytest.raises(DegenerateRegimeError):
            error_derivative(ModelParams(Bx=1e-5, b=2000.0), h=1e-6, beta_floor=1e-8)


class TestApplicability:
    def test_zero_length_limit(self):
        assert applicability_min_field(ModelParams(b=1e-12)) == pytest.approx(1.0, abs=1e-10)

    def test_at_characteristic_length(self):
        p = ModelParams()
        b0 = characteristic_length(p)
        assert applicability_min_field(p.with_(b=b0)) == pytest.approx(math.sqrt(math.erfc(1.0)), abs=1e-15)
        assert math.sqrt(math.erfc(1.0)) == pytest.approx(0.397, abs=5e-4)

    def test_characteristic_length(self):
        p = ModelParams()
        # w1 = |0.25 + 0.3i| / 0.5
        w1 = math.hypot(0.25, 0.3) / 0.5
        assert characteristic_length(p) == pytest.approx(math.sqrt(2) * 5 / w1)

    @given(st.floats(0.5, 15.0))
    def test_monotone_and_vanishing(self, k0):
        bs = np.linspace(0.1, 400, 200)
        vals = [applicability_min_field(ModelParams(k0=k0, b=b)) for b in bs]
        assert all(y <= x for x, y in zip(vals, vals[1:]))
        assert applicability_min_field(ModelParams(k0=k0, b=1e4 * k0)) < 1e-12

    def test_literal_variant(self):
        p = ModelParams()
        lit = applicability_min_field(p, literal_erf=True)
        assert lit**2 + applicability_min_field(p) ** 2 == pytest.approx(1.0)


class TestRelationFit:
    def test_exact_line(self):
        xs = np.linspace(0.001, 0.02, 12)
        fit = relation_fit(synthetic(xs, 2 * xs))
        assert fit.slope == pytest.approx(2.0, abs=1e-12)
        assert fit.intercept == pytest.approx(0.0, abs=1e-14)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
        assert fit.n_points == 12

    def test_excludes_far_from_ideal(self):
        xs = np.linspace(0.001, 0.02, 12)
        reports = synthetic(xs, 2 * xs) + synthetic([0.01], [0.2])
        fit = relation_fit(reports)
        assert fit.n_excluded == 1

    def test_degenerate_abscissa(self):
        with pytest.raises(FitError):
            relation_fit(synthetic([0.01] * 12, np.linspace(0, 0.01, 12)))

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            relation_fit(synthetic([0.01, 0.02], [0.01, 0.02]))

    def test_r_squared_in_unit_interval(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(0, 0.02, 30)
        fit = relation_fit(synthetic(xs, rng.uniform(0, 0.04, 30)))
        assert 0.0 <= fit.r_squared <= 1.0


class TestScalingFit:
    @pytest.mark.parametrize("power, regime", [(0.5, "second_order"), (1.0, "first_order")])
    def test_power_law(self, power, regime):
        loss = np.logspace(-6, -2, 15)
        reports = [ReliabilityReport(1 - l, 0.5, 0.5, 1 + 3 * l**power, 3 * l**power, 1.0, (1, 1, 1)) for l in loss]
        fit = scaling_fit(reports, regime)
        assert fit.slope == pytest.approx(power, abs=1e-10)
        assert fit.extra["target"] == power

    def test_rejects_non_positive(self):
        reports = [ReliabilityReport(1.0, 0.5, 0.5, 1.0, 0.0, 1.0, (1, 1, 1))] * 3
        with pytest.raises(DomainError):
            scaling_fit(reports)

    def test_unknown_regime(self):
        with pytest.raises(DomainError):
            scaling_fit([], "third_order")


def test_sweep_order():
    base = ModelParams()
    reports = sweep(base, [4.0, 5.0], [10.0, 20.0], [1.0, 2.0])
    assert [r.config for r in reports] == [
        (k, b, B) for k in (4.0, 5.0) for b in (10.0, 20.0) for B in (1.0, 2.0)
    ]


def test_pipeline_consistent_with_spinor():
    p = ModelParams(k0=8.0, Bx=1.3)
    assert measurement_pipeline(p).transmitted == pytest.approx(scatter_spinor(p).weight)
