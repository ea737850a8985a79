import numpy as np
import pytest

from cryoscope.errors import DetuningRangeError, FluxDomainError, TransmonRegimeWarning
from cryoscope.fluxmodel import (
    DephasingParams,
    PowerLawModel,
    TransmonParams,
    dephasing_rate,
    detuning_from_flux,
    flux_from_detuning,
    flux_sensitivity,
)

POWER_LAW = PowerLawModel(a=16.9, k=2)
# synthetic transmon with f_max = 6 GHz and ej/ec = 50
TRANSMON = TransmonParams(ej=50 * 6.0 / 19.0, ec=6.0 / 19.0)


class TestDetuningFromFlux:
    def test_sweetspot_is_zero(self):
        assert detuning_from_flux(POWER_LAW, 0.0) == 0.0
        assert detuning_from_flux(TRANSMON, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_power_law_quarter_flux_quantum(self):
        assert detuning_from_flux(POWER_LAW, 0.25) == pytest.approx(1.05625, rel=1e-12)

    def test_full_model_matches_small_flux_quadratic(self):
        # numerically Taylor-expand the cosine band around the sweetspot
        h = 1e-4
        a_fit = (
            detuning_from_flux(TRANSMON, h)
            + detuning_from_flux(TRANSMON, -h)
        ) / (2 * h**2)
        df = detuning_from_flux(TRANSMON, 0.05)
        assert df == pytest.approx(a_fit * 0.05**2, rel=0.02)

    def test_even_in_flux(self):
        phi = np.linspace(-0.3, 0.3, 41)
        for model in (POWER_LAW, TRANSMON):
            df = detuning_from_flux(model, phi)
            assert np.allclose(df, df[::-1], rtol=1e-13)
            assert np.all(df >= 0)

    def test_out_of_domain_flux_raises_naming_value(self):
        with pytest.raises(FluxDomainError, match="0.5"):
            detuning_from_flux(TRANSMON, 0.5)

    def test_power_law_odd_exponent_stays_even(self):
        model = PowerLawModel(a=5.0, k=3)
        assert detuning_from_flux(model, -0.2) == detuning_from_flux(model, 0.2)


class TestFluxFromDetuning:
    def test_zero_maps_to_zero(self):
        assert flux_from_detuning(POWER_LAW, 0.0) == 0.0

    def test_power_law_closed_form(self):
        assert flux_from_detuning(POWER_LAW, 0.4225) == pytest.approx(
            np.sqrt(0.4225 / 16.9), rel=1e-12
        )
        assert flux_from_detuning(POWER_LAW, 0.4225) == pytest.approx(0.15811, abs=5e-6)

    @pytest.mark.parametrize("model", [POWER_LAW, TRANSMON], ids=["power-law", "cosine"])
    def test_roundtrip_identity(self, model):
        rng = np.random.default_rng(7)
        phi = rng.uniform(0.0, 0.3, 100)
        df = detuning_from_flux(model, phi)
        back = flux_from_detuning(model, df)
        assert np.allclose(back, phi, rtol=1e-12, atol=1e-14)

    def test_negative_detuning_rejected(self):
        with pytest.raises(DetuningRangeError):
            flux_from_detuning(POWER_LAW, -0.1)

    def test_detuning_above_range_rejected(self):
        with pytest.raises(DetuningRangeError):
            flux_from_detuning(POWER_LAW, 16.9 * 0.5**2 + 1e-6)
        with pytest.raises(DetuningRangeError):
            flux_from_detuning(TRANSMON, TRANSMON.f_max + 1e-9)


class TestFluxSensitivity:
    def test_zero_at_sweetspot(self):
        assert flux_sensitivity(POWER_LAW, 0.0) == 0.0
        assert flux_sensitivity(TRANSMON, 0.0) == 0.0

    def test_power_law_closed_form(self):
        assert flux_sensitivity(POWER_LAW, 0.1) == pytest.approx(2 * 16.9 * 0.1, rel=1e-13)

    def test_odd_in_flux(self):
        phi = np.linspace(-0.3, 0.3, 41)
        for model in (POWER_LAW, TRANSMON):
            s = flux_sensitivity(model, phi)
            assert np.allclose(s, -s[::-1], rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("model", [POWER_LAW, TRANSMON], ids=["power-law", "cosine"])
    def test_matches_central_differences(self, model):
        rng = np.random.default_rng(3)
        phi = rng.uniform(0.02, 0.3, 20)
        h = 1e-6
        numeric = (
            detuning_from_flux(model, phi + h) - detuning_from_flux(model, phi - h)
        ) / (2 * h)
        assert np.allclose(flux_sensitivity(model, phi), numeric, rtol=1e-8)


class TestDephasingRate:
    def test_sweetspot_rate_is_gamma0(self):
        dp = DephasingParams(gamma0=66.7e-3, gamma1=0.213e-3)
        assert dephasing_rate(dp, POWER_LAW, 0.0) == pytest.approx(66.7e-3)
        # T2* = 1/gamma0 = 15 us
        assert 1.0 / dephasing_rate(dp, POWER_LAW, 0.0) == pytest.approx(15.0, rel=1e-3)

    def test_flux_independent_when_gamma1_zero(self):
        dp = DephasingParams(gamma0=0.1, gamma1=0.0)
        rates = dephasing_rate(dp, POWER_LAW, np.linspace(0, 0.3, 7))
        assert np.allclose(rates, 0.1)

    def test_dimensional_evaluation(self):
        # gamma1 multiplies the GHz/flux-quantum sensitivity; rates in 1/us
        dp = DephasingParams(gamma0=66.7e-3, gamma1=0.213e-3)
        expected = 66.7e-3 + 0.213e-3 * (2 * 16.9 * 0.17) * 1e3
        assert dephasing_rate(dp, POWER_LAW, 0.17) == pytest.approx(expected, rel=1e-12)


class TestValidation:
    def test_transmon_regime_warning(self):
        with pytest.warns(TransmonRegimeWarning):
            TransmonParams(ej=10.0, ec=1.0)

    def test_positive_energies_required(self):
        with pytest.raises(ValueError):
            TransmonParams(ej=-1.0, ec=0.3)

    def test_power_law_validation(self):
        with pytest.raises(ValueError):
            PowerLawModel(a=-1.0, k=2)
        with pytest.raises(ValueError):
            PowerLawModel(a=1.0, k=0)

    def test_dephasing_validation(self):
        with pytest.raises(ValueError):
            DephasingParams(gamma0=-0.1)
        with pytest.raises(ValueError):
            DephasingParams(alpha_exp=2.5)


def test_power_law_agrees_with_cosine_near_sweetspot():
    # quadratic coefficient fitted on [-0.02, 0.02]
    phi_fit = np.linspace(-0.02, 0.02, 21)
    df_fit = detuning_from_flux(TRANSMON, phi_fit)
    a_fit = np.polyfit(phi_fit, df_fit, 2)[0]
    model = PowerLawModel(a=a_fit, k=2)
    phi = np.linspace(-0.05, 0.05, 51)
    full = detuning_from_flux(TRANSMON, phi)
    approx = detuning_from_flux(model, phi)
    scale = full.max()
    assert np.all(np.abs(full - approx) <= 0.01 * scale)
