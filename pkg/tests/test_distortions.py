import warnings

import numpy as np
import pytest
from scipy.signal import fftconvolve

from cryoscope.distortions import (
    DistortionChain,
    ExpStep,
    HighPass,
    LowPass,
    MeasuredImpulse,
    SkinEffect,
    apply,
    impulse_response,
    step_response,
    synthetic_awg_response,
    typical_flux_line,
)
from cryoscope.errors import KernelTruncationWarning
from cryoscope.waveform import Waveform, is_square, piecewise_constant, square_pulse

RATE = 2.4


class TestStepResponses:
    @pytest.mark.parametrize(
        "model",
        [ExpStep(0.6, 2.0), HighPass(41000.0), LowPass(5.0), SkinEffect(2.1)],
    )
    def test_causal(self, model):
        assert step_response(model, -1.0) == 0.0
        assert np.all(step_response(model, np.array([-5.0, -0.01])) == 0.0)

    def test_exp_step_closed_form(self):
        assert step_response(ExpStep(0.6, 2.0), 2.0) == pytest.approx(
            1 + 0.6 / np.e, rel=1e-12
        )

    def test_low_pass_dc_gain(self):
        assert step_response(LowPass(5.0), 1e6) == pytest.approx(1.0)

    def test_high_pass_decays(self):
        s = step_response(HighPass(10.0), np.array([0.0, 10.0, 100.0]))
        assert s[0] == 1.0
        assert s[1] == pytest.approx(np.exp(-1.0))
        assert s[2] < 1e-4

    def test_skin_effect_monotone_to_unity(self):
        t = np.linspace(0.0, 1e4, 5000)
        s = step_response(SkinEffect(2.1), t)
        assert np.all(np.diff(s) >= 0)
        assert s[0] == 0.0
        assert s[-1] == pytest.approx(1.0, abs=1e-2)


class TestImpulseResponse:
    def test_identity_chain_unit_impulse(self):
        kernel = DistortionChain().kernel(RATE, 16)
        expected = np.zeros(16)
        expected[0] = 1.0
        assert np.array_equal(kernel.samples, expected)

    @pytest.mark.parametrize(
        "model", [ExpStep(0.6, 2.0), LowPass(5.0), HighPass(50.0), SkinEffect(2.1)]
    )
    def test_cumsum_reproduces_step(self, model):
        n = 4000
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", KernelTruncationWarning)
            h = impulse_response(model, RATE, n)
        t = np.arange(n) / RATE
        assert np.max(np.abs(np.cumsum(h.samples) - model.step_response(t))) < 1e-6

    def test_measured_impulse_passthrough(self):
        imp = Waveform(np.array([0.25, 0.5, 0.25]), RATE)
        out = impulse_response(MeasuredImpulse(imp), RATE, 64)
        assert np.array_equal(out.samples, imp.samples)

    def test_measured_impulse_resampled_preserves_dc(self):
        imp = Waveform(np.array([0.2, 0.4, 0.3, 0.1]), 1.2)
        out = impulse_response(MeasuredImpulse(imp), RATE, 64)
        assert out.sample_rate == RATE
        assert np.sum(out.samples) == pytest.approx(np.sum(imp.samples), rel=1e-9)

    def test_truncation_warning(self):
        with pytest.warns(KernelTruncationWarning):
            impulse_response(ExpStep(0.1, 1000.0), RATE, 100)


class TestApply:
    def test_empty_chain_identity(self):
        wf = Waveform(np.random.default_rng(0).normal(size=50), RATE)
        out = apply(DistortionChain(), wf)
        assert np.array_equal(out.samples, wf.samples)

    def test_unit_step_through_low_pass(self):
        wf = square_pulse(1.0, 300.0, RATE, total=300.0)
        out = apply(DistortionChain((LowPass(5.0),)), wf)
        t = wf.times()
        assert np.max(np.abs(out.samples - (1 - np.exp(-t / 5.0)))) < 1e-4

    def test_linearity(self):
        rng = np.random.default_rng(5)
        chain = DistortionChain((ExpStep(0.3, 4.0), LowPass(7.0)))
        x = Waveform(rng.normal(size=400), RATE)
        y = Waveform(rng.normal(size=400), RATE)
        combo = apply(chain, Waveform(2.0 * x.samples - 0.5 * y.samples, RATE))
        parts = 2.0 * apply(chain, x).samples - 0.5 * apply(chain, y).samples
        assert np.max(np.abs(combo.samples - parts)) < 1e-10

    def test_time_invariance_integer_shift(self):
        rng = np.random.default_rng(6)
        chain = DistortionChain((ExpStep(0.2, 3.0),))
        sig = rng.normal(size=200)
        shift = 40
        x = np.concatenate([sig, np.zeros(shift)])
        x_shifted = np.concatenate([np.zeros(shift), sig])
        out = apply(chain, Waveform(x, RATE)).samples
        out_shifted = apply(chain, Waveform(x_shifted, RATE)).samples
        assert np.max(np.abs(out_shifted[shift:] - out[: len(sig)])) < 1e-12

    def test_causality_late_perturbation(self):
        rng = np.random.default_rng(7)
        chain = DistortionChain((ExpStep(0.4, 6.0), SkinEffect(1.0)))
        x = rng.normal(size=300)
        y = x.copy()
        y[200] += 5.0
        out_x = apply(chain, Waveform(x, RATE)).samples
        out_y = apply(chain, Waveform(y, RATE)).samples
        assert np.array_equal(out_x[:200], out_y[:200])
        assert not np.allclose(out_x[200:], out_y[200:])

    def test_composition_commutes(self):
        rng = np.random.default_rng(8)
        wf = Waveform(rng.normal(size=500), RATE)
        ab = apply(DistortionChain((ExpStep(0.3, 5.0), LowPass(8.0))), wf)
        ba = apply(DistortionChain((LowPass(8.0), ExpStep(0.3, 5.0))), wf)
        assert np.max(np.abs(ab.samples - ba.samples)) < 1e-8

    def test_dc_gain_is_product_of_model_gains(self):
        # window kept far shorter than the high-pass constant so its sag < 1%
        chain = DistortionChain(
            (ExpStep(0.5, 2.0, gain=1.3), LowPass(3.0), HighPass(100_000.0))
        )
        wf = square_pulse(1.0, 400.0, RATE, total=400.0)
        out = apply(chain, wf)
        assert out.samples[-1] == pytest.approx(1.3, rel=0.01)

    def test_direct_and_fft_convolution_agree(self):
        rng = np.random.default_rng(9)
        x = rng.normal(size=6000)
        h = DistortionChain((ExpStep(0.2, 30.0),)).kernel(RATE, 6000).samples
        direct = np.convolve(x, h)[:6000]
        via_fft = fftconvolve(x, h)[:6000]
        assert np.max(np.abs(direct - via_fft)) < 1e-10

    def test_full_catalog_shape(self):
        # overshoot from the fast on-chip pole rides on the slow bias-tee sag
        chain = typical_flux_line(RATE)
        wf = square_pulse(1.0, 500.0, RATE, total=500.0)
        out = apply(chain, wf).samples
        t = wf.times()
        plateau = out[(t > 50) & (t < 300)].mean()
        early_peak = out[(t > 0.5) & (t < 4)].max()
        assert early_peak > 1.3 * plateau  # on-chip overshoot visible
        late = out[(t > 400)].mean()
        assert late < plateau  # slow sag
        assert np.all(out[t > 0.1] > 0)


class TestSyntheticAwg:
    def test_rise_time(self):
        imp = synthetic_awg_response(RATE * 8)  # fine grid resolves the edge
        s = np.cumsum(imp.impulse.samples)
        t = imp.impulse.times()
        t10 = t[np.searchsorted(s, 0.1)]
        t90 = t[np.searchsorted(s, 0.9)]
        assert t90 - t10 == pytest.approx(0.5, abs=0.15)

    def test_unit_dc_gain(self):
        imp = synthetic_awg_response(RATE)
        assert np.sum(imp.impulse.samples) == pytest.approx(1.0, rel=1e-9)


class TestWaveform:
    def test_validation(self):
        with pytest.raises(ValueError):
            Waveform(np.array([1.0, np.inf]))
        with pytest.raises(ValueError):
            Waveform(np.array([]), RATE)
        with pytest.raises(ValueError):
            Waveform(np.ones(4), sample_rate=0.0)

    def test_square_pulse_detection(self):
        flag, amp, dur = is_square(square_pulse(0.3, 100.0, RATE, total=200.0))
        assert flag and amp == 0.3
        assert dur == pytest.approx(100.0, abs=1.0 / RATE)
        skyline = piecewise_constant([0.1, 0.2, 0.15], 20.0, RATE)
        assert not is_square(skyline)[0]

    def test_resample_preserves_dc(self):
        wf = Waveform(np.array([0.1, 0.5, 0.4, 0.2, 0.05]), 1.0)
        up = wf.resampled(3.0)
        assert np.sum(up.samples) == pytest.approx(np.sum(wf.samples), rel=1e-9)
