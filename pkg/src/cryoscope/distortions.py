"""Linear-time-invariant distortion models for a flux-control line.

Each model is specified by its analytic step response; discretization
samples the impulse response as step-response differences
``s(n*dt) - s((n-1)*dt)`` so that the cumulative sum reproduces the step
exactly on the grid.  The step, not the impulse, is the measured object,
which makes this the faithful discretization.

Models compose into a :class:`DistortionChain` applied by discrete
convolution; an empty chain is the identity.  All operations are pure
and safe to call concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import erfc

from .errors import ConfigError, KernelTruncationWarning
from .waveform import Waveform

# Direct convolution below this kernel size, FFT above; both agree to 1e-10.
_FFT_KERNEL_THRESHOLD = 4096


@dataclass(frozen=True)
class ExpStep:
    """Exponential over/undershoot: s(t) = g*(1 + A*exp(-t/tau))*u(t)."""

    amplitude: float
    tau: float  # ns
    gain: float = 1.0

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"time constant must be positive, got {self.tau}")

    def step_response(self, t):
        t = np.asarray(t, dtype=float)
        s = self.gain * (1.0 + self.amplitude * np.exp(-np.maximum(t, 0.0) / self.tau))
        return np.where(t < 0, 0.0, s)

    @property
    def slowest_tau(self) -> float:
        return self.tau


@dataclass(frozen=True)
class HighPass:
    """Single-pole high pass (bias tee): s(t) = exp(-t/tau)*u(t)."""

    tau: float  # ns

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"time constant must be positive, got {self.tau}")

    def step_response(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, np.exp(-np.maximum(t, 0.0) / self.tau))

    @property
    def slowest_tau(self) -> float:
        return self.tau


@dataclass(frozen=True)
class LowPass:
    """Single-pole low pass: s(t) = (1 - exp(-t/tau))*u(t)."""

    tau: float  # ns

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"time constant must be positive, got {self.tau}")

    def step_response(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, 1.0 - np.exp(-np.maximum(t, 0.0) / self.tau))

    @property
    def slowest_tau(self) -> float:
        return self.tau


@dataclass(frozen=True)
class SkinEffect:
    """Skin-effect attenuation of a coaxial line, Wigington-Nahman form.

    ``alpha_ghz`` is the cable attenuation in dB at 1 GHz.  The step
    response is the monotone 0 -> 1 form s(t) = erfc(alpha/(21*sqrt(t)))
    with t in ns; the time unit of the constant 21 is assumed to be ns.
    """

    alpha_ghz: float

    def __post_init__(self):
        if self.alpha_ghz < 0:
            raise ValueError(f"attenuation must be non-negative, got {self.alpha_ghz}")

    def step_response(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            arg = np.where(t > 0, self.alpha_ghz / (21.0 * np.sqrt(np.maximum(t, 1e-300))), np.inf)
        return np.where(t > 0, erfc(arg), 0.0)

    @property
    def slowest_tau(self) -> float:
        # erfc tail has no exponential scale; the response is within 1% of
        # DC once 21*sqrt(t) ~ 100*alpha, used only for truncation warnings.
        return (self.alpha_ghz * 100.0 / 21.0) ** 2


@dataclass(frozen=True)
class MeasuredImpulse:
    """Measured (or synthesized) impulse response used as-is.

    The stored samples are convolution weights on the waveform's own
    grid (step-response differences), so their sum is the DC gain.
    """

    impulse: Waveform

    def __post_init__(self):
        if not np.all(np.isfinite(self.impulse.samples)):
            raise ValueError("measured impulse must contain finite values")

    def step_response(self, t):
        t = np.asarray(t, dtype=float)
        csum = np.cumsum(self.impulse.samples)
        grid = self.impulse.times()
        out = np.interp(t, grid, csum, left=0.0, right=csum[-1])
        return np.where(t < 0, 0.0, out)

    @property
    def slowest_tau(self) -> float:
        return self.impulse.duration / 5.0


DistortionModel = ExpStep | HighPass | LowPass | SkinEffect | MeasuredImpulse
_ANALYTIC_MODELS = (ExpStep, HighPass, LowPass, SkinEffect)


def step_response(model: DistortionModel, t):
    """Dimensionless step response of a single model; zero for t < 0."""
    return model.step_response(t)


def impulse_response(model: DistortionModel, sample_rate: float, length: int) -> Waveform:
    """Discrete convolution kernel of ``length`` samples at ``sample_rate``.

    For analytic models the weights are step differences on the grid; a
    MeasuredImpulse is passed through (resampled if the rates differ).
    A window shorter than five times the slowest time constant only
    covers part of the transient and triggers a truncation warning.
    """
    if length < 1:
        raise ValueError("kernel length must be at least one sample")
    if isinstance(model, MeasuredImpulse):
        kernel = model.impulse.resampled(sample_rate)
        if len(kernel) > length:
            warnings.warn(
                f"measured impulse truncated from {len(kernel)} to {length} samples",
                KernelTruncationWarning,
                stacklevel=2,
            )
            kernel = Waveform(kernel.samples[:length], sample_rate)
        return kernel
    if length / sample_rate < 5.0 * model.slowest_tau:
        warnings.warn(
            f"kernel window {length / sample_rate:.3g} ns covers less than five times "
            f"the slowest time constant {model.slowest_tau:.3g} ns",
            KernelTruncationWarning,
            stacklevel=2,
        )
    t = np.arange(length) / sample_rate
    s = model.step_response(t)
    h = np.empty(length)
    h[0] = s[0]
    h[1:] = np.diff(s)
    return Waveform(h, sample_rate)


@dataclass(frozen=True)
class DistortionChain:
    """Ordered composition of distortion models; empty chain is identity."""

    models: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))

    def __len__(self) -> int:
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def step_response(self, t, sample_rate: float | None = None):
        """Step response of the whole chain on the time grid ``t``.

        A single analytic model evaluates in closed form; compositions
        are realized by convolving discrete kernels, which requires ``t``
        to be a uniform grid starting at 0 (pass its rate explicitly or
        let it be inferred).
        """
        t = np.asarray(t, dtype=float)
        if len(self.models) == 0:
            return np.where(t < 0, 0.0, 1.0)
        if len(self.models) == 1 and isinstance(self.models[0], _ANALYTIC_MODELS):
            return self.models[0].step_response(t)
        if sample_rate is None:
            dt = np.diff(t)
            if t.size < 2 or not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
                raise ConfigError("composite chains need a uniform time grid")
            sample_rate = 1.0 / dt[0]
        kernel = self.kernel(sample_rate, t.size)
        return np.cumsum(kernel.samples)

    def kernel(self, sample_rate: float, length: int) -> Waveform:
        """Combined convolution kernel of the chain at the given grid."""
        h = np.zeros(length)
        h[0] = 1.0
        for model in self.models:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", KernelTruncationWarning)
                hm = impulse_response(model, sample_rate, length).samples
            h = _convolve_trunc(h, hm)
        return Waveform(h, sample_rate)


def apply(chain: DistortionChain, wf: Waveform) -> Waveform:
    """Push a waveform through the chain by causal discrete convolution.

    Kernels span the full input window, so output sample n carries the
    complete history of inputs 0..n regardless of time constants.
    """
    if isinstance(chain, _ANALYTIC_MODELS + (MeasuredImpulse,)):
        chain = DistortionChain((chain,))
    if len(chain) == 0:
        return wf
    out = wf.samples
    for model in chain:
        if isinstance(model, MeasuredImpulse):
            if model.impulse.sample_rate != wf.sample_rate:
                kernel = model.impulse.resampled(wf.sample_rate).samples
            else:
                kernel = model.impulse.samples
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", KernelTruncationWarning)
                kernel = impulse_response(model, wf.sample_rate, len(wf)).samples
        out = _convolve_trunc(out, kernel)
    return wf.with_samples(out)


def _convolve_trunc(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Causal convolution truncated to the length of ``x``."""
    if min(len(x), len(h)) < _FFT_KERNEL_THRESHOLD:
        return np.convolve(x, h)[: len(x)]
    return fftconvolve(x, h)[: len(x)]


def synthetic_awg_response(sample_rate: float = 2.4, rise_10_90: float = 0.5) -> MeasuredImpulse:
    """Synthetic stand-in for a measured waveform-generator response.

    A Gaussian-filtered step with the given 10-90% rise time (ns); ships
    in place of instrument data, which is setup-specific.  Clearly
    synthetic: do not mistake it for a characterized device.
    """
    from scipy.special import ndtr

    sigma = rise_10_90 / 2.5631031310892007  # 10-90 width of a normal CDF
    delay = 4.0 * sigma
    n = int(np.ceil((delay + 6.0 * sigma) * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    s = ndtr((t - delay) / sigma)
    s /= s[-1]
    h = np.empty(n)
    h[0] = s[0]
    h[1:] = np.diff(s)
    return MeasuredImpulse(Waveform(h, sample_rate))


def typical_flux_line(sample_rate: float = 2.4, include_awg: bool = True) -> DistortionChain:
    """Catalog of distortions of a representative flux-control line.

    Waveform-generator analog response, bias-tee high pass with two
    exponential correct-me components, cable skin effect, and the
    on-chip response.
    """
    models = []
    if include_awg:
        models.append(synthetic_awg_response(sample_rate))
    models += [
        HighPass(tau=41_000.0),
        ExpStep(amplitude=0.13, tau=15_000.0),
        ExpStep(amplitude=0.99, tau=6_400.0),
        SkinEffect(alpha_ghz=2.1),
        ExpStep(amplitude=0.6, tau=2.0),
    ]
    return DistortionChain(tuple(models))
