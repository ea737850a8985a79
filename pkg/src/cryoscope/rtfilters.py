"""Real-time predistortion filters of the waveform generator.

Two filter types are modeled: a first-order IIR corrector that inverts
an exponential over/undershoot in the step response, and a constrained
FIR whose 72 taps (30 ns at 2.4 GSa/s) are set by 40 parameters.  Each
IIR can be evaluated as the ideal difference equation or with the
hardware approximations (state update every 8th sample from a 16-sample
running average).

The filters are pure functions of (spec, waveform); hardware-mode state
is local to a call, so concurrent use is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, FilterInstabilityError
from .waveform import Waveform

FIR_N_PARAMS = 40
FIR_N_TAPS = 72
# Hardware constants: the IIR state runs at 1/8 of the sample clock and
# averages the 16 most recent input samples per update.
_HW_DECIMATION = 8
_HW_AVG_WINDOW = 16


@dataclass(frozen=True)
class IirExpSpec:
    """First-order corrector for a step response g*(1 + A*exp(-t/tau)).

    The gain g is deliberately not represented: the hardware ignores it
    and normalization happens in analysis.  Stability requires A > -1.
    """

    amplitude: float
    tau: float  # ns
    mode: str = "ideal"

    def __post_init__(self):
        if self.tau <= 0:
            raise ValueError(f"time constant must be positive, got {self.tau}")
        if self.amplitude <= -1.0:
            raise FilterInstabilityError(
                f"amplitude {self.amplitude} <= -1 makes the corrector unstable"
            )
        if self.mode not in ("ideal", "hardware"):
            raise ValueError(f"mode must be 'ideal' or 'hardware', got {self.mode!r}")


@dataclass(frozen=True)
class FirSpec:
    """Constrained 72-tap FIR driven by 40 free parameters."""

    params: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        if params.shape != (FIR_N_PARAMS,):
            raise ValueError(
                f"FIR takes exactly {FIR_N_PARAMS} parameters, got shape {params.shape}"
            )
        params = params.copy()
        params.flags.writeable = False
        object.__setattr__(self, "params", params)

    @property
    def taps(self) -> np.ndarray:
        return fir_from_params(self.params)

    @classmethod
    def identity(cls) -> "FirSpec":
        params = np.zeros(FIR_N_PARAMS)
        params[0] = 1.0
        return cls(params)


@dataclass(frozen=True)
class FilterPipeline:
    """IIR correctors (slow timescales first) followed by at most one FIR."""

    iir: tuple = ()
    fir: FirSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "iir", tuple(self.iir))

    def __len__(self) -> int:
        return len(self.iir) + (self.fir is not None)


def iir_state_parameters(spec: IirExpSpec, sample_rate: float) -> tuple[float, float]:
    """State-variable constants (alpha, k) of the corrector.

    alpha = 1 - exp(-1/(fs*tau*(1+A))) is the decay of the exponential
    moving average (negative exponent: the printed positive-exponent
    form is unstable); k splits between the branches for under- and
    overshoot.
    """
    a, tau = spec.amplitude, spec.tau
    alpha = 1.0 - np.exp(-1.0 / (sample_rate * tau * (1.0 + a)))
    if a < 0:
        k = a / ((1.0 + a) * (1.0 - alpha))
    else:
        k = a / (1.0 + a - alpha)
    return alpha, k


def iir_coefficients(spec: IirExpSpec, sample_rate: float) -> tuple[float, float, float, float]:
    """Difference-equation coefficients (b0, b1, a0, a1) of the corrector."""
    alpha, k = iir_state_parameters(spec, sample_rate)
    b0 = 1.0 - k + k * alpha
    b1 = -(1.0 - k) * (1.0 - alpha)
    a0 = 1.0
    a1 = -(1.0 - alpha)
    return b0, b1, a0, a1


def apply_iir(spec: IirExpSpec, wf: Waveform) -> Waveform:
    """Run the corrector over a waveform in its declared mode."""
    if spec.mode == "hardware":
        return wf.with_samples(_apply_iir_hardware(spec, wf.samples, wf.sample_rate))
    b0, b1, _, a1 = iir_coefficients(spec, wf.sample_rate)
    return wf.with_samples(lfilter([b0, b1], [1.0, a1], wf.samples))


def apply_iir_state_form(spec: IirExpSpec, wf: Waveform) -> Waveform:
    """Ideal corrector via the state-variable recursion.

    Output is identical to the difference-equation form; kept as an
    independent route for cross-checking.
    """
    alpha, k = iir_state_parameters(spec, wf.sample_rate)
    x = wf.samples
    y = np.empty_like(x)
    u = 0.0
    for n in range(x.size):
        u = u + alpha * (x[n] - u)
        y[n] = (1.0 - k) * x[n] + k * u
    return wf.with_samples(y)


def _apply_iir_hardware(spec: IirExpSpec, x: np.ndarray, sample_rate: float) -> np.ndarray:
    """Hardware approximation of the corrector.

    The state u updates only at samples n = 0 (mod 8), from the mean of
    the 16 most recent inputs, with per-update decay
    alpha_hw = 1 - (1-alpha)^8 so the effective time constant matches
    the ideal filter; u is held between updates and combined with the
    input at the full rate.
    """
    alpha, k = iir_state_parameters(spec, sample_rate)
    alpha_hw = 1.0 - (1.0 - alpha) ** _HW_DECIMATION
    update_idx = np.arange(0, x.size, _HW_DECIMATION)
    csum = np.concatenate([[0.0], np.cumsum(x)])
    lo = np.maximum(update_idx - _HW_AVG_WINDOW + 1, 0)
    means = (csum[update_idx + 1] - csum[lo]) / (update_idx + 1 - lo)
    u_updates = lfilter([alpha_hw], [1.0, -(1.0 - alpha_hw)], means)
    u_held = np.repeat(u_updates, _HW_DECIMATION)[: x.size]
    return (1.0 - k) * x + k * u_held


def fir_from_params(params) -> np.ndarray:
    """Expand 40 parameters into the 72 hardware taps.

    The first 8 parameters map directly onto taps 0..7; each remaining
    parameter sets a pair of adjacent taps, halving the tap resolution
    beyond 3.3 ns.
    """
    params = np.asarray(params, dtype=float)
    if params.shape != (FIR_N_PARAMS,):
        raise ValueError(
            f"expected exactly {FIR_N_PARAMS} parameters, got shape {params.shape}"
        )
    taps = np.empty(FIR_N_TAPS)
    taps[:8] = params[:8]
    taps[8::2] = params[8:]
    taps[9::2] = params[8:]
    return taps


def apply_fir(spec: FirSpec, wf: Waveform) -> Waveform:
    """Causal 72-tap convolution; memory is exactly the tap span."""
    y = np.convolve(wf.samples, spec.taps)[: len(wf)]
    return wf.with_samples(y)


def apply_pipeline(pipeline: FilterPipeline, wf: Waveform) -> Waveform:
    """Apply all IIRs in order, then the FIR if present."""
    out = wf
    for spec in pipeline.iir:
        out = apply_iir(spec, out)
    if pipeline.fir is not None:
        out = apply_fir(pipeline.fir, out)
    return out
