"""Turn a measured trace into detuning and flux versus time.

Pipeline: combine <X> and <Y> into a complex signal, demodulate at the
dominant Fourier tone, unwrap the residual phase, differentiate with a
Savitzky-Golay polynomial filter, restore the demodulation frequency and
any alias (Nyquist) offset, and invert the flux model.

"Dominant tone" means the highest-amplitude peak of the discrete
Fourier transform of x + i*y; demodulating by it keeps the phase slowly
varying so unwrapping is robust against noise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import savgol_coeffs

from .errors import (
    ConfigError,
    DetuningRangeError,
    NyquistAmbiguityWarning,
    SignalTooWeakError,
)
from .experiment import CryoscopeTrace
from .fluxmodel import FluxModel, flux_from_detuning

# Fraction of the Nyquist frequency treated as too close to an alias
# boundary for safe order assignment.
NYQUIST_GUARD_FRACTION = 0.05


@dataclass(frozen=True)
class ReconstructionConfig:
    """Processing knobs of the reconstruction pipeline.

    ``demod`` is either "auto" (pick the dominant Fourier tone) or a
    fixed frequency in GHz.  ``negative_detuning`` selects whether noisy
    estimates below zero raise (default, the strict contract) or clamp
    to zero, which repeated noisy reconstructions (SNR scans) need.
    """

    sg_window: int = 5
    sg_order: int = 2
    nyquist_order: int = 0
    demod: float | str = "auto"
    negative_detuning: str = "error"

    def __post_init__(self):
        if self.sg_window < 3 or self.sg_window % 2 == 0:
            raise ConfigError(f"sg_window must be an odd integer >= 3, got {self.sg_window}")
        if not 0 <= self.sg_order < self.sg_window:
            raise ConfigError(
                f"sg_order must satisfy 0 <= order < window, got {self.sg_order}"
            )
        if self.nyquist_order < 0 or int(self.nyquist_order) != self.nyquist_order:
            raise ConfigError(f"nyquist_order must be a non-negative integer")
        if isinstance(self.demod, str) and self.demod != "auto":
            raise ConfigError(f"demod must be 'auto' or a frequency in GHz, got {self.demod!r}")
        if self.negative_detuning not in ("error", "clamp"):
            raise ConfigError("negative_detuning must be 'error' or 'clamp'")


@dataclass(frozen=True)
class ReconstructionResult:
    t: np.ndarray  # ns
    df_r: np.ndarray  # GHz
    phi_r: np.ndarray  # flux quanta
    demod_freq: float  # GHz, tone actually used for demodulation
    nyquist_order: int
    raw_phase: np.ndarray  # rad, unwrapped total phase
    edge_mask: np.ndarray  # True where the derivative window was truncated

    def __len__(self) -> int:
        return self.t.size


def extract_phase(trace: CryoscopeTrace, demod: float | str = "auto"):
    """Unwrapped total phase (rad) versus truncation, plus the demod tone.

    Returns ``(phase, demod_freq)``.  The phase is continuous after
    demodulation and unwrapping, and includes the demodulation ramp, so
    its slope is the full precession rate.
    """
    z = trace.x + 1j * trace.y
    if np.max(np.abs(z)) < 1e-12:
        raise SignalTooWeakError("trace carries no signal (all Bloch components zero)")
    dtau = trace.dtau
    if demod == "auto":
        spectrum = np.fft.fft(z)
        freqs = np.fft.fftfreq(z.size, d=dtau)
        demod_freq = float(freqs[np.argmax(np.abs(spectrum))])
    else:
        demod_freq = float(demod)
    residual = z * np.exp(-2j * np.pi * demod_freq * trace.tau)
    phase = np.unwrap(np.angle(residual)) + 2.0 * np.pi * demod_freq * trace.tau
    return phase, demod_freq


def sg_derivative(y: np.ndarray, dt: float, window: int, order: int) -> np.ndarray:
    """Savitzky-Golay first derivative with truncated-window edge refits.

    Interior points use the standard convolution coefficients; the first
    and last (window-1)/2 points refit the polynomial on the available
    (truncated) window instead of padding, so polynomials up to the
    filter order differentiate exactly everywhere.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < order + 1:
        raise ConfigError(f"need at least {order + 1} samples for an order-{order} fit")
    if n < window:
        return _polyfit_derivative_full(y, dt, order)
    half = window // 2
    coeffs = savgol_coeffs(window, order, deriv=1, delta=dt, use="conv")
    out = np.convolve(y, coeffs, mode="same")
    for i in range(half):
        out[i] = _edge_derivative(y[: i + half + 1], dt, order, i)
        out[n - 1 - i] = -_edge_derivative(y[n - 1 - i - half :][::-1], dt, order, i)
    return out


def _edge_derivative(window_vals: np.ndarray, dt: float, order: int, pos: int) -> float:
    """Derivative at index ``pos`` of a polynomial fit over ``window_vals``."""
    m = window_vals.size
    eff_order = min(order, m - 1)
    t = (np.arange(m) - pos) * dt
    coef = np.polynomial.polynomial.polyfit(t, window_vals, eff_order)
    return float(coef[1]) if eff_order >= 1 else 0.0


def _polyfit_derivative_full(y: np.ndarray, dt: float, order: int) -> np.ndarray:
    t = np.arange(y.size) * dt
    coef = np.polynomial.polynomial.polyfit(t, y, min(order, y.size - 1))
    dcoef = np.polynomial.polynomial.polyder(coef)
    return np.polynomial.polynomial.polyval(t, dcoef)


def fold_frequency(freq: float, nyquist: float) -> float:
    """Map a frequency onto [0, nyquist); alias order restores the rest."""
    return float(freq - nyquist * np.floor(freq / nyquist))


def detuning_estimate(
    phase: np.ndarray,
    cfg: ReconstructionConfig,
    tau: np.ndarray,
    demod_freq: float = 0.0,
) -> np.ndarray:
    """Detuning versus time (GHz) from the unwrapped total phase.

    The demodulation ramp is removed before differentiation so the
    filter sees a slowly varying residual, then the folded demodulation
    frequency and the alias offset are added back:
    df = d(residual)/dt / 2 pi + fold(demod) + order * nyquist.
    """
    tau = np.asarray(tau, dtype=float)
    dtau = float(tau[1] - tau[0])
    nyquist = 0.5 / dtau
    residual = phase - 2.0 * np.pi * demod_freq * tau
    slope = sg_derivative(residual, dtau, cfg.sg_window, cfg.sg_order)
    return slope / (2.0 * np.pi) + fold_frequency(demod_freq, nyquist) + cfg.nyquist_order * nyquist


def reconstruct(
    trace: CryoscopeTrace,
    cfg: ReconstructionConfig,
    flux_model: FluxModel | None = None,
) -> ReconstructionResult:
    """Full pipeline: trace -> detuning -> flux.

    ``flux_model`` defaults to the model recorded in the trace's config.
    Detunings outside the invertible range raise DetuningRangeError
    naming the first offending sample, unless the config clamps.
    """
    if flux_model is None:
        if trace.config is None:
            raise ConfigError("no flux model: pass one or attach a config to the trace")
        flux_model = trace.config.flux_model
    phase, demod_freq = extract_phase(trace, cfg.demod)
    df = detuning_estimate(phase, cfg, trace.tau, demod_freq)
    if cfg.negative_detuning == "clamp":
        df_inv = np.maximum(df, 0.0)
    else:
        bad = np.flatnonzero(df < 0)
        if bad.size:
            raise DetuningRangeError(
                f"detuning estimate {df[bad[0]]:.4g} GHz at sample {bad[0]} "
                f"(t = {trace.tau[bad[0]]:.4g} ns) is negative; "
                "use negative_detuning='clamp' for noisy data"
            )
        df_inv = df
    try:
        phi = np.asarray(flux_from_detuning(flux_model, df_inv))
    except DetuningRangeError as err:
        bad = int(np.argmax(df_inv))
        raise DetuningRangeError(f"{err} (first at sample {bad}, t = {trace.tau[bad]:.4g} ns)")
    half = cfg.sg_window // 2
    edge = np.zeros(trace.tau.size, dtype=bool)
    edge[:half] = True
    edge[trace.tau.size - half :] = True
    return ReconstructionResult(
        t=trace.tau,
        df_r=df,
        phi_r=phi,
        demod_freq=demod_freq,
        nyquist_order=cfg.nyquist_order,
        raw_phase=phase,
        edge_mask=edge,
    )


def mean_folded_frequency(trace: CryoscopeTrace, cfg: ReconstructionConfig) -> float:
    """Median detuning estimate folded into [0, nyquist), in GHz.

    Robust summary of where a trace's tone sits inside the alias band;
    the quantity whose wrap the order scan watches.
    """
    phase, demod_freq = extract_phase(trace, cfg.demod)
    base = detuning_estimate(
        phase, ReconstructionConfig(cfg.sg_window, cfg.sg_order, 0, cfg.demod), trace.tau, demod_freq
    )
    half = cfg.sg_window // 2
    interior = base[half : base.size - half] if base.size > 2 * half else base
    return float(np.median(interior))


def nyquist_order_scan(
    traces: list[CryoscopeTrace],
    cfg: ReconstructionConfig | None = None,
    guard_fraction: float = NYQUIST_GUARD_FRACTION,
) -> list[int]:
    """Assign alias orders to traces of increasing pulse amplitude.

    Watches the mean folded frequency: each wrap (a drop by more than
    0.4 of the Nyquist band between consecutive amplitudes) increments
    the order, so the assignment is non-decreasing.  Means within
    ``guard_fraction`` of the band edges are ambiguous and warn;
    amplitudes that close to a wrap should be avoided.
    """
    if cfg is None:
        cfg = ReconstructionConfig()
    if not traces:
        raise ConfigError("order scan needs at least one trace")
    means = [mean_folded_frequency(t, cfg) for t in traces]
    nyquist = 0.5 / traces[0].dtau
    guard = guard_fraction * nyquist
    orders = []
    order = 0
    prev = None
    for m in means:
        if m < guard or m > nyquist - guard:
            warnings.warn(
                f"mean frequency {m:.4g} GHz within {guard:.3g} GHz of an alias "
                "boundary; order assignment is ambiguous",
                NyquistAmbiguityWarning,
                stacklevel=2,
            )
        if prev is not None and m < prev - 0.4 * nyquist:
            order += 1
        orders.append(order)
        prev = m
    return orders
