"""Uniformly sampled real-valued time series, the universal signal currency.

The default grid is 2.4 samples per ns, matching the waveform generator
this toolkit models.  Waveforms are immutable; transformations return
new instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_SAMPLE_RATE = 2.4  # samples per ns


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 1:
            raise ValueError("waveform needs a 1-D array of at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("waveform samples must be finite")
        if not self.sample_rate > 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        """Sample spacing in ns."""
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        """Time span covered by the samples in ns."""
        return (len(self) - 1) * self.dt

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) / self.sample_rate

    def with_samples(self, samples) -> "Waveform":
        return Waveform(samples, self.sample_rate, self.t0)

    def resampled(self, sample_rate: float) -> "Waveform":
        """Resample convolution-kernel weights onto a new uniform grid.

        The samples are treated as step-response differences: their
        running sum is interpolated onto the new grid and re-differenced,
        so both the step shape and the DC gain survive the rate change.
        """
        if sample_rate == self.sample_rate:
            return self
        t_old = self.times()
        csum = np.cumsum(self.samples)
        duration = t_old[-1] - self.t0
        n_new = int(np.ceil(duration * sample_rate - 1e-9)) + 1
        t_new = self.t0 + np.arange(n_new) / sample_rate
        s_new = np.interp(t_new, t_old, csum, left=0.0, right=csum[-1])
        samples = np.diff(np.concatenate([[0.0], s_new]))
        return Waveform(samples, sample_rate, self.t0)


def square_pulse(
    amplitude: float,
    duration: float,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    total: float | None = None,
) -> Waveform:
    """Rectangular pulse: ``amplitude`` on [0, duration), zero after.

    ``total`` extends the record past the pulse (defaults to the pulse
    duration itself).
    """
    if total is None:
        total = duration
    n = int(round(total * sample_rate)) + 1
    t = np.arange(n) / sample_rate
    return Waveform(np.where(t < duration, amplitude, 0.0), sample_rate)


def piecewise_constant(
    levels,
    segment_duration: float,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    tail: float = 0.0,
) -> Waveform:
    """Multi-level pulse holding each of ``levels`` for ``segment_duration`` ns."""
    levels = np.asarray(levels, dtype=float)
    n_total = int(round((len(levels) * segment_duration + tail) * sample_rate)) + 1
    t = np.arange(n_total) / sample_rate
    idx = np.floor(t / segment_duration).astype(int)
    samples = np.where(idx < len(levels), levels[np.minimum(idx, len(levels) - 1)], 0.0)
    return Waveform(samples, sample_rate)


def is_square(wf: Waveform) -> tuple[bool, float, float]:
    """Detect a rectangular pulse starting at the first sample.

    Returns ``(flag, amplitude, duration_ns)``; enables closed-form
    truncation shortcuts in the experiment simulator.
    """
    s = wf.samples
    nz = np.flatnonzero(s != 0.0)
    if nz.size == 0:
        return False, 0.0, 0.0
    if nz[0] != 0 or not np.all(np.diff(nz) == 1):
        return False, 0.0, 0.0
    amp = s[nz[0]]
    if not np.all(s[nz] == amp):
        return False, 0.0, 0.0
    return True, float(amp), (nz[-1] + 1) * wf.dt
