"""Virtual Ramsey-style acquisition of distorted flux pulses.

The experiment truncates the programmed pulse at a sweep of times tau,
pushes each truncated pulse through the distortion chain, integrates the
resulting detuning into an accumulated quantum phase, applies dephasing
and measurement noise, and reports the Bloch components <X> and <Y> per
truncation.

Phase integrals run on a sub-sample grid (``oversample`` times the pulse
rate, at least 4x) using trapezoidal integration; truncation instants
snap to that grid.  Truncation acts on the input, V_tau(t) =
V(t) * u(tau - t), before the chain.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

from .distortions import DistortionChain
from .errors import ConfigError, FluxDomainError
from .fluxmodel import (
    DephasingParams,
    FluxModel,
    dephasing_rate,
    detuning_from_flux,
)
from .waveform import Waveform, is_square

DEFAULT_SEP_MARGIN = 100.0  # ns added past the largest truncation


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to simulate one acquisition.

    ``pulse`` carries the programmed waveform in flux quanta (the
    voltage-to-flux conversion is absorbed into its amplitude).  The two
    final rotations are treated as instantaneous; ``t_sep`` is the fixed
    separation between them, defaulting to the largest truncation plus
    100 ns.
    """

    pulse: Waveform
    truncations: np.ndarray
    flux_model: FluxModel
    chain: DistortionChain = field(default_factory=DistortionChain)
    dephasing: DephasingParams | None = None
    t_sep: float | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    oversample: int = 4

    def __post_init__(self):
        truncations = np.asarray(self.truncations, dtype=float)
        if truncations.ndim != 1 or truncations.size < 1:
            raise ConfigError("truncations must be a non-empty 1-D array")
        if np.any(np.diff(truncations) <= 0):
            raise ConfigError("truncations must be strictly increasing")
        truncations = truncations.copy()
        truncations.flags.writeable = False
        object.__setattr__(self, "truncations", truncations)
        if self.t_sep is not None and self.t_sep <= truncations[-1]:
            raise ConfigError(
                f"t_sep = {self.t_sep} ns must exceed the largest truncation "
                f"{truncations[-1]} ns"
            )
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if self.oversample < 1 or int(self.oversample) != self.oversample:
            raise ConfigError("oversample must be a positive integer")

    @property
    def separation(self) -> float:
        if self.t_sep is not None:
            return self.t_sep
        return float(self.truncations[-1]) + DEFAULT_SEP_MARGIN


@dataclass(frozen=True)
class CryoscopeTrace:
    """Measured Bloch components per truncation time.

    With noise the components can stray a few sigma outside [-1, 1];
    values beyond 1 + 5*sigma are implausible and flagged on reload.
    """

    tau: np.ndarray
    x: np.ndarray
    y: np.ndarray
    config: ExperimentConfig | None = None

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if not (tau.shape == x.shape == y.shape) or tau.ndim != 1:
            raise ValueError("tau, x, y must be 1-D arrays of equal length")
        for name, arr in (("tau", tau), ("x", x), ("y", y)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.tau.size

    @property
    def dtau(self) -> float:
        steps = np.diff(self.tau)
        if steps.size == 0:
            raise ValueError("trace needs at least two truncations")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ValueError("trace truncations are not uniformly spaced")
        return float(steps[0])


class PhaseSolver:
    """Precomputed fine-grid machinery shared by all per-tau quantities.

    Builds the oversampled time grid once, realizes the chain on it, and
    answers phase, flux and dephasing queries for any truncation.  Three
    internal routes: a closed cumulative integral for the identity
    chain, shifted step-response differences for rectangular pulses, and
    per-truncation convolution for arbitrary shapes.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.t_sep = cfg.separation
        self.fine_rate = cfg.oversample * cfg.pulse.sample_rate
        self.fine_dt = 1.0 / self.fine_rate
        self.n_fine = int(round(self.t_sep * self.fine_rate)) + 1
        self.t_fine = np.arange(self.n_fine) / self.fine_rate

        self._square, self._amp, self._duration = is_square(cfg.pulse)
        self._ideal = len(cfg.chain) == 0
        self._n_dur = min(int(round(self._duration * self.fine_rate)), self.n_fine)

        pulse = np.repeat(cfg.pulse.samples, cfg.oversample)
        if pulse.size >= self.n_fine:
            self._v_fine = pulse[: self.n_fine]
        else:
            self._v_fine = np.concatenate([pulse, np.zeros(self.n_fine - pulse.size)])

        if self._ideal:
            df = self._detuning(self._v_fine)
            self._cum_phase = _cumtrapz(df, self.fine_dt)
            if cfg.dephasing is not None and cfg.dephasing.alpha_exp == 1.0:
                rate = dephasing_rate(cfg.dephasing, cfg.flux_model, self._v_fine)
                self._cum_rate = _cumtrapz(rate, self.fine_dt)
        elif self._square:
            self._step = cfg.chain.step_response(self.t_fine, self.fine_rate)
        else:
            self._kernel = cfg.chain.kernel(self.fine_rate, self.n_fine).samples

    # -- flux ---------------------------------------------------------

    def flux(self, tau: float) -> np.ndarray:
        """On-chip flux of the pulse truncated at ``tau``, on the fine grid."""
        return self._flux_at_index(self._index(tau))

    def _flux_at_index(self, n_tau: int) -> np.ndarray:
        if self._ideal:
            out = self._v_fine.copy()
            out[n_tau:] = 0.0
            return out
        if self._square:
            n_eff = min(n_tau, self._n_dur)
            shifted = np.zeros(self.n_fine)
            shifted[n_eff:] = self._step[: self.n_fine - n_eff]
            return self._amp * (self._step - shifted)
        v = self._v_fine.copy()
        v[n_tau:] = 0.0
        return fftconvolve(v, self._kernel)[: self.n_fine]

    def full_flux(self) -> np.ndarray:
        """Flux of the untruncated pulse (the quantity a scope would show)."""
        if self._ideal:
            return self._v_fine.copy()
        if self._square:
            return self._flux_at_index(self.n_fine)
        return fftconvolve(self._v_fine, self._kernel)[: self.n_fine]

    def full_flux_at(self, times) -> np.ndarray:
        full = self.full_flux()
        idx = np.clip(np.round(np.asarray(times) * self.fine_rate).astype(int), 0, self.n_fine - 1)
        return full[idx]

    # -- phases -------------------------------------------------------

    def phase(self, tau: float) -> float:
        """Accumulated phase (rad) for the pulse truncated at ``tau``."""
        if tau > self.t_sep:
            raise ConfigError(f"truncation {tau} ns exceeds t_sep = {self.t_sep} ns")
        if self._ideal:
            return 2.0 * np.pi * self._cum_phase[self._index(tau)]
        df = self._detuning(self.flux(tau))
        return 2.0 * np.pi * np.trapezoid(df, dx=self.fine_dt)

    def phases(self, taus) -> np.ndarray:
        return np.array([self.phase(t) for t in np.asarray(taus, dtype=float)])

    def sample_point(self, tau: float) -> tuple[float, float]:
        """(phase, visibility) at one truncation, sharing the flux array."""
        if tau > self.t_sep:
            raise ConfigError(f"truncation {tau} ns exceeds t_sep = {self.t_sep} ns")
        if self._ideal:
            return self.phase(tau), self.visibility(tau)
        flux = self.flux(tau)
        phi = 2.0 * np.pi * np.trapezoid(self._detuning(flux), dx=self.fine_dt)
        return phi, self.visibility(tau, flux=flux)

    def segment_integral(self, tau: float, a: float, b: float) -> float:
        """Integral of the detuning of the tau-truncated pulse over [a, b], in GHz*ns."""
        ia, ib = self._index(a), self._index(b)
        if self._ideal:
            return self._cum_phase[ib] - self._cum_phase[ia]
        df = self._detuning(self.flux(tau))
        return float(np.trapezoid(df[ia : ib + 1], dx=self.fine_dt))

    # -- dephasing ----------------------------------------------------

    def visibility(self, tau: float, flux: np.ndarray | None = None) -> float:
        """Ramsey fringe amplitude after dephasing, 1.0 when dephasing is off.

        For alpha_exp = 1 the fringe decays with the integral of the
        instantaneous rate over the truncated-pulse flux; alpha_exp > 1
        follows the stretched-exponential law and is defined only for
        constant-amplitude pulses.  ``flux`` reuses an already computed
        fine-grid flux array.
        """
        dp = self.cfg.dephasing
        if dp is None or (dp.gamma0 == 0.0 and dp.gamma1 == 0.0):
            return 1.0
        if dp.alpha_exp != 1.0:
            if not self._square:
                raise ConfigError(
                    "alpha_exp != 1 is only defined for constant-amplitude pulses"
                )
            gamma = dephasing_rate(dp, self.cfg.flux_model, self._amp)
            return float(np.exp(-((gamma * 1e-3 * tau) ** dp.alpha_exp)))
        if self._ideal and flux is None:
            integral = self._cum_rate[self._index(tau)] + dp.gamma0 * (self.t_sep - tau)
            return float(np.exp(-integral * 1e-3))
        if flux is None:
            flux = self.flux(tau)
        rate = dephasing_rate(dp, self.cfg.flux_model, flux)
        return float(np.exp(-np.trapezoid(rate, dx=self.fine_dt) * 1e-3))

    # -- helpers ------------------------------------------------------

    def _index(self, t: float) -> int:
        n = int(round(t * self.fine_rate))
        if n < 0 or n >= self.n_fine:
            raise ConfigError(f"time {t} ns outside the simulated window [0, {self.t_sep}]")
        return n

    def _detuning(self, flux: np.ndarray) -> np.ndarray:
        try:
            return detuning_from_flux(self.cfg.flux_model, flux)
        except FluxDomainError as err:
            bad = _first_bad_flux_index(self.cfg.flux_model, flux)
            t_bad = bad / self.fine_rate
            raise FluxDomainError(f"{err} (at t = {t_bad:.4f} ns)") from None


def _first_bad_flux_index(model, flux) -> int:
    from .fluxmodel import TransmonParams

    if isinstance(model, TransmonParams):
        c = np.abs(np.cos(np.pi * flux))
        bad = np.flatnonzero(c <= model._cos_floor)
        if bad.size:
            return int(bad[0])
    return 0


def _cumtrapz(y: np.ndarray, dx: float) -> np.ndarray:
    out = np.empty(y.size)
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) * (0.5 * dx), out=out[1:])
    return out


def acquired_phase(cfg: ExperimentConfig, tau: float) -> float:
    """Quantum phase (rad) accumulated with the pulse truncated at ``tau``.

    Integrates the detuning of the distorted, truncated pulse from 0 to
    t_sep on the oversampled grid.
    """
    return PhaseSolver(cfg).phase(tau)


@dataclass(frozen=True)
class EpsilonDecomposition:
    """Split of the finite-difference detuning estimate into truth and error.

    ``df_q`` is the true average detuning on [tau, tau+dtau]; ``eps_on``
    and ``eps_off`` are the phase contributions (expressed as rates) of
    the turn-off transients of the two truncations, and ``eps`` their
    difference, the estimator inaccuracy.
    """

    df_q: float
    eps_on: float
    eps_off: float

    @property
    def eps(self) -> float:
        return self.eps_on - self.eps_off

    @property
    def df_r(self) -> float:
        return self.df_q + self.eps


def epsilon_decomposition(
    cfg: ExperimentConfig, tau: float, dtau: float, solver: PhaseSolver | None = None
) -> EpsilonDecomposition:
    """Decompose the detuning estimate at ``tau`` with step ``dtau``.

    The parts satisfy df_q + eps = (phase(tau+dtau) - phase(tau)) /
    (2*pi*dtau) to integration tolerance.
    """
    if solver is None:
        solver = PhaseSolver(cfg)
    t_sep = solver.t_sep
    if tau + dtau > t_sep:
        raise ConfigError(f"tau + dtau = {tau + dtau} ns exceeds t_sep = {t_sep} ns")
    df_q = solver.segment_integral(tau + dtau, tau, tau + dtau) / dtau
    eps_on = solver.segment_integral(tau + dtau, tau + dtau, t_sep) / dtau
    eps_off = solver.segment_integral(tau, tau, t_sep) / dtau
    return EpsilonDecomposition(df_q=df_q, eps_on=eps_on, eps_off=eps_off)


def noiseless_components(solver: PhaseSolver) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic (phase, visibility) arrays over the truncation sweep."""
    taus = solver.cfg.truncations
    phis = np.empty(taus.size)
    rs = np.empty(taus.size)
    for i, tau in enumerate(taus):
        phis[i], rs[i] = solver.sample_point(tau)
    return phis, rs


def trace_from_components(
    cfg: ExperimentConfig, phis: np.ndarray, rs: np.ndarray, trial: int = 0
) -> CryoscopeTrace:
    """Add measurement noise to precomputed phases and visibilities.

    Noise is drawn from a generator seeded per (seed, trial, truncation
    index), so results are deterministic and independent of evaluation
    order; ``trial`` distinguishes repeated experiments sharing one
    config.  The x draw precedes the y draw at each truncation.
    """
    x = rs * np.cos(phis)
    y = rs * np.sin(phis)
    if cfg.noise_sigma > 0:
        for i in range(x.size):
            rng = np.random.default_rng([cfg.seed, trial, i])
            noise = rng.normal(0.0, cfg.noise_sigma, 2)
            x[i] += noise[0]
            y[i] += noise[1]
    return CryoscopeTrace(tau=cfg.truncations, x=x, y=y, config=cfg)


def simulate_trace(
    cfg: ExperimentConfig, trial: int = 0, solver: PhaseSolver | None = None
) -> CryoscopeTrace:
    """Simulate the full acquisition: one (x, y) pair per truncation.

    x = r*cos(phi) + N(0, sigma), y = r*sin(phi) + N(0, sigma) with the
    visibility r set by dephasing.  Identical (config, trial) pairs give
    bit-identical traces.
    """
    if solver is None:
        solver = PhaseSolver(cfg)
    phis, rs = noiseless_components(solver)
    return trace_from_components(cfg, phis, rs, trial)
