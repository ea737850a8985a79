"""Flux-to-detuning models for a flux-tunable transmon.

Energies are expressed in frequency units (GHz), flux in units of the
flux quantum, so Planck's constant and the flux quantum never appear at
runtime.  Two models are supported: the full symmetric-junction cosine
band and the power-law approximation ``df = a * |phi|**k`` valid near
the sweetspot.  Both are pure functions of immutable parameter records
and safe for concurrent use.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DetuningRangeError, FluxDomainError, TransmonRegimeWarning

# A rate of 1 GHz is 1000/us; dephasing rates are carried in 1/us.
GHZ_TO_PER_US = 1e3


@dataclass(frozen=True)
class TransmonParams:
    """Symmetric two-junction transmon energies, both in GHz.

    ``ej`` is the sum of the Josephson energies, ``ec`` the charging
    energy.  ``ej/ec`` below 20 is allowed but triggers a warning since
    the band formula degrades outside the transmon regime.
    """

    ej: float
    ec: float

    def __post_init__(self):
        if self.ej <= 0 or self.ec <= 0:
            raise ValueError(f"ej and ec must be positive, got ej={self.ej}, ec={self.ec}")
        if self.ej / self.ec < 20:
            warnings.warn(
                f"ej/ec = {self.ej / self.ec:.1f} < 20: outside the transmon regime, "
                "the cosine band formula may be inaccurate",
                TransmonRegimeWarning,
                stacklevel=2,
            )

    @property
    def f_max(self) -> float:
        """Sweetspot (maximal) qubit frequency in GHz."""
        return np.sqrt(8.0 * self.ej * self.ec) - self.ec

    def quadratic_coefficient(self) -> float:
        """Small-flux curvature ``a`` such that df ~ a*phi**2 near the sweetspot."""
        return np.sqrt(8.0 * self.ej * self.ec) * np.pi**2 / 4.0

    # |cos(pi*phi)| must stay above this for the qubit frequency to be real.
    @property
    def _cos_floor(self) -> float:
        return self.ec / (8.0 * self.ej)


@dataclass(frozen=True)
class PowerLawModel:
    """Detuning ``a * |phi|**k`` with a > 0 and integer k >= 1."""

    a: float
    k: int = 2

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError(f"power-law coefficient must be positive, got a={self.a}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"exponent must be a positive integer, got k={self.k}")


@dataclass(frozen=True)
class DephasingParams:
    """White-noise sweetspot rate plus a 1/f flux-noise term.

    ``gamma0`` in 1/us, ``gamma1`` in flux quanta (it multiplies the
    flux sensitivity |d df/d phi| in GHz per flux quantum), ``alpha_exp``
    the decay-law exponent in [1, 2].
    """

    gamma0: float = 0.0
    gamma1: float = 0.0
    alpha_exp: float = 1.0

    def __post_init__(self):
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise ValueError("dephasing rates must be non-negative")
        if not 1.0 <= self.alpha_exp <= 2.0:
            raise ValueError(f"alpha_exp must lie in [1, 2], got {self.alpha_exp}")


FluxModel = TransmonParams | PowerLawModel


def detuning_from_flux(model: FluxModel, phi):
    """Detuning from the sweetspot (GHz) at flux ``phi`` (flux quanta).

    Even in ``phi``; zero at the sweetspot.  For the full cosine model a
    flux where the band formula turns unphysical raises FluxDomainError.
    """
    phi = np.asarray(phi, dtype=float)
    if isinstance(model, PowerLawModel):
        df = model.a * np.abs(phi) ** model.k
    else:
        c = np.abs(np.cos(np.pi * phi))
        _check_cos_domain(model, c, phi)
        f_q = np.sqrt(8.0 * model.ej * model.ec * c) - model.ec
        df = model.f_max - f_q
    return df if df.ndim else float(df)


def flux_from_detuning(model: FluxModel, df):
    """Non-negative flux branch (flux quanta) producing detuning ``df`` (GHz).

    The inverse of :func:`detuning_from_flux` restricted to
    phi in [0, 0.5); detunings outside the attainable range raise
    DetuningRangeError.  A quadratic-sweetspot measurement cannot
    distinguish the sign of the flux, hence the single branch.
    """
    df = np.asarray(df, dtype=float)
    if np.any(df < 0):
        bad = float(np.min(df))
        raise DetuningRangeError(f"detuning must be non-negative, got {bad} GHz")
    if isinstance(model, PowerLawModel):
        df_max = model.a * 0.5**model.k
        if np.any(df > df_max):
            bad = float(np.max(df))
            raise DetuningRangeError(
                f"detuning {bad} GHz exceeds the model range {df_max} GHz on [0, 0.5)"
            )
        phi = (df / model.a) ** (1.0 / model.k)
    else:
        f_max = model.f_max
        if np.any(df > f_max):
            bad = float(np.max(df))
            raise DetuningRangeError(
                f"detuning {bad} GHz exceeds the attainable maximum {f_max} GHz"
            )
        c = (f_max - df + model.ec) ** 2 / (8.0 * model.ej * model.ec)
        phi = np.arccos(np.minimum(c, 1.0)) / np.pi
    return phi if phi.ndim else float(phi)


def flux_sensitivity(model: FluxModel, phi):
    """Derivative d(detuning)/d(flux) in GHz per flux quantum; odd in ``phi``."""
    phi = np.asarray(phi, dtype=float)
    if isinstance(model, PowerLawModel):
        sens = model.a * model.k * np.abs(phi) ** (model.k - 1) * np.sign(phi)
    else:
        c = np.abs(np.cos(np.pi * phi))
        _check_cos_domain(model, c, phi)
        sgn = np.sign(np.cos(np.pi * phi))
        sens = (
            np.sqrt(8.0 * model.ej * model.ec)
            * np.pi
            * np.sin(np.pi * phi)
            * sgn
            / (2.0 * np.sqrt(c))
        )
    return sens if sens.ndim else float(sens)


def dephasing_rate(dp: DephasingParams, model: FluxModel, phi):
    """Pure-dephasing rate gamma0 + gamma1*|d df/d phi| in 1/us."""
    sens = np.abs(np.asarray(flux_sensitivity(model, phi)))
    rate = dp.gamma0 + dp.gamma1 * sens * GHZ_TO_PER_US
    return rate if rate.ndim else float(rate)


def _check_cos_domain(model: TransmonParams, c, phi):
    floor = model._cos_floor
    if np.any(c <= floor):
        bad = np.asarray(phi)[np.asarray(c) <= floor]
        bad = float(np.atleast_1d(bad)[0])
        raise FluxDomainError(
            f"flux {bad} flux quanta leaves the band formula domain "
            f"(|cos(pi*phi)| <= {floor:.3e})"
        )
