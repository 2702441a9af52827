"""Photon shot-noise model: photon number <-> dephasing, Stark shift, temperature.

The central relation evaluated here is

    Gamma_n + 2*pi*i*Delta_f_q = (kappa/2) * (sqrt((1 + i*chi/kappa)^2
                                  + 4*i*chi*nbar/kappa) - 1),

with the square-root branch of non-negative real part, which is the
physical one (dephasing rates cannot be negative). The frequency shift
splits into a photon-number part and the constant Lamb shift
(chi/2pi)/2. In the small-photon-number limit this linearizes to

    Gamma_n + 2*pi*i*Delta_f_{q,nbar} = kappa*chi*(chi + i*kappa)*nbar
                                        / (kappa^2 + chi^2),

valid for |chi| <~ kappa; a DispersiveRegimeWarning is emitted outside
that regime. The black-body side is the Bose-Einstein occupation
nbar(T) = 1/(exp(h f / k_B T) - 1) and its inverse.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ._rootfind import bisect_increasing
from .core import H, K_B, TWO_PI, ComputationError, SystemParams, ValidationError

__all__ = [
    "ShotNoisePoint",
    "dephasing_full",
    "dephasing_linear",
    "photons_from_dephasing",
    "bose_einstein",
    "temperature_from_photons",
    "OutOfRange",
    "DispersiveRegimeWarning",
]


class OutOfRange(ComputationError):
    """Requested inversion target lies outside the modeled range."""


class DispersiveRegimeWarning(UserWarning):
    """The linearized model is used outside its |chi| <= kappa regime."""


@dataclass(frozen=True)
class ShotNoisePoint:
    """Shot-noise observables at one photon number (fields may be arrays).

    gamma_n is the induced dephasing rate (1/s), delta_f_stark the
    photon-number-dependent qubit shift Delta_f_{q,nbar} (Hz, signed),
    lamb_shift the constant offset (chi/2pi)/2 (Hz).
    """

    n_bar: np.ndarray | float
    gamma_n: np.ndarray | float
    delta_f_stark: np.ndarray | float
    lamb_shift: float

    @property
    def delta_f_total(self):
        """Full qubit shift Delta_f_q = Delta_f_{q,nbar} + Lamb shift (Hz)."""
        return self.delta_f_stark + self.lamb_shift


def _check_nbar(n_bar):
    n = np.asarray(n_bar, dtype=float)
    if np.any(n < 0):
        raise ValidationError("photon number must be non-negative")
    return n


def dephasing_full(n_bar, sys: SystemParams) -> ShotNoisePoint:
    """Exact dephasing rate and qubit shift at mean photon number n_bar.

    Scalar or array n_bar. The real part of the complex square root is
    non-negative by the principal-branch choice, hence gamma_n >= 0.
    """
    n = _check_nbar(n_bar)
    kappa, chi = sys.kappa, sys.chi
    z = (1.0 + 1j * chi / kappa) ** 2 + 4j * chi * n / kappa
    val = 0.5 * kappa * (np.sqrt(z) - 1.0)
    lamb = (chi / TWO_PI) / 2.0
    gamma = val.real
    delta_f = val.imag / TWO_PI - lamb
    if np.isscalar(n_bar):
        gamma, delta_f = float(gamma), float(delta_f)
    return ShotNoisePoint(n_bar=n_bar, gamma_n=gamma, delta_f_stark=delta_f, lamb_shift=lamb)


def dephasing_linear(n_bar, sys: SystemParams) -> ShotNoisePoint:
    """Small-photon-number linearization of dephasing_full."""
    n = _check_nbar(n_bar)
    kappa, chi = sys.kappa, sys.chi
    if abs(chi) > kappa:
        warnings.warn(
            f"|chi|={abs(chi):.3g} rad/s exceeds kappa={kappa:.3g} rad/s; "
            "the linearized model is outside its validity regime",
            DispersiveRegimeWarning,
            stacklevel=2,
        )
    denom = kappa**2 + chi**2
    gamma = kappa * chi**2 / denom * n
    delta_f = kappa**2 * chi / denom / TWO_PI * n
    lamb = (chi / TWO_PI) / 2.0
    if np.isscalar(n_bar):
        gamma, delta_f = float(gamma), float(delta_f)
    return ShotNoisePoint(n_bar=n_bar, gamma_n=gamma, delta_f_stark=delta_f, lamb_shift=lamb)


def photons_from_dephasing(gamma_n: float, sys: SystemParams, n_max: float = 10.0) -> float:
    """Photon number whose exact model dephasing rate equals gamma_n.

    The real part of the full model is strictly increasing in n_bar, so
    the root on [0, n_max] is unique; it is bisected to machine resolution.
    """
    if gamma_n < 0:
        raise ValidationError("dephasing rate must be non-negative")
    if gamma_n == 0.0:
        return 0.0
    top = dephasing_full(n_max, sys).gamma_n
    if gamma_n > top:
        raise OutOfRange(
            f"gamma_n={gamma_n:.6g} /s exceeds the model value {top:.6g} /s at n_bar={n_max}"
        )

    def objective(n):
        return dephasing_full(n, sys).gamma_n - gamma_n

    return bisect_increasing(objective, 0.0, n_max)


def bose_einstein(temperature, f: float):
    """Mean thermal occupation of a mode at cyclic frequency f (Hz)."""
    t = np.asarray(temperature, dtype=float)
    if np.any(t <= 0):
        raise ValidationError("temperature must be positive")
    if f <= 0:
        raise ValidationError("frequency must be positive")
    x = H * f / (K_B * t)
    # exp(-x)/(1 - exp(-x)): accurate for small x, silently underflows to 0
    # for large x instead of overflowing.
    n = np.exp(-x) / (-np.expm1(-x))
    return float(n) if np.isscalar(temperature) else n


def temperature_from_photons(n_bar, f: float):
    """Black-body temperature whose Bose-Einstein occupation at f is n_bar."""
    n = np.asarray(n_bar, dtype=float)
    if np.any(n <= 0):
        raise ValidationError("photon number must be positive")
    if f <= 0:
        raise ValidationError("frequency must be positive")
    t = (H * f / K_B) / np.log1p(1.0 / n)
    return float(t) if np.isscalar(n_bar) else t
