"""Memory kernel of the moving-qubit Volterra equation, closed-form backend.

The two-time correlation function weighting past amplitudes is, for a
Lorentzian coupling spectrum and a qubit crossing the cavity at constant
speed, a sum of two complex exponentials in the lag t - t':

    F(t, t') = (lambda/8) * [exp(-mu1 (t-t')) + exp(-mu2 (t-t'))]
    mu1 = lambda (1 - beta) - i (delta + beta omega1)
    mu2 = lambda (1 + beta) - i (delta - beta omega1),   omega1 = omega0 - delta

(gamma = 1 units).  This follows from product-to-sum splitting of the two
motion shape functions, dropping the boundary branch that oscillates with
the total time t + t', and extending the frequency integral to the whole
real line.  At beta = 0 both branches coincide and collapse to a single
exponential of weight lambda/4 and rate lambda - i*delta.

The direct numerical-quadrature backend that keeps the boundary branch
and the omega >= 0 integration limit lives in :mod:`qflight.quadrature`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import CavityGeometry, SystemParams


class KernelError(ValueError):
    """Invalid kernel construction or evaluation request."""


@dataclass(frozen=True)
class ExponentialKernel:
    """Finite sum of weighted decaying complex exponentials in the lag.

    ``branches`` holds (weight, rate) pairs; the kernel value at lag s >= 0
    is sum_j w_j * exp(-mu_j s).  Every rate must have positive real part
    so the kernel decays.
    """

    branches: tuple[tuple[complex, complex], ...]

    def __post_init__(self):
        if not self.branches:
            raise KernelError("kernel needs at least one branch")
        for _, mu in self.branches:
            if not mu.real > 0:
                raise KernelError(f"kernel rate must have positive real part (rate={mu})")

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.branches], dtype=complex)

    @property
    def rates(self) -> np.ndarray:
        return np.array([mu for _, mu in self.branches], dtype=complex)

    @property
    def total_weight(self) -> complex:
        """Equal-time kernel value F(t, t) = sum of weights."""
        return complex(np.sum(self.weights))

    def lag_values(self, lags) -> np.ndarray:
        """Vectorised evaluation on an array of nonnegative lags."""
        lags = np.asarray(lags, dtype=float)
        if np.any(lags < 0):
            raise KernelError("negative lag")
        return np.exp(-np.multiply.outer(lags, self.rates)) @ self.weights

    def __call__(self, t: float, tprime: float) -> complex:
        return eval_exponential_kernel(self, t - tprime)


def spectral_density(omega_over_gamma, params: SystemParams):
    """Lorentzian coupling spectrum J(omega), gamma units.

    J(omega) = (1/2pi) lambda^2 / [(omega0 - omega - delta)^2 + lambda^2],
    peaked at the cavity line center omega1 = omega0 - delta with
    half-width lambda and peak value 1/(2 pi).
    """
    lam = params.lambda_over_gamma
    x = params.omega0_over_gamma - np.asarray(omega_over_gamma, dtype=float) - params.delta_over_gamma
    return (lam * lam / (2.0 * math.pi)) / (x * x + lam * lam)


def shape_function(t_gamma: float, omega_over_gamma: float,
                   params: SystemParams, geom: CavityGeometry) -> float:
    """Position-dependent coupling profile sin[omega (beta t - tau)].

    Valid while the qubit is inside the cavity, 0 <= beta t <= tau.  The
    phase is reduced with omega1 * tau = n * pi so the zeros pinned by the
    geometry (e.g. at t = 0 for omega = omega_n) come out exact instead of
    inheriting the rounding of n*pi.
    """
    beta = params.beta
    z = beta * t_gamma
    if z < 0 or z > geom.tau_gamma * (1 + 1e-12):
        raise KernelError(
            f"qubit outside cavity: beta*t={z}, tau={geom.tau_gamma}")
    w1 = params.omega1_over_gamma
    # omega*(beta t - tau) = (omega - omega1)*(beta t - tau) + omega1*beta*t - n*pi
    phase = (omega_over_gamma - w1) * (z - geom.tau_gamma) + w1 * z
    sign = -1.0 if geom.n_mode % 2 else 1.0
    return sign * math.sin(phase)


def residue_kernel(params: SystemParams) -> ExponentialKernel:
    """Closed-form two-branch kernel for the given parameters.

    Collapses to the single stationary branch (weight lambda/4, rate
    lambda - i*delta) when beta_omega0 is exactly zero.
    """
    lam = params.lambda_over_gamma
    delta = params.delta_over_gamma
    if params.beta_omega0_over_gamma == 0.0:
        return ExponentialKernel(branches=((lam / 4.0, complex(lam, -delta)),))
    beta = params.beta
    bw1 = beta * params.omega1_over_gamma
    mu1 = complex(lam * (1.0 - beta), -(delta + bw1))
    mu2 = complex(lam * (1.0 + beta), -(delta - bw1))
    w = lam / 8.0
    return ExponentialKernel(branches=((w, mu1), (w, mu2)))


def eval_exponential_kernel(kernel: ExponentialKernel, dt_gamma: float) -> complex:
    """Kernel value at a single nonnegative lag."""
    if dt_gamma < 0:
        raise KernelError(f"negative lag (dt_gamma={dt_gamma})")
    return complex(sum(w * np.exp(-mu * dt_gamma) for w, mu in kernel.branches))
