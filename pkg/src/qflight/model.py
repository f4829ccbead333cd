"""Physical parameters, unit conventions, and feasibility checks.

Everything downstream works in decay-rate units (gamma = 1): times are
gamma*t, frequencies are omega/gamma.  The only places physical units
appear are :func:`map_velocity` and :func:`check_feasibility`, which use
the circular-Rydberg calibration (carrier 51.1 GHz, gamma = 33.3 Hz) for
which one unit of ``beta_omega0`` corresponds to 0.2 m/s.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

SPEED_OF_LIGHT = 299792458.0          # m/s
VELOCITY_PER_UNIT = 0.2               # m/s per unit of beta*omega0/gamma
RECOIL_MIN_VELOCITY = 1e-7            # m/s, below this photon recoil matters
DE_BROGLIE_COEFF = 1e-19              # lambda_B/lambda_0 ~ 1e-19 / beta
CLASSICAL_RATIO_MAX = 1e-3            # testable rendering of "much less than 1"


class ParameterError(ValueError):
    """A physical parameter violates its validity constraints."""


@dataclass(frozen=True)
class SystemParams:
    """All run parameters, in gamma units.

    Attributes
    ----------
    lambda_over_gamma:
        Cavity spectral width (photon leakage rate through the mirrors).
    delta_over_gamma:
        Detuning of the qubit transition from the cavity line center.
    beta_omega0_over_gamma:
        Velocity parameter beta*omega0; 0 means a stationary qubit.
    omega0_over_gamma:
        Carrier-to-decay frequency ratio.  The default 1e4 is a desk-scale
        stand-in for the physical ~1.5e9, chosen so the direct-quadrature
        kernel backend stays numerically tractable; the closed-form kernel
        does not depend on this ratio (only beta and beta*omega0 enter).
    t_max_gamma, dt_gamma:
        Simulation horizon and solver step.
    """

    lambda_over_gamma: float = 0.01
    delta_over_gamma: float = 0.0
    beta_omega0_over_gamma: float = 0.0
    omega0_over_gamma: float = 1e4
    t_max_gamma: float = 100.0
    dt_gamma: float = 1e-3

    @property
    def beta(self) -> float:
        return self.beta_omega0_over_gamma / self.omega0_over_gamma

    @property
    def omega1_over_gamma(self) -> float:
        """Cavity line center omega0 - delta."""
        return self.omega0_over_gamma - self.delta_over_gamma


@dataclass(frozen=True)
class CavityGeometry:
    """Quasi-mode index and light transit time of the right cavity.

    ``tau_gamma`` is the transit bound l/c in gamma*t units and is locked
    to the mode index by (omega0 - delta) * tau = n * pi.
    """

    n_mode: int
    tau_gamma: float


@dataclass(frozen=True)
class FeasibilityReport:
    de_broglie_ratio: float
    recoil_ok: bool
    classical_ok: bool
    velocity_mps: float


class CouplingRegime(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"
    CRITICAL = "critical"


def validate_params(raw: SystemParams) -> SystemParams:
    """Check every invariant; return the params unchanged if all hold.

    Raises :class:`ParameterError` naming the first violated constraint
    and the offending value.
    """
    if not raw.lambda_over_gamma > 0:
        raise ParameterError(
            f"lambda must be positive (lambda_over_gamma={raw.lambda_over_gamma})")
    if not raw.omega0_over_gamma > 0:
        raise ParameterError(
            f"omega0 must be positive (omega0_over_gamma={raw.omega0_over_gamma})")
    if raw.beta_omega0_over_gamma < 0:
        raise ParameterError(
            f"beta_omega0 must be nonnegative (beta_omega0_over_gamma={raw.beta_omega0_over_gamma})")
    if not raw.dt_gamma > 0:
        raise ParameterError(f"dt must be positive (dt_gamma={raw.dt_gamma})")
    if not raw.t_max_gamma >= raw.dt_gamma:
        raise ParameterError(
            f"t_max must be at least dt (t_max_gamma={raw.t_max_gamma}, dt_gamma={raw.dt_gamma})")
    if not raw.beta < 1.0:
        raise ParameterError(
            f"beta >= 1: sub-luminal bound violated "
            f"(beta_omega0_over_gamma={raw.beta_omega0_over_gamma}, "
            f"omega0_over_gamma={raw.omega0_over_gamma})")
    if not abs(raw.delta_over_gamma) < raw.omega0_over_gamma:
        raise ParameterError(
            f"detuning must be small versus the carrier "
            f"(delta_over_gamma={raw.delta_over_gamma}, "
            f"omega0_over_gamma={raw.omega0_over_gamma})")
    return raw


def map_velocity(beta_omega0_over_gamma: float) -> float:
    """Physical qubit velocity in m/s for the Rydberg calibration (0.2 m/s per unit)."""
    if beta_omega0_over_gamma < 0:
        raise ParameterError(
            f"beta_omega0 must be nonnegative (got {beta_omega0_over_gamma})")
    return VELOCITY_PER_UNIT * beta_omega0_over_gamma


def check_feasibility(beta_omega0_over_gamma: float) -> FeasibilityReport:
    """Classical-motion and recoil checks for a given velocity parameter.

    The de Broglie ratio estimate is 1e-19 / beta with beta = v/c.  A
    stationary qubit reports ratio 0 by convention (infinitely-heavy-atom
    limit) and fails the recoil bound.
    """
    v = map_velocity(beta_omega0_over_gamma)
    beta = v / SPEED_OF_LIGHT
    ratio = DE_BROGLIE_COEFF / beta if beta > 0 else 0.0
    return FeasibilityReport(
        de_broglie_ratio=ratio,
        recoil_ok=v > RECOIL_MIN_VELOCITY,
        classical_ok=ratio < CLASSICAL_RATIO_MAX,
        velocity_mps=v,
    )


def coupling_regime(lambda_over_gamma: float) -> CouplingRegime:
    """Strong when gamma > lambda/2, weak when gamma < lambda/2."""
    if not lambda_over_gamma > 0:
        raise ParameterError(
            f"lambda must be positive (lambda_over_gamma={lambda_over_gamma})")
    if lambda_over_gamma < 2.0:
        return CouplingRegime.STRONG
    if lambda_over_gamma > 2.0:
        return CouplingRegime.WEAK
    return CouplingRegime.CRITICAL


def desk_scale_geometry(params: SystemParams) -> CavityGeometry:
    """Smallest cavity that keeps the qubit inside for the whole run.

    Picks the least mode index n >= 1 with tau = n*pi/omega_n >= beta*t_max
    (omega_n = omega0 - delta), so the transit bound holds and
    omega_n * tau = n*pi exactly defines tau.
    """
    w1 = params.omega1_over_gamma
    need = params.beta * params.t_max_gamma
    n = max(1, math.ceil(need * w1 / math.pi))
    while n * math.pi / w1 < need:   # guard against ceil landing just short
        n += 1
    return CavityGeometry(n_mode=n, tau_gamma=n * math.pi / w1)


def params_from_mapping(values: dict, base: SystemParams | None = None) -> SystemParams:
    """Build params from config-file keys (lambda, delta, beta_omega0, ...)."""
    key_map = {
        "lambda": "lambda_over_gamma",
        "delta": "delta_over_gamma",
        "beta_omega0": "beta_omega0_over_gamma",
        "omega0": "omega0_over_gamma",
        "t_max": "t_max_gamma",
        "dt": "dt_gamma",
    }
    fields = {}
    for key, val in values.items():
        if key not in key_map:
            raise ParameterError(f"unknown parameter key '{key}'")
        fields[key_map[key]] = float(val)
    base = base if base is not None else SystemParams()
    return replace(base, **fields)
