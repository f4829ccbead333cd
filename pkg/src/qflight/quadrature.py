"""Direct numerical-quadrature backend for the memory kernel.

This is the oracle side of the kernel cross-check: it integrates

    F(t, t') = int J(omega) sin[omega (beta t - tau)] sin[omega (beta t' - tau)]
               * exp(-i (omega - omega0) (t - t')) domega

over the configured frequency window around the Lorentzian line center,
without the simplifications baked into the closed-form backend.  The sine
product is split product-to-sum into complex-exponential branches

    exp(i a omega),   a in { -(1-beta)s, -(1+beta)s,               (main)
                             beta(t+t') - 2 tau - s, and mirror }  (boundary)

and each branch reduces to one scalar oscillatory integral
I(a) = int J(omega) exp(i a omega) domega, evaluated with QUADPACK's
oscillatory rules: QAWO on the window, QAWF for the upper tail, and
dyadically split QAWO panels from the window edge down to omega = 0
(QUADPACK's error estimate is unreliable when a single oscillatory panel
spans the full 4-decade drop of the Lorentzian wing, so the wing is split
into octaves).

The boundary branches depend on t + t', not just the lag, which is why
the solver-facing cache (:class:`SplineLagKernel`) drops them; they stay
available here so the backend discrepancy can be measured rather than
hidden.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline

from .kernel import KernelError
from .model import CavityGeometry, SystemParams


class QuadratureConvergenceError(RuntimeError):
    """Adaptive refinement could not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Integration window and tolerance knobs.

    window_halfwidth_lambdas:
        Half-width of the core window around omega1 in units of lambda.
        The default 50 leaves ~1/(pi*50) of the Lorentzian mass outside
        the window per side; the tail pieces recover it.
    rel_tol:
        Target accuracy relative to the total spectral mass lambda/2.
    include_boundary_term:
        Keep the branch oscillating with beta(t+t') - 2 tau.
    truncate_at_zero:
        Honor the omega >= 0 lower limit of the frequency integral.
    panel_budget:
        Max subintervals per QUADPACK call before reporting failure.
    """

    window_halfwidth_lambdas: float = 50.0
    rel_tol: float = 1e-6
    include_boundary_term: bool = True
    truncate_at_zero: bool = True
    panel_budget: int = 250

    def __post_init__(self):
        if not self.window_halfwidth_lambdas > 0:
            raise KernelError("window halfwidth must be positive")
        if not 0 < self.rel_tol < 1:
            raise KernelError("rel_tol must lie in (0, 1)")


def _segments(w1: float, lam: float, cfg: QuadratureConfig) -> list[tuple[float, float]]:
    """Core window plus octave-split wing panels down to omega = 0."""
    lo = max(0.0, w1 - cfg.window_halfwidth_lambdas * lam)
    hi = w1 + cfg.window_halfwidth_lambdas * lam
    segs = [(lo, hi)]
    d = w1 - lo
    while lo > 0.0:
        nxt = max(0.0, w1 - 2.0 * d)
        segs.append((nxt, lo))
        lo = nxt
        d *= 2.0
    return segs


def phase_integral(a: float, params: SystemParams, cfg: QuadratureConfig) -> complex:
    """I(a) = int J(omega) exp(i a omega) domega over the configured domain."""
    lam = params.lambda_over_gamma
    w1 = params.omega1_over_gamma

    def J(w):
        return (lam * lam / (2.0 * math.pi)) / ((w - w1) ** 2 + lam * lam)

    segs = _segments(w1, lam, cfg)
    mass = lam / 2.0
    epsabs = cfg.rel_tol * mass / (2.0 + len(segs))
    limit = cfg.panel_budget
    absa = abs(a)
    sgn = 1.0 if a >= 0 else -1.0

    total = 0.0 + 0.0j
    claimed = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for (a_, b_) in segs:
            if absa == 0.0:
                v, e = quad(J, a_, b_, epsabs=epsabs, epsrel=cfg.rel_tol, limit=limit)
                total += v
                claimed += e
            else:
                c, ec = quad(J, a_, b_, weight="cos", wvar=absa,
                             epsabs=epsabs, epsrel=cfg.rel_tol, limit=limit)
                s, es = quad(J, a_, b_, weight="sin", wvar=absa,
                             epsabs=epsabs, epsrel=cfg.rel_tol, limit=limit)
                total += c + 1j * sgn * s
                claimed += ec + es
        # upper tail on [hi, inf)
        hi = segs[0][1]
        if absa == 0.0:
            v, e = quad(J, hi, np.inf, epsabs=epsabs, epsrel=cfg.rel_tol, limit=limit)
            total += v
            claimed += e
        else:
            c, ec = quad(J, hi, np.inf, weight="cos", wvar=absa, epsabs=epsabs, limit=limit)
            s, es = quad(J, hi, np.inf, weight="sin", wvar=absa, epsabs=epsabs, limit=limit)
            total += c + 1j * sgn * s
            claimed += ec + es
        if not cfg.truncate_at_zero:
            # (-inf, 0]: reflect to a decaying Fourier integral on [0, inf)
            def Jr(u):
                return J(-u)

            if absa == 0.0:
                v, e = quad(Jr, 0.0, np.inf, epsabs=epsabs, epsrel=cfg.rel_tol, limit=limit)
                total += v
                claimed += e
            else:
                c, ec = quad(Jr, 0.0, np.inf, weight="cos", wvar=absa, epsabs=epsabs, limit=limit)
                s, es = quad(Jr, 0.0, np.inf, weight="sin", wvar=absa, epsabs=epsabs, limit=limit)
                total += c - 1j * sgn * s
                claimed += ec + es

    if claimed > 100.0 * cfg.rel_tol * mass:
        raise QuadratureConvergenceError(
            f"phase integral did not converge: claimed error {claimed:.3e} "
            f"exceeds budget at panel_budget={cfg.panel_budget} (a={a})")
    return total


def quadrature_kernel(t_gamma: float, tprime_gamma: float, params: SystemParams,
                      geom: CavityGeometry, cfg: QuadratureConfig | None = None) -> complex:
    """Direct evaluation of the memory kernel F(t, t').

    Both times must keep the qubit inside the cavity (0 <= beta t <= tau).
    Evaluation with t < t' is allowed and returns the Hermitian-conjugate
    value, which the symmetry diagnostics rely on.
    """
    cfg = cfg if cfg is not None else QuadratureConfig()
    beta = params.beta
    tau = geom.tau_gamma
    for label, tt in (("t", t_gamma), ("t'", tprime_gamma)):
        z = beta * tt
        if z < 0 or z > tau * (1 + 1e-12):
            raise KernelError(f"qubit outside cavity at {label}={tt} (beta*t={z}, tau={tau})")

    s = t_gamma - tprime_gamma
    branches = [(0.25, -(1.0 - beta) * s), (0.25, -(1.0 + beta) * s)]
    if cfg.include_boundary_term:
        p = beta * (t_gamma + tprime_gamma) - 2.0 * tau
        branches += [(-0.25, p - s), (-0.25, -p - s)]

    total = 0.0 + 0.0j
    for coeff, a in branches:
        total += coeff * phase_integral(a, params, cfg)
    return complex(np.exp(1j * params.omega0_over_gamma * s) * total)


class SplineLagKernel:
    """Solver-facing lag kernel backed by the quadrature integrals.

    Used when driving the Volterra solver from the quadrature backend:
    the boundary branch is dropped (it depends on t + t', not the lag),
    and the remaining branch integrals I(a) are sampled on a coarse grid
    after factoring out the fast carrier exp(i omega1 a), then cubic-spline
    interpolated.  The residual varies on the scale of 1/lambda and of the
    window-edge ripple 2 pi / (W lambda), which sets the sample spacing.
    """

    def __init__(self, params: SystemParams, cfg: QuadratureConfig | None = None,
                 t_max: float | None = None):
        cfg = cfg if cfg is not None else QuadratureConfig()
        if cfg.include_boundary_term:
            cfg = QuadratureConfig(
                window_halfwidth_lambdas=cfg.window_halfwidth_lambdas,
                rel_tol=cfg.rel_tol,
                include_boundary_term=False,
                truncate_at_zero=cfg.truncate_at_zero,
                panel_budget=cfg.panel_budget,
            )
        self.params = params
        self.cfg = cfg
        lam = params.lambda_over_gamma
        w1 = params.omega1_over_gamma
        beta = params.beta
        horizon = params.t_max_gamma if t_max is None else t_max
        amax = (1.0 + beta) * (horizon + 4.0 * params.dt_gamma)

        ripple = 2.0 * math.pi / (cfg.window_halfwidth_lambdas * lam)
        da = min(0.25 / lam, ripple / 12.0)
        npts = max(33, int(math.ceil(amax / da)) + 1)
        grid = np.linspace(-amax, 0.0, npts)
        gvals = np.array([phase_integral(a, params, cfg) * np.exp(-1j * w1 * a)
                          for a in grid])
        self._spline = CubicSpline(grid, gvals)
        self._amax = amax
        self._w1 = w1
        self._beta = beta
        self._delta = params.delta_over_gamma

    def lag_values(self, lags) -> np.ndarray:
        lags = np.asarray(lags, dtype=float)
        if np.any(lags < 0):
            raise KernelError("negative lag")
        if np.any(lags * (1.0 + self._beta) > self._amax * (1 + 1e-12)):
            raise KernelError("lag beyond cached horizon")
        bw1 = self._beta * self._w1
        a1 = -(1.0 - self._beta) * lags
        a2 = -(1.0 + self._beta) * lags
        # exp(i omega0 s) * exp(i omega1 a_{1,2}) = exp(i (delta +- beta omega1) s)
        ph1 = np.exp(1j * (self._delta + bw1) * lags)
        ph2 = np.exp(1j * (self._delta - bw1) * lags)
        return 0.25 * (ph1 * self._spline(a1) + ph2 * self._spline(a2))

    def __call__(self, t: float, tprime: float) -> complex:
        return complex(self.lag_values(np.array([t - tprime]))[0])
