"""Solvers for the rotating-frame memory-kernel Volterra equation.

The equation of motion for the excited-state amplitude c(t) (carrier
phase factored out, c(0) = 1) is

    dc/dt + int_0^t F(t, t') c(t') dt' = 0.

Two routes are provided:

``solve_history``
    Generic O(N^2) scheme: classical 4-stage Runge-Kutta in t, with the
    memory integral at each stage evaluated by composite trapezoid over
    the stored history plus an endpoint correction for the current stage.
    Half-step stage values of c are quadratically interpolated from the
    stored full-step nodes so the kernel is only ever needed on one lag
    grid (cached once per run when the kernel depends on t - t' alone).

``solve_aux``
    O(N) reduction for exponential-sum kernels: each branch w e^{-mu s}
    contributes an auxiliary state y(t) = int_0^t e^{-mu(t-t')} c(t') dt',
    closing the system as dc/dt = -sum w_j y_j, dy_j/dt = c - mu_j y_j.
    The system is linear with constant coefficients, so the classical
    RK4 step is a fixed matrix; it is built once and applied in blocks.

``stationary_analytic``
    Closed form for a single-exponential kernel F = W e^{-Lam s}, the
    damped Jaynes-Cummings amplitude; serves as the solver oracle.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class BlowupError(RuntimeError):
    """Amplitude left the physical unit disk: kernel/step misconfiguration."""


_ABORT_EXCESS = 1e-3   # |c| above 1 + this aborts
_WARN_EXCESS = 1e-9    # |c| above 1 + this warns (drift)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid from 0 with n_steps steps of dt_gamma."""

    dt_gamma: float
    n_steps: int
    t0: float = 0.0

    def __post_init__(self):
        if not self.dt_gamma > 0 or self.n_steps < 1:
            raise ValueError("grid needs dt_gamma > 0 and n_steps >= 1")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_gamma * np.arange(self.n_steps + 1)


def make_grid(t_max_gamma: float, dt_gamma: float) -> TimeGrid:
    """Grid covering [0, t_max]; n_steps * dt never falls short of t_max."""
    n = max(1, int(np.ceil(t_max_gamma / dt_gamma - 1e-9)))
    while n * dt_gamma < t_max_gamma * (1.0 - 1e-12):
        n += 1
    return TimeGrid(dt_gamma=dt_gamma, n_steps=n)


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """Amplitude c(t) and its equation-of-motion derivative on a grid.

    The derivative is the right-hand side -int F c as evaluated by the
    solver, not a finite difference; it vanishes identically at t = 0
    where the memory integral is empty.
    """

    grid: TimeGrid
    amplitude: np.ndarray
    derivative: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def validate(self, gain_tol: float = 1e-9) -> "AmplitudeTrajectory":
        if self.amplitude[0] != 1.0 + 0.0j:
            raise ValueError("amplitude must start at 1")
        if self.derivative[0] != 0.0 + 0.0j:
            raise ValueError("derivative must vanish at t = 0")
        peak = float(np.max(np.abs(self.amplitude)))
        if peak > 1.0 + gain_tol:
            raise ValueError(f"unphysical gain: max |c| = {peak}")
        return self


def _guard(absval: float, t: float, warned: list) -> None:
    if absval > 1.0 + _ABORT_EXCESS:
        raise BlowupError(
            f"|c| = {absval} at gamma*t = {t}: amplitude blew past 1 + {_ABORT_EXCESS}")
    if absval > 1.0 + _WARN_EXCESS and not warned:
        warned.append(t)
        warnings.warn(f"amplitude drift above unity (|c| = {absval} at gamma*t = {t})",
                      RuntimeWarning, stacklevel=3)


def _lag_table(kernel_eval, grid: TimeGrid) -> np.ndarray:
    lags = grid.dt_gamma * np.arange(grid.n_steps + 2)
    if hasattr(kernel_eval, "lag_values"):
        return np.asarray(kernel_eval.lag_values(lags), dtype=complex)
    return np.array([kernel_eval(s, 0.0) for s in lags], dtype=complex)


def solve_history(kernel_eval, grid: TimeGrid, *, stationary: bool = True,
                  lag_table: np.ndarray | None = None) -> AmplitudeTrajectory:
    """History-integral solve; kernel_eval(t, t') -> complex.

    With ``stationary=True`` (kernel a function of the lag only) the
    kernel is precomputed on the lag grid, O(N) storage, and each step
    costs two vector dot products.  With ``stationary=False`` the kernel
    is evaluated pairwise as needed, O(N^2) evaluations; intended for
    boundary-term diagnostics at small N.
    """
    if not stationary:
        return _solve_history_general(kernel_eval, grid)

    n_steps = grid.n_steps
    dt = grid.dt_gamma
    if lag_table is None:
        K = _lag_table(kernel_eval, grid)
    else:
        K = np.asarray(lag_table, dtype=complex)
        if K.shape[0] < n_steps + 2:
            raise ValueError("lag_table must cover n_steps + 2 lags")
    Krev = K[::-1].copy()
    M = K.shape[0]
    K0 = K[0]

    c = np.empty(n_steps + 1, dtype=complex)
    deriv = np.empty(n_steps + 1, dtype=complex)
    chalf = np.empty(n_steps + 1, dtype=complex)   # c at (m + 1/2) dt
    c[0] = 1.0
    deriv[0] = 0.0
    warned: list = []

    for n in range(n_steps):
        cn = c[n]
        k1 = deriv[n]
        y2 = cn + 0.5 * dt * k1
        if n == 0:
            kh0 = (3.0 * K[0] + 6.0 * K[1] - K[2]) / 8.0
            i2 = 0.25 * dt * (kh0 * c[0] + K0 * y2)
            k2 = -i2
            y3 = cn + 0.5 * dt * k2
            k3 = k2 - 0.25 * dt * K0 * (y3 - y2)
        elif n == 1:
            cm = 0.5 * (c[0] + c[1])
            kh1 = (-K[0] + 6.0 * K[1] + 3.0 * K[2]) / 8.0
            base = dt * 0.5 * K[1] * cm + 0.25 * dt * (K[1] * cm + kh1 * c[0])
            k2 = -(base + dt * 0.5 * K0 * y2)
            y3 = cn + 0.5 * dt * k2
            k3 = k2 - 0.5 * dt * K0 * (y3 - y2)
        else:
            dmid = np.dot(Krev[M - n:M - 1], chalf[1:n])
            khn = (-K[n - 1] + 6.0 * K[n] + 3.0 * K[n + 1]) / 8.0
            base = dt * (dmid + 0.5 * K[n] * chalf[0]) \
                + 0.25 * dt * (K[n] * chalf[0] + khn * c[0])
            k2 = -(base + dt * 0.5 * K0 * y2)
            y3 = cn + 0.5 * dt * k2
            k3 = k2 - 0.5 * dt * K0 * (y3 - y2)

        y4 = cn + dt * k3
        s4 = np.dot(Krev[M - n - 1:M - 1], c[1:n + 1]) if n >= 1 else 0.0
        head = 0.5 * K[n + 1] * c[0] + s4
        k4 = -dt * (head + 0.5 * K0 * y4)
        cn1 = cn + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        c[n + 1] = cn1
        deriv[n + 1] = -dt * (head + 0.5 * K0 * cn1)
        _guard(abs(cn1), (n + 1) * dt, warned)

        if n == 1:
            chalf[0] = (3.0 * c[0] + 6.0 * c[1] - c[2]) / 8.0
        if n >= 1:
            chalf[n] = (-c[n - 1] + 6.0 * c[n] + 3.0 * c[n + 1]) / 8.0

    return AmplitudeTrajectory(grid=grid, amplitude=c, derivative=deriv)


def _solve_history_general(kernel_eval, grid: TimeGrid) -> AmplitudeTrajectory:
    """Pairwise-evaluated variant for kernels that are not lag-stationary."""
    n_steps = grid.n_steps
    dt = grid.dt_gamma
    c = np.empty(n_steps + 1, dtype=complex)
    deriv = np.empty(n_steps + 1, dtype=complex)
    c[0] = 1.0
    deriv[0] = 0.0
    warned: list = []

    def row(ts, upto):
        return np.array([kernel_eval(ts, k * dt) for k in range(upto + 1)], dtype=complex)

    for n in range(n_steps):
        tn = n * dt
        cn = c[n]
        k1 = deriv[n]
        ts = tn + 0.5 * dt
        rmid = row(ts, n)
        kss = kernel_eval(ts, ts)
        # trapezoid over nodes 0..n (node n gets half weight as mesh endpoint),
        # then the [t_n, t_s] segment below adds the other quarter-step share
        base = 0.0 + 0.0j
        if n >= 1:
            base = dt * (0.5 * rmid[0] * c[0] + np.dot(rmid[1:n], c[1:n])
                         + 0.5 * rmid[n] * cn)

        def imid(y):
            return base + 0.25 * dt * (rmid[n] * cn + kss * y)

        y2 = cn + 0.5 * dt * k1
        k2 = -imid(y2)
        y3 = cn + 0.5 * dt * k2
        k3 = -imid(y3)
        y4 = cn + dt * k3
        t4 = tn + dt
        r4 = row(t4, n)
        k44 = kernel_eval(t4, t4)
        head = 0.5 * r4[0] * c[0] + np.dot(r4[1:n + 1], c[1:n + 1])
        k4 = -dt * (head + 0.5 * k44 * y4)
        cn1 = cn + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        c[n + 1] = cn1
        deriv[n + 1] = -dt * (head + 0.5 * k44 * cn1)
        _guard(abs(cn1), (n + 1) * dt, warned)

    return AmplitudeTrajectory(grid=grid, amplitude=c, derivative=deriv)


def solve_aux(kernel, grid: TimeGrid) -> AmplitudeTrajectory:
    """Auxiliary-state solve for an exponential-sum kernel, O(N).

    The classical RK4 update of the constant-coefficient linear system
    z' = A z (z = (c, y_1..y_m)) is the fixed matrix
    I + hA + h^2 A^2/2 + h^3 A^3/6 + h^4 A^4/24; it is precomputed and
    applied blockwise, which is exactly RK4 up to floating-point
    association.  The auxiliary states are discarded after use.
    """
    weights = np.asarray(kernel.weights, dtype=complex)
    rates = np.asarray(kernel.rates, dtype=complex)
    m = weights.shape[0]
    n_steps = grid.n_steps
    h = grid.dt_gamma

    A = np.zeros((m + 1, m + 1), dtype=complex)
    A[0, 1:] = -weights
    A[1:, 0] = 1.0
    A[1:, 1:][np.diag_indices(m)] = -rates

    M = np.eye(m + 1, dtype=complex)
    term = np.eye(m + 1, dtype=complex)
    for k in range(1, 5):
        term = term @ (h * A) / k
        M = M + term

    block = 1024
    nblk = min(block, n_steps + 1)
    P = np.empty((nblk, m + 1, m + 1), dtype=complex)
    P[0] = np.eye(m + 1)
    for j in range(1, nblk):
        P[j] = M @ P[j - 1]
    MK = M @ P[nblk - 1]

    c = np.empty(n_steps + 1, dtype=complex)
    deriv = np.empty(n_steps + 1, dtype=complex)
    z = np.zeros(m + 1, dtype=complex)
    z[0] = 1.0
    warned: list = []
    i = 0
    while i <= n_steps:
        k = min(nblk, n_steps + 1 - i)
        chunk = np.einsum("kij,j->ki", P[:k], z)
        c[i:i + k] = chunk[:, 0]
        deriv[i:i + k] = chunk[:, 1:] @ (-weights)
        peak_at = int(np.argmax(np.abs(chunk[:, 0])))
        _guard(float(abs(chunk[peak_at, 0])), (i + peak_at) * h, warned)
        z = MK @ z if k == nblk else M @ chunk[-1]
        i += k

    deriv[0] = 0.0
    return AmplitudeTrajectory(grid=grid, amplitude=c, derivative=deriv)


def stationary_analytic(W: float, Lam: complex, t_gamma):
    """Damped Jaynes-Cummings amplitude for the kernel F = W e^{-Lam s}.

    c(t) = e^{-Lam t/2} [cosh(D t/2) + (Lam/D) sinh(D t/2)],
    D = sqrt(Lam^2 - 4W), written via sinh(x)/x so the critically damped
    point D -> 0 is a removable singularity (series limit
    e^{-Lam t/2} (1 + Lam t/2)).
    """
    if not W > 0:
        raise ValueError(f"W must be positive (got {W})")
    Lam = complex(Lam)
    if not Lam.real > 0:
        raise ValueError(f"Re(Lam) must be positive (got {Lam})")
    t = np.asarray(t_gamma, dtype=float)
    D = np.sqrt(Lam * Lam - 4.0 * W)
    x = D * t / 2.0
    small = np.abs(x) < 1e-6
    xs = np.where(small, 1.0, x)
    sinhc = np.where(small, 1.0 + x * x / 6.0, np.sinh(xs) / xs)
    out = np.exp(-Lam * t / 2.0) * (np.cosh(x) + (Lam * t / 2.0) * sinhc)
    return complex(out) if np.isscalar(t_gamma) else out
