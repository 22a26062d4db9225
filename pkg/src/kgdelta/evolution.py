"""Time evolution: discrete spatial operator, damped leapfrog stepper, and
trajectory recording with a dissipation ledger.

Spatial operator (tridiagonal, symmetric under index reflection):

    (A u)_j = (-u_{j+1} + 2 u_j - u_{j-1})/h^2 + u_j,          j != center
    (A u)_c = same - (gamma/h) u_c,

the gamma/h nodal correction being the first-order realization of the
derivative jump u'(0+) - u'(0-) = -gamma u(0) forced by the delta potential.

Time discretization is the central-difference scheme with trapezoidal
damping,

    (u+ - 2u0 + u-)/dt^2 + alpha (u+ - u-)/dt = -A u0 + f(u0),

advanced here in the algebraically equivalent one-step form on (u, v):

    g0 = -A u0 + f(u0)
    u+ = u0 + dt (1 - alpha dt) v0 + dt^2/2 g0
    v+ = ((u+ - u0)/dt + dt/2 g+) / (1 + alpha dt),   g+ = -A u+ + f(u+)

with v the centered velocity (u+ - u-)/(2 dt).  Substituting v0 eliminates
u- and reproduces the two-level recurrence exactly; the first step is then
automatically the second-order Taylor bootstrap using u_tt(0) from the PDE.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from . import profiles
from .errors import (
    CapExceededError,
    NoConvergenceError,
    NonFiniteError,
    ParameterError,
)
from .field import (
    DissipationLedger,
    GridSpec,
    PhysParams,
    State,
    energy_E_gamma,
    l2_sq,
    norm_H,
    norm_L2,
)

EXIT_COMPLETED = "Completed"
EXIT_BLOWUP_CAP = "BlowupCap"
EXIT_CONTAMINATION = "BoundaryContamination"
EXIT_NONFINITE = "NonFinite"

DEFAULT_CAP = 1.0e3
DEFAULT_CFL = 0.5


def nonlinearity(u: np.ndarray, p: float) -> np.ndarray:
    """Focusing power nonlinearity f(u) = |u|^(p-1) u (odd in u)."""
    if p == 3.0:
        return u * u * u
    if p == 4.0:
        return np.abs(u) * u * u * u
    return np.abs(u) ** (p - 1.0) * u


@dataclass(frozen=True)
class DiscreteOperator:
    """Tridiagonal A = -D_xx + 1 - (gamma/h) delta at the center node."""

    diag: np.ndarray = dc_field(repr=False)
    off_diag: float
    delta_correction: float  # gamma/h, already subtracted from diag[center]
    grid: GridSpec

    def apply(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        # symmetric grouping keeps reflection equivariance exact in floats
        out[1:-1] += self.off_diag * (u[:-2] + u[2:])
        out[0] += self.off_diag * u[1]
        out[-1] += self.off_diag * u[-2]
        return out


def build_operator(grid: GridSpec, params: PhysParams) -> DiscreteOperator:
    inv_h2 = 1.0 / (grid.h * grid.h)
    diag = np.full(grid.n, 2.0 * inv_h2 + 1.0)
    correction = params.gamma / grid.h
    diag[grid.center] -= correction
    return DiscreteOperator(
        diag=diag, off_diag=-inv_h2, delta_correction=correction, grid=grid
    )


def _check_cfl(dt: float, grid: GridSpec, cfl: float) -> None:
    if not 0 < dt <= cfl * grid.h * (1.0 + 1e-12):
        raise ParameterError(
            f"dt = {dt} violates the CFL bound {cfl} * h = {cfl * grid.h}"
        )


def step(
    state: State,
    dt: float,
    operator: DiscreteOperator,
    params: PhysParams,
    *,
    with_nonlinearity: bool = True,
    blowup_cap: float = DEFAULT_CAP,
    cfl: float = DEFAULT_CFL,
) -> State:
    """One update of the damped central-difference scheme (standalone form).

    Raises NonFiniteError / CapExceededError on the produced state; evolve()
    performs the same checks inline.
    """
    grid = operator.grid
    _check_cfl(dt, grid, cfl)
    a = params.alpha
    u0, v0 = state.u, state.v
    g0 = -operator.apply(u0)
    if with_nonlinearity:
        g0 += nonlinearity(u0, params.p)
    u1 = u0 + dt * (1.0 - a * dt) * v0 + 0.5 * dt * dt * g0
    u1[0] = 0.0
    u1[-1] = 0.0
    sup = float(np.max(np.abs(u1)))
    if not np.isfinite(sup):
        raise NonFiniteError(f"non-finite field sample at t = {state.t + dt}")
    if sup > blowup_cap:
        raise CapExceededError(f"|u|_inf = {sup} exceeds cap {blowup_cap}")
    g1 = -operator.apply(u1)
    if with_nonlinearity:
        g1 += nonlinearity(u1, params.p)
    v1 = ((u1 - u0) / dt + 0.5 * dt * g1) / (1.0 + a * dt)
    v1[0] = 0.0
    v1[-1] = 0.0
    return State(u=u1, v=v1, t=state.t + dt)


@dataclass
class Trajectory:
    """Decimated record of one run plus its dissipation ledger."""

    sample_times: np.ndarray
    states: list
    ledger: DissipationLedger
    exit: str
    sup_norm_H: float
    mass_integrals: np.ndarray  # accumulated integral of ||u||^2 (for M)


def _outer_energy(u: np.ndarray, v: np.ndarray, grid: GridSpec) -> float:
    """H-type energy carried by the outer 10% of the domain (contamination)."""
    m = max(2, grid.n // 10)
    e = 0.0
    for sl in (slice(0, m), slice(grid.n - m, grid.n)):
        uu, vv = u[sl], v[sl]
        d = np.diff(uu)
        e += grid.h * (float(np.dot(uu, uu)) + float(np.dot(vv, vv)))
        e += float(np.dot(d, d)) / grid.h
    return e


def evolve(
    state0: State,
    T: float,
    dt: float,
    params: PhysParams,
    grid: GridSpec,
    observers: Sequence[Callable[[State], None]] | None = None,
    *,
    snapshot_stride: int = 10,
    blowup_cap: float = DEFAULT_CAP,
    with_nonlinearity: bool = True,
    contamination_tol: float = 1e-6,
    cfl: float = DEFAULT_CFL,
) -> Trajectory:
    """Run the stepper to time T (or early exit) recording decimated samples.

    Samples (snapshots, ledger rows, observer calls, contamination checks)
    happen every snapshot_stride steps and at the initial and final states.
    The damping integral 2*alpha*int ||u_t||^2 accumulates every step by the
    trapezoid rule in time.  Step failures become exit codes, never raises.
    """
    _check_cfl(dt, grid, cfl)
    operator = build_operator(grid, params)
    a = params.alpha
    n_steps = max(0, int(round(T / dt)))

    u = state0.u.copy()
    v = state0.v.copy()
    t0 = state0.t

    times, snaps, energies, dampings, masses = [], [], [], [], []
    damping_acc = 0.0
    mass_acc = 0.0
    sup_H = 0.0
    exit_code = EXIT_COMPLETED

    vsq = l2_sq(v, grid)
    usq = l2_sq(u, grid)
    g = -operator.apply(u)
    if with_nonlinearity:
        g += nonlinearity(u, params.p)

    def record(k: int) -> bool:
        nonlocal sup_H, exit_code
        st = State(u=u.copy(), v=v.copy(), t=t0 + k * dt)
        times.append(st.t)
        snaps.append(st)
        energies.append(energy_E_gamma(st, params, grid))
        dampings.append(damping_acc)
        masses.append(mass_acc)
        sup_H = max(sup_H, norm_H(st, grid))
        if observers:
            for obs in observers:
                obs(st)
        if _outer_energy(u, v, grid) > contamination_tol:
            exit_code = EXIT_CONTAMINATION
            return False
        return True

    ok = record(0)
    k = 0
    while ok and k < n_steps:
        u1 = u + dt * (1.0 - a * dt) * v + (0.5 * dt * dt) * g
        u1[0] = 0.0
        u1[-1] = 0.0
        sup = float(np.max(np.abs(u1)))
        if not np.isfinite(sup):
            exit_code = EXIT_NONFINITE
            break
        g1 = -operator.apply(u1)
        if with_nonlinearity:
            g1 += nonlinearity(u1, params.p)
        v1 = ((u1 - u) / dt + 0.5 * dt * g1) / (1.0 + a * dt)
        v1[0] = 0.0
        v1[-1] = 0.0

        v1sq = l2_sq(v1, grid)
        u1sq = l2_sq(u1, grid)
        damping_acc += 2.0 * a * dt * 0.5 * (vsq + v1sq)
        mass_acc += dt * 0.5 * (usq + u1sq)
        u, v, g, vsq, usq = u1, v1, g1, v1sq, u1sq
        k += 1

        if sup > blowup_cap:
            exit_code = EXIT_BLOWUP_CAP
            record(k)  # the invariant wants the capped state on record
            break
        if k % snapshot_stride == 0 or k == n_steps:
            ok = record(k)

    ledger = DissipationLedger(
        times=np.asarray(times),
        energies=np.asarray(energies),
        damping=np.asarray(dampings),
    )
    return Trajectory(
        sample_times=np.asarray(times),
        states=snaps,
        ledger=ledger,
        exit=exit_code,
        sup_norm_H=sup_H,
        mass_integrals=np.asarray(masses),
    )


def discrete_stationary_profile(
    u_init: np.ndarray,
    params: PhysParams,
    grid: GridSpec,
    *,
    tol: float = 1e-12,
    max_iter: int = 50,
) -> np.ndarray:
    """Newton-solve A u = f(u) starting from u_init (e.g. sampled Q_gamma).

    The continuum profile misses the discrete operator's equilibrium by O(h)
    at the delta node, and the equilibrium is dynamically unstable, so any
    stationarity study must start from the discrete root rather than raw
    samples.  The Jacobian A - p|u|^(p-1) is tridiagonal; endpoints stay
    pinned at the Dirichlet value 0.
    """
    operator = build_operator(grid, params)
    u = u_init.astype(float).copy()
    u[0] = 0.0
    u[-1] = 0.0
    inv_h2 = 1.0 / (grid.h * grid.h)
    for _ in range(max_iter):
        res = operator.apply(u) - nonlinearity(u, params.p)
        res[0] = 0.0
        res[-1] = 0.0
        # applying A costs ~2/h^2 * eps * ||u|| of rounding, so on fine
        # grids the absolute tol is unreachable; accept that floor
        floor = 8.0 * np.finfo(float).eps * 2.0 * inv_h2 * float(np.max(np.abs(u)))
        if float(np.max(np.abs(res))) < max(tol, floor):
            return u
        jac_diag = operator.diag - params.p * np.abs(u) ** (params.p - 1.0)
        ab = np.zeros((3, grid.n - 2))
        ab[0, 1:] = -inv_h2
        ab[1, :] = jac_diag[1:-1]
        ab[2, :-1] = -inv_h2
        du = solve_banded((1, 1), ab, res[1:-1])
        u[1:-1] -= du
    raise NoConvergenceError(
        f"stationary-profile Newton did not reach {tol} in {max_iter} iterations"
    )


def fit_linear_decay_rate(
    params: PhysParams,
    grid: GridSpec,
    u0: np.ndarray,
    T: float,
    *,
    dt: float | None = None,
) -> float:
    """Exponential decay rate of the linear (f disabled) damped flow.

    Evolves (u0, 0) with the nonlinearity off, then least-squares fits the
    slope of log ||(u, v)||_H over the tail window [T/2, T] and returns its
    negative.  Degenerate input (zero field, underflowed norms) yields NaN
    rather than raising.
    """
    if dt is None:
        dt = DEFAULT_CFL * grid.h
    traj = evolve(
        State(u=np.asarray(u0, dtype=float).copy(), v=np.zeros(grid.n)),
        T,
        dt,
        params,
        grid,
        with_nonlinearity=False,
        contamination_tol=np.inf,  # linear runs are allowed to fill the box
    )
    norms = np.array([norm_H(s, grid) for s in traj.states])
    mask = traj.sample_times >= 0.5 * T
    if traj.exit != EXIT_COMPLETED or np.count_nonzero(mask) < 2:
        return float("nan")
    tail = norms[mask]
    if not np.all(np.isfinite(tail)) or np.any(tail <= 0.0):
        return float("nan")
    slope = np.polyfit(traj.sample_times[mask], np.log(tail), 1)[0]
    return float(-slope)


def linearized_residuals(z: float, grid: GridSpec, params: PhysParams) -> dict:
    """Discrete residuals of the two known spectral facts about L.

    L = -d_xx + 1 - p Q^(p-1)(. - z) has eigenpair (-nu^2, phi(. - z)) and
    kernel direction Q'(. - z); both residuals are relative L^2 norms and
    shrink at second order in h.
    """
    if not abs(z) + 10.0 < grid.L:
        raise ParameterError(
            f"profile at z = {z} overlaps the boundary of [-{grid.L}, {grid.L}]"
        )
    p = params.p
    free = build_operator(grid, PhysParams(p=p, alpha=params.alpha, gamma=0.0))
    xs = grid.x - z
    potential = p * profiles.soliton_Q(xs, p) ** (p - 1.0)
    nu_sq = 0.25 * (p - 1.0) * (p + 3.0)

    phi = profiles.neutral_even_mode_phi(xs, p)
    eig_res = free.apply(phi) - potential * phi + nu_sq * phi
    qd = profiles.soliton_Q_deriv(xs, p)
    ker_res = free.apply(qd) - potential * qd

    return {
        "eig_residual": norm_L2(eig_res, grid) / norm_L2(phi, grid),
        "kernel_residual": norm_L2(ker_res, grid) / norm_L2(qd, grid),
    }
