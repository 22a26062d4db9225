"""High-level drivers: certified decay/blowup classification, threshold
shooting over the scaled soliton family, and center tracking against the
half-log law.

Classification is by energy-level certificate: once the (dissipating) energy
E_gamma drops below the sector's ground-state level minus a safety margin,
the sign of K_gamma decides the fate — K >= 0 decays to zero, K < 0 blows up
in finite time.  The margin m_cert absorbs quadrature error in both
functionals; a BlowsUp certificate is additionally confirmed by the run
hitting the amplitude cap (or leaving floats) afterwards.

The shooting family is u = e^lambda (Q(. - z) + varsigma Q(. + z)), v = 0;
bisection over lambda locates the threshold lambda* between the two fates.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import modulation, profiles, variational
from .errors import (
    BracketError,
    NoConvergenceError,
    OutOfTubeError,
    ParameterError,
)
from .evolution import (
    DEFAULT_CAP,
    EXIT_BLOWUP_CAP,
    EXIT_CONTAMINATION,
    EXIT_NONFINITE,
    evolve,
)
from .field import (
    GridSpec,
    PhysParams,
    State,
    energy_E_gamma,
    functional_K_gamma,
    norm_H,
)

DECAYS = "Decays"
BLOWS_UP = "BlowsUp"
UNDETERMINED = "Undetermined"

CERT_MARGIN = 2e-3


@dataclass
class ShotOutcome:
    classification: str
    certificate_time: float
    certificate: dict
    trajectory_summary: dict = dc_field(repr=False)


@dataclass
class ThresholdResult:
    lambda_star: float
    bracket_width: float
    probes: list
    bracket_lo: float
    bracket_hi: float
    decays_end: str  # "lo" or "hi": which end of the bracket decays
    converged: bool = True


def initial_family(
    lam: float, varsigma: int, z: float, grid: GridSpec, params: PhysParams
) -> State:
    """Shooting initial data u = e^lambda (Q(.-z) + varsigma Q(.+z)), v = 0."""
    if varsigma not in (0, 1):
        raise ParameterError(f"varsigma must be 0 or 1, got {varsigma}")
    if not -1.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [-1, 1], got {lam}")
    if not z + 10.0 < grid.L:
        raise ParameterError(
            f"soliton at z = {z} overlaps the boundary of [-{grid.L}, {grid.L}]"
        )
    u = profiles.soliton_Q(grid.x - z, params.p)
    if varsigma:
        u = u + profiles.soliton_Q(grid.x + z, params.p)
    return State(u=np.exp(lam) * u, v=np.zeros(grid.n))


def scaling_curve(
    lam: float, varsigma: int, z: float, params: PhysParams, grid: GridSpec
) -> dict:
    """x(lambda) = J_gamma(e^lambda Q_pair) and its first two lambda-derivatives.

    Everything reduces to three quadratures of the closed-form profile pair
    (norm-squared in H1, squared trace at 0, p+1 power integral), evaluated
    by Gauss panels on the real line rather than on the grid so that the
    derivative identities hold to quadrature precision.
    """
    if varsigma not in (0, 1):
        raise ParameterError(f"varsigma must be 0 or 1, got {varsigma}")
    if not -1.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [-1, 1], got {lam}")
    if not z + 10.0 < grid.L:
        raise ParameterError(
            f"soliton at z = {z} overlaps the boundary of [-{grid.L}, {grid.L}]"
        )
    p, gamma = params.p, params.gamma
    half_width = z + 40.0

    def pair(x):
        out = profiles.soliton_Q(x - z, p)
        return out + profiles.soliton_Q(x + z, p) if varsigma else out

    def pair_deriv(x):
        out = profiles.soliton_Q_deriv(x - z, p)
        return out + profiles.soliton_Q_deriv(x + z, p) if varsigma else out

    h1 = profiles.gauss_panels(
        lambda x: pair(x) ** 2 + pair_deriv(x) ** 2, -half_width, half_width
    )
    trace_sq = ((1.0 + varsigma) * profiles.soliton_Q(z, p)) ** 2
    power = profiles.gauss_panels(
        lambda x: np.abs(pair(x)) ** (p + 1.0), -half_width, half_width
    )

    quad = h1 - gamma * trace_sq
    e2 = np.exp(2.0 * lam)
    ep1 = np.exp((p + 1.0) * lam)
    return {
        "x_value": 0.5 * e2 * quad - ep1 * power / (p + 1.0),
        "x_prime": e2 * quad - ep1 * power,
        "x_double_prime": 2.0 * e2 * quad - (p + 1.0) * ep1 * power,
    }


class _CertifiedDecay(Exception):
    """Internal control flow: decay certificate fired, stop evolving."""


def classify_trajectory(
    state0: State,
    params: PhysParams,
    grid: GridSpec,
    T_max: float,
    symmetry: str = "none",
    *,
    dt: float | None = None,
    snapshot_stride: int = 10,
    blowup_cap: float = DEFAULT_CAP,
    cert_margin: float = CERT_MARGIN,
) -> ShotOutcome:
    """Evolve until an energy-level certificate decides the fate.

    The level is n_gamma (free) or r_gamma (symmetry="even"); the margin is
    subtracted before comparison.  Decays returns at the certificate sample;
    BlowsUp waits for the cap/NonFinite confirmation.  Contamination before
    any certificate, or no certificate by T_max, yields Undetermined.
    """
    if symmetry not in ("even", "none"):
        raise ParameterError(f"symmetry must be 'even' or 'none', got {symmetry!r}")
    if dt is None:
        dt = 0.5 * grid.h
    levels = variational.reference_levels(params)
    level = levels["r_gamma"] if symmetry == "even" else levels["n_gamma"]
    threshold = level - cert_margin

    ts, energies, ks, norms = [], [], [], []
    cert = {"time": float("nan"), "E": float("nan"), "K": float("nan")}
    certified = False

    def watch(st: State) -> None:
        nonlocal certified
        e = energy_E_gamma(st, params, grid)
        kval = functional_K_gamma(st.u, params, grid)
        ts.append(st.t)
        energies.append(e)
        ks.append(kval)
        norms.append(norm_H(st, grid))
        if not certified and e < threshold:
            certified = True
            cert["time"], cert["E"], cert["K"] = st.t, e, kval
            if kval >= 0.0:
                raise _CertifiedDecay

    exit_code = None
    try:
        traj = evolve(
            state0,
            T_max,
            dt,
            params,
            grid,
            observers=[watch],
            snapshot_stride=snapshot_stride,
            blowup_cap=blowup_cap,
        )
        exit_code = traj.exit
    except _CertifiedDecay:
        exit_code = "CertifiedDecay"

    summary = {
        "t": np.array(ts),
        "E_gamma": np.array(energies),
        "K_gamma": np.array(ks),
        "norm_H": np.array(norms),
        "exit": exit_code,
        "contaminated": exit_code == EXIT_CONTAMINATION,
    }
    certificate = {
        "E_gamma_at_cert": cert["E"],
        "K_gamma_at_cert": cert["K"],
        "level_used": level,
        "symmetry": symmetry,
    }

    if certified and cert["K"] >= 0.0:
        classification = DECAYS
    elif certified and exit_code in (EXIT_BLOWUP_CAP, EXIT_NONFINITE):
        classification = BLOWS_UP
    else:
        classification = UNDETERMINED
    return ShotOutcome(
        classification=classification,
        certificate_time=cert["time"],
        certificate=certificate,
        trajectory_summary=summary,
    )


def bisect_threshold(
    varsigma: int,
    z: float,
    params: PhysParams,
    grid: GridSpec,
    lambda_lo: float,
    lambda_hi: float,
    tol: float = 1e-10,
    T_max: float = 200.0,
    *,
    dt: float | None = None,
    workers: int = 1,
    sign: int = 1,
    blowup_cap: float = DEFAULT_CAP,
    cert_margin: float = CERT_MARGIN,
) -> ThresholdResult:
    """Bisection in lambda between a decaying and a blowing-up endpoint.

    Undetermined probes are re-run once with T_max doubled; a probe that
    stays Undetermined freezes the bracket (reported with converged=False)
    rather than guessing a side.
    """
    if varsigma == 0:
        if not params.gamma < 0.0:
            raise ParameterError("single-soliton shooting requires gamma < 0")
    elif varsigma == 1:
        if not params.gamma <= -2.0:
            raise ParameterError("even-pair shooting requires gamma <= -2")
    else:
        raise ParameterError(f"varsigma must be 0 or 1, got {varsigma}")
    if not lambda_lo < lambda_hi:
        raise BracketError(f"empty bracket [{lambda_lo}, {lambda_hi}]")
    symmetry = "even" if varsigma == 1 else "none"

    def probe(lam: float, horizon: float) -> ShotOutcome:
        state0 = initial_family(lam, varsigma, z, grid, params)
        if sign == -1:
            state0 = State(u=-state0.u, v=-state0.v, t=state0.t)
        return classify_trajectory(
            state0,
            params,
            grid,
            horizon,
            symmetry,
            dt=dt,
            blowup_cap=blowup_cap,
            cert_margin=cert_margin,
        )

    probes: list = []

    def classified(lam: float) -> ShotOutcome:
        out = probe(lam, T_max)
        probes.append((lam, out))
        if out.classification == UNDETERMINED:
            out = probe(lam, 2.0 * T_max)
            probes.append((lam, out))
        return out

    if workers > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fut_lo = pool.submit(classified, lambda_lo)
            fut_hi = pool.submit(classified, lambda_hi)
            out_lo, out_hi = fut_lo.result(), fut_hi.result()
    else:
        out_lo = classified(lambda_lo)
        out_hi = classified(lambda_hi)

    kinds = {out_lo.classification, out_hi.classification}
    if kinds != {DECAYS, BLOWS_UP}:
        raise BracketError(
            f"bracket endpoints classify as {out_lo.classification} / "
            f"{out_hi.classification}; need one of each"
        )
    decays_end = "lo" if out_lo.classification == DECAYS else "hi"
    lo_kind = out_lo.classification

    lo, hi = lambda_lo, lambda_hi
    converged = True
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        out = classified(mid)
        if out.classification == UNDETERMINED:
            converged = False
            break
        if out.classification == lo_kind:
            lo = mid
        else:
            hi = mid
    return ThresholdResult(
        lambda_star=0.5 * (lo + hi),
        bracket_width=hi - lo,
        probes=probes,
        bracket_lo=lo,
        bracket_hi=hi,
        decays_end=decays_end,
        converged=converged,
    )


@dataclass
class TrackReport:
    times: np.ndarray
    z: np.ndarray
    frames: list
    ode_reports: list
    valid_mask: np.ndarray
    sup_half_log: float
    empty: bool


def track_center(
    trajectory,
    sigma: int,
    sign: int,
    params: PhysParams,
    grid: GridSpec,
    *,
    mu: float | None = None,
    L_weight: float = modulation.DEFAULT_L_WEIGHT,
    tube_radius: float = modulation.DEFAULT_TUBE_RADIUS,
    window_norm: float = 0.05,
) -> TrackReport:
    """Fit z(t) along a recorded trajectory and compare with the reduced ODE.

    Fits are warm-started from the previous frame; the series stops at the
    first frame that leaves the tube (or where the fit fails).  Frames are
    'valid' for the z' comparison while ||(eps,eta)||_H <= window_norm, and
    the half-log report sup_t [z(t) - log(max(t,1))/2] runs over those.
    """
    states = trajectory.states
    if not states:
        return TrackReport(
            times=np.array([]), z=np.array([]), frames=[], ode_reports=[],
            valid_mask=np.array([], dtype=bool), sup_half_log=float("nan"),
            empty=True,
        )
    u0 = states[0].u * sign
    right = u0[grid.center:]
    guess = float(grid.x[grid.center + int(np.argmax(np.abs(right)))])

    frames: list = []
    for st in states:
        try:
            z_fit = modulation.fit_center(
                st, sigma, sign, guess, params, grid, tube_radius=tube_radius
            )
        except (OutOfTubeError, NoConvergenceError):
            break
        frames.append(
            modulation.decompose(
                st, z_fit, sigma, sign, params, grid, mu=mu, L_weight=L_weight
            )
        )
        guess = z_fit

    if not frames:
        return TrackReport(
            times=np.array([]), z=np.array([]), frames=[], ode_reports=[],
            valid_mask=np.array([], dtype=bool), sup_half_log=float("nan"),
            empty=True,
        )

    t_arr = np.array([f.t for f in frames])
    z_arr = np.array([f.z for f in frames])
    if len(frames) >= 2:
        zdot = np.gradient(z_arr, t_arr)
    else:
        zdot = np.full(1, np.nan)

    reports = []
    for f, zd in zip(frames, zdot):
        rep = modulation.predicted_zdot(f, params)
        rep.z_dot_measured = float(zd)
        rep.relative_gap = modulation.relative_gap(zd, rep.z_dot_predicted)
        reports.append(rep)

    valid = np.array([f.eps_norm_H <= window_norm for f in frames])
    if np.any(valid):
        vals = z_arr[valid] - 0.5 * np.log(np.maximum(t_arr[valid], 1.0))
        sup_half_log = float(np.max(vals))
        empty = False
    else:
        sup_half_log = float("nan")
        empty = True
    return TrackReport(
        times=t_arr,
        z=z_arr,
        frames=frames,
        ode_reports=reports,
        valid_mask=valid,
        sup_half_log=sup_half_log,
        empty=empty,
    )
