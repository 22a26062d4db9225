"""Grid, state pairs, discrete norms, and the scalar functionals of the model.

Discretization conventions, used consistently by every module downstream:

* uniform grid on [-L, L] with an odd node count, so x = 0 is a node (the
  delta potential is a nodal term and needs one);
* trapezoid quadrature for all integrals;
* the H^1 gradient term is the staggered sum h * sum(((u_{j+1}-u_j)/h)^2),
  i.e. the Dirichlet form of the 3-point Laplacian used by the evolution
  operator, so the discrete energy the stepper dissipates is the same
  quantity these functions report;
* the delta term is the exact nodal trace u(0), no smearing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError
from .profiles import PhysParams


@dataclass(frozen=True)
class GridSpec:
    """Uniform symmetric grid with an exact node at the origin."""

    L: float
    n: int
    h: float
    x: np.ndarray = field(repr=False)
    center: int

    def __post_init__(self):
        assert self.n % 2 == 1


def make_grid(L: float, n: int) -> GridSpec:
    """Build the grid; n must be odd and >= 3 so the center node exists."""
    if not L > 0:
        raise GridError(f"half-width L must be positive, got {L}")
    if n < 3 or n % 2 == 0:
        raise GridError(f"node count must be odd and >= 3, got {n}")
    h = 2.0 * L / (n - 1)
    center = (n - 1) // 2
    # x = h*(j - center) keeps the grid exactly reflection-antisymmetric
    x = h * (np.arange(n, dtype=float) - center)
    return GridSpec(L=float(L), n=int(n), h=h, x=x, center=center)


@dataclass
class State:
    """A pair (u, v) = (u, u_t) sampled on the grid, tagged with its time."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def copy(self) -> "State":
        return State(self.u.copy(), self.v.copy(), self.t)


def _check_samples(u: np.ndarray, grid: GridSpec) -> None:
    if len(u) != grid.n:
        raise GridError(f"sample count {len(u)} does not match grid n = {grid.n}")


def trapezoid(f: np.ndarray, grid: GridSpec) -> float:
    """Trapezoid quadrature of nodal samples over [-L, L]."""
    _check_samples(f, grid)
    return grid.h * (float(np.sum(f)) - 0.5 * (float(f[0]) + float(f[-1])))


def l2_sq(u: np.ndarray, grid: GridSpec) -> float:
    return trapezoid(np.asarray(u) ** 2, grid)


def gradient_sq(u: np.ndarray, grid: GridSpec) -> float:
    """Staggered discrete Dirichlet form: h * sum(((u_{j+1}-u_j)/h)^2)."""
    _check_samples(u, grid)
    d = np.diff(np.asarray(u))
    return float(np.dot(d, d)) / grid.h


def h1_sq(u: np.ndarray, grid: GridSpec) -> float:
    return gradient_sq(u, grid) + l2_sq(u, grid)


def norm_L2(u: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(l2_sq(u, grid)))


def norm_H1(u: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(h1_sq(u, grid)))


def norm_Lq(u: np.ndarray, q: float, grid: GridSpec) -> float:
    return float(lq_integral(u, q, grid) ** (1.0 / q))


def lq_integral(u: np.ndarray, q: float, grid: GridSpec) -> float:
    """Integral of |u|^q (the functionals consume this, not the norm)."""
    return trapezoid(np.abs(np.asarray(u)) ** q, grid)


def norm_H(state: State, grid: GridSpec) -> float:
    """Norm of (u, v) in H = H^1 x L^2."""
    return float(np.sqrt(h1_sq(state.u, grid) + l2_sq(state.v, grid)))


def energy_E_gamma(state: State, params: PhysParams, grid: GridSpec) -> float:
    """E_gamma = (||u||_H1^2 + ||v||^2 - gamma*u(0)^2)/2 - ||u||_{p+1}^{p+1}/(p+1)."""
    u0 = float(state.u[grid.center])
    quad = h1_sq(state.u, grid) + l2_sq(state.v, grid) - params.gamma * u0 * u0
    return 0.5 * quad - lq_integral(state.u, params.p + 1.0, grid) / (params.p + 1.0)


def functional_K_gamma(u: np.ndarray, params: PhysParams, grid: GridSpec) -> float:
    """Nehari functional K_gamma = ||u||_H1^2 - gamma*u(0)^2 - ||u||_{p+1}^{p+1}."""
    u0 = float(u[grid.center])
    return h1_sq(u, grid) - params.gamma * u0 * u0 - lq_integral(u, params.p + 1.0, grid)


def functional_J_gamma(u: np.ndarray, params: PhysParams, grid: GridSpec) -> float:
    """Static action J_gamma (the K-free part of the energy)."""
    u0 = float(u[grid.center])
    quad = h1_sq(u, grid) - params.gamma * u0 * u0
    return 0.5 * quad - lq_integral(u, params.p + 1.0, grid) / (params.p + 1.0)


def functional_P(state: State, params: PhysParams, grid: GridSpec) -> float:
    """P = integral(u*v) + alpha*||u||^2, the damped virial pairing."""
    return trapezoid(state.u * state.v, grid) + params.alpha * l2_sq(state.u, grid)


def diagnostics_MW(
    state: State, params: PhysParams, grid: GridSpec, history: float
) -> dict:
    """Boundedness monitors M and W.

    history must be the accumulated integral of ||u(s)||^2 over [0, t],
    maintained by the evolution loop.
    """
    u0 = float(state.u[grid.center])
    m_value = 0.5 * l2_sq(state.u, grid) + params.alpha * float(history)
    w_value = (
        0.5 * (h1_sq(state.u, grid) + l2_sq(state.v, grid))
        - 0.5 * params.gamma * u0 * u0
    )
    return {"M_value": m_value, "W_value": w_value}


@dataclass
class DissipationLedger:
    """Per-sample energy record plus the running damping integral.

    damping[k] accumulates 2*alpha*integral_0^{t_k} ||u_t||^2 dt (trapezoid in
    time over every step, not just the sampled ones), so that
    energies[k] - energies[0] + damping[k] ~ 0 is the discrete version of the
    dissipation identity.
    """

    times: np.ndarray
    energies: np.ndarray
    damping: np.ndarray

    @property
    def damping_integral(self) -> float:
        return float(self.damping[-1]) if len(self.damping) else 0.0


# ---------------------------------------------------------------------------
# snapshot I/O (CSV with an embedded parameter header)

def _fmt(x: float) -> str:
    return "%.17g" % float(x)


def save_state(
    path,
    state: State,
    params: PhysParams,
    grid: GridSpec,
    extra_header: list[str] | None = None,
) -> None:
    """Write x, u, v columns; the header line carries t, p, alpha, gamma, L, n.

    extra_header entries are emitted as additional '# '-prefixed lines (the
    CLI uses this to echo the resolved config); load_state skips them.
    """
    lines = [
        "# t=%s p=%s alpha=%s gamma=%s L=%s n=%d"
        % (_fmt(state.t), _fmt(params.p), _fmt(params.alpha),
           _fmt(params.gamma), _fmt(grid.L), grid.n),
    ]
    for entry in extra_header or ():
        lines.append("# " + entry)
    lines.append("x,u,v")
    for j in range(grid.n):
        lines.append(
            "%s,%s,%s" % (_fmt(grid.x[j]), _fmt(state.u[j]), _fmt(state.v[j]))
        )
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_state(path) -> tuple[State, PhysParams, GridSpec]:
    """Inverse of save_state."""
    with open(path) as fh:
        header = fh.readline().strip()
        line = fh.readline()
        while line.startswith("#"):  # optional echo lines
            line = fh.readline()
        data = np.loadtxt(fh, delimiter=",")
    meta = dict(tok.split("=") for tok in header.lstrip("# ").split())
    params = PhysParams(
        p=float(meta["p"]), alpha=float(meta["alpha"]), gamma=float(meta["gamma"])
    )
    grid = make_grid(float(meta["L"]), int(meta["n"]))
    state = State(u=data[:, 1].copy(), v=data[:, 2].copy(), t=float(meta["t"]))
    return state, params, grid
