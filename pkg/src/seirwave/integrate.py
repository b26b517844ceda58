"""Fixed-step RK4 integration onto a daily grid."""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._accel import kernel
from .core import (
    CompartmentState,
    FitParameters,
    FixedRates,
    PopulationConfig,
    _logistic,
    _r0_rect,
    _rhs,
)

__all__ = ["Trajectory", "IntegrationError", "integrate", "simulate", "default_initial_state"]

COLUMNS = ("S", "E", "I", "C", "R", "D")


class IntegrationError(RuntimeError):
    """A derivative or state went non-finite during integration."""

    def __init__(self, t, state):
        self.t = float(t)
        self.state = np.array(state, dtype=np.float64)
        super().__init__(f"non-finite value at t={self.t:g}, state={self.state.tolist()}")


@dataclass
class Trajectory:
    """States on an integer-day grid plus derived series.

    ``states`` has shape (T, n_vars); for model runs n_vars is 6 (S..D).
    ``r0``, ``beta`` and ``beds`` are None for generic right-hand sides.
    """

    t: np.ndarray
    states: np.ndarray
    r0: np.ndarray | None = None
    beta: np.ndarray | None = None
    beds: np.ndarray | None = None
    start_date: dt.date | None = None
    cumulative_cases: np.ndarray | None = None

    def __len__(self):
        return len(self.t)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, COLUMNS.index(name.upper())]

    s = property(lambda self: self.states[:, 0])
    e = property(lambda self: self.states[:, 1])
    i = property(lambda self: self.states[:, 2])
    c = property(lambda self: self.states[:, 3])
    r = property(lambda self: self.states[:, 4])
    d = property(lambda self: self.states[:, 5])

    @property
    def daily_deaths(self) -> np.ndarray:
        d = self.d
        return np.concatenate([d[:1], np.diff(d)])

    def state_at(self, k: int) -> CompartmentState:
        return CompartmentState.from_array(self.states[k])

    def dates(self) -> list:
        if self.start_date is None:
            return [None] * len(self.t)
        return [self.start_date + dt.timedelta(days=int(round(x))) for x in self.t]


def _split_points(t0, t1, breakpoints):
    inner = [b for b in breakpoints if t0 < b < t1]
    return [t0, *sorted(inner), t1]


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t0: float,
    t_end: float,
    substeps_per_day: int = 4,
    breakpoints=(),
) -> Trajectory:
    """Classic RK4 with step ``1/substeps_per_day``, sampled at whole days.

    Steps that straddle one of ``breakpoints`` are split there so that a
    sharp feature in ``rhs`` is never stepped over.
    """
    if substeps_per_day < 1 or int(substeps_per_day) != substeps_per_day:
        raise ValueError("substeps_per_day must be a positive integer")
    if t_end < t0:
        raise ValueError("t_end must not precede t0")
    if isinstance(y0, CompartmentState):
        y0 = y0.as_array()
    y = np.array(y0, dtype=np.float64).reshape(-1)
    n_days = int(math.floor(t_end - t0 + 1e-12))
    states = np.empty((n_days + 1, y.size))
    states[0] = y
    breakpoints = [float(b) for b in breakpoints]

    def step(t, y, h):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    for day in range(n_days):
        for sub in range(substeps_per_day):
            ta = t0 + day + sub / substeps_per_day
            tb = t0 + day + (sub + 1) / substeps_per_day
            pts = _split_points(ta, tb, breakpoints)
            for lo, hi in zip(pts[:-1], pts[1:]):
                y = step(lo, y, hi - lo)
                if not np.all(np.isfinite(y)):
                    raise IntegrationError(hi, y)
        states[day + 1] = y
    return Trajectory(t=t0 + np.arange(n_days + 1, dtype=np.float64), states=states)


# --------------------------------------------------------------------------
# compiled model integrator


@kernel
def _rk4_model_step(t, y, h, theta, waves, rates, pop, v, buf, ynew):
    """One RK4 step; the vaccination rate ``v`` is held for the whole step."""
    k1 = buf[0]
    k2 = buf[1]
    k3 = buf[2]
    k4 = buf[3]
    tmp = buf[4]
    _rhs(t, y, k1, theta, waves, rates, pop, v)
    for j in range(7):
        tmp[j] = y[j] + 0.5 * h * k1[j]
    tm = t + 0.5 * h
    _rhs(tm, tmp, k2, theta, waves, rates, pop, v)
    for j in range(7):
        tmp[j] = y[j] + 0.5 * h * k2[j]
    _rhs(tm, tmp, k3, theta, waves, rates, pop, v)
    for j in range(7):
        tmp[j] = y[j] + h * k3[j]
    _rhs(t + h, tmp, k4, theta, waves, rates, pop, v)
    ok = True
    for j in range(7):
        ynew[j] = y[j] + (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        if not math.isfinite(ynew[j]):
            ok = False
    return ok


@kernel
def _simulate_kernel(y0, n_days, substeps, theta, waves, rates, pop, vdaily, edges, states):
    """Integrate the model; returns -1 on success or the failing day index.

    ``edges`` must be sorted ascending.
    """
    buf = np.empty((5, 9))
    y = y0.copy()
    ynew = np.empty(7)
    for j in range(7):
        states[0, j] = y[j]
    n_edges = edges.shape[0]
    ei = 0
    for day in range(n_days):
        # zero-order hold: steps never cross a day boundary
        v = vdaily[day] if day < vdaily.shape[0] else 0.0
        for sub in range(substeps):
            ta = day + sub / substeps
            tb = day + (sub + 1) / substeps
            while ei < n_edges and edges[ei] <= ta:
                ei += 1
            lo = ta
            while ei < n_edges and edges[ei] < tb:
                hi = edges[ei]
                if not _rk4_model_step(lo, y, hi - lo, theta, waves, rates, pop, v, buf, ynew):
                    return day
                for j in range(7):
                    y[j] = ynew[j]
                lo = hi
                ei += 1
            if not _rk4_model_step(lo, y, tb - lo, theta, waves, rates, pop, v, buf, ynew):
                return day
            for j in range(7):
                y[j] = ynew[j]
        for j in range(7):
            states[day + 1, j] = y[j]
    return -1


@kernel
def _derived_kernel(n_days, theta, waves, rates, pop, out):
    for day in range(n_days + 1):
        t = float(day)
        r0 = _r0_rect(t, theta[0], theta[1], theta[2], waves)
        beds = pop[1] * (1.0 + theta[5] * t)
        out[day, 0] = r0
        out[day, 1] = rates[1] * r0
        out[day, 2] = beds if beds > 0.0 else 0.0


def default_initial_state(pop: PopulationConfig, seed_exposed: float | None = None) -> CompartmentState:
    """A single exposed person by default, everyone else susceptible."""
    if seed_exposed is None:
        seed_exposed = 1.0
    seed_exposed = float(seed_exposed)
    if not 0 <= seed_exposed <= pop.n:
        raise ValueError(f"seed_exposed must lie in [0, N], got {seed_exposed}")
    return CompartmentState(pop.n - seed_exposed, seed_exposed, 0.0, 0.0, 0.0, 0.0)


# node spacing and half-width of the refined zone, in units of the edge width
_EDGE_NODE_SPACING = 0.25
_EDGE_HALF_WINDOW = 16.0


def wave_edges(waves: np.ndarray, k: float = 0.0, substeps_per_day: int = 1) -> np.ndarray:
    """Extra integration nodes around the rising and falling edge of each pulse.

    An edge at ``a`` (or ``a + b``) has width ``1 / (k * b)`` days. When that
    is shorter than half a step, nodes are laid at a quarter of the width
    across +-16 widths so the transition is resolved and the solution moves
    smoothly with the wave timing. Otherwise the step is only split at the
    edge itself.
    """
    waves = np.asarray(waves, dtype=np.float64).reshape(-1, 2)
    h = 1.0 / substeps_per_day
    nodes = []
    half = int(_EDGE_HALF_WINDOW / _EDGE_NODE_SPACING)
    offsets = np.arange(-half, half + 1, dtype=np.float64) * _EDGE_NODE_SPACING
    for a, b in waves:
        slope = k * abs(b)
        width = 1.0 / slope if slope > 0 else math.inf
        for edge in (a, a + b):
            if width < 0.5 * h:
                nodes.append(edge + offsets * width)
            else:
                nodes.append(np.array([edge]))
    if not nodes:
        return np.empty(0)
    return np.unique(np.concatenate(nodes))


def run_kernel(theta, waves, rates_arr, pop_arr, y0_arr, horizon_days, substeps, vdaily, split_edges=True):
    """Array-level entry point used by the fitter; returns (states, status).

    ``states`` has a seventh column holding cumulative new infectious cases.
    """
    states = np.empty((horizon_days + 1, 7))
    edges = wave_edges(waves, theta[2], substeps) if split_edges else np.empty(0)
    y0_ext = np.zeros(7)
    y0_ext[:6] = y0_arr[:6]
    status = _simulate_kernel(
        y0_ext, int(horizon_days), int(substeps), theta, waves, rates_arr, pop_arr,
        vdaily, edges, states,
    )
    return states, status


def simulate(
    fit: FitParameters,
    rates: FixedRates,
    pop: PopulationConfig,
    vacc=None,
    y0: CompartmentState | None = None,
    horizon_days: int = 585,
    substeps_per_day: int = 4,
    split_edges: bool = True,
    start_date: dt.date | None = None,
) -> Trajectory:
    """Run the model from day 0 to ``horizon_days``.

    ``vacc`` is a :class:`~seirwave.ingest.VaccinationSchedule` (or None);
    its lagged daily rate is held constant over each day.
    """
    if horizon_days < 1:
        raise ValueError("horizon_days must be at least 1")
    if substeps_per_day < 1:
        raise ValueError("substeps_per_day must be a positive integer")
    if y0 is None:
        y0 = default_initial_state(pop)
    vdaily = np.zeros(horizon_days + 2) if vacc is None else vacc.effective_rates(horizon_days + 2)
    theta = fit.kernel_theta()
    waves = fit.r0_params.waves_array()
    rates_arr = rates.as_array()
    pop_arr = pop.as_array()
    states, status = run_kernel(
        theta, waves, rates_arr, pop_arr, y0.as_array(), horizon_days,
        substeps_per_day, vdaily, split_edges,
    )
    if status >= 0:
        raise IntegrationError(status, states[status])
    derived = np.empty((horizon_days + 1, 3))
    _derived_kernel(horizon_days, theta, waves, rates_arr, pop_arr, derived)
    return Trajectory(
        t=np.arange(horizon_days + 1, dtype=np.float64),
        states=states[:, :6],
        cumulative_cases=states[:, 6],
        r0=derived[:, 0],
        beta=derived[:, 1],
        beds=derived[:, 2],
        start_date=start_date,
    )


# --------------------------------------------------------------------------
# forward sensitivities
#
# Column order of the parameter Jacobian:
#   r0_start, r0_end, k, prob_i_to_c, prob_c_to_d, s, a1, b1, a2, b2, ...


@kernel
def _rhs_tangent(t, y, z, dz, theta, waves, rates, pop, v_rate):
    """``dz = (df/dy) z + df/dtheta`` for every parameter column of ``z``."""
    r0_start = theta[0]
    r0_end = theta[1]
    k = theta[2]
    p_ic = theta[3]
    p_cd = theta[4]
    bed_s = theta[5]
    sigma = rates[0]
    gamma = rates[1]
    to_c = 1.0 / rates[2]
    c_to_d = 1.0 / rates[3]
    c_to_r = 1.0 / rates[4]
    rsus = rates[5]
    n = pop[0]
    beds = pop[1] * (1.0 + bed_s * t)
    s = y[0]
    i = y[2]
    c = y[3]
    span = r0_start - r0_end
    n_par = z.shape[1]

    # R0 and its parameter gradient
    n_waves = waves.shape[0]
    r0 = 0.0
    dr0 = np.zeros(n_par)
    for w in range(n_waves):
        a = waves[w, 0]
        b = waves[w, 1]
        q = (a - t) * (a + b - t)
        lg = _logistic(-k * q)
        slope = lg * (1.0 - lg)
        r0 += span * lg + r0_end
        dr0[0] += lg
        dr0[1] += 1.0 - lg
        dr0[2] += span * slope * (-q)
        dr0[6 + 2 * w] = span * slope * (-k) * ((a + b - t) + (a - t))
        dr0[7 + 2 * w] = span * slope * (-k) * (a - t)
    beta = gamma * r0

    vacc_is_s = 0.0 <= s < v_rate
    c_below = c < beds
    treated = c if c_below else beds
    over = c > beds

    for j in range(n_par):
        ds_ = z[0, j]
        de_ = z[1, j]
        di_ = z[2, j]
        dc_ = z[3, j]
        dbeta = gamma * dr0[j]
        dinf = (dbeta * i * s + beta * di_ * s + beta * i * ds_) / n
        dv = ds_ if vacc_is_s else 0.0
        dbeds = pop[1] * t if j == 5 else 0.0
        dtreated = dc_ if c_below else dbeds
        dover = (dc_ - dbeds) if over else 0.0
        d_pic = 1.0 if j == 3 else 0.0
        d_pcd = 1.0 if j == 4 else 0.0
        d_i_to_c = to_c * (p_ic * di_ + d_pic * i)
        d_i_to_r = gamma * ((1.0 - p_ic) * di_ - d_pic * i)
        d_c_dies = c_to_d * (p_cd * dtreated + d_pcd * treated) + dover
        d_c_heals = c_to_r * ((1.0 - p_cd) * dtreated - d_pcd * treated)
        d_drec = d_i_to_r + d_c_heals + dv
        dz[0, j] = -dinf - dv + rsus * d_drec
        dz[1, j] = dinf - sigma * de_
        dz[2, j] = sigma * de_ - d_i_to_c - d_i_to_r
        dz[3, j] = d_i_to_c - d_c_dies - d_c_heals
        dz[4, j] = (1.0 - rsus) * d_drec
        dz[5, j] = d_c_dies
        dz[6, j] = sigma * de_


@kernel
def _rk4_sens_step(t, y, z, h, theta, waves, rates, pop, v, buf, zbuf, ynew, znew):
    ytmp = buf[4]
    ztmp = zbuf[4]
    n_par = z.shape[1]
    for stage in range(4):
        if stage == 0:
            ts = t
        elif stage == 3:
            ts = t + h
        else:
            ts = t + 0.5 * h
        if stage == 0:
            for j in range(7):
                ytmp[j] = y[j]
                for p in range(n_par):
                    ztmp[j, p] = z[j, p]
        else:
            frac = h if stage == 3 else 0.5 * h
            for j in range(7):
                ytmp[j] = y[j] + frac * buf[stage - 1][j]
                for p in range(n_par):
                    ztmp[j, p] = z[j, p] + frac * zbuf[stage - 1][j, p]
        _rhs(ts, ytmp, buf[stage], theta, waves, rates, pop, v)
        _rhs_tangent(ts, ytmp, ztmp, zbuf[stage], theta, waves, rates, pop, v)
    ok = True
    for j in range(7):
        ynew[j] = y[j] + (h / 6.0) * (buf[0][j] + 2.0 * buf[1][j] + 2.0 * buf[2][j] + buf[3][j])
        if not math.isfinite(ynew[j]):
            ok = False
        for p in range(n_par):
            znew[j, p] = z[j, p] + (h / 6.0) * (
                zbuf[0][j, p] + 2.0 * zbuf[1][j, p] + 2.0 * zbuf[2][j, p] + zbuf[3][j, p]
            )
            if not math.isfinite(znew[j, p]):
                ok = False
    return ok


@kernel
def _simulate_sens_kernel(y0, n_days, substeps, theta, waves, rates, pop, vdaily, edges, states, sens):
    n_par = sens.shape[2]
    buf = np.empty((5, 9))
    zbuf = np.empty((5, 7, n_par))
    y = y0.copy()
    z = np.zeros((7, n_par))
    ynew = np.empty(7)
    znew = np.empty((7, n_par))
    for j in range(7):
        states[0, j] = y[j]
        for p in range(n_par):
            sens[0, j, p] = 0.0
    n_edges = edges.shape[0]
    ei = 0
    for day in range(n_days):
        v = vdaily[day] if day < vdaily.shape[0] else 0.0
        for sub in range(substeps):
            ta = day + sub / substeps
            tb = day + (sub + 1) / substeps
            while ei < n_edges and edges[ei] <= ta:
                ei += 1
            lo = ta
            while True:
                if ei < n_edges and edges[ei] < tb:
                    hi = edges[ei]
                    ei += 1
                else:
                    hi = tb
                if not _rk4_sens_step(lo, y, z, hi - lo, theta, waves, rates, pop, v,
                                      buf, zbuf, ynew, znew):
                    return day
                for j in range(7):
                    y[j] = ynew[j]
                    for p in range(n_par):
                        z[j, p] = znew[j, p]
                lo = hi
                if hi == tb:
                    break
        for j in range(7):
            states[day + 1, j] = y[j]
            for p in range(n_par):
                sens[day + 1, j, p] = z[j, p]
    return -1


def run_sensitivity_kernel(theta, waves, rates_arr, pop_arr, y0_arr, horizon_days, substeps, vdaily,
                           split_edges=True):
    """Like :func:`run_kernel` but also returns d(state)/d(parameter).

    ``sens`` has shape (T, 7, 6 + 2 * n_waves) in the column order
    r0_start, r0_end, k, prob_i_to_c, prob_c_to_d, s, a1, b1, a2, b2, ...
    """
    n_par = 6 + 2 * waves.shape[0]
    states = np.empty((horizon_days + 1, 7))
    sens = np.empty((horizon_days + 1, 7, n_par))
    edges = wave_edges(waves, theta[2], substeps) if split_edges else np.empty(0)
    y0_ext = np.zeros(7)
    y0_ext[:6] = y0_arr[:6]
    status = _simulate_sens_kernel(
        y0_ext, int(horizon_days), int(substeps), theta, waves, rates_arr, pop_arr,
        vdaily, edges, states, sens,
    )
    return states, sens, status
