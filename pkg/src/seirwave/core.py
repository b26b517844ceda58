"""Model types and right-hand side of the modified SEIR system.

Compartments are absolute person counts S, E, I, C, R, D summing to N.
R0(t) is either a sum of smooth rectangle pulses (one per epidemic wave)
or a single logistic step. Vaccination moves people from S straight into
the recovery flow, and a fixed fraction ``rsus`` of that flow returns to S.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._accel import kernel

__all__ = [
    "CompartmentState",
    "RectangleR0Params",
    "LogisticR0Params",
    "FixedRates",
    "FitParameters",
    "PopulationConfig",
    "DerivativeVector",
    "stable_logistic",
    "r0_rectangle",
    "r0_logistic",
    "beds_at",
    "derivatives",
]

# exp() overflows past this magnitude
_EXP_LIMIT = 709.0


@dataclass(frozen=True)
class CompartmentState:
    s: float
    e: float
    i: float
    c: float
    r: float
    d: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_tuple()):
            raise ValueError(f"non-finite compartment value in {self}")

    def as_tuple(self) -> tuple:
        return (self.s, self.e, self.i, self.c, self.r, self.d)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    @classmethod
    def from_array(cls, y) -> "CompartmentState":
        return cls(*(float(v) for v in y))

    @property
    def total(self) -> float:
        return math.fsum(self.as_tuple())


@dataclass(frozen=True)
class RectangleR0Params:
    """Multi-wave rectangle R0: each wave is ``(start_day, duration_days)``.

    ``k`` has units of 1/day**2 because the exponent is quadratic in t.
    """

    r0_start: float
    r0_end: float
    k: float
    waves: tuple = ((60.0, 150.0),)

    def __post_init__(self):
        waves = tuple((float(a), float(b)) for a, b in self.waves)
        object.__setattr__(self, "waves", waves)
        if not waves:
            raise ValueError("at least one wave window is required")
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.r0_end < 0 or self.r0_start < 0:
            raise ValueError("R0 levels must be non-negative")
        for a, b in waves:
            if b <= 0:
                raise ValueError(f"wave duration must be positive, got {b}")

    def waves_array(self) -> np.ndarray:
        return np.array(self.waves, dtype=np.float64).reshape(-1, 2)


@dataclass(frozen=True)
class LogisticR0Params:
    r0_start: float
    r0_end: float
    k: float
    t0: float

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if self.r0_end < 0 or self.r0_start < 0:
            raise ValueError("R0 levels must be non-negative")


@dataclass(frozen=True)
class FixedRates:
    """Constants that are not fitted.

    sigma and gamma are per-day rates; the three stage durations are in days.
    """

    sigma: float = 1.0 / 5.0
    gamma: float = 1.0 / 9.0
    days_i_to_c: float = 12.0
    days_c_to_d: float = 7.5
    days_c_to_r: float = 6.5
    rsus: float = 0.01
    immunity_lag_days: int = 30

    def __post_init__(self):
        for name in ("sigma", "gamma", "days_i_to_c", "days_c_to_d", "days_c_to_r"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.rsus <= 1.0:
            raise ValueError(f"rsus must lie in [0, 1], got {self.rsus}")
        if self.immunity_lag_days < 0:
            raise ValueError("immunity_lag_days must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.sigma, self.gamma, self.days_i_to_c, self.days_c_to_d,
             self.days_c_to_r, self.rsus],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class PopulationConfig:
    n: float
    beds_0: float | None = None

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"population must be positive, got {self.n}")
        if self.beds_0 is None:
            # 5 ICU beds per 100k people
            object.__setattr__(self, "beds_0", 5e-5 * self.n)
        if self.beds_0 < 0:
            raise ValueError("beds_0 must be non-negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.n, self.beds_0], dtype=np.float64)


@dataclass(frozen=True)
class FitParameters:
    r0_params: RectangleR0Params
    prob_i_to_c: float
    prob_c_to_d: float
    bed_growth_s: float

    def __post_init__(self):
        for name in ("prob_i_to_c", "prob_c_to_d"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be a probability, got {v}")

    def kernel_theta(self) -> np.ndarray:
        p = self.r0_params
        return np.array(
            [p.r0_start, p.r0_end, p.k, self.prob_i_to_c, self.prob_c_to_d,
             self.bed_growth_s],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class DerivativeVector:
    ds: float
    de: float
    di: float
    dc: float
    dr: float
    dd: float
    drec: float
    beta: float

    def compartments(self) -> tuple:
        return (self.ds, self.de, self.di, self.dc, self.dr, self.dd)


# --------------------------------------------------------------------------
# scalar kernels (compiled when numba is active)


@kernel
def _logistic(x):
    if x >= _EXP_LIMIT:
        return 1.0
    if x <= -_EXP_LIMIT:
        return 0.0
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@kernel
def _r0_rect(t, r0_start, r0_end, k, waves):
    total = 0.0
    span = r0_start - r0_end
    for w in range(waves.shape[0]):
        a = waves[w, 0]
        b = waves[w, 1]
        total += span * _logistic(-k * (a - t) * (a + b - t)) + r0_end
    return total


@kernel
def _r0_logi(t, r0_start, r0_end, k, t0):
    return (r0_start - r0_end) * _logistic(k * (t0 - t)) + r0_end


@kernel
def _rhs(t, y, out, theta, waves, rates, pop, v_rate):
    """Fill ``out`` with dS..dD, then new infectious cases, drec and beta."""
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
    if beds < 0.0:
        beds = 0.0

    s = y[0]
    e = y[1]
    i = y[2]
    c = y[3]

    beta = gamma * _r0_rect(t, r0_start, r0_end, k, waves)
    v_eff = v_rate
    if v_eff > s:
        v_eff = s
    if v_eff < 0.0:
        v_eff = 0.0
    treated = c if c < beds else beds
    overflow = c - beds
    if overflow < 0.0:
        overflow = 0.0

    infection = beta * i * s / n
    i_to_c = to_c * p_ic * i
    i_to_r = gamma * (1.0 - p_ic) * i
    c_dies = c_to_d * p_cd * treated + overflow
    c_heals = (1.0 - p_cd) * c_to_r * treated
    drec = i_to_r + c_heals + v_eff

    out[0] = -infection - v_eff + rsus * drec
    out[1] = infection - sigma * e
    out[2] = sigma * e - i_to_c - i_to_r
    out[3] = i_to_c - c_dies - c_heals
    out[4] = (1.0 - rsus) * drec
    out[5] = c_dies
    out[6] = sigma * e
    out[7] = drec
    out[8] = beta


# --------------------------------------------------------------------------
# public API


def stable_logistic(x: float) -> float:
    """Overflow-free 1/(1 + exp(-x))."""
    return _logistic(float(x))


def r0_rectangle(t, p: RectangleR0Params):
    """Sum of smooth rectangle pulses, high inside each ``[a, a + b]``.

    Off-pulse the value is ``len(p.waves) * r0_end`` because the waves add
    literally. Accepts a scalar or an array of days.
    """
    waves = p.waves_array()
    if np.ndim(t) == 0:
        return _r0_rect(float(t), p.r0_start, p.r0_end, p.k, waves)
    tt = np.asarray(t, dtype=np.float64)
    return np.array([_r0_rect(x, p.r0_start, p.r0_end, p.k, waves) for x in tt.ravel()]).reshape(tt.shape)


def r0_logistic(t, p: LogisticR0Params):
    """Single smooth step from ``r0_start`` down to ``r0_end`` around ``t0``."""
    if np.ndim(t) == 0:
        return _r0_logi(float(t), p.r0_start, p.r0_end, p.k, p.t0)
    tt = np.asarray(t, dtype=np.float64)
    return np.array([_r0_logi(x, p.r0_start, p.r0_end, p.k, p.t0) for x in tt.ravel()]).reshape(tt.shape)


def beds_at(t, pop: PopulationConfig, s: float):
    """ICU capacity growing linearly from ``beds_0`` at rate ``s`` per day."""
    return np.maximum(pop.beds_0 * (1.0 + s * np.asarray(t, dtype=np.float64)), 0.0)[()]


def derivatives(
    t: float,
    y: CompartmentState,
    fit: FitParameters,
    rates: FixedRates,
    pop: PopulationConfig,
    v_rate: float = 0.0,
) -> DerivativeVector:
    if not math.isfinite(t):
        raise ValueError(f"non-finite time {t}")
    if v_rate < 0:
        raise ValueError(f"vaccination rate must be non-negative, got {v_rate}")
    out = np.empty(9)
    _rhs(float(t), y.as_array(), out, fit.kernel_theta(),
         fit.r0_params.waves_array(), rates.as_array(), pop.as_array(), float(v_rate))
    return DerivativeVector(*(float(v) for v in out[[0, 1, 2, 3, 4, 5, 7, 8]]))
