"""Bounded least-squares calibration of the wave model.

Two engines share one residual definition. The default is scipy's
trust-region reflective solver working directly inside the ``[min, max]``
box with exact Jacobians from the forward sensitivity equations. The
alternative is a hand-rolled Levenberg-Marquardt loop that maps every
parameter to the real line through a scaled logistic and differentiates by
forward differences.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FitParameters, FixedRates, PopulationConfig, RectangleR0Params, stable_logistic
from .integrate import default_initial_state, run_kernel, run_sensitivity_kernel

__all__ = [
    "ParamSpec",
    "ObservedSeries",
    "ModelContext",
    "FitResult",
    "FitError",
    "SERIES_KINDS",
    "TABLE_I_SPECS",
    "TABLE_I_FITTED",
    "LM_SETTINGS",
    "FIT_METHODS",
    "to_unbounded",
    "from_unbounded",
    "params_from_values",
    "values_from_params",
    "model_series",
    "residuals",
    "fit",
    "aic",
    "bic",
]

SERIES_KINDS = ("cumulative_deaths", "daily_deaths", "cumulative_confirmed")

FIT_METHODS = ("trf", "lm")
JACOBIANS = ("sensitivity", "fd")

# Fixed optimizer constants; copied into every FitResult so runs are repeatable.
LM_SETTINGS = {
    "fd_rel_step": 1e-6,
    "fd_abs_step": 1e-8,
    "ftol": 1e-8,
    "gtol": 1e-8,
    "xtol": 1e-15,
    "max_nfev_per_varying": 200,
    "lambda_init": 1e-3,
    "lambda_up": 10.0,
    "lambda_down": 10.0,
    "lambda_max": 1e16,
}


class FitError(RuntimeError):
    """The optimizer could not evaluate the cost."""

    def __init__(self, message, values=None):
        self.values = values
        super().__init__(message if values is None else f"{message}; parameters={values}")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    initial_value: float
    min: float
    max: float
    vary: bool = True

    def __post_init__(self):
        if not self.min < self.max:
            raise ValueError(f"{self.name}: min must be below max")
        if not self.min <= self.initial_value <= self.max:
            raise ValueError(
                f"{self.name}: initial value {self.initial_value} outside [{self.min}, {self.max}]"
            )

    def with_initial(self, value: float) -> "ParamSpec":
        return ParamSpec(self.name, float(value), self.min, self.max, self.vary)


TABLE_I_SPECS = (
    ParamSpec("r0_start", 3.0, 2.0, 5.0),
    ParamSpec("k", 2.5, 0.01, 5.0),
    ParamSpec("a1", 90.0, 0.0, 350.0),
    ParamSpec("b1", 90.0, 0.0, 350.0),
    ParamSpec("a2", 90.0, 0.0, 350.0),
    ParamSpec("b2", 90.0, 0.0, 350.0),
    ParamSpec("r0_end", 0.9, 0.3, 3.5),
    ParamSpec("prob_i_to_c", 0.05, 0.01, 0.1),
    ParamSpec("prob_c_to_d", 0.5, 0.05, 0.8),
    ParamSpec("s", 0.003, 1e-3, 0.01),
)

TABLE_I_FITTED = {
    "r0_start": 2.13470497,
    "k": 2.06340457,
    "a1": 60.4533838,
    "b1": 146.800862,
    "a2": 252.861166,
    "b2": 32.678741,
    "r0_end": 0.45969314,
    "prob_i_to_c": 0.02359074,
    "prob_c_to_d": 0.21900041,
    "s": 0.00767634,
}


@dataclass(frozen=True)
class ObservedSeries:
    values: np.ndarray
    kind: str = "cumulative_deaths"
    start_date: dt.date | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", vals)
        if self.kind not in SERIES_KINDS:
            raise ValueError(f"unknown series kind {self.kind!r}; expected one of {SERIES_KINDS}")
        if vals.size == 0:
            raise ValueError("observed series is empty")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("observed counts must be finite and non-negative")
        if self.kind.startswith("cumulative") and np.any(np.diff(vals) < 0):
            raise ValueError("cumulative series must be non-decreasing; clean it first")

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ModelContext:
    """Everything a simulation needs besides the fitted parameters."""

    rates: FixedRates = field(default_factory=FixedRates)
    pop: PopulationConfig = field(default_factory=lambda: PopulationConfig(1.38e9))
    y0: object = None
    vacc: object = None
    substeps_per_day: int = 4
    split_edges: bool = True

    def initial_state(self):
        return self.y0 if self.y0 is not None else default_initial_state(self.pop)

    def describe(self) -> dict:
        y0 = self.initial_state()
        return {
            "rates": {
                "sigma": self.rates.sigma,
                "gamma": self.rates.gamma,
                "days_i_to_c": self.rates.days_i_to_c,
                "days_c_to_d": self.rates.days_c_to_d,
                "days_c_to_r": self.rates.days_c_to_r,
                "rsus": self.rates.rsus,
                "immunity_lag_days": self.rates.immunity_lag_days,
            },
            "population": {"n": self.pop.n, "beds_0": self.pop.beds_0},
            "initial_state": dict(zip("SEICRD", y0.as_tuple())),
            "substeps_per_day": self.substeps_per_day,
            "split_wave_edges": self.split_edges,
            "vaccination": self.vacc is not None,
        }


def to_unbounded(p: float, lo: float, hi: float) -> float:
    """Map ``p`` in ``[lo, hi]`` to the real line (inverse of :func:`from_unbounded`)."""
    if not lo < hi:
        raise ValueError("lower bound must be below upper bound")
    if not lo <= p <= hi:
        raise ValueError(f"value {p} outside [{lo}, {hi}]")
    eps = 1e-12 * (hi - lo)
    p = min(max(p, lo + eps), hi - eps)
    return math.log((p - lo) / (hi - p))


def from_unbounded(u: float, lo: float, hi: float) -> float:
    eps = 1e-12 * (hi - lo)
    p = lo + (hi - lo) * stable_logistic(u)
    return min(max(p, lo + eps), hi - eps)


def _wave_names(n_waves):
    names = []
    for w in range(1, n_waves + 1):
        names += [f"a{w}", f"b{w}"]
    return names


def params_from_values(values: dict) -> FitParameters:
    """Build :class:`FitParameters` from a Table I style name -> value mapping."""
    n_waves = sum(1 for name in values if name.startswith("a") and name[1:].isdigit())
    waves = tuple((values[f"a{w}"], values[f"b{w}"]) for w in range(1, n_waves + 1))
    r0 = RectangleR0Params(values["r0_start"], values["r0_end"], values["k"], waves)
    return FitParameters(r0, values["prob_i_to_c"], values["prob_c_to_d"], values["s"])


def values_from_params(p: FitParameters) -> dict:
    out = {"r0_start": p.r0_params.r0_start, "k": p.r0_params.k}
    for w, (a, b) in enumerate(p.r0_params.waves, start=1):
        out[f"a{w}"] = a
        out[f"b{w}"] = b
    out["r0_end"] = p.r0_params.r0_end
    out["prob_i_to_c"] = p.prob_i_to_c
    out["prob_c_to_d"] = p.prob_c_to_d
    out["s"] = p.bed_growth_s
    return out


def _kernel_inputs(values: dict, n_waves: int):
    theta = np.array([values["r0_start"], values["r0_end"], values["k"],
                      values["prob_i_to_c"], values["prob_c_to_d"], values["s"]])
    waves = np.array([[values[f"a{w}"], values[f"b{w}"]] for w in range(1, n_waves + 1)],
                     dtype=np.float64).reshape(-1, 2)
    return theta, waves


def _n_waves(names) -> int:
    return sum(1 for name in names if name.startswith("a") and name[1:].isdigit())


def _kernel_column(name: str) -> int:
    """Column of ``name`` in the sensitivity kernel's parameter order."""
    fixed = {"r0_start": 0, "r0_end": 1, "k": 2, "prob_i_to_c": 3, "prob_c_to_d": 4, "s": 5}
    if name in fixed:
        return fixed[name]
    w = int(name[1:]) - 1
    return 6 + 2 * w + (0 if name[0] == "a" else 1)


class _Evaluator:
    """Caches the array-level context so each cost evaluation is one kernel call."""

    def __init__(self, ctx: ModelContext, n_data: int, kind: str):
        if n_data < 2:
            raise ValueError("need at least two observations")
        if kind not in SERIES_KINDS:
            raise ValueError(f"unknown series kind {kind!r}")
        self.kind = kind
        self.n_data = n_data
        self.horizon = n_data - 1
        self.ctx = ctx
        self.rates = ctx.rates.as_array()
        self.pop = ctx.pop.as_array()
        self.y0 = ctx.initial_state().as_array()
        if ctx.vacc is None:
            self.vdaily = np.zeros(self.horizon + 2)
        else:
            self.vdaily = ctx.vacc.effective_rates(self.horizon + 2)

    def _target(self, states):
        if self.kind == "cumulative_deaths":
            return states[:, 5]
        if self.kind == "daily_deaths":
            d = states[:, 5]
            return np.concatenate([d[:1], np.diff(d)], axis=0)
        return states[:, 6]

    def series(self, values: dict) -> np.ndarray | None:
        theta, waves = _kernel_inputs(values, _n_waves(values))
        states, status = run_kernel(theta, waves, self.rates, self.pop, self.y0, self.horizon,
                                    self.ctx.substeps_per_day, self.vdaily, self.ctx.split_edges)
        if status >= 0:
            return None
        return self._target(states)

    def series_and_jacobian(self, values: dict, names):
        """Model series and its derivative with respect to ``names``."""
        theta, waves = _kernel_inputs(values, _n_waves(values))
        states, sens, status = run_sensitivity_kernel(
            theta, waves, self.rates, self.pop, self.y0, self.horizon,
            self.ctx.substeps_per_day, self.vdaily, self.ctx.split_edges,
        )
        if status >= 0:
            return None, None
        cols = [_kernel_column(n) for n in names]
        return self._target(states), self._target(sens[:, :, cols])


def model_series(params: FitParameters, n_data: int, kind: str, ctx: ModelContext) -> np.ndarray:
    """Model prediction of ``kind`` on days ``0 .. n_data - 1``."""
    ev = _Evaluator(ctx, n_data, kind)
    out = ev.series(values_from_params(params))
    if out is None:
        raise FitError("simulation produced non-finite values", values_from_params(params))
    return out


def residuals(params: FitParameters, observed: ObservedSeries, ctx: ModelContext) -> np.ndarray:
    """Model minus observation, one entry per observed day."""
    return model_series(params, len(observed), observed.kind, ctx) - observed.values


def aic(n_data: int, chi_square: float, n_varys: int) -> float:
    """Akaike criterion for least squares: ``n ln(chi2/n) + 2k``; -inf for a perfect fit."""
    if n_data <= 0:
        raise ValueError("n_data must be positive")
    if chi_square < 0:
        raise ValueError("chi_square must be non-negative")
    if chi_square == 0:
        return -math.inf
    return n_data * math.log(chi_square / n_data) + 2.0 * n_varys


def bic(n_data: int, chi_square: float, n_varys: int) -> float:
    """Bayesian criterion for least squares: ``n ln(chi2/n) + ln(n) k``; -inf for a perfect fit."""
    if n_data <= 0:
        raise ValueError("n_data must be positive")
    if chi_square < 0:
        raise ValueError("chi_square must be non-negative")
    if chi_square == 0:
        return -math.inf
    return n_data * math.log(chi_square / n_data) + math.log(n_data) * n_varys


@dataclass
class FitResult:
    best_params: FitParameters
    values: dict
    initial_values: dict
    chi_square: float
    reduced_chi_square: float
    n_data: int
    n_varys: int
    n_function_evals: int
    aic: float
    bic: float
    convergence_status: str
    success: bool
    kind: str
    model: np.ndarray
    cost_history: list
    method: str = "trf"
    jacobian: str = "sensitivity"
    settings: dict = field(default_factory=lambda: dict(LM_SETTINGS))

    def to_dict(self) -> dict:
        return {
            "fitting_method": "least_squares",
            "algorithm": self.method,
            "jacobian": self.jacobian,
            "target": self.kind,
            "n_function_evals": self.n_function_evals,
            "n_data": self.n_data,
            "n_varys": self.n_varys,
            "chi_square": self.chi_square,
            "reduced_chi_square": self.reduced_chi_square,
            "aic": self.aic,
            "bic": self.bic,
            "convergence_status": self.convergence_status,
            "success": self.success,
            "parameters": dict(self.values),
            "initial_values": dict(self.initial_values),
            "optimizer_settings": dict(self.settings),
        }


def _check_specs(specs):
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate parameter names in {names}")
    n_waves = _n_waves(names)
    required = ["r0_start", "k", *_wave_names(n_waves), "r0_end", "prob_i_to_c", "prob_c_to_d", "s"]
    if n_waves == 0 or sorted(required) != sorted(names):
        raise ValueError(f"parameter specs must be exactly {required}, got {names}")


class _Problem:
    """Residuals and Jacobians of the free parameters, with evaluation bookkeeping."""

    def __init__(self, specs, observed: ObservedSeries, ctx: ModelContext, jacobian: str):
        self.specs = specs
        self.ev = _Evaluator(ctx, len(observed), observed.kind)
        self.obs = observed.values
        self.free = [s for s in specs if s.vary]
        self.names = [s.name for s in self.free]
        self.fixed = {s.name: s.initial_value for s in specs if not s.vary}
        self.lo = np.array([s.min for s in self.free], dtype=np.float64)
        self.hi = np.array([s.max for s in self.free], dtype=np.float64)
        self.jacobian = jacobian
        self.nfev = 0
        self.evaluated = []
        self._cache = (None, None, None)

    def values(self, p) -> dict:
        vals = dict(self.fixed)
        vals.update(zip(self.names, (float(x) for x in p)))
        return {s.name: vals[s.name] for s in self.specs}

    def _solve(self, p, with_jac):
        key = np.asarray(p, dtype=np.float64).tobytes()
        if self._cache[0] == key and (self._cache[2] is not None or not with_jac):
            return self._cache[1], self._cache[2]
        self.nfev += 1
        self.evaluated.append(np.array(p, dtype=np.float64))
        vals = self.values(p)
        if with_jac:
            series, jac = self.ev.series_and_jacobian(vals, self.names)
        else:
            series, jac = self.ev.series(vals), None
        if series is None or not np.all(np.isfinite(series)):
            raise FitError("simulation produced non-finite values", vals)
        if jac is not None and not np.all(np.isfinite(jac)):
            raise FitError("sensitivity equations produced non-finite values", vals)
        r = series - self.obs
        self._cache = (key, r, jac)
        return r, jac

    def residual(self, p):
        return self._solve(p, self.jacobian == "sensitivity")[0]

    def jac(self, p, r=None):
        """d(residual)/dp; forward differences step away from the nearer bound."""
        if self.jacobian == "sensitivity":
            return self._solve(p, True)[1]
        p = np.asarray(p, dtype=np.float64)
        if r is None:
            r = self.residual(p)
        out = np.empty((r.size, p.size))
        for j in range(p.size):
            h = max(LM_SETTINGS["fd_rel_step"] * abs(p[j]), LM_SETTINGS["fd_abs_step"])
            if p[j] + h >= self.hi[j]:
                h = -h
            q = p.copy()
            q[j] += h
            out[:, j] = (self._solve(q, False)[0] - r) / h
        return out


def _interior(p, lo, hi):
    eps = 1e-12 * (hi - lo)
    return np.minimum(np.maximum(p, lo + eps), hi - eps)


_SCIPY_STATUS = {
    -1: "failed: improper input",
    0: "max_nfev reached",
    1: "converged: gradient below gtol",
    2: "converged: relative cost decrease below ftol",
    3: "converged: step below xtol",
    4: "converged: ftol and xtol both satisfied",
}


def _run_trf(prob: _Problem, p0, max_nfev):
    """Bounded trust-region reflective least squares (scipy) in parameter space."""
    from scipy.optimize import least_squares

    costs = []
    if prob.jacobian == "fd":
        # scipy counts residual calls only; leave room for the difference columns
        max_nfev = max(1, max_nfev // (1 + len(prob.names)))

    def fun(p):
        r = prob.residual(p)
        costs.append(float(r @ r))
        return r

    sol = least_squares(
        fun, p0, jac=prob.jac, bounds=(prob.lo, prob.hi), method="trf", x_scale="jac",
        ftol=LM_SETTINGS["ftol"], xtol=LM_SETTINGS["xtol"], gtol=LM_SETTINGS["gtol"],
        max_nfev=max_nfev,
    )
    history = []
    for c in costs:
        if not history or c < history[-1]:
            history.append(c)
    return _interior(sol.x, prob.lo, prob.hi), _SCIPY_STATUS.get(sol.status, f"status {sol.status}"), history


def _run_lm(prob: _Problem, p0, max_nfev):
    """Levenberg-Marquardt on the logistic-transformed coordinates."""
    cfg = LM_SETTINGS
    lo, hi = prob.lo, prob.hi
    n = lo.size

    def to_p(u):
        return np.array([from_unbounded(x, a, b) for x, a, b in zip(u, lo, hi)])

    def dp_du(u):
        return np.array([(b - a) * stable_logistic(x) * (1.0 - stable_logistic(x))
                         for x, a, b in zip(u, lo, hi)])

    u = np.array([to_unbounded(x, a, b) for x, a, b in zip(p0, lo, hi)])
    r = prob.residual(to_p(u))
    cost = float(r @ r)
    history = [cost]
    lam = cfg["lambda_init"]
    cost_per_jac = n if prob.jacobian == "fd" else 0
    while True:
        if cost == 0.0:
            return to_p(u), "converged: zero residual", history
        if prob.nfev + cost_per_jac >= max_nfev:
            return to_p(u), "max_nfev reached", history
        jac = prob.jac(to_p(u), r) * dp_du(u)
        grad = jac.T @ r
        if np.max(np.abs(grad)) < cfg["gtol"]:
            return to_p(u), "converged: gradient below gtol", history
        jtj = jac.T @ jac
        diag = np.diag(jtj).copy()
        diag = np.maximum(diag, 1e-12 * max(diag.max(), 1e-300))
        while True:
            if prob.nfev >= max_nfev:
                return to_p(u), "max_nfev reached", history
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(jtj + lam * np.diag(diag), -grad, rcond=None)[0]
            try:
                r_new = prob.residual(to_p(u + step))
                new_cost = float(r_new @ r_new)
            except FitError:
                new_cost = math.inf
            if new_cost < cost:
                rel = (cost - new_cost) / cost
                u, r, cost = u + step, r_new, new_cost
                history.append(cost)
                lam = max(lam / cfg["lambda_down"], 1e-15)
                if rel < cfg["ftol"]:
                    return to_p(u), "converged: relative cost decrease below ftol", history
                break
            lam *= cfg["lambda_up"]
            if lam > cfg["lambda_max"]:
                return to_p(u), "stalled: damping limit reached", history


def fit(
    specs,
    observed: ObservedSeries,
    ctx: ModelContext | None = None,
    method: str = "trf",
    jacobian: str | None = None,
    max_nfev: int | None = None,
) -> FitResult:
    """Least-squares fit of ``specs`` against ``observed``.

    ``method="trf"`` (default) runs a bounded trust-region reflective solver
    directly on the parameters. ``method="lm"`` runs Levenberg-Marquardt on
    logistic-transformed parameters. ``jacobian`` is ``"sensitivity"``
    (forward sensitivity equations, default for trf) or ``"fd"`` (forward
    differences, default for lm). A run stops after ``max_nfev`` model
    solves (default ``200 * n_varys``); running out of budget is reported in
    ``convergence_status`` and the best point so far is still returned.
    """
    ctx = ctx or ModelContext()
    if method not in FIT_METHODS:
        raise ValueError(f"method must be one of {FIT_METHODS}")
    if jacobian is None:
        jacobian = "sensitivity" if method == "trf" else "fd"
    if jacobian not in JACOBIANS:
        raise ValueError(f"jacobian must be one of {JACOBIANS}")
    specs = list(specs)
    _check_specs(specs)
    prob = _Problem(specs, observed, ctx, jacobian)
    n_varys = len(prob.free)
    n_data = len(observed)
    if max_nfev is None:
        max_nfev = LM_SETTINGS["max_nfev_per_varying"] * max(n_varys, 1)
    if max_nfev < 1:
        raise ValueError("max_nfev must be positive")
    p0 = _interior(np.array([s.initial_value for s in prob.free], dtype=np.float64), prob.lo, prob.hi)

    try:
        r0 = prob.residual(p0)
    except FitError as exc:
        raise FitError("non-finite cost at the initial point", exc.values) from None
    if n_varys == 0:
        p, status, history = p0, "converged: nothing to vary", [float(r0 @ r0)]
    elif float(r0 @ r0) == 0.0:
        p, status, history = p0, "converged: zero residual", [0.0]
    elif method == "trf":
        p, status, history = _run_trf(prob, p0, max_nfev)
    else:
        p, status, history = _run_lm(prob, p0, max_nfev)

    values = prob.values(p)
    r = prob.ev.series(values)
    if r is None:
        raise FitError("simulation produced non-finite values", values)
    resid = r - prob.obs
    cost = float(resid @ resid)
    dof = n_data - n_varys
    return FitResult(
        best_params=params_from_values(values),
        values=values,
        initial_values={s.name: s.initial_value for s in specs},
        chi_square=cost,
        reduced_chi_square=cost / dof if dof > 0 else math.nan,
        n_data=n_data,
        n_varys=n_varys,
        n_function_evals=prob.nfev,
        aic=aic(n_data, cost, n_varys),
        bic=bic(n_data, cost, n_varys),
        convergence_status=status,
        success=status.startswith("converged"),
        kind=observed.kind,
        model=r,
        cost_history=history,
        method=method,
        jacobian=jacobian,
        settings=dict(LM_SETTINGS, max_nfev=max_nfev),
    )
