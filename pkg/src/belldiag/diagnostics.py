"""Sub-grouping Bell predictions, noise-parameter fits and link-strength reports."""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .network import (
    TABLE1_LABELS,
    Topology,
    check_params,
    ideal_cluster,
    model_from_name,
    model_label,
    network_state_raw,
    to_physical_frame_raw,
)
from .quantum import I2, BlochObservable, DensityMatrix, ZeroProbabilityError, project_qubit
from .wwzb import (
    Restriction,
    SearchConfig,
    SettingsTable,
    mabk_sign_function,
    maximize_settings,
    sign_coefficients,
    _ascend_many,
)

FROZEN = "frozen"
REOPTIMIZED = "reoptimized"
FRAMES = ("canonical", "physical")


class FitConvergenceError(RuntimeError):
    def __init__(self, message: str, best_params=None, best_objective=None):
        super().__init__(message)
        self.best_params = best_params
        self.best_objective = best_objective


class PlanRequiredError(ValueError):
    pass


@dataclass(frozen=True)
class Grouping:
    """Qubits kept (1-based) and how each excluded qubit is measured away.

    ``exclusion`` holds ``(qubit, basis)`` pairs with basis one of X, Y, Z; the
    +1 outcome is post-selected.
    """

    keep: tuple
    exclusion: tuple = ()

    def __post_init__(self):
        keep = tuple(sorted(int(q) for q in self.keep))
        excl = tuple(sorted((int(q), str(b).upper()) for q, b in self.exclusion))
        if not keep:
            raise ValueError("a grouping keeps at least one qubit")
        if len(set(keep)) != len(keep):
            raise ValueError(f"repeated qubit in {keep}")
        if set(keep) & {q for q, _ in excl}:
            raise ValueError("a qubit cannot be both kept and excluded")
        for _, b in excl:
            BlochObservable.pauli(b)
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "exclusion", excl)

    @property
    def id(self) -> str:
        return "-".join(map(str, self.keep))

    @property
    def n_qubits(self) -> int:
        return len(self.keep)

    def covers(self, n: int) -> bool:
        return set(self.keep) | {q for q, _ in self.exclusion} == set(range(1, n + 1)) and len(self.keep) + len(
            self.exclusion
        ) == n

    def describe(self, top: Topology | None = None) -> str:
        name = (lambda q: top.label(q)) if top is not None else str
        kept = ", ".join(name(q) for q in self.keep)
        if not self.exclusion:
            return kept
        ex = ", ".join(f"{name(q)}:{b}" for q, b in self.exclusion)
        return f"{kept} | {ex}"


# Reference order: full cluster, the four triples, the six pairs.
STANDARD_KEEPS = (
    (1, 2, 3, 4),
    (1, 2, 4),
    (1, 2, 3),
    (1, 3, 4),
    (2, 3, 4),
    (1, 4),
    (1, 3),
    (2, 3),
    (2, 4),
    (1, 2),
    (3, 4),
)

TABLE1_MAXIMA = {
    "1-2-3-4": 22.63,
    "1-2-4": 11.31,
    "1-2-3": 11.31,
    "1-3-4": 13.66,
    "2-3-4": 13.66,
    "1-4": 5.66,
    "1-3": 5.66,
    "2-3": 5.66,
    "2-4": 5.66,
    "1-2": 5.66,
    "3-4": 5.66,
}

# Exclusion bases selected by search_table1_configuration() for the canonical
# frame with full-sphere settings; see tests/test_acceptance.py::test_a1.
DEFAULT_PLANS = {
    "1-2-3-4": (),
    "1-2-4": ((3, "Z"),),
    "1-2-3": ((4, "X"),),
    "1-3-4": ((2, "X"),),
    "2-3-4": ((1, "Z"),),
    "1-4": ((2, "X"), (3, "X")),
    "1-3": ((2, "X"), (4, "Z")),
    "2-3": ((1, "Z"), (4, "Z")),
    "2-4": ((1, "Z"), (3, "X")),
    "1-2": ((3, "Z"), (4, "Z")),
    "3-4": ((1, "Z"), (2, "Z")),
}
DEFAULT_FRAME = "canonical"
DEFAULT_RESTRICTION = Restriction.FULLSPHERE


def standard_groupings(top: Topology, plans: dict | None = None) -> list[Grouping]:
    """The eleven 4-, 3- and 2-qubit groupings of a 4-qubit chain."""
    if top.n != 4:
        raise PlanRequiredError(f"standard groupings exist for 4 qubits only; give explicit plans for n={top.n}")
    plans = DEFAULT_PLANS if plans is None else {**DEFAULT_PLANS, **plans}
    out = []
    for keep in STANDARD_KEEPS:
        g = Grouping(keep, plans["-".join(map(str, keep))])
        if not g.covers(top.n):
            raise ValueError(f"exclusion plan for {g.id} does not cover its complement")
        out.append(g)
    return out


def extract_group_state(state: DensityMatrix, g: Grouping) -> DensityMatrix:
    if not g.covers(state.n_qubits):
        raise ValueError(f"grouping {g.id} does not match a {state.n_qubits}-qubit state")
    # highest index first so lower indices keep their position
    for q, basis in sorted(g.exclusion, reverse=True):
        try:
            state, _ = project_qubit(state, q - 1, BlochObservable.pauli(basis), +1)
        except ZeroProbabilityError as exc:
            raise ZeroProbabilityError(f"grouping {g.id}: {exc}") from None
    return state


def _group_functionals(g: Grouping, n: int, settings: SettingsTable, coeffs: np.ndarray):
    """Operators W, P on the full register with numerator Tr(rho W) and branch probability Tr(rho P)."""
    kept_ops = {q: pair for q, pair in zip(g.keep, settings.observables)}
    proj = {q: BlochObservable.pauli(b).projector for q, b in g.exclusion}
    P = np.ones((1, 1), dtype=complex)
    for q in range(1, n + 1):
        P = np.kron(P, proj.get(q, I2))
    W = np.zeros((2**n, 2**n), dtype=complex)
    for k in itertools.product((0, 1), repeat=g.n_qubits):
        c = coeffs[k]
        if c == 0.0:
            continue
        term = np.ones((1, 1), dtype=complex)
        for q in range(1, n + 1):
            term = np.kron(term, kept_ops[q][k[g.keep.index(q)]].operator if q in kept_ops else proj[q])
        W += c * term
    return W, P


@dataclass(frozen=True)
class Observation:
    keep: tuple
    value: float
    sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "keep", tuple(sorted(int(q) for q in self.keep)))
        if not math.isfinite(self.value) or not math.isfinite(self.sigma):
            raise ValueError(f"non-finite observation for {self.keep}")
        if self.sigma < 0:
            raise ValueError(f"negative sigma for {self.keep}")

    @property
    def id(self) -> str:
        return "-".join(map(str, self.keep))


def load_measurements(path: str | Path) -> tuple[dict, list[Observation]]:
    data = json.loads(Path(path).read_text())
    return parse_measurements(data)


def parse_measurements(data: dict) -> tuple[dict, list[Observation]]:
    if "observations" not in data:
        raise ValueError("measurement file lacks 'observations'")
    labels = {int(k): v for k, v in data.get("labels", {}).items()}
    obs = [Observation(tuple(o["keep"]), float(o["value"]), float(o.get("sigma", 0.0))) for o in data["observations"]]
    return labels, obs


def measurements_to_json(labels: dict, obs: Sequence[Observation]) -> dict:
    return {
        "labels": {str(k): v for k, v in sorted(labels.items())},
        "observations": [{"keep": list(o.keep), "value": o.value, "sigma": o.sigma} for o in obs],
    }


def table1_observations() -> list[Observation]:
    """The bundled reference observations, full cluster included."""
    return load_measurements(Path(__file__).with_name("data") / "table1.json")[1]


@dataclass(frozen=True)
class FitConfig:
    model: object
    topology: Topology = field(default_factory=lambda: Topology.linear_chain(4))
    restriction: Restriction = DEFAULT_RESTRICTION
    settings_policy: str = FROZEN
    frame: str = DEFAULT_FRAME
    plans: tuple = ()
    grid_resolution: float = 0.02
    refine_tolerance: float = 1e-5
    seed: int = 0
    search: SearchConfig = SearchConfig()
    weighted: bool = False
    bootstrap_grid: float = 0.05
    reopt_starts: int = 4

    def __post_init__(self):
        if isinstance(self.model, str):
            object.__setattr__(self, "model", model_from_name(self.model))
        object.__setattr__(self, "restriction", Restriction(self.restriction))
        if isinstance(self.plans, dict):
            object.__setattr__(self, "plans", tuple(sorted((k, tuple(v)) for k, v in self.plans.items())))
        if self.settings_policy not in (FROZEN, REOPTIMIZED):
            raise ValueError(f"settings policy must be {FROZEN!r} or {REOPTIMIZED!r}")
        if self.frame not in FRAMES:
            raise ValueError(f"frame must be one of {FRAMES}")
        if self.frame == "physical" and self.topology.n != 4:
            raise ValueError("the physical frame exists for the 4-qubit cluster only")
        if not 0 < self.grid_resolution <= 0.5 or not 0 < self.bootstrap_grid <= 0.5:
            raise ValueError("grid resolution must lie in (0, 0.5]")
        if self.refine_tolerance <= 0:
            raise ValueError("refine tolerance must be positive")

    @property
    def n_params(self) -> int:
        return len(self.model.parameter_names(self.topology))

    def groupings(self) -> list[Grouping]:
        return standard_groupings(self.topology, dict(self.plans))

    def echo(self) -> dict:
        return {
            "model": model_label(self.model),
            "topology": self.topology.to_json(),
            "restriction": self.restriction.value,
            "settings_policy": self.settings_policy,
            "frame": self.frame,
            "exclusion_plans": {g.id: [list(e) for e in g.exclusion] for g in self.groupings()},
            "grid_resolution": self.grid_resolution,
            "refine_tolerance": self.refine_tolerance,
            "objective": "weighted_l1" if self.weighted else "l1",
            "seed": self.seed,
            "search": {"starts": self.search.starts, "seed": self.search.seed, "tol": self.search.tol},
        }


def _grid_axis(step: float) -> np.ndarray:
    m = int(round(1.0 / step))
    if abs(m * step - 1.0) < 1e-9:
        return np.linspace(0.0, 1.0, m + 1)
    return np.append(np.arange(0.0, 1.0, step), 1.0)


class PolynomialSurrogate:
    """Exact tensor-product polynomial representation of a vector function on [0, 1]^k.

    ``degrees[i]`` bounds the degree in parameter i; the coefficients come from
    samples on equispaced nodes, so the representation is exact up to rounding.
    """

    def __init__(self, fn, degrees: Sequence[int]):
        self.degrees = [int(d) for d in degrees]
        nodes = [np.linspace(0.0, 1.0, d + 1) for d in self.degrees]
        samples = np.array([fn(np.array(p)) for p in itertools.product(*nodes)])
        coef = samples.reshape([d + 1 for d in self.degrees] + [samples.shape[-1]])
        for ax, x in enumerate(nodes):
            vinv = np.linalg.inv(np.vander(x, increasing=True))
            coef = np.moveaxis(np.tensordot(vinv, coef, axes=([1], [ax])), 0, ax)
        self.coef = coef
        self._flat = coef.reshape(-1, coef.shape[-1])
        self._powers = [np.arange(d + 1) for d in self.degrees]

    def _basis(self, x, d):
        return np.power.outer(np.asarray(x, dtype=float), np.arange(d + 1))

    def __call__(self, p: Sequence[float]) -> np.ndarray:
        b = np.ones(1)
        for x, k in zip(p, self._powers):
            b = np.outer(b, float(x) ** k).ravel()
        return b @ self._flat

    def on_grid(self, axes: Sequence[np.ndarray]) -> np.ndarray:
        """Values on the full tensor grid, shape ``(len(ax0), ..., m)``."""
        out = self.coef
        for i, (x, d) in enumerate(zip(axes, self.degrees)):
            out = np.moveaxis(np.tensordot(self._basis(x, d), out, axes=([1], [i])), 0, i)
        return out


class Predictor:
    """Predicted Bell values of every grouping as a function of the noise parameters."""

    def __init__(self, config: FitConfig):
        self.config = config
        self.groupings = config.groupings()
        top = config.topology
        n = top.n
        ideal = ideal_cluster(top).density().matrix
        self.ideal_state = DensityMatrix(self._frame(ideal))
        self.settings: list[SettingsTable] = []
        self.ideal_maxima: list[float] = []
        self.coeffs = []
        rows = []
        for g in self.groupings:
            S = mabk_sign_function(g.n_qubits)
            sub = extract_group_state(self.ideal_state, g)
            settings, val = maximize_settings(sub, S, config.restriction, config.search)
            coeffs = sign_coefficients(S)
            W, P = _group_functionals(g, n, settings, coeffs)
            rows.append((W.T.reshape(-1), P.T.reshape(-1)))
            self.settings.append(settings)
            self.ideal_maxima.append(val.value)
            self.coeffs.append(coeffs.reshape(-1))
        self._num = np.array([r[0] for r in rows])
        self._den = np.array([r[1] for r in rows])
        self._surrogate = None
        self._grid_cache: dict = {}

    def _frame(self, rho: np.ndarray) -> np.ndarray:
        return to_physical_frame_raw(rho) if self.config.frame == "physical" else rho

    def state(self, params) -> np.ndarray:
        return self._frame(network_state_raw(self.config.topology, self.config.model, params))

    def _functionals(self, params) -> np.ndarray:
        v = self.state(params).reshape(-1)
        return np.concatenate([np.real(self._num @ v), np.real(self._den @ v)])

    def _from_functionals(self, f: np.ndarray) -> np.ndarray:
        m = len(self.groupings)
        num, den = f[..., :m], f[..., m:]
        ok = den > 1e-12
        return np.abs(num) / np.where(ok, den, 1.0) * ok

    @property
    def surrogate(self) -> PolynomialSurrogate:
        if self._surrogate is None:
            self._surrogate = PolynomialSurrogate(self._functionals, self.config.model.degrees(self.config.topology))
        return self._surrogate

    def __call__(self, params) -> np.ndarray:
        params = np.clip(np.asarray(params, dtype=float), 0.0, 1.0)
        if self.config.settings_policy == REOPTIMIZED:
            return self._reoptimized(params)
        return self._from_functionals(self.surrogate(params))

    def direct(self, params) -> np.ndarray:
        """Frozen-settings prediction computed from the state itself (no surrogate)."""
        return self._from_functionals(self._functionals(np.asarray(params, dtype=float)))

    def _reoptimized(self, params) -> np.ndarray:
        rho = DensityMatrix(self.state(params))
        out = []
        search = replace(self.config.search, starts=self.config.reopt_starts)
        full = self.config.restriction is Restriction.FULLSPHERE
        for g, settings, coeffs in zip(self.groupings, self.settings, self.coeffs):
            sub = extract_group_state(rho, g)
            warm = _angles_of(settings, full)
            _, best = _ascend_many(kernels.interleave(sub.matrix), g.n_qubits, self.config.restriction, coeffs, search, [warm])
            out.append(best)
        return np.array(out)

    def grid(self, step: float) -> tuple[list[np.ndarray], np.ndarray]:
        """Frozen-settings predictions on the full tensor grid (cached per step)."""
        if step not in self._grid_cache:
            axes = [_grid_axis(step)] * self.config.n_params
            self._grid_cache[step] = (axes, self._from_functionals(self.surrogate.on_grid(axes)))
        return self._grid_cache[step]


def _angles_of(settings: SettingsTable, full: bool) -> np.ndarray:
    out = []
    for pair in settings.observables:
        for o in pair:
            x, y, z = o.axis
            if full:
                out += [math.acos(max(-1.0, min(1.0, z))), math.atan2(y, x)]
            else:
                out.append(math.atan2(y, x))
    return np.array(out)


def _order_observations(obs: Sequence[Observation], groupings: Sequence[Grouping]) -> list[Observation]:
    by_id = {}
    for o in obs:
        if o.id in by_id:
            raise ValueError(f"duplicate observation for grouping {o.id}")
        by_id[o.id] = o
    ids = [g.id for g in groupings]
    if set(by_id) != set(ids):
        missing = sorted(set(ids) - set(by_id))
        extra = sorted(set(by_id) - set(ids))
        raise ValueError(f"observations must cover the groupings exactly (missing {missing}, unexpected {extra})")
    return [by_id[i] for i in ids]


def predicted_wwzb(params, config: FitConfig, predictor: Predictor | None = None) -> np.ndarray:
    params = check_params(config.model, config.topology, params)
    return (predictor or Predictor(config))(params)


@dataclass
class FitResult:
    model: str
    parameter_names: list
    params: list
    uncertainties: list
    residuals: dict
    predicted: dict
    objective: float
    link_strengths: dict
    derived: dict
    config: dict
    grid_objective: float = float("nan")

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "parameter_names": list(self.parameter_names),
            "params": [float(p) for p in self.params],
            "uncertainties": [float(u) for u in self.uncertainties],
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "predicted": {k: float(v) for k, v in self.predicted.items()},
            "objective": float(self.objective),
            "grid_objective": float(self.grid_objective),
            "link_strengths": {k: float(v) for k, v in self.link_strengths.items()},
            "derived": {k: float(v) for k, v in self.derived.items()},
            "config": self.config,
        }

    @classmethod
    def from_json(cls, data: dict) -> "FitResult":
        try:
            return cls(**{k: data[k] for k in cls.__dataclass_fields__})
        except KeyError as exc:
            raise ValueError(f"fit result lacks field {exc.args[0]!r}") from None


def _objective_fn(pred_fn, values, weights):
    def f(p):
        return float(np.sum(weights * np.abs(pred_fn(np.clip(p, 0.0, 1.0)) - values)))

    return f


def _grid_argmin(predictor: Predictor, step: float, values, weights) -> tuple[np.ndarray, float]:
    axes, table = predictor.grid(step)
    obj = np.sum(weights * np.abs(table - values), axis=-1)
    # C-order argmin returns the lexicographically smallest minimiser
    idx = np.unravel_index(int(np.argmin(obj)), obj.shape)
    return np.array([ax[i] for ax, i in zip(axes, idx)]), float(obj[idx])


def _coarse_reoptimized(predictor: Predictor, step: float, values, weights):
    axes = [_grid_axis(step)] * predictor.config.n_params
    best, best_obj = None, math.inf
    for p in itertools.product(*axes):
        o = float(np.sum(weights * np.abs(predictor(p) - values)))
        if o < best_obj:
            best, best_obj = np.array(p), o
    return best, best_obj


def _fit_values(values: np.ndarray, weights: np.ndarray, predictor: Predictor, step: float) -> tuple[np.ndarray, float, float]:
    cfg = predictor.config
    if cfg.settings_policy == FROZEN:
        start, grid_obj = _grid_argmin(predictor, step, values, weights)
    else:
        start, grid_obj = _coarse_reoptimized(predictor, step, values, weights)
    f = _objective_fn(predictor, values, weights)
    k = len(start)
    simplex = [start] + [np.clip(start + np.eye(k)[i] * step * (1 if start[i] < 0.5 else -1), 0, 1) for i in range(k)]
    res = minimize(
        f,
        start,
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * k,
        options={
            "xatol": cfg.refine_tolerance,
            "fatol": 1e-12,
            "maxiter": 4000 * k,
            "maxfev": 8000 * k,
            "initial_simplex": np.array(simplex),
        },
    )
    p = np.clip(res.x, 0.0, 1.0)
    obj = f(p)
    if obj > grid_obj:
        p, obj = start, grid_obj
    elif not res.success:
        raise FitConvergenceError(
            f"simplex refinement did not converge: {res.message}", best_params=p.tolist(), best_objective=obj
        )
    return p, obj, grid_obj


def _weights(obs: Sequence[Observation], weighted: bool) -> np.ndarray:
    if not weighted:
        return np.ones(len(obs))
    s = np.array([o.sigma for o in obs])
    if np.any(s <= 0):
        raise ValueError("sigma-weighted objective needs positive sigmas")
    return 1.0 / s


def fit(
    obs: Sequence[Observation],
    config: FitConfig,
    predictor: Predictor | None = None,
    n_resamples: int = 0,
) -> FitResult:
    """L1 fit of the noise parameters: coarse grid, then bounded simplex refinement."""
    predictor = predictor or Predictor(config)
    ordered = _order_observations(obs, predictor.groupings)
    values = np.array([o.value for o in ordered])
    weights = _weights(ordered, config.weighted)
    p, obj, grid_obj = _fit_values(values, weights, predictor, config.grid_resolution)
    pred = predictor(p)
    unc = [0.0] * len(p)
    if n_resamples:
        unc = list(estimate_uncertainty(ordered, config, n_resamples, config.seed, predictor=predictor))
    return _make_result(config, predictor, p, pred, values, obj, grid_obj, unc)


def _make_result(config, predictor, p, pred, values, obj, grid_obj, unc) -> FitResult:
    top, model = config.topology, config.model
    names = model.parameter_names(top)
    ids = [g.id for g in predictor.groupings]
    links = {top.edge_name(e): float(p[i]) for e, i in model.edge_strength_indices(top).items()}
    derived = {}
    if model.name == "qubit_dephasing" and top.n == 4:
        derived = {"p_1*p_2": float(p[0] * p[1]), "p_3*p_4": float(p[2] * p[3])}
    return FitResult(
        model=model_label(model),
        parameter_names=names,
        params=[float(x) for x in p],
        uncertainties=[float(u) for u in unc],
        residuals={i: float(a - b) for i, a, b in zip(ids, pred, values)},
        predicted={i: float(a) for i, a in zip(ids, pred)},
        objective=float(obj),
        link_strengths=links,
        derived=derived,
        config=config.echo(),
        grid_objective=float(grid_obj),
    )


def estimate_uncertainty(
    obs: Sequence[Observation],
    config: FitConfig,
    n_resamples: int,
    seed: int,
    predictor: Predictor | None = None,
) -> np.ndarray:
    """Parametric bootstrap: redraw each value from Normal(value, sigma), refit, take the std.

    Resample r uses the stream seeded by ``(seed, r)`` and draws in grouping
    order, so the result does not depend on how ``obs`` is ordered.
    """
    if n_resamples < 100:
        raise ValueError("the bootstrap needs at least 100 resamples")
    predictor = predictor or Predictor(config)
    ordered = _order_observations(obs, predictor.groupings)
    values = np.array([o.value for o in ordered])
    sigmas = np.array([o.sigma for o in ordered])
    k = config.n_params
    if not np.any(sigmas > 0):
        warnings.warn("all sigmas are zero; the bootstrap is degenerate", RuntimeWarning, stacklevel=2)
        return np.zeros(k)
    weights = _weights(ordered, config.weighted)
    step = max(config.bootstrap_grid, config.grid_resolution)
    fits = np.empty((n_resamples, k))
    for r in range(n_resamples):
        rng = np.random.default_rng([seed, r])
        draw = values + sigmas * rng.standard_normal(len(values))
        try:
            fits[r] = _fit_values(draw, weights, predictor, step)[0]
        except FitConvergenceError as exc:
            fits[r] = exc.best_params
    return fits.std(axis=0, ddof=1)


@dataclass
class SelfTestReport:
    true_params: list
    recovered: list
    errors: list
    noise_sigma: float
    seed: int
    objective: float

    @property
    def max_error(self) -> float:
        return max(self.errors)

    def to_json(self) -> dict:
        return {
            "true_params": [float(x) for x in self.true_params],
            "recovered": [float(x) for x in self.recovered],
            "errors": [float(x) for x in self.errors],
            "max_error": float(self.max_error),
            "noise_sigma": float(self.noise_sigma),
            "seed": int(self.seed),
            "objective": float(self.objective),
        }


def synthetic_selftest(
    true_params, noise_sigma: float, seed: int, config: FitConfig, predictor: Predictor | None = None
) -> SelfTestReport:
    """Fit Bell values simulated at ``true_params`` and perturbed by Normal(0, noise_sigma)."""
    if noise_sigma < 0 or not math.isfinite(noise_sigma):
        raise ValueError("noise sigma must be a non-negative number")
    true_params = check_params(config.model, config.topology, true_params)
    predictor = predictor or Predictor(config)
    clean = predictor(true_params)
    rng = np.random.default_rng([seed, 0x5E1F])
    noisy = clean + noise_sigma * rng.standard_normal(clean.size)
    obs = [Observation(g.keep, float(v), float(noise_sigma)) for g, v in zip(predictor.groupings, noisy)]
    res = fit(obs, config, predictor)
    err = [abs(a - b) for a, b in zip(res.params, true_params)]
    return SelfTestReport(list(true_params), res.params, err, noise_sigma, seed, res.objective)


@dataclass
class Report:
    model: str
    parameters: dict
    residuals: dict
    link_strengths: dict
    weakest_link: str | None
    tied_links: list
    derived: dict
    objective: float
    config: dict

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "parameters": self.parameters,
            "residuals": self.residuals,
            "link_strengths": self.link_strengths,
            "weakest_link": self.weakest_link,
            "tied_links": self.tied_links,
            "derived": self.derived,
            "objective": self.objective,
            "config": self.config,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Report":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})

    def to_text(self, top: Topology | None = None) -> str:
        lines = [f"model: {self.model}", f"objective (sum |pred - obs|): {self.objective:.4f}", ""]
        lines.append(f"{'parameter':<22}{'value':>10}{'std':>10}")
        for name, pv in self.parameters.items():
            lines.append(f"{name:<22}{pv['value']:>10.4f}{pv['std']:>10.4f}")
        for name, v in self.derived.items():
            lines.append(f"{name:<22}{v:>10.4f}")
        lines += ["", f"{'qubit group':<34}{'predicted':>10}{'observed':>10}{'resid':>9}"]
        for gid, r in self.residuals.items():
            lines.append(f"{r['group']:<34}{r['predicted']:>10.2f}{r['observed']:>10.2f}{r['residual']:>+9.2f}")
        if self.link_strengths:
            lines += ["", "link strengths:"]
            for name, v in self.link_strengths.items():
                flag = "  <- weakest" if name == self.weakest_link else ""
                lines.append(f"  {name:<16}{v:.4f}{flag}")
            if len(self.tied_links) > 1:
                lines.append(f"  tie between {', '.join(self.tied_links)}; lowest edge index flagged")
        return "\n".join(lines) + "\n"


def render_report(fit_result: FitResult, top: Topology) -> Report:
    names = fit_result.parameter_names
    params = {
        n: {"value": float(v), "std": float(s)}
        for n, v, s in zip(names, fit_result.params, fit_result.uncertainties)
    }
    residuals = {}
    for gid in fit_result.residuals:
        keep = [int(q) for q in gid.split("-")]
        label = ", ".join(top.label(q) for q in keep)
        pred = fit_result.predicted[gid]
        residuals[gid] = {
            "group": f"{gid} ({label})",
            "predicted": pred,
            "observed": pred - fit_result.residuals[gid],
            "residual": fit_result.residuals[gid],
        }
    links = dict(fit_result.link_strengths)
    weakest, tied = None, []
    if links:
        lo = min(links.values())
        tied = [k for k, v in links.items() if v == lo]
        weakest = tied[0]
    return Report(
        model=fit_result.model,
        parameters=params,
        residuals=residuals,
        link_strengths=links,
        weakest_link=weakest,
        tied_links=tied,
        derived=dict(fit_result.derived),
        objective=float(fit_result.objective),
        config=fit_result.config,
    )


def all_mabk_groupwise_maxima(config: FitConfig, predictor: Predictor | None = None) -> list[tuple[str, float]]:
    """Maximised MABK value of every grouping on the ideal cluster."""
    predictor = predictor or Predictor(config)
    return [(g.id, v) for g, v in zip(predictor.groupings, predictor.ideal_maxima)]


@dataclass
class ConfigurationCandidate:
    frame: str
    restriction: Restriction
    plans: dict
    maxima: dict
    residuals: dict

    @property
    def worst(self) -> float:
        return max(abs(r) for r in self.residuals.values())

    @property
    def total(self) -> float:
        return sum(abs(r) for r in self.residuals.values())


def search_table1_configuration(
    targets: dict = TABLE1_MAXIMA,
    frames: Sequence[str] = FRAMES,
    restrictions: Sequence[Restriction] = (Restriction.EQUATORIAL, Restriction.FULLSPHERE),
    bases: Sequence[str] = ("Z", "X"),
    search: SearchConfig = SearchConfig(),
) -> list[ConfigurationCandidate]:
    """Score every frame x restriction x exclusion-basis combination against ideal maxima.

    Within one frame and restriction each grouping takes the basis assignment
    closest to its target (earlier bases win ties).  Candidates come back
    sorted by total absolute residual, then by the order of the arguments.
    """
    top = Topology.linear_chain(4)
    rho = ideal_cluster(top).density().matrix
    out = []
    for frame in frames:
        state = DensityMatrix(to_physical_frame_raw(rho) if frame == "physical" else rho)
        for restriction in restrictions:
            plans, maxima, resid = {}, {}, {}
            for keep in STANDARD_KEEPS:
                gid = "-".join(map(str, keep))
                excluded = [q for q in range(1, 5) if q not in keep]
                best = None
                for combo in itertools.product(bases, repeat=len(excluded)):
                    g = Grouping(keep, tuple(zip(excluded, combo)))
                    try:
                        sub = extract_group_state(state, g)
                    except ZeroProbabilityError:
                        continue
                    _, val = maximize_settings(sub, mabk_sign_function(len(keep)), restriction, search)
                    r = val.value - targets[gid]
                    if best is None or abs(r) < abs(best[2]) - 1e-9:
                        best = (g.exclusion, val.value, r)
                plans[gid], maxima[gid], resid[gid] = best
            out.append(ConfigurationCandidate(frame, Restriction(restriction), plans, maxima, resid))
    return sorted(out, key=lambda c: round(c.total, 9))
