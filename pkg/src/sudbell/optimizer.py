"""
Maximization of Bell functions over local SU(d) measurement settings.

Three local methods are provided (steepest ascent, Polak-Ribiere+ conjugate
gradient and damped-particle dynamic relaxation), all driven by central
finite-difference gradients, plus a deterministic multi-start wrapper.
Every method maximizes its objective; internally this is the minimization
of the negated objective.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .bell import CGLMP, BellSpec, bell_value_from_unitaries, qft_party_unitaries, term_values
from .correlation import (
    BipartiteState,
    MeasurementConfig,
    correlation_weights,
    joint_probabilities_from_unitaries,
)
from .sud_algebra import build_generators, unitary_from_params

__all__ = [
    "OptimizerSettings",
    "RelaxationSettings",
    "RestartRecord",
    "OptimizationResult",
    "BellObjective",
    "QFTObjective",
    "gradient",
    "is_converged",
    "steepest_descent",
    "conjugate_gradient",
    "dynamic_relaxation",
    "METHODS",
    "start_point",
    "multistart_maximize",
    "maximize_qft",
]

log = logging.getLogger(__name__)

ARMIJO = 1e-4
FD_STEP = 1e-5
DIVERGENCE_NORM = 1e6


@dataclass(frozen=True)
class OptimizerSettings:
    max_steps: int = 5000
    tol: float = 1e-6
    max_halvings: int = 60


@dataclass(frozen=True)
class RelaxationSettings:
    """Fictitious-particle parameters: ``m p'' = -gamma p' + grad B``."""

    mass: float = 0.1
    friction: float = 1.0
    dt: float = 0.05
    max_steps: int = 20000
    tol: float = 1e-6

    def __post_init__(self):
        for name in ("mass", "friction", "dt", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if not 0.5 <= self.friction <= 1.5:
            warnings.warn(f"friction {self.friction} outside the usual range (0.5, 1.5)")
        if not 0.01 <= self.dt <= 0.1:
            warnings.warn(f"time step {self.dt} outside the usual range (0.01, 0.1)")


@dataclass(frozen=True)
class RestartRecord:
    value: float
    iterations: int
    converged: bool


@dataclass
class OptimizationResult:
    value: float
    x: np.ndarray
    method: str
    restarts: int = 1
    trace: List[RestartRecord] = field(default_factory=list)
    seed: Optional[int] = None
    config: Optional[MeasurementConfig] = None

    @property
    def converged(self) -> bool:
        """Whether the winning restart met the stopping rule."""
        best = max(range(len(self.trace)), key=lambda i: (self.trace[i].value, -i))
        return self.trace[best].converged

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "restarts": self.restarts,
            "seed": self.seed,
            "converged": self.converged,
            "x": self.x.tolist(),
            "config": None if self.config is None else self.config.to_dict(),
            "trace": [{"value": r.value, "iterations": r.iterations, "converged": r.converged}
                      for r in self.trace],
        }


class BellObjective:
    """Bell value as a function of the stacked settings ``(A1, A2, B1, B2)``.

    In ``reduced`` mode each setting has ``d**2 - d`` coordinates (the U and V
    components); in ``full`` mode ``d**2 - 1``.
    """

    def __init__(self, state: BipartiteState, spec: BellSpec = CGLMP, mode: str = "reduced"):
        if mode not in ("full", "reduced"):
            raise ValueError(f"unknown mode {mode!r}")
        self.state = state
        self.spec = spec
        self.mode = mode
        self.d = state.d
        self.gens = build_generators(state.d)
        self.mu = correlation_weights(state.d)
        self.block = self.gens.n if mode == "full" else self.gens.n_reduced
        self.dim = 4 * self.block

    def _unitaries(self, x) -> dict:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a vector of length {self.dim}, got {x.shape}")
        Us = unitary_from_params(x.reshape(4, self.block), self.gens)
        return dict(zip(MeasurementConfig.LABELS, Us))

    def __call__(self, x) -> float:
        return bell_value_from_unitaries(self.state, self._unitaries(x), self.spec, self.mu)

    def config(self, x) -> MeasurementConfig:
        return MeasurementConfig.from_vector(x, self.d, self.mode)

    def central_differences(self, x, h) -> np.ndarray:
        """Central differences with every perturbed unitary built in one batch.

        Perturbing a coordinate changes one of the four unitaries, so each term
        only needs the perturbations of its own two settings; terms not touching
        a setting cancel in the difference and are skipped.
        """
        x = np.asarray(x, dtype=float)
        B = self.block
        X = x.reshape(4, B)
        H = np.asarray(h, dtype=float).reshape(4, B)
        idx = np.arange(B)
        pert = np.repeat(X[:, None, :], 2 * B, axis=1)
        pert[:, 2 * idx, idx] = X + H
        pert[:, 2 * idx + 1, idx] = X - H
        Us = unitary_from_params(np.concatenate([X, pert.reshape(-1, B)]), self.gens)
        base, moved = Us[:4], Us[4:].reshape(4, 2 * B, self.d, self.d)
        label_index = {lab: i for i, lab in enumerate(MeasurementConfig.LABELS)}
        diff = np.zeros((4, B))
        for c, a, b, transposed in self.spec.oriented_terms():
            ia, ib = label_index[a], label_index[b]
            UA = np.concatenate([moved[ia], np.broadcast_to(base[ia], moved[ia].shape)])
            UB = np.concatenate([np.broadcast_to(base[ib], moved[ib].shape), moved[ib]])
            P = joint_probabilities_from_unitaries(self.state, UA, UB)
            w = self.mu.T if transposed else self.mu
            vals = np.sum(w * P, axis=(-2, -1))
            diff[ia] += c * (vals[0:2 * B:2] - vals[1:2 * B:2])
            diff[ib] += c * (vals[2 * B::2] - vals[2 * B + 1::2])
        return (diff / ((X + H) - (X - H))).reshape(-1)


class QFTObjective:
    """Bell value over the four phases of the QFT measurement family."""

    def __init__(self, state: BipartiteState, spec: BellSpec = CGLMP):
        self.state = state
        self.spec = spec
        self.mu = correlation_weights(state.d)
        self.dim = 4

    def __call__(self, phases) -> float:
        return bell_value_from_unitaries(self.state, qft_party_unitaries(self.state.d, phases),
                                         self.spec, self.mu)


def gradient(objective: Callable, x, step: float = FD_STEP) -> np.ndarray:
    """Central finite differences with step ``step * max(1, |x_i|)`` per coordinate.

    Objectives exposing ``central_differences(x, h)`` supply the differences
    themselves (same stencil, cheaper evaluation).
    """
    x = np.asarray(x, dtype=float)
    h = step * np.maximum(1.0, np.abs(x))
    fd = getattr(objective, "central_differences", None)
    if fd is not None:
        g = fd(x, h)
    else:
        g = np.empty_like(x)
        for i in range(len(x)):
            xp = x.copy()
            xm = x.copy()
            xp[i] += h[i]
            xm[i] -= h[i]
            g[i] = (objective(xp) - objective(xm)) / (xp[i] - xm[i])
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("objective is not finite near the evaluation point")
    return g


def is_converged(g, x, tol: float = 1e-6) -> bool:
    """``max_i |g_i| * max(|x_i|, 1) <= tol``."""
    return bool(np.max(np.abs(g) * np.maximum(np.abs(x), 1.0)) <= tol)


def _evaluate(objective, x) -> float:
    f = float(objective(x))
    if not np.isfinite(f):
        raise FloatingPointError(f"objective returned {f}")
    return f


def _result(x, f, it, converged, method) -> OptimizationResult:
    return OptimizationResult(f, x, method, 1, [RestartRecord(f, it, converged)])


def steepest_descent(objective: Callable, x0, settings: OptimizerSettings = OptimizerSettings()) -> OptimizationResult:
    """Gradient ascent with Armijo backtracking (halving from a unit step)."""
    x = np.array(x0, dtype=float)
    f = _evaluate(objective, x)
    g = gradient(objective, x)
    for it in range(settings.max_steps):
        if is_converged(g, x, settings.tol):
            return _result(x, f, it, True, "sd")
        slope = g @ g
        step = 1.0
        for _ in range(settings.max_halvings + 1):
            xn = x + step * g
            fn = _evaluate(objective, xn)
            if fn >= f + ARMIJO * step * slope:
                break
            step *= 0.5
        else:
            log.debug("steepest descent line search failed at iteration %d", it)
            return _result(x, f, it, False, "sd")
        x, f = xn, fn
        g = gradient(objective, x)
    return _result(x, f, settings.max_steps, is_converged(g, x, settings.tol), "sd")


def _line_search(objective, x, f, direction, slope, step, max_reductions):
    """Armijo search along an ascent direction refined by quadratic interpolation.

    Returns ``(step, x_new, f_new)`` or ``None`` when no acceptable step exists.
    """
    xn = x + step * direction
    fn = _evaluate(objective, xn)
    for _ in range(max_reductions):
        curv = (fn - f - slope * step) / step ** 2
        if fn >= f + ARMIJO * step * slope:
            if curv < 0:
                t = min(-slope / (2 * curv), 10 * step)
                if abs(t - step) > 1e-3 * step:
                    xt = x + t * direction
                    ft = _evaluate(objective, xt)
                    if ft > fn:
                        return t, xt, ft
            return step, xn, fn
        step = float(np.clip(-slope / (2 * curv), 0.1 * step, 0.5 * step))
        xn = x + step * direction
        fn = _evaluate(objective, xn)
    return None


def conjugate_gradient(objective: Callable, x0, settings: OptimizerSettings = OptimizerSettings()) -> OptimizationResult:
    """Nonlinear conjugate gradient ascent with the Polak-Ribiere+ update.

    The direction is reset to the gradient every ``len(x0)`` iterations and
    whenever it stops being an ascent direction.
    """
    x = np.array(x0, dtype=float)
    n = len(x)
    f = _evaluate(objective, x)
    g = gradient(objective, x)
    direction = g.copy()
    since_reset = 0
    step, prev_slope = 1.0, None
    for it in range(settings.max_steps):
        if is_converged(g, x, settings.tol):
            return _result(x, f, it, True, "cg")
        slope = g @ direction
        if slope <= 0 or since_reset >= n:
            direction = g.copy()
            slope = g @ g
            since_reset = 0
        trial = 1.0 if prev_slope is None else float(np.clip(step * prev_slope / slope, 1e-8, 1e3))
        found = _line_search(objective, x, f, direction, slope, trial, settings.max_halvings)
        if found is None:
            if since_reset == 0:
                log.debug("conjugate gradient line search failed at iteration %d", it)
                return _result(x, f, it, False, "cg")
            # retry along the plain gradient before giving up
            direction = g.copy()
            since_reset = 0
            prev_slope = None
            continue
        step, x, f = found
        prev_slope = slope
        g_new = gradient(objective, x)
        beta = max(0.0, g_new @ (g_new - g) / (g @ g))
        direction = g_new + beta * direction
        g = g_new
        since_reset += 1
    return _result(x, f, settings.max_steps, is_converged(g, x, settings.tol), "cg")


def dynamic_relaxation(objective: Callable, x0, settings: RelaxationSettings = RelaxationSettings()) -> OptimizationResult:
    """Relax a damped particle in the potential ``-objective`` with classical RK4.

    Starts at rest; stops when the convergence rule holds at the end of a
    step, after ``max_steps`` steps, or when ``|p|`` exceeds 1e6.
    """
    m, gamma, dt = settings.mass, settings.friction, settings.dt
    p = np.array(x0, dtype=float)
    v = np.zeros_like(p)
    g = gradient(objective, p)

    def accel(grad, vel):
        return (grad - gamma * vel) / m

    for it in range(settings.max_steps):
        if is_converged(g, p, settings.tol):
            return _result(p, _evaluate(objective, p), it, True, "relax")
        k1p, k1v = v, accel(g, v)
        p2, v2 = p + 0.5 * dt * k1p, v + 0.5 * dt * k1v
        k2p, k2v = v2, accel(gradient(objective, p2), v2)
        p3, v3 = p + 0.5 * dt * k2p, v + 0.5 * dt * k2v
        k3p, k3v = v3, accel(gradient(objective, p3), v3)
        p4, v4 = p + dt * k3p, v + dt * k3v
        k4p, k4v = v4, accel(gradient(objective, p4), v4)
        p = p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
        v = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if np.linalg.norm(p) > DIVERGENCE_NORM:
            log.debug("dynamic relaxation diverged at step %d", it)
            return _result(p, _evaluate(objective, p), it + 1, False, "relax")
        g = gradient(objective, p)
    f = _evaluate(objective, p)
    return _result(p, f, settings.max_steps, is_converged(g, p, settings.tol), "relax")


METHODS = {
    "sd": steepest_descent,
    "cg": conjugate_gradient,
    "relax": dynamic_relaxation,
}


def _default_settings(method: str):
    return RelaxationSettings() if method == "relax" else OptimizerSettings()


def start_point(seed: int, index: int, dim: int) -> np.ndarray:
    """Uniform point in ``[-pi, pi]**dim`` from a Philox stream keyed by ``(seed, index)``."""
    key = np.array([seed, index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.uniform(-np.pi, np.pi, dim)


def _run_one(args):
    method, objective, x0, settings = args
    return METHODS[method](objective, x0, settings)


def multistart_maximize(state: BipartiteState, spec: BellSpec = CGLMP, method: str = "cg",
                        n_restarts: int = 10, seed: int = 0, mode: str = "reduced",
                        settings=None, workers: int = 1,
                        starts: Optional[Sequence[np.ndarray]] = None) -> OptimizationResult:
    """Best of ``n_restarts`` local maximizations from deterministic random starts.

    ``starts`` are extra explicit initial points, run before the random ones
    (useful for warm starts along a sweep).  Ties go to the earliest run.
    """
    if n_restarts < 1:
        raise ValueError("n_restarts must be at least 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {sorted(METHODS)}")
    objective = BellObjective(state, spec, mode)
    settings = settings if settings is not None else _default_settings(method)
    points = [np.asarray(s, dtype=float) for s in (starts or [])]
    points += [start_point(seed, i, objective.dim) for i in range(n_restarts)]
    jobs = [(method, objective, x0, settings) for x0 in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_one, jobs))
    else:
        runs = [_run_one(j) for j in jobs]

    best = 0
    for i, r in enumerate(runs):
        if r.value > runs[best].value:
            best = i
    trace = [r.trace[0] for r in runs]
    win = runs[best]
    return OptimizationResult(win.value, win.x, method, len(runs), trace, seed, objective.config(win.x))


def maximize_qft(state: BipartiteState, spec: BellSpec = CGLMP, grid: int = 8,
                 refine: int = 4, settings: OptimizerSettings = OptimizerSettings()) -> OptimizationResult:
    """Maximize over the QFT phase family: a phase grid, then CG from the best grid points.

    Each phase runs over ``grid`` points in ``[-d/2, d/2)``.
    """
    d = state.d
    objective = QFTObjective(state, spec)
    axis = -d / 2 + d * np.arange(grid) / grid
    mesh = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 4)
    batch = {
        "A1": _qft_batch(d, mesh[:, 0], False),
        "A2": _qft_batch(d, mesh[:, 1], False),
        "B1": _qft_batch(d, mesh[:, 2], True),
        "B2": _qft_batch(d, mesh[:, 3], True),
    }
    vals = sum(c * t for c, t in zip(spec.coefficients, term_values(state, batch, spec, objective.mu)))
    order = np.argsort(-vals, kind="stable")[:refine]
    runs = [conjugate_gradient(objective, mesh[i], settings) for i in order]
    best = 0
    for i, r in enumerate(runs):
        if r.value > runs[best].value:
            best = i
    win = runs[best]
    return OptimizationResult(win.value, win.x, "qft", len(runs), [r.trace[0] for r in runs])


def _qft_batch(d, phases, second_party):
    j = np.arange(d)
    if second_party:
        phases = -phases
    U = np.exp(2j * np.pi * j[None, :, None] * (j[None, None, :] + phases[:, None, None]) / d) / np.sqrt(d)
    return U.conj() if second_party else U
