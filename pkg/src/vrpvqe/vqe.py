"""Gradient-free energy minimisation and the end-to-end VQE driver.

Nelder-Mead and SPSA are implemented here; COBYLA is delegated to
scipy behind the same budget/history/determinism contract. Every
objective evaluation is recorded, the reported best is the minimum
over records, and a run is a pure function of its seed inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.optimize

from .circuit import build_ansatz, bind_parameters
from .hamiltonian import diagonal_energies, from_ising
from .noise import NoiseChannel
from .problem import IsingForm
from .rng import derive_seed
from .simulator import (
    NoisePlacement,
    basis_probabilities,
    run_density,
    run_statevector,
    run_trajectories,
)

NELDER_MEAD = "nelder_mead"
SPSA = "spsa"
COBYLA = "cobyla"
OPTIMIZER_KINDS = (NELDER_MEAD, SPSA, COBYLA)

STATEVECTOR = "statevector"
DENSITY = "density"
TRAJECTORIES = "trajectories"
BACKENDS = (STATEVECTOR, DENSITY, TRAJECTORIES)


class ObjectiveError(ValueError):
    """The objective produced a non-finite value."""


class BackendCompatibilityError(ValueError):
    """Requested backend cannot represent the requested noise."""


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = COBYLA
    max_evaluations: int = 500
    tolerance: float = 1e-6
    seed: int = 0
    # SPSA gain schedules: a_k = a/(k+1+stab)^0.602, c_k = c/(k+1)^0.101
    spsa_a: float = 0.2
    spsa_c: float = 0.1
    spsa_stab: float = 10.0

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ValueError(
                f"unknown optimizer {self.kind!r}; expected one of {OPTIMIZER_KINDS}"
            )
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class VqeResult:
    best_params: np.ndarray
    best_energy: float
    history: tuple[tuple[int, float], ...]
    evaluations_used: int


class _BudgetExhausted(Exception):
    pass


class _Recorder:
    """Wrap the objective: count, validate, and remember every call."""

    def __init__(self, objective, budget: int):
        self._objective = objective
        self._budget = budget
        self.history: list[tuple[int, float]] = []
        self.best_value = math.inf
        self.best_params: np.ndarray | None = None

    def __call__(self, params) -> float:
        if len(self.history) >= self._budget:
            raise _BudgetExhausted
        x = np.asarray(params, dtype=float)
        value = float(self._objective(x))
        if not math.isfinite(value):
            raise ObjectiveError(
                f"objective returned {value} at parameters {x.tolist()}"
            )
        self.history.append((len(self.history), value))
        if value < self.best_value:
            self.best_value = value
            self.best_params = x.copy()
        return value

    @property
    def remaining(self) -> int:
        return self._budget - len(self.history)

    def result(self) -> VqeResult:
        if self.best_params is None:
            raise ValueError("objective was never evaluated")
        return VqeResult(
            best_params=self.best_params,
            best_energy=self.best_value,
            history=tuple(self.history),
            evaluations_used=len(self.history),
        )


def _nelder_mead(recorder: _Recorder, initial: np.ndarray, tolerance: float) -> None:
    """Standard simplex descent (reflect 1, expand 2, contract 0.5, shrink 0.5)."""
    dim = initial.size
    step = 0.25
    simplex = [initial.astype(float)]
    for i in range(dim):
        vertex = initial.astype(float).copy()
        vertex[i] += step
        simplex.append(vertex)
    try:
        values = [recorder(v) for v in simplex]
        while True:
            order = np.argsort(values, kind="stable")
            simplex = [simplex[i] for i in order]
            values = [values[i] for i in order]
            spread = max(np.abs(v - simplex[0]).max() for v in simplex[1:])
            if spread < tolerance:
                return
            centroid = np.mean(simplex[:-1], axis=0)
            reflected = centroid + (centroid - simplex[-1])
            f_reflected = recorder(reflected)
            if f_reflected < values[0]:
                expanded = centroid + 2.0 * (centroid - simplex[-1])
                f_expanded = recorder(expanded)
                if f_expanded < f_reflected:
                    simplex[-1], values[-1] = expanded, f_expanded
                else:
                    simplex[-1], values[-1] = reflected, f_reflected
            elif f_reflected < values[-2]:
                simplex[-1], values[-1] = reflected, f_reflected
            else:
                if f_reflected < values[-1]:
                    outside = centroid + 0.5 * (centroid - simplex[-1])
                    f_outside = recorder(outside)
                    if f_outside <= f_reflected:
                        simplex[-1], values[-1] = outside, f_outside
                        continue
                else:
                    inside = centroid - 0.5 * (centroid - simplex[-1])
                    f_inside = recorder(inside)
                    if f_inside < values[-1]:
                        simplex[-1], values[-1] = inside, f_inside
                        continue
                # contraction failed: shrink toward the best vertex
                for i in range(1, len(simplex)):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = recorder(simplex[i])
    except _BudgetExhausted:
        return


def _spsa(recorder: _Recorder, initial: np.ndarray, config: OptimizerConfig) -> None:
    """Simultaneous-perturbation descent with Rademacher probes."""
    rng = np.random.default_rng(derive_seed(config.seed, "spsa"))
    x = initial.astype(float).copy()
    try:
        recorder(x)
        k = 0
        while recorder.remaining >= 2:
            a_k = config.spsa_a / (k + 1 + config.spsa_stab) ** 0.602
            c_k = config.spsa_c / (k + 1) ** 0.101
            delta = rng.integers(0, 2, size=x.size) * 2.0 - 1.0
            f_plus = recorder(x + c_k * delta)
            f_minus = recorder(x - c_k * delta)
            gradient = (f_plus - f_minus) / (2.0 * c_k) * delta
            step = a_k * gradient
            x = x - step
            k += 1
            if np.abs(step).max() < config.tolerance:
                break
        if recorder.remaining >= 1:
            recorder(x)
    except _BudgetExhausted:
        return


def _cobyla(recorder: _Recorder, initial: np.ndarray, config: OptimizerConfig) -> None:
    try:
        scipy.optimize.minimize(
            recorder,
            initial.astype(float),
            method="COBYLA",
            options={
                "maxiter": config.max_evaluations,
                "rhobeg": 0.5,
                "tol": config.tolerance,
            },
        )
    except _BudgetExhausted:
        return


def minimize(
    objective,
    dim: int,
    config: OptimizerConfig,
    initial: np.ndarray,
) -> VqeResult:
    """Minimise a black-box function from a given start point.

    Deterministic in (config.seed, initial); the returned best is never
    worse than objective(initial), which is always evaluated first.
    """
    start = np.asarray(initial, dtype=float)
    if start.shape != (dim,):
        raise ValueError(f"initial point must have shape ({dim},), got {start.shape}")
    recorder = _Recorder(objective, config.max_evaluations)
    if config.kind == NELDER_MEAD:
        _nelder_mead(recorder, start, config.tolerance)
    elif config.kind == SPSA:
        _spsa(recorder, start, config)
    else:
        _cobyla(recorder, start, config)
    return recorder.result()


def make_objective(
    ising: IsingForm,
    layers: int,
    channel: NoiseChannel | None = None,
    placement: NoisePlacement = NoisePlacement.AFTER_EACH_LAYER,
    backend: str = STATEVECTOR,
    n_traj: int = 1000,
    traj_seed: int = 0,
    allow_large_density: bool = False,
):
    """Build the parameter -> energy map for an ansatz on this problem.

    Returns (objective, parameter_count). The trajectory backend reuses
    one branch-sampling seed across evaluations so the objective is a
    deterministic function.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == STATEVECTOR and channel is not None:
        raise BackendCompatibilityError(
            "statevector backend is noiseless; use density or trajectories"
        )
    ansatz = build_ansatz(ising, layers)
    poly = from_ising(ising)
    energies = diagonal_energies(poly)

    def objective(params: np.ndarray) -> float:
        bound = bind_parameters(ansatz, params)
        if backend == STATEVECTOR:
            state = run_statevector(bound)
        elif backend == DENSITY:
            state = run_density(
                bound, channel=channel, placement=placement, allow_large=allow_large_density
            )
        else:
            mean, _ = run_trajectories(
                bound, channel, placement, poly, n_traj=n_traj, seed=traj_seed
            )
            return mean
        return float(basis_probabilities(state) @ energies)

    return objective, ansatz.parameter_count


def vqe_run(
    ising: IsingForm,
    layers: int,
    channel: NoiseChannel | None = None,
    placement: NoisePlacement = NoisePlacement.AFTER_EACH_LAYER,
    backend: str = STATEVECTOR,
    n_traj: int = 1000,
    optimizer: OptimizerConfig | None = None,
    seed: int = 0,
    allow_large_density: bool = False,
) -> VqeResult:
    """One optimisation run from seeded uniform-[0, 2pi) initial angles."""
    config = optimizer if optimizer is not None else OptimizerConfig()
    objective, param_count = make_objective(
        ising,
        layers,
        channel=channel,
        placement=placement,
        backend=backend,
        n_traj=n_traj,
        traj_seed=derive_seed(seed, "trajectories"),
        allow_large_density=allow_large_density,
    )
    rng = np.random.default_rng(derive_seed(seed, "initial-parameters"))
    initial = rng.uniform(0.0, 2.0 * np.pi, param_count)
    return minimize(objective, param_count, config, initial)


def vqe_multistart(
    ising: IsingForm,
    layers: int,
    starts: int,
    base_seed: int = 0,
    **run_kwargs,
) -> tuple[VqeResult, list[VqeResult]]:
    """Independent restarts with derived seeds; returns (best, all)."""
    if starts < 1:
        raise ValueError(f"need at least one start, got {starts}")
    optimizer = run_kwargs.pop("optimizer", None) or OptimizerConfig()
    results = []
    for s in range(starts):
        start_seed = derive_seed(base_seed, "start", s)
        start_config = replace(optimizer, seed=derive_seed(base_seed, "start", s, "opt"))
        results.append(
            vqe_run(ising, layers, optimizer=start_config, seed=start_seed, **run_kwargs)
        )
    best = min(range(starts), key=lambda s: (results[s].best_energy, s))
    return results[best], results
