"""Seeded parameter sweeps over (layers x channel x kappa x repetition).

Each grid cell runs one VQE per repetition; repetition r of a cell
draws its initial-parameter seed from (base_seed, cell key, r), so the
sweep output is a pure function of the config, byte-identical under
any degree of parallelism. Results are deviations from the classical
minimum obtained by exhaustive enumeration.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .noise import CHANNEL_KINDS, channel_from_name
from .problem import (
    DimensionGuardError,
    IsingForm,
    VrpInstance,
    brute_force_minimum,
    build_qubo,
    instance_from_dict,
    load_instance,
    qubo_to_ising,
)
from .rng import derive_seed
from .simulator import NoisePlacement
from .vqe import (
    BACKENDS,
    BackendCompatibilityError,
    OptimizerConfig,
    STATEVECTOR,
    vqe_run,
)

DEFAULT_LAYERS = (1, 2, 3, 4)
DEFAULT_KAPPA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 11))


@dataclass(frozen=True)
class SweepConfig:
    instance: VrpInstance
    channels: tuple[str, ...]
    layers: tuple[int, ...] = DEFAULT_LAYERS
    kappa_grid: tuple[float, ...] = DEFAULT_KAPPA_GRID
    repetitions: int = 10
    optimizer: OptimizerConfig = OptimizerConfig()
    backend: str = "density"
    n_traj: int = 1000
    placement: NoisePlacement = NoisePlacement.AFTER_EACH_LAYER
    base_seed: int = 0
    allow_large_density: bool = False

    def __post_init__(self):
        if not self.channels:
            raise ValueError("channel list must not be empty")
        for name in self.channels:
            if name != "none" and name not in CHANNEL_KINDS:
                raise ValueError(f"unknown channel name {name!r}")
        if not self.layers:
            raise ValueError("layer list must not be empty")
        if not self.kappa_grid:
            raise ValueError("kappa grid must not be empty")
        for kappa in self.kappa_grid:
            if not 0.0 <= kappa <= 1.0:
                raise ValueError(f"kappa {kappa} outside [0, 1]")
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == STATEVECTOR and any(c != "none" for c in self.channels):
            raise ValueError("statevector backend only supports the 'none' channel")


@dataclass(frozen=True)
class SweepRecord:
    qubits: int
    layers: int
    channel: str
    kappa: float
    repetition: int
    energy: float
    classical_min: float
    deviation: float


@dataclass(frozen=True)
class SweepFailure:
    layers: int
    channel: str
    kappa: float
    repetition: int
    message: str


@dataclass(frozen=True)
class AggregateRow:
    qubits: int
    layers: int
    channel: str
    kappa: float
    mean_energy: float
    min_energy: float
    mean_deviation: float


def _cells(config: SweepConfig) -> list[tuple[int, str, float]]:
    """Cell order: layers-major, then channel, then kappa.

    The 'none' channel ignores kappa, so its grid collapses to one
    kappa=0 cell per layer count.
    """
    cells = []
    for layers in config.layers:
        for channel in config.channels:
            kappas = (0.0,) if channel == "none" else config.kappa_grid
            for kappa in kappas:
                cells.append((layers, channel, kappa))
    return cells


def cell_seed(base_seed: int, layers: int, channel: str, kappa: float, rep: int) -> int:
    return derive_seed(base_seed, layers, channel, f"{kappa:.10g}", rep)


def _run_cell(args) -> SweepRecord | SweepFailure:
    config, ising, classical_min, layers, channel_name, kappa, rep = args
    channel = channel_from_name(channel_name, kappa)
    seed = cell_seed(config.base_seed, layers, channel_name, kappa, rep)
    backend = config.backend
    if channel is None and backend != STATEVECTOR:
        # a noiseless cell is exact on any backend; statevector is cheapest
        backend = STATEVECTOR
    try:
        result = vqe_run(
            ising,
            layers,
            channel=channel,
            placement=config.placement,
            backend=backend,
            n_traj=config.n_traj,
            optimizer=replace(config.optimizer, seed=derive_seed(seed, "opt")),
            seed=seed,
            allow_large_density=config.allow_large_density,
        )
    except (DimensionGuardError, BackendCompatibilityError) as exc:
        return SweepFailure(layers, channel_name, kappa, rep, str(exc))
    return SweepRecord(
        qubits=ising.dim,
        layers=layers,
        channel=channel_name,
        kappa=kappa,
        repetition=rep,
        energy=result.best_energy,
        classical_min=classical_min,
        deviation=result.best_energy - classical_min,
    )


def run_sweep(
    config: SweepConfig, jobs: int = 1
) -> tuple[list[SweepRecord], list[SweepFailure]]:
    """Execute every (cell, repetition) job; failed cells are collected,
    not fatal. Output order is cell-major, repetition-minor."""
    ising = qubo_to_ising(build_qubo(config.instance))
    _, classical_min = brute_force_minimum(ising)
    tasks = [
        (config, ising, classical_min, layers, channel, kappa, rep)
        for (layers, channel, kappa) in _cells(config)
        for rep in range(config.repetitions)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, tasks, chunksize=1))
    else:
        outcomes = [_run_cell(task) for task in tasks]
    records = [o for o in outcomes if isinstance(o, SweepRecord)]
    failures = [o for o in outcomes if isinstance(o, SweepFailure)]
    return records, failures


def aggregate(records: list[SweepRecord]) -> list[AggregateRow]:
    """Mean and minimum energy plus mean deviation per (layers, channel,
    kappa), in first-seen (cell) order."""
    if not records:
        raise ValueError("cannot aggregate an empty record list")
    groups: dict[tuple[int, str, float], list[SweepRecord]] = {}
    for record in records:
        groups.setdefault((record.layers, record.channel, record.kappa), []).append(record)
    rows = []
    for (layers, channel, kappa), members in groups.items():
        energies = [r.energy for r in members]
        deviations = [r.deviation for r in members]
        rows.append(
            AggregateRow(
                qubits=members[0].qubits,
                layers=layers,
                channel=channel,
                kappa=kappa,
                mean_energy=sum(energies) / len(energies),
                min_energy=min(energies),
                mean_deviation=sum(deviations) / len(deviations),
            )
        )
    return rows


RAW_HEADER = "qubits,layers,channel,kappa,repetition,energy,classical_min,deviation"
AGGREGATE_HEADER = "qubits,layers,channel,kappa,mean_energy,min_energy,mean_deviation"


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def write_csv(rows: list[SweepRecord] | list[AggregateRow], path) -> None:
    """Fixed header, 6 significant digits, '.' decimal, LF newlines."""
    lines = []
    if not rows or isinstance(rows[0], SweepRecord):
        lines.append(RAW_HEADER)
        for r in rows:
            lines.append(
                f"{r.qubits},{r.layers},{r.channel},{_fmt(r.kappa)},{r.repetition},"
                f"{_fmt(r.energy)},{_fmt(r.classical_min)},{_fmt(r.deviation)}"
            )
    else:
        lines.append(AGGREGATE_HEADER)
        for r in rows:
            lines.append(
                f"{r.qubits},{r.layers},{r.channel},{_fmt(r.kappa)},"
                f"{_fmt(r.mean_energy)},{_fmt(r.min_energy)},{_fmt(r.mean_deviation)}"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_raw_csv(path) -> list[SweepRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                SweepRecord(
                    qubits=int(row["qubits"]),
                    layers=int(row["layers"]),
                    channel=row["channel"],
                    kappa=float(row["kappa"]),
                    repetition=int(row["repetition"]),
                    energy=float(row["energy"]),
                    classical_min=float(row["classical_min"]),
                    deviation=float(row["deviation"]),
                )
            )
    return records


# ---------------------------------------------------------------------------
# Config-file parsing (shared with the CLI)


def parse_optimizer_config(data: dict) -> OptimizerConfig:
    if not isinstance(data, dict):
        raise ValueError("optimizer config must be a JSON object")
    known = {"kind", "max_evaluations", "tolerance", "seed", "spsa_a", "spsa_c", "spsa_stab"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown optimizer fields: {sorted(unknown)}")
    try:
        return OptimizerConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid optimizer config: {exc}") from exc


def _parse_instance_field(data: dict, base_dir) -> VrpInstance:
    if "instance" not in data:
        raise ValueError("config missing required field 'instance'")
    spec = data["instance"]
    if isinstance(spec, dict) and set(spec) == {"path"}:
        path = Path(spec["path"])
        if not path.is_absolute() and base_dir is not None:
            path = Path(base_dir) / path
        return load_instance(path)
    return instance_from_dict(spec)


def parse_sweep_config(data: dict, base_dir=None) -> SweepConfig:
    if not isinstance(data, dict):
        raise ValueError("sweep config must be a JSON object")
    instance = _parse_instance_field(data, base_dir)
    if "channels" not in data:
        raise ValueError("sweep config missing required field 'channels'")
    kwargs = {}
    if "layers" in data:
        kwargs["layers"] = tuple(int(x) for x in data["layers"])
    if "kappa_grid" in data:
        kwargs["kappa_grid"] = tuple(float(x) for x in data["kappa_grid"])
    if "repetitions" in data:
        kwargs["repetitions"] = int(data["repetitions"])
    if "optimizer" in data:
        kwargs["optimizer"] = parse_optimizer_config(data["optimizer"])
    if "backend" in data:
        kwargs["backend"] = data["backend"]
    if "n_traj" in data:
        kwargs["n_traj"] = int(data["n_traj"])
    if "placement" in data:
        kwargs["placement"] = NoisePlacement.parse(data["placement"])
    if "base_seed" in data:
        kwargs["base_seed"] = int(data["base_seed"])
    if "allow_large_density" in data:
        kwargs["allow_large_density"] = bool(data["allow_large_density"])
    known = {
        "instance", "channels", "layers", "kappa_grid", "repetitions",
        "optimizer", "backend", "n_traj", "placement", "base_seed",
        "allow_large_density",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown sweep config fields: {sorted(unknown)}")
    try:
        return SweepConfig(
            instance=instance, channels=tuple(data["channels"]), **kwargs
        )
    except ValueError as exc:
        raise ValueError(f"invalid sweep config: {exc}") from exc
