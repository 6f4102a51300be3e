"""Command-line harness: exact solve, single VQE run, sweep, self-check.

Exit codes: 0 success, 1 validation failure, 2 config or input error,
3 problem-size guard, 4 backend/channel incompatibility. The
VRPVQE_SEED environment variable overrides the seed in run configs and
the base_seed in sweep configs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
import scipy.linalg

from . import experiment, problem
from .circuit import CNOT, Gate, PHASE, bind_parameters, build_ansatz, circuit_unitary, gate_matrix
from .hamiltonian import diagonal_energies, expectation, from_ising
from .noise import CHANNEL_KINDS, ChannelCompletenessError, NoiseChannel, kraus_operators, validate_channel
from .problem import DimensionGuardError
from .simulator import NoisePlacement, run_density, run_trajectories
from .vqe import BackendCompatibilityError, OptimizerConfig, vqe_multistart

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_INCOMPATIBLE = 4


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ValueError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc


def _write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _seed_override() -> int | None:
    raw = os.environ.get("VRPVQE_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError as exc:
        raise ValueError(f"VRPVQE_SEED must be an integer, got {raw!r}") from exc


def cmd_solve(config_path, out_path) -> int:
    """Exact classical minimum by enumeration, plus the decoded routes."""
    try:
        instance = problem.instance_from_dict(_load_json(config_path))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        ising = problem.qubo_to_ising(problem.build_qubo(instance))
        assignment, classical_min = problem.brute_force_minimum(ising)
    except DimensionGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    decoded = problem.decode_routes(instance, assignment)
    if isinstance(decoded, problem.RouteSet):
        routes = [list(route) for route in decoded.routes]
        cost = decoded.total_cost
    else:
        routes = "infeasible"
        cost = None
    payload = {
        "classical_min": classical_min,
        "assignment": problem.assignment_to_string(assignment),
        "routes": routes,
        "vrp_cost": cost,
    }
    if isinstance(decoded, problem.Infeasibility):
        payload["infeasibility"] = decoded.reason
    _write_json(payload, out_path)
    return EXIT_OK


def _parse_run_config(data: dict, base_dir) -> dict:
    if not isinstance(data, dict):
        raise ValueError("run config must be a JSON object")
    known = {
        "instance", "layers", "channel", "kappa", "placement", "backend",
        "n_traj", "optimizer", "seed", "starts", "allow_large_density",
    }
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown run config fields: {sorted(unknown)}")
    instance = experiment._parse_instance_field(data, base_dir)
    channel_name = data.get("channel", "none")
    if channel_name != "none" and channel_name not in CHANNEL_KINDS:
        raise ValueError(f"unknown channel name {channel_name!r}")
    kappa = float(data.get("kappa", 0.0))
    if channel_name != "none" and not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa {kappa} outside [0, 1]")
    channel = None if channel_name == "none" else NoiseChannel(channel_name, kappa)
    optimizer = (
        experiment.parse_optimizer_config(data["optimizer"])
        if "optimizer" in data
        else OptimizerConfig()
    )
    layers = int(data.get("layers", 1))
    if layers < 1:
        raise ValueError(f"layers must be at least 1, got {layers}")
    starts = int(data.get("starts", 1))
    if starts < 1:
        raise ValueError(f"starts must be at least 1, got {starts}")
    return {
        "instance": instance,
        "layers": layers,
        "channel": channel,
        "placement": NoisePlacement.parse(data.get("placement", "after_each_layer")),
        "backend": data.get("backend", "statevector"),
        "n_traj": int(data.get("n_traj", 1000)),
        "optimizer": optimizer,
        "seed": int(data.get("seed", 0)),
        "starts": starts,
        "allow_large_density": bool(data.get("allow_large_density", False)),
    }


def cmd_vqe(config_path, out_path, backend_override=None, allow_large=False) -> int:
    try:
        run = _parse_run_config(_load_json(config_path), Path(config_path).parent)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if backend_override:
        run["backend"] = backend_override
    if allow_large:
        run["allow_large_density"] = True
    override = _seed_override()
    if override is not None:
        run["seed"] = override
    ising = problem.qubo_to_ising(problem.build_qubo(run["instance"]))
    try:
        best, all_results = vqe_multistart(
            ising,
            run["layers"],
            starts=run["starts"],
            base_seed=run["seed"],
            channel=run["channel"],
            placement=run["placement"],
            backend=run["backend"],
            n_traj=run["n_traj"],
            optimizer=run["optimizer"],
            allow_large_density=run["allow_large_density"],
        )
    except BackendCompatibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except DimensionGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    payload = {
        "best_energy": best.best_energy,
        "best_params": best.best_params.tolist(),
        "evaluations_used": best.evaluations_used,
        "history": [[i, e] for i, e in best.history],
        "starts": [
            {
                "best_energy": r.best_energy,
                "best_params": r.best_params.tolist(),
                "evaluations_used": r.evaluations_used,
            }
            for r in all_results
        ],
    }
    _write_json(payload, out_path)
    return EXIT_OK


def cmd_sweep(config_path, out_dir, jobs=1, backend_override=None, allow_large=False) -> int:
    try:
        data = _load_json(config_path)
        if backend_override:
            data["backend"] = backend_override
        if allow_large:
            data["allow_large_density"] = True
        override = _seed_override()
        if override is not None:
            data["base_seed"] = override
        config = experiment.parse_sweep_config(data, Path(config_path).parent)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records, failures = experiment.run_sweep(config, jobs=jobs)
    experiment.write_csv(records, out / "raw.csv")
    if records:
        experiment.write_csv(experiment.aggregate(records), out / "aggregate.csv")
    else:
        experiment.write_csv([], out / "aggregate.csv")
    if failures:
        lines = [
            f"layers={f.layers} channel={f.channel} kappa={f.kappa:.6g} "
            f"repetition={f.repetition}: {f.message}"
            for f in failures
        ]
        (out / "failures.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"{len(failures)} cell(s) failed; see {out / 'failures.log'}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Self-validation


def _check_channel_completeness() -> str | None:
    kappas = [0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.75, 1.0]
    for kind in CHANNEL_KINDS:
        for kappa in kappas:
            try:
                validate_channel(kraus_operators(NoiseChannel(kind, kappa)))
            except ChannelCompletenessError as exc:
                return f"{kind} at kappa={kappa}: {exc}"
    return None


def _check_qubo_ising_equivalence() -> str | None:
    for n in (3, 4):
        instance = problem.reference_instance(n)
        qubo = problem.build_qubo(instance)
        ising = problem.qubo_to_ising(qubo)
        bits = problem.all_assignments(instance.num_variables)
        energies = problem.ising_energies(ising, bits)
        for row, ising_energy in zip(bits, energies):
            qubo_energy = problem.evaluate_qubo(qubo, row)
            scale = max(1.0, abs(qubo_energy))
            if abs(qubo_energy - ising_energy) > 1e-9 * scale:
                return (
                    f"n={n}, assignment {problem.assignment_to_string(row)}: "
                    f"QUBO {qubo_energy} vs Ising {ising_energy}"
                )
    return None


def _check_feasible_energy_is_route_cost() -> str | None:
    instance = problem.reference_instance(3)
    qubo = problem.build_qubo(instance)
    found_feasible = False
    for row in problem.all_assignments(instance.num_variables):
        decoded = problem.decode_routes(instance, row)
        if isinstance(decoded, problem.RouteSet):
            found_feasible = True
            energy = problem.evaluate_qubo(qubo, row)
            if abs(energy - decoded.total_cost) > 1e-9:
                return f"feasible energy {energy} != route cost {decoded.total_cost}"
    if not found_feasible:
        return "no feasible assignment exists"
    return None


def _check_brute_force_decodes_feasible() -> str | None:
    instance = problem.reference_instance(3)
    ising = problem.qubo_to_ising(problem.build_qubo(instance))
    assignment, _ = problem.brute_force_minimum(ising)
    decoded = problem.decode_routes(instance, assignment)
    if isinstance(decoded, problem.Infeasibility):
        return f"brute-force minimiser infeasible: {decoded.reason}"
    return None


def _check_ansatz_unitarity() -> str | None:
    instance = problem.reference_instance(3)
    ising = problem.qubo_to_ising(problem.build_qubo(instance))
    ansatz = build_ansatz(ising, 2)
    rng = np.random.default_rng(7)
    for _ in range(3):
        params = rng.uniform(0, 2 * np.pi, ansatz.parameter_count)
        unitary = circuit_unitary(bind_parameters(ansatz, params))
        residual = np.abs(unitary.conj().T @ unitary - np.eye(unitary.shape[0])).max()
        if residual > 1e-10:
            return f"unitarity residual {residual:.3e}"
    return None


def _check_zz_block_identity() -> str | None:
    z = np.diag([1.0, -1.0])
    zz = np.kron(z, z)
    rng = np.random.default_rng(11)
    for _ in range(20):
        coupling = rng.uniform(-3, 3)
        gamma = rng.uniform(0, 2 * np.pi)
        cnot = gate_matrix(Gate(CNOT, (0, 1)))
        phase = gate_matrix(Gate(PHASE, (1,), (-2.0 * coupling * gamma,)))
        block = cnot @ np.kron(np.eye(2), phase) @ cnot
        target = scipy.linalg.expm(1j * coupling * gamma * zz)
        phase_factor = target[0, 0] / block[0, 0]
        if np.abs(block * phase_factor - target).max() > 1e-10:
            return f"ZZ block mismatch at J={coupling}, gamma={gamma}"
    return None


def _check_trajectory_density_agreement() -> str | None:
    ising = problem.IsingForm(
        dim=3,
        j=np.triu(np.array([[0, 0.8, -0.4], [0, 0, 0.6], [0, 0, 0]]), k=1),
        h=np.array([0.3, -0.7, 0.5]),
        d=0.2,
    )
    poly = from_ising(ising)
    circuit = bind_parameters(build_ansatz(ising, 1), np.array([0.7, 0.4]))
    channel = NoiseChannel("depolarizing", 0.3)
    exact = expectation(
        poly, run_density(circuit, channel, NoisePlacement.AFTER_EACH_LAYER)
    )
    mean, stderr = run_trajectories(
        circuit, channel, NoisePlacement.AFTER_EACH_LAYER, poly, n_traj=3000, seed=17
    )
    if abs(mean - exact) > 4 * max(stderr, 1e-12):
        return f"trajectory mean {mean} vs density {exact} (stderr {stderr})"
    return None


def _check_full_mixing_limit() -> str | None:
    instance = problem.reference_instance(3)
    ising = problem.qubo_to_ising(problem.build_qubo(instance))
    poly = from_ising(ising)
    circuit = bind_parameters(build_ansatz(ising, 1), np.array([0.9, 1.3]))
    state = run_density(circuit, NoiseChannel("depolarizing", 0.75), NoisePlacement.FINAL)
    value = expectation(poly, state)
    if abs(value - ising.d) > 1e-9 * max(1.0, abs(ising.d)):
        return f"fully mixed expectation {value} != offset {ising.d}"
    return None


_VALIDATION_CHECKS = [
    ("kraus completeness", _check_channel_completeness),
    ("qubo/ising equivalence", _check_qubo_ising_equivalence),
    ("feasible energy equals route cost", _check_feasible_energy_is_route_cost),
    ("brute-force minimum decodes", _check_brute_force_decodes_feasible),
    ("ansatz unitarity", _check_ansatz_unitarity),
    ("zz block identity", _check_zz_block_identity),
    ("trajectory/density agreement", _check_trajectory_density_agreement),
    ("full mixing limit", _check_full_mixing_limit),
]


def cmd_validate(config_path=None) -> int:
    if config_path is not None:
        try:
            data = _load_json(config_path)
            base = Path(config_path).parent
            if "channels" in data or "kappa_grid" in data:
                experiment.parse_sweep_config(data, base)
            else:
                _parse_run_config(data, base)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"PASS config {config_path}")
    failed = False
    for name, check in _VALIDATION_CHECKS:
        detail = check()
        if detail is None:
            print(f"PASS {name}")
        else:
            print(f"FAIL {name}: {detail}")
            failed = True
    return EXIT_VALIDATION if failed else EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vrpvqe",
        description="Vehicle-routing Ising encoding with a noise-aware VQE harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="exact minimum of an instance file")
    p_solve.add_argument("--config", required=True, help="instance JSON path")
    p_solve.add_argument("--out", required=True, help="output JSON path")

    p_vqe = sub.add_parser("vqe", help="single (multi-start) VQE run")
    p_vqe.add_argument("--config", required=True, help="run config JSON path")
    p_vqe.add_argument("--out", required=True, help="output JSON path")
    p_vqe.add_argument("--backend", choices=["statevector", "density", "trajectories"])
    p_vqe.add_argument("--allow-large-density", action="store_true")

    p_sweep = sub.add_parser("sweep", help="grid sweep with CSV output")
    p_sweep.add_argument("--config", required=True, help="sweep config JSON path")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_sweep.add_argument("--backend", choices=["statevector", "density", "trajectories"])
    p_sweep.add_argument("--allow-large-density", action="store_true")

    p_validate = sub.add_parser("validate", help="run the built-in invariant suite")
    p_validate.add_argument("--config", help="optionally lint a config file first")

    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(args.config, args.out)
        if args.command == "vqe":
            return cmd_vqe(
                args.config, args.out,
                backend_override=args.backend,
                allow_large=args.allow_large_density,
            )
        if args.command == "sweep":
            return cmd_sweep(
                args.config, args.out,
                jobs=args.jobs,
                backend_override=args.backend,
                allow_large=args.allow_large_density,
            )
        return cmd_validate(args.config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
