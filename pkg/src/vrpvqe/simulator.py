"""Gate-level execution backends.

Three ways to run a bound circuit:

  * exact statevector (noiseless), up to 14 qubits;
  * full density matrix with a single-qubit channel inserted after
    each ansatz layer, after each gate, or once at the end — the
    channel hits every qubit in ascending order at each insertion
    point; up to 10 qubits (12 behind ``allow_large``);
  * Monte-Carlo trajectories: each channel application samples one
    Kraus branch with its Born probability and renormalises, so the
    ensemble mean reproduces the density-matrix expectation without
    ever materialising rho.

Basis convention: qubit q is bit q of the basis index (qubit 0 = least
significant bit).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .circuit import ConcreteCircuit, gate_matrix
from .hamiltonian import PauliZPolynomial, diagonal_energies
from .noise import NoiseChannel, kraus_operators
from .problem import DimensionGuardError
from .rng import derive_seed

STATEVECTOR_MAX_QUBITS = 14
DENSITY_MAX_QUBITS = 10
DENSITY_MAX_QUBITS_LARGE = 12


class NoisePlacement(enum.Enum):
    AFTER_EACH_LAYER = "after_each_layer"
    AFTER_EACH_GATE = "after_each_gate"
    FINAL = "final"

    @classmethod
    def parse(cls, name: str) -> "NoisePlacement":
        for member in cls:
            if member.value == name:
                return member
        valid = ", ".join(m.value for m in cls)
        raise ValueError(f"unknown noise placement {name!r}; expected one of: {valid}")


@dataclass(frozen=True)
class QuantumState:
    """Either a statevector or a density matrix over num_qubits qubits."""

    num_qubits: int
    amplitudes: np.ndarray | None = None
    rho: np.ndarray | None = None

    def __post_init__(self):
        dim = 1 << self.num_qubits
        if (self.amplitudes is None) == (self.rho is None):
            raise ValueError("state needs exactly one of amplitudes or rho")
        if self.amplitudes is not None:
            vec = np.array(self.amplitudes, dtype=complex)
            if vec.shape != (dim,):
                raise ValueError(f"amplitudes must have length {dim}, got {vec.shape}")
            norm = float(np.linalg.norm(vec))
            if abs(norm - 1.0) > 1e-10:
                raise ValueError(f"statevector norm {norm} deviates from 1 beyond 1e-10")
            vec.setflags(write=False)
            object.__setattr__(self, "amplitudes", vec)
        else:
            mat = np.array(self.rho, dtype=complex)
            if mat.shape != (dim, dim):
                raise ValueError(f"rho must be {dim}x{dim}, got {mat.shape}")
            trace = complex(np.trace(mat))
            if abs(trace - 1.0) > 1e-10:
                raise ValueError(f"density trace {trace} deviates from 1 beyond 1e-10")
            if float(np.abs(mat - mat.conj().T).max()) > 1e-10:
                raise ValueError("density matrix is not Hermitian to 1e-10")
            mat.setflags(write=False)
            object.__setattr__(self, "rho", mat)

    @property
    def is_density(self) -> bool:
        return self.rho is not None

    def to_density(self) -> "QuantumState":
        if self.is_density:
            return self
        return QuantumState(
            num_qubits=self.num_qubits,
            rho=np.outer(self.amplitudes, self.amplitudes.conj()),
        )

    def validate_spectrum(self, tol: float = 1e-8) -> None:
        """Positivity check (expensive; meant for the validation suite)."""
        if self.is_density:
            eigenvalues = np.linalg.eigvalsh(self.rho)
            if float(eigenvalues.min()) < -tol:
                raise ValueError(f"density matrix has eigenvalue {eigenvalues.min()}")


def basis_probabilities(state: QuantumState) -> np.ndarray:
    """|amplitude|^2 or diag(rho); tiny negatives (>-1e-10) clamp to 0."""
    if state.is_density:
        diag = np.diagonal(state.rho)
        probs = diag.real.copy()
    else:
        probs = np.abs(state.amplitudes) ** 2
    low = float(probs.min())
    if low < -1e-10:
        raise ValueError(f"basis probability {low} below -1e-10; simulator state invalid")
    np.clip(probs, 0.0, None, out=probs)
    return probs


# ---------------------------------------------------------------------------
# Gate and channel application on raw arrays


def _apply_single(psi_flat: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    """2x2 matrix on bit q of a flat array (works for any trailing block)."""
    view = psi_flat.reshape(-1, 2, 1 << q)
    return np.matmul(u, view).reshape(psi_flat.shape)


def _apply_tensor(arr: np.ndarray, u: np.ndarray, axes: list[int]) -> np.ndarray:
    """Contract a (2^k x 2^k) operator into tensor axes (MSB-first order)."""
    k = len(axes)
    op = u.reshape([2] * (2 * k))
    out = np.tensordot(op, arr, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def _sv_apply_gate(psi: np.ndarray, u: np.ndarray, targets: tuple[int, ...], m: int) -> np.ndarray:
    if len(targets) == 1:
        return _apply_single(psi, u, targets[0])
    tensor = psi.reshape([2] * m)
    axes = [m - 1 - q for q in targets]
    return _apply_tensor(tensor, u, axes).reshape(-1)


def _rho_apply_gate(rho: np.ndarray, u: np.ndarray, targets: tuple[int, ...], m: int) -> np.ndarray:
    dim = 1 << m
    if len(targets) == 1:
        q = targets[0]
        flat = rho.reshape(-1)
        # rows: bit q of the row index sits q + m positions from the top
        rows_done = _apply_single(flat, u, q + m).reshape(dim, dim)
        cols_done = _apply_single(rows_done.reshape(-1), u.conj(), q)
        return cols_done.reshape(dim, dim)
    tensor = rho.reshape([2] * (2 * m))
    row_axes = [m - 1 - q for q in targets]
    col_axes = [2 * m - 1 - q for q in targets]
    tensor = _apply_tensor(tensor, u, row_axes)
    tensor = _apply_tensor(tensor, u.conj(), col_axes)
    return tensor.reshape(dim, dim)


def _channel_superoperator(channel: NoiseChannel) -> np.ndarray:
    """4x4 map acting jointly on (row bit, column bit) of one qubit."""
    return sum(np.kron(e, e.conj()) for e in kraus_operators(channel))


def _rho_apply_channel(rho: np.ndarray, superop: np.ndarray, q: int, m: int) -> np.ndarray:
    tensor = rho.reshape([2] * (2 * m))
    out = _apply_tensor(tensor, superop, [m - 1 - q, 2 * m - 1 - q])
    return out.reshape(1 << m, 1 << m)


def _noise_points(circuit: ConcreteCircuit, placement: NoisePlacement) -> set[int]:
    """Gate indices after which a noise round fires (1-based prefix count)."""
    total = len(circuit.gates)
    if placement is NoisePlacement.AFTER_EACH_GATE:
        return set(range(1, total + 1))
    if placement is NoisePlacement.FINAL:
        return {total} if total else set()
    if circuit.layer_spans:
        return {end for _, end in circuit.layer_spans}
    return {total} if total else set()


def _require_bound(circuit: ConcreteCircuit) -> None:
    for gate in circuit.gates:
        if not gate.is_bound():
            raise ValueError("circuit has unbound parameters; bind_parameters first")


# ---------------------------------------------------------------------------
# Backends


def run_statevector(circuit: ConcreteCircuit) -> QuantumState:
    """Apply the gate list to |0...0>."""
    m = circuit.num_qubits
    if m > STATEVECTOR_MAX_QUBITS:
        raise DimensionGuardError(
            f"statevector backend limited to {STATEVECTOR_MAX_QUBITS} qubits, got {m}"
        )
    _require_bound(circuit)
    psi = np.zeros(1 << m, dtype=complex)
    psi[0] = 1.0
    for gate in circuit.gates:
        psi = _sv_apply_gate(psi, gate_matrix(gate), gate.targets, m)
    return QuantumState(num_qubits=m, amplitudes=psi)


def apply_channel(state: QuantumState, channel: NoiseChannel, qubit: int) -> QuantumState:
    """One local Kraus map on a density matrix: rho -> sum E rho E^dag."""
    if not state.is_density:
        raise ValueError("apply_channel needs a density matrix; use to_density() first")
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    superop = _channel_superoperator(channel)
    rho = _rho_apply_channel(np.array(state.rho), superop, qubit, state.num_qubits)
    return QuantumState(num_qubits=state.num_qubits, rho=rho)


def run_density(
    circuit: ConcreteCircuit,
    channel: NoiseChannel | None = None,
    placement: NoisePlacement = NoisePlacement.AFTER_EACH_LAYER,
    allow_large: bool = False,
) -> QuantumState:
    """Evolve rho = U rho U^dag with noise rounds per the placement."""
    m = circuit.num_qubits
    limit = DENSITY_MAX_QUBITS_LARGE if allow_large else DENSITY_MAX_QUBITS
    if m > limit:
        hint = "" if allow_large else " (pass allow_large for up to 12)"
        raise DimensionGuardError(
            f"density backend limited to {limit} qubits, got {m}{hint}"
        )
    _require_bound(circuit)
    dim = 1 << m
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0
    superop = _channel_superoperator(channel) if channel is not None else None
    points = _noise_points(circuit, placement) if superop is not None else set()
    for index, gate in enumerate(circuit.gates, start=1):
        rho = _rho_apply_gate(rho, gate_matrix(gate), gate.targets, m)
        if index in points:
            for q in range(m):
                rho = _rho_apply_channel(rho, superop, q, m)
    # guard against accumulated drift before handing the state out
    rho /= np.trace(rho).real
    return QuantumState(num_qubits=m, rho=rho)


def _sample_branch(
    psi: np.ndarray, kraus: list[np.ndarray], q: int, rng: np.random.Generator
) -> np.ndarray:
    """Pick one Kraus branch by Born probability and renormalise."""
    view = psi.reshape(-1, 2, 1 << q)
    reduced = np.einsum("hal,hbl->ab", view, view.conj())
    probs = np.array([float(np.trace(e @ reduced @ e.conj().T).real) for e in kraus])
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    draw = rng.random() * total
    cumulative = 0.0
    chosen = len(kraus) - 1
    for b, p in enumerate(probs):
        cumulative += p
        if draw < cumulative:
            chosen = b
            break
    branch = _apply_single(psi, kraus[chosen], q)
    norm = np.linalg.norm(branch)
    if norm == 0.0:
        raise ValueError("sampled a zero-probability Kraus branch")
    return branch / norm


def run_trajectories(
    circuit: ConcreteCircuit,
    channel: NoiseChannel | None,
    placement: NoisePlacement,
    hamiltonian: PauliZPolynomial,
    n_traj: int,
    seed: int,
) -> tuple[float, float]:
    """Mean and standard error of <H> over stochastic pure-state runs.

    Trajectory t draws from an independent stream keyed by (seed, t),
    so results are identical under any evaluation order.
    """
    if n_traj < 1:
        raise ValueError(f"need at least one trajectory, got {n_traj}")
    m = circuit.num_qubits
    if m != hamiltonian.num_qubits:
        raise ValueError(
            f"circuit has {m} qubits, Hamiltonian has {hamiltonian.num_qubits}"
        )
    if m > STATEVECTOR_MAX_QUBITS:
        raise DimensionGuardError(
            f"trajectory backend limited to {STATEVECTOR_MAX_QUBITS} qubits, got {m}"
        )
    _require_bound(circuit)
    energies = diagonal_energies(hamiltonian)
    if channel is None:
        state = run_statevector(circuit)
        value = float(basis_probabilities(state) @ energies)
        return value, 0.0
    kraus = kraus_operators(channel)
    points = _noise_points(circuit, placement)
    matrices = [gate_matrix(gate) for gate in circuit.gates]
    values = np.empty(n_traj)
    for t in range(n_traj):
        rng = np.random.default_rng(derive_seed(seed, "trajectory", t))
        psi = np.zeros(1 << m, dtype=complex)
        psi[0] = 1.0
        for index, gate in enumerate(circuit.gates, start=1):
            psi = _sv_apply_gate(psi, matrices[index - 1], gate.targets, m)
            if index in points:
                for q in range(m):
                    psi = _sample_branch(psi, kraus, q, rng)
        probs = np.abs(psi) ** 2
        values[t] = float(probs @ energies)
    mean = float(values.mean())
    std_error = float(values.std(ddof=1) / np.sqrt(n_traj)) if n_traj > 1 else 0.0
    return mean, std_error
