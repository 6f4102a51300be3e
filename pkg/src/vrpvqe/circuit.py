"""The fixed alternating ansatz as an explicit gate list.

Layer structure, repeated p times on top of a Hadamard wall:

  * one CNOT / Phase / CNOT sandwich per nonzero coupling J_ij:
    CNOT(i->j), Phase(-2 J_ij gamma_l) on j, CNOT(i->j). The sandwich
    equals exp(i J gamma Z@Z) up to the dropped global phase
    exp(i J gamma).
  * one Phase(-2 h_i gamma_l) per nonzero field h_i (global phase
    dropped likewise).
  * the mixer U(2 beta_l, pi/2, -pi/2) on every qubit, which equals
    exp(i beta X) = [[cos b, i sin b], [i sin b, cos b]].

Parameters are shared within a layer and packed gamma-block first:
params[l] = gamma_l, params[p + l] = beta_l. Since the cost blocks are
diagonal they commute; the fixed ascending order is for determinism
only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .problem import DimensionGuardError, IsingForm

UNITARY_MAX_QUBITS = 8

HADAMARD = "h"
CNOT = "cnot"
PHASE = "phase"
U_GATE = "u"

_GATE_ARITY = {HADAMARD: 1, CNOT: 2, PHASE: 1, U_GATE: 1}
_GATE_PARAM_COUNT = {HADAMARD: 0, CNOT: 0, PHASE: 1, U_GATE: 3}


@dataclass(frozen=True)
class ParamRef:
    """Symbolic angle: scale * params[index]."""

    index: int
    scale: float


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    params: tuple[float | ParamRef, ...] = ()

    def __post_init__(self):
        if self.kind not in _GATE_ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != _GATE_ARITY[self.kind]:
            raise ValueError(
                f"{self.kind} gate takes {_GATE_ARITY[self.kind]} target(s), "
                f"got {self.targets}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"gate targets must be distinct, got {self.targets}")
        if len(self.params) != _GATE_PARAM_COUNT[self.kind]:
            raise ValueError(
                f"{self.kind} gate takes {_GATE_PARAM_COUNT[self.kind]} parameter(s)"
            )

    def is_bound(self) -> bool:
        return all(not isinstance(p, ParamRef) for p in self.params)


@dataclass(frozen=True)
class ParameterizedCircuit:
    """Gate list with symbolic (gamma, beta) slots.

    ``layer_spans[l]`` is the half-open gate-index range of ansatz
    layer l; the preparation Hadamards sit before the first span.
    """

    num_qubits: int
    layers: int
    gates: tuple[Gate, ...]
    parameter_count: int
    layer_spans: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for gate in self.gates:
            for p in gate.params:
                if isinstance(p, ParamRef) and not 0 <= p.index < self.parameter_count:
                    raise ValueError(
                        f"parameter reference {p.index} outside 0..{self.parameter_count - 1}"
                    )
            for q in gate.targets:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"gate target {q} outside 0..{self.num_qubits - 1}")


# A fully bound circuit is the same structure with plain-float params.
ConcreteCircuit = ParameterizedCircuit


def build_ansatz(ising: IsingForm, layers: int) -> ParameterizedCircuit:
    if layers < 1:
        raise ValueError(f"need at least one layer, got {layers}")
    m = ising.dim
    gates: list[Gate] = [Gate(HADAMARD, (q,)) for q in range(m)]
    spans = []
    for layer in range(layers):
        start = len(gates)
        gamma = layer
        beta = layers + layer
        for i in range(m):
            for j in range(i + 1, m):
                coupling = float(ising.j[i, j])
                if coupling == 0.0:
                    continue
                gates.append(Gate(CNOT, (i, j)))
                gates.append(Gate(PHASE, (j,), (ParamRef(gamma, -2.0 * coupling),)))
                gates.append(Gate(CNOT, (i, j)))
        for i in range(m):
            field = float(ising.h[i])
            if field != 0.0:
                gates.append(Gate(PHASE, (i,), (ParamRef(gamma, -2.0 * field),)))
        for q in range(m):
            gates.append(
                Gate(U_GATE, (q,), (ParamRef(beta, 2.0), np.pi / 2.0, -np.pi / 2.0))
            )
        spans.append((start, len(gates)))
    return ParameterizedCircuit(
        num_qubits=m,
        layers=layers,
        gates=tuple(gates),
        parameter_count=2 * layers,
        layer_spans=tuple(spans),
    )


def gate_matrix(gate: Gate) -> np.ndarray:
    """Concrete 2x2 (or 4x4 for CNOT) matrix of a bound gate.

    U(theta, phi, lam) = [[cos(t/2), -e^{i lam} sin(t/2)],
                          [e^{i phi} sin(t/2), e^{i(lam+phi)} cos(t/2)]]
    and Phase(lam) = diag(1, e^{i lam}). CNOT is ordered control-first:
    basis (control bit, target bit).
    """
    if not gate.is_bound():
        raise ValueError(f"gate {gate.kind} on {gate.targets} has unbound parameters")
    if gate.kind == HADAMARD:
        return np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    if gate.kind == CNOT:
        return np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
    if gate.kind == PHASE:
        (lam,) = gate.params
        return np.array([[1, 0], [0, np.exp(1j * lam)]], dtype=complex)
    if gate.kind == U_GATE:
        theta, phi, lam = gate.params
        cos, sin = np.cos(theta / 2.0), np.sin(theta / 2.0)
        return np.array(
            [
                [cos, -np.exp(1j * lam) * sin],
                [np.exp(1j * phi) * sin, np.exp(1j * (lam + phi)) * cos],
            ],
            dtype=complex,
        )
    raise AssertionError(f"unhandled gate kind {gate.kind}")


def bind_parameters(
    circuit: ParameterizedCircuit, params: Sequence[float] | np.ndarray
) -> ConcreteCircuit:
    values = np.asarray(params, dtype=float)
    if values.shape != (circuit.parameter_count,):
        raise ValueError(
            f"expected {circuit.parameter_count} parameters, got shape {values.shape}"
        )
    bound = []
    for gate in circuit.gates:
        if gate.is_bound():
            bound.append(gate)
            continue
        concrete = tuple(
            p.scale * values[p.index] if isinstance(p, ParamRef) else p
            for p in gate.params
        )
        bound.append(replace(gate, params=concrete))
    return replace(circuit, gates=tuple(bound))


def _embedded_gate(u: np.ndarray, targets: tuple[int, ...], num_qubits: int) -> np.ndarray:
    """Expand a gate matrix to the full 2^m space (qubit 0 = LSB)."""
    dim = 1 << num_qubits
    k = len(targets)
    target_mask = sum(1 << q for q in targets)
    full = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        col_sub = 0
        for t, q in enumerate(targets):
            col_sub |= ((col >> q) & 1) << (k - 1 - t)
        base = col & ~target_mask
        for row_sub in range(1 << k):
            amp = u[row_sub, col_sub]
            if amp == 0:
                continue
            row = base
            for t, q in enumerate(targets):
                row |= ((row_sub >> (k - 1 - t)) & 1) << q
            full[row, col] += amp
    return full


def circuit_unitary(circuit: ConcreteCircuit) -> np.ndarray:
    """Dense matrix product of the gate list, for use as a test oracle."""
    if circuit.num_qubits > UNITARY_MAX_QUBITS:
        raise DimensionGuardError(
            f"dense unitary limited to {UNITARY_MAX_QUBITS} qubits, got {circuit.num_qubits}"
        )
    dim = 1 << circuit.num_qubits
    unitary = np.eye(dim, dtype=complex)
    for gate in circuit.gates:
        unitary = _embedded_gate(gate_matrix(gate), gate.targets, circuit.num_qubits) @ unitary
    return unitary


def circuit_to_json(circuit: ParameterizedCircuit) -> list[dict]:
    """Debug dump of the gate list; not a stability contract."""
    dump = []
    for gate in circuit.gates:
        params = [
            {"param": p.index, "scale": p.scale} if isinstance(p, ParamRef) else p
            for p in gate.params
        ]
        dump.append({"kind": gate.kind, "targets": list(gate.targets), "params": params})
    return dump
