"""Diagonal Pauli-Z polynomial form of the cost Hamiltonian.

With the qubit convention Z|0> = +|0>, Z|1> = -|1> and the spin map
s = 2x - 1, a spin is the negated Z eigenvalue (s_i = -<Z_i>). The
Ising energy -sum J s s - sum h s + d therefore becomes the operator

    H = - sum_{i<j} J_ij Z_i Z_j + sum_i h_i Z_i + d

(the quadratic sign survives, the linear sign flips). Expectations of
this diagonal operator reduce to a probability-weighted sum of basis
energies, which keeps density-matrix evaluation at O(2^m).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import IsingForm


@dataclass(frozen=True)
class PauliZPolynomial:
    num_qubits: int
    quadratic_terms: tuple[tuple[int, int, float], ...]
    linear_terms: tuple[tuple[int, float], ...]
    constant: float

    def __post_init__(self):
        seen_pairs = set()
        for i, j, _ in self.quadratic_terms:
            if not (0 <= i < j < self.num_qubits):
                raise ValueError(f"quadratic term ({i},{j}) needs 0 <= i < j < m")
            if (i, j) in seen_pairs:
                raise ValueError(f"duplicate quadratic term ({i},{j})")
            seen_pairs.add((i, j))
        seen = set()
        for i, _ in self.linear_terms:
            if not 0 <= i < self.num_qubits:
                raise ValueError(f"linear term index {i} out of range")
            if i in seen:
                raise ValueError(f"duplicate linear term {i}")
            seen.add(i)


def from_ising(ising: IsingForm) -> PauliZPolynomial:
    """Transfer couplings term by term; zero coefficients are dropped."""
    quad = []
    for i in range(ising.dim):
        for j in range(i + 1, ising.dim):
            if ising.j[i, j] != 0.0:
                quad.append((i, j, -float(ising.j[i, j])))
    lin = [(i, float(h)) for i, h in enumerate(ising.h) if h != 0.0]
    return PauliZPolynomial(
        num_qubits=ising.dim,
        quadratic_terms=tuple(quad),
        linear_terms=tuple(lin),
        constant=float(ising.d),
    )


def diagonal_energies(poly: PauliZPolynomial) -> np.ndarray:
    """Energy of every computational basis state.

    Index convention: qubit q is bit q of the basis index (qubit 0 =
    least significant bit).
    """
    dim = 1 << poly.num_qubits
    signs = np.empty((poly.num_qubits, dim))
    idx = np.arange(dim)
    for q in range(poly.num_qubits):
        signs[q] = 1.0 - 2.0 * ((idx >> q) & 1)
    energies = np.full(dim, poly.constant)
    for i, j, coeff in poly.quadratic_terms:
        energies += coeff * signs[i] * signs[j]
    for i, coeff in poly.linear_terms:
        energies += coeff * signs[i]
    return energies


def expectation(poly: PauliZPolynomial, state) -> float:
    """<H> against a statevector or density matrix.

    The state must be normalised to within 1e-6; H is diagonal so only
    basis probabilities matter.
    """
    from .simulator import QuantumState, basis_probabilities

    if not isinstance(state, QuantumState):
        raise TypeError(f"expected a QuantumState, got {type(state).__name__}")
    if state.num_qubits != poly.num_qubits:
        raise ValueError(
            f"state has {state.num_qubits} qubits, Hamiltonian has {poly.num_qubits}"
        )
    probs = basis_probabilities(state)
    total = probs.sum()
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"state is not normalised: probability mass {total}")
    return float(probs @ diagonal_energies(poly))
