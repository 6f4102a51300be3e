"""Vehicle-routing instances and their quadratic encodings.

A VRP(n, k) instance over nodes 0..n-1 (node 0 is the depot) uses one
binary decision variable per directed edge, m = n(n-1) in total. The
variable order is row-major over ordered pairs with the diagonal
skipped: x(0,1), x(0,2), ..., x(1,0), x(1,2), ..., x(n-1,n-2).

The degree constraints (each customer left and entered exactly once,
the depot left and entered exactly k times) are folded into a penalty
QUBO ``x^T Q x + g^T x + c`` with weight A, which converts exactly to
an Ising form ``-sum_{i<j} J_ij s_i s_j - sum_i h_i s_i + d`` under
``s = 2x - 1``. Sub-tour elimination is intentionally not encoded;
``decode_routes`` reports sub-tours instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .rng import SplitMix64

BRUTE_FORCE_MAX_DIM = 24


class DimensionGuardError(RuntimeError):
    """An operation was asked to exceed its problem-size guard."""


def num_variables(n: int) -> int:
    return n * (n - 1)


def pair_index(n: int, i: int, j: int) -> int:
    """Position of x(i, j) in the decision vector."""
    if i == j:
        raise ValueError(f"no decision variable for self-loop ({i},{i})")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"node pair ({i},{j}) out of range for n={n}")
    return i * (n - 1) + (j if j < i else j - 1)


def index_pair(n: int, idx: int) -> tuple[int, int]:
    """Inverse of :func:`pair_index`."""
    if not 0 <= idx < num_variables(n):
        raise ValueError(f"variable index {idx} out of range for n={n}")
    i, r = divmod(idx, n - 1)
    j = r if r < i else r + 1
    return i, j


@dataclass(frozen=True)
class VrpInstance:
    """A weighted routing instance: n nodes, k vehicles, penalty A."""

    n: int
    k: int
    weights: np.ndarray
    penalty_a: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 nodes, got n={self.n}")
        if not 1 <= self.k <= self.n - 1:
            raise ValueError(f"vehicle count k={self.k} outside [1, {self.n - 1}]")
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.n, self.n):
            raise ValueError(f"weights must be {self.n}x{self.n}, got {w.shape}")
        off_diag = w[~np.eye(self.n, dtype=bool)]
        if np.any(off_diag < 0) or not np.all(np.isfinite(off_diag)):
            raise ValueError("edge weights must be finite and non-negative")
        if not self.penalty_a > 0:
            raise ValueError(f"penalty weight must be positive, got {self.penalty_a}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def num_variables(self) -> int:
        return num_variables(self.n)

    def weight_vector(self) -> np.ndarray:
        """Edge weights in decision-variable order."""
        m = self.num_variables
        vec = np.empty(m)
        for idx in range(m):
            i, j = index_pair(self.n, idx)
            vec[idx] = self.weights[i, j]
        return vec


def default_penalty(weights: np.ndarray) -> float:
    """ceil(sum of all edge weights) + 1.

    Any single degree violation then costs more than the most expensive
    tour, so the global minimiser is feasible.
    """
    w = np.asarray(weights, dtype=float)
    total = float(w[~np.eye(w.shape[0], dtype=bool)].sum())
    return float(math.ceil(total) + 1)


def generate_weights(n: int, seed: int) -> np.ndarray:
    """Uniform [1, 10) weights from a SplitMix64 stream, row-major.

    w_ij and w_ji are drawn independently. Bit-reproducible: the draw
    order is fixed (rows then columns, diagonal skipped) and the
    generator is self-contained.
    """
    rng = SplitMix64(seed)
    w = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                w[i, j] = rng.uniform(1.0, 10.0)
    return w


def build_instance(
    n: int,
    k: int,
    weights: np.ndarray | Sequence[Sequence[float]] | None = None,
    seed: int | None = None,
    penalty_a: float | None = None,
) -> VrpInstance:
    """Create an instance from an explicit weight matrix or a seed.

    Exactly one of ``weights``/``seed`` must be given. ``penalty_a``
    defaults to :func:`default_penalty`.
    """
    if (weights is None) == (seed is None):
        raise ValueError("provide exactly one of weights= or seed=")
    if weights is None:
        if n < 2:
            raise ValueError(f"need at least 2 nodes, got n={n}")
        weights = generate_weights(n, seed)
    w = np.asarray(weights, dtype=float)
    if penalty_a is None:
        penalty_a = default_penalty(w)
    return VrpInstance(n=n, k=k, weights=w, penalty_a=penalty_a)


# ---------------------------------------------------------------------------
# Quadratic forms


@dataclass(frozen=True)
class QuboForm:
    """min x^T q x + g^T x + c over binary x."""

    dim: int
    q: np.ndarray
    g: np.ndarray
    c: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if q.shape != (self.dim, self.dim):
            raise ValueError(f"q must be {self.dim}x{self.dim}, got {q.shape}")
        if g.shape != (self.dim,):
            raise ValueError(f"g must have length {self.dim}, got {g.shape}")
        q.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "g", g)


@dataclass(frozen=True)
class IsingForm:
    """Energy -sum_{i<j} j_ij s_i s_j - sum_i h_i s_i + d over s in {-1,+1}.

    ``j`` is strictly upper-triangular.
    """

    dim: int
    j: np.ndarray
    h: np.ndarray
    d: float

    def __post_init__(self):
        j = np.asarray(self.j, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if j.shape != (self.dim, self.dim):
            raise ValueError(f"j must be {self.dim}x{self.dim}, got {j.shape}")
        if np.any(np.tril(j) != 0.0):
            raise ValueError("j must be strictly upper-triangular")
        if h.shape != (self.dim,):
            raise ValueError(f"h must have length {self.dim}, got {h.shape}")
        j.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "h", h)


def source_indicator(n: int, node: int) -> np.ndarray:
    """0/1 vector selecting all variables x(node, *)."""
    vec = np.zeros(num_variables(n))
    vec[node * (n - 1) : (node + 1) * (n - 1)] = 1.0
    return vec


def target_indicator(n: int, node: int) -> np.ndarray:
    """0/1 vector selecting all variables x(*, node)."""
    vec = np.zeros(num_variables(n))
    for i in range(n):
        if i != node:
            vec[pair_index(n, i, node)] = 1.0
    return vec


def build_qubo(instance: VrpInstance) -> QuboForm:
    """Assemble the penalty QUBO for the degree constraints.

    With out_i = sum_j x_ij and in_i = sum_j x_ji, the objective is

        W.x + A [ sum_{i>=1} (1-out_i)^2 + (1-in_i)^2
                  + (k-out_0)^2 + (k-in_0)^2 ]

    whose exact expansion is
        Q = A (sum_i zS_i zS_i^T + sum_i zT_i zT_i^T)
        g = W - 4A.1 + 2A(1-k)(zS_0 + zT_0)
        c = 2A(n-1) + 2Ak^2
    where zS_i / zT_i are the source/target indicator vectors.
    """
    n, k, a = instance.n, instance.k, instance.penalty_a
    m = instance.num_variables
    q = np.zeros((m, m))
    for node in range(n):
        zs = source_indicator(n, node)
        zt = target_indicator(n, node)
        q += a * (np.outer(zs, zs) + np.outer(zt, zt))
    g = instance.weight_vector() - 4.0 * a * np.ones(m)
    g += 2.0 * a * (1.0 - k) * (source_indicator(n, 0) + target_indicator(n, 0))
    c = 2.0 * a * (n - 1) + 2.0 * a * k**2
    return QuboForm(dim=m, q=q, g=g, c=c)


def qubo_to_ising(qubo: QuboForm) -> IsingForm:
    """Exact change of variables x = (s + 1) / 2.

    Both triangles of Q contribute:
        J_ij = -(Q_ij + Q_ji)/4            (i < j)
        h_i  = -g_i/2 - (rowsum_i + colsum_i)/4
        d    = c + sum g/2 + sum Q/4 + trace Q/4
    """
    m = qubo.dim
    q, g = qubo.q, qubo.g
    j = np.zeros((m, m))
    upper = np.triu_indices(m, k=1)
    j[upper] = -(q[upper] + q.T[upper]) / 4.0
    h = -g / 2.0 - (q.sum(axis=1) + q.sum(axis=0)) / 4.0
    d = qubo.c + g.sum() / 2.0 + q.sum() / 4.0 + np.trace(q) / 4.0
    return IsingForm(dim=m, j=j, h=h, d=float(d))


def _as_bits(x: Sequence[int] | np.ndarray, dim: int) -> np.ndarray:
    bits = np.asarray(x, dtype=int)
    if bits.shape != (dim,):
        raise ValueError(f"assignment must have length {dim}, got shape {bits.shape}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return bits


def evaluate_qubo(qubo: QuboForm, x: Sequence[int] | np.ndarray) -> float:
    bits = _as_bits(x, qubo.dim)
    return float(bits @ qubo.q @ bits + qubo.g @ bits + qubo.c)


def evaluate_ising(ising: IsingForm, x: Sequence[int] | np.ndarray) -> float:
    bits = _as_bits(x, ising.dim)
    s = 2.0 * bits - 1.0
    return float(-(s @ ising.j @ s) - ising.h @ s + ising.d)


def assignment_to_string(x: Sequence[int] | np.ndarray) -> str:
    """'0'/'1' string, most significant character = x(0,1)."""
    return "".join("1" if b else "0" for b in np.asarray(x, dtype=int))


def assignment_from_string(s: str) -> np.ndarray:
    if not s or any(ch not in "01" for ch in s):
        raise ValueError(f"assignment string must be non-empty 0/1, got {s!r}")
    return np.array([int(ch) for ch in s], dtype=int)


def assignment_from_uint(value: int, dim: int) -> np.ndarray:
    """Unpack an unsigned integer, bit (dim-1) first (x(0,1) is the MSB)."""
    return np.array([(value >> (dim - 1 - t)) & 1 for t in range(dim)], dtype=int)


def all_assignments(dim: int) -> np.ndarray:
    """All 2^dim assignments, row u = assignment_from_uint(u, dim)."""
    u = np.arange(2**dim, dtype=np.int64)
    shifts = np.arange(dim - 1, -1, -1)
    return ((u[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def ising_energies(ising: IsingForm, bits: np.ndarray) -> np.ndarray:
    """Vectorised Ising energy for a (rows x dim) bit matrix."""
    s = 2.0 * bits.astype(float) - 1.0
    j_sym = ising.j + ising.j.T
    pair = 0.5 * np.einsum("ri,ij,rj->r", s, j_sym, s)
    return -pair - s @ ising.h + ising.d


def brute_force_minimum(ising: IsingForm) -> tuple[np.ndarray, float]:
    """Exact minimum by full enumeration; ties go to the lowest unsigned
    integer in assignment order (x(0,1) most significant)."""
    m = ising.dim
    if m > BRUTE_FORCE_MAX_DIM:
        raise DimensionGuardError(
            f"brute force limited to {BRUTE_FORCE_MAX_DIM} variables, got {m}"
        )
    best_energy = math.inf
    best_uint = 0
    chunk = 1 << min(m, 16)
    shifts = np.arange(m - 1, -1, -1)
    for start in range(0, 2**m, chunk):
        u = np.arange(start, min(start + chunk, 2**m), dtype=np.int64)
        bits = ((u[:, None] >> shifts[None, :]) & 1).astype(np.int8)
        energies = ising_energies(ising, bits)
        pos = int(np.argmin(energies))
        if energies[pos] < best_energy:
            best_energy = float(energies[pos])
            best_uint = int(u[pos])
    return assignment_from_uint(best_uint, m), best_energy


# ---------------------------------------------------------------------------
# Route decoding


@dataclass(frozen=True)
class RouteSet:
    """k closed tours, each starting and ending at the depot."""

    routes: tuple[tuple[int, ...], ...]
    total_cost: float


@dataclass(frozen=True)
class Infeasibility:
    """First violated structural constraint of an assignment."""

    reason: str


def decode_routes(
    instance: VrpInstance, x: Sequence[int] | np.ndarray
) -> RouteSet | Infeasibility:
    """Follow edges from the depot into k closed tours.

    Checks the degree constraints first (customers: one exit, one
    entry; depot: k exits, k entries), then that edge-following covers
    every node. Infeasibility is a returned value, not an exception.
    """
    n, k = instance.n, instance.k
    bits = _as_bits(x, instance.num_variables)
    out_deg = np.zeros(n, dtype=int)
    in_deg = np.zeros(n, dtype=int)
    successors: dict[int, list[int]] = {i: [] for i in range(n)}
    for idx in np.flatnonzero(bits):
        i, j = index_pair(n, int(idx))
        out_deg[i] += 1
        in_deg[j] += 1
        successors[i].append(j)
    for node in range(1, n):
        if out_deg[node] != 1:
            return Infeasibility(f"node {node} out-degree {out_deg[node]}")
    for node in range(1, n):
        if in_deg[node] != 1:
            return Infeasibility(f"node {node} in-degree {in_deg[node]}")
    if out_deg[0] != k:
        return Infeasibility(f"depot out-degree {out_deg[0]}, expected {k}")
    if in_deg[0] != k:
        return Infeasibility(f"depot in-degree {in_deg[0]}, expected {k}")

    visited = set()
    routes = []
    for first in sorted(successors[0]):
        route = [0, first]
        visited.add(first)
        node = first
        while node != 0:
            node = successors[node][0]
            route.append(node)
            if node != 0:
                if node in visited:
                    return Infeasibility(f"node {node} reached twice")
                visited.add(node)
        routes.append(tuple(route))
    if len(visited) != n - 1:
        missing = sorted(set(range(1, n)) - visited)
        return Infeasibility(f"nodes {missing} form a sub-tour not reaching the depot")
    route_set = RouteSet(routes=tuple(routes), total_cost=0.0)
    return RouteSet(routes=route_set.routes, total_cost=vrp_cost(instance, route_set))


def vrp_cost(instance: VrpInstance, routes: RouteSet | Iterable[Sequence[int]]) -> float:
    """Sum of edge weights along every route."""
    seqs = routes.routes if isinstance(routes, RouteSet) else tuple(tuple(r) for r in routes)
    total = 0.0
    for route in seqs:
        if len(route) < 3:
            raise ValueError(f"route {route} has no customer visits")
        if route[0] != 0 or route[-1] != 0:
            raise ValueError(f"route {route} must start and end at the depot")
        for a, b in zip(route, route[1:]):
            if not (0 <= a < instance.n and 0 <= b < instance.n):
                raise ValueError(f"route references node outside 0..{instance.n - 1}")
            if a == b:
                raise ValueError(f"route {route} contains a self-loop at {a}")
            total += float(instance.weights[a, b])
    return total


# ---------------------------------------------------------------------------
# Instance files


def instance_to_dict(instance: VrpInstance) -> dict:
    return {
        "n": instance.n,
        "k": instance.k,
        "penalty_a": instance.penalty_a,
        "weights": instance.weights.tolist(),
    }


def instance_from_dict(data: dict) -> VrpInstance:
    """Parse {"n", "k", "penalty_a"?, "weights"|"seed"}."""
    if not isinstance(data, dict):
        raise ValueError("instance must be a JSON object")
    for field in ("n", "k"):
        if field not in data:
            raise ValueError(f"instance missing required field '{field}'")
        if not isinstance(data[field], int):
            raise ValueError(f"instance field '{field}' must be an integer")
    has_weights = "weights" in data
    has_seed = "seed" in data
    if has_weights == has_seed:
        raise ValueError("instance needs exactly one of 'weights' or 'seed'")
    penalty = data.get("penalty_a")
    if penalty is not None and not isinstance(penalty, (int, float)):
        raise ValueError("instance field 'penalty_a' must be a number")
    try:
        return build_instance(
            n=data["n"],
            k=data["k"],
            weights=data["weights"] if has_weights else None,
            seed=data["seed"] if has_seed else None,
            penalty_a=penalty,
        )
    except ValueError as exc:
        raise ValueError(f"invalid instance: {exc}") from exc


def load_instance(path) -> VrpInstance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"instance file {path} is not valid JSON: {exc}") from exc
    return instance_from_dict(data)


def reference_instance(n: int) -> VrpInstance:
    """The fixed in-repo instance targeted by the qualitative checks."""
    if n not in (3, 4):
        raise ValueError(f"reference instances exist for n in (3, 4), got {n}")
    payload = resources.files("vrpvqe.data").joinpath(f"reference_n{n}.json")
    return instance_from_dict(json.loads(payload.read_text(encoding="utf-8")))
