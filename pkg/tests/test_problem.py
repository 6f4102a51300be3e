import json

import numpy as np
import pytest

from vrpvqe.problem import (
    DimensionGuardError,
    Infeasibility,
    IsingForm,
    QuboForm,
    RouteSet,
    all_assignments,
    assignment_from_string,
    assignment_from_uint,
    assignment_to_string,
    brute_force_minimum,
    build_instance,
    build_qubo,
    decode_routes,
    default_penalty,
    evaluate_ising,
    evaluate_qubo,
    generate_weights,
    index_pair,
    instance_from_dict,
    ising_energies,
    load_instance,
    pair_index,
    qubo_to_ising,
    reference_instance,
    vrp_cost,
)


def direct_penalty_energy(instance, bits):
    """Independent oracle: travel cost plus squared degree violations,
    summed straight from the bit vector."""
    n, k, a = instance.n, instance.k, instance.penalty_a
    energy = 0.0
    out_deg = np.zeros(n)
    in_deg = np.zeros(n)
    for idx, bit in enumerate(bits):
        if bit:
            i, j = index_pair(n, idx)
            energy += instance.weights[i, j]
            out_deg[i] += 1
            in_deg[j] += 1
    for node in range(1, n):
        energy += a * (1 - out_deg[node]) ** 2
        energy += a * (1 - in_deg[node]) ** 2
    energy += a * (k - out_deg[0]) ** 2
    energy += a * (k - in_deg[0]) ** 2
    return energy


def small_instance(n=3, k=2, seed=0, penalty_a=None):
    return build_instance(n, k, seed=seed, penalty_a=penalty_a)


class TestVariableOrdering:
    def test_row_major_with_diagonal_skipped(self):
        pairs = [index_pair(3, idx) for idx in range(6)]
        assert pairs == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]

    def test_pair_index_round_trip(self):
        for n in (2, 3, 4, 5):
            for idx in range(n * (n - 1)):
                i, j = index_pair(n, idx)
                assert pair_index(n, i, j) == idx

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError):
            pair_index(3, 1, 1)


class TestBuildInstance:
    def test_variable_counts_for_paper_sizes(self):
        assert build_instance(3, 2, seed=0).num_variables == 6
        assert build_instance(4, 2, seed=0).num_variables == 12

    def test_minimal_instance(self):
        inst = build_instance(2, 1, weights=[[0, 1], [1, 0]])
        assert inst.num_variables == 2

    def test_seeded_weights_reproducible(self):
        a = generate_weights(4, 123)
        b = generate_weights(4, 123)
        np.testing.assert_array_equal(a, b)
        assert np.any(a != generate_weights(4, 124))

    def test_seeded_weights_in_range(self):
        w = generate_weights(5, 7)
        off = w[~np.eye(5, dtype=bool)]
        assert np.all((off >= 1.0) & (off < 10.0))
        assert np.all(np.diag(w) == 0)

    def test_weights_and_seed_mutually_exclusive(self):
        with pytest.raises(ValueError):
            build_instance(3, 2, weights=np.ones((3, 3)), seed=1)
        with pytest.raises(ValueError):
            build_instance(3, 2)

    @pytest.mark.parametrize("n,k", [(1, 1), (3, 0), (3, 3), (2, 2)])
    def test_bad_bounds_rejected(self, n, k):
        with pytest.raises(ValueError):
            build_instance(n, k, seed=0)

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            build_instance(2, 1, weights=[[0, -1], [1, 0]])

    def test_non_positive_penalty_rejected(self):
        with pytest.raises(ValueError):
            build_instance(2, 1, weights=[[0, 1], [1, 0]], penalty_a=0.0)

    def test_default_penalty_dominates_weight_sum(self):
        w = generate_weights(3, 5)
        assert default_penalty(w) > w.sum()


class TestBuildQubo:
    def test_constant_n3_k2(self):
        inst = build_instance(3, 2, seed=0, penalty_a=10)
        assert build_qubo(inst).c == 2 * 10 * 2 + 2 * 10 * 4 == 120

    def test_constant_n2_k1(self):
        inst = build_instance(2, 1, weights=[[0, 1], [1, 0]], penalty_a=1)
        assert build_qubo(inst).c == 4

    @pytest.mark.parametrize("n,k,seed", [(3, 1, 2), (3, 2, 5), (2, 1, 9)])
    def test_matches_direct_penalty_expansion_exhaustively(self, n, k, seed):
        inst = build_instance(n, k, seed=seed, penalty_a=7.5)
        qubo = build_qubo(inst)
        for bits in all_assignments(inst.num_variables):
            expected = direct_penalty_energy(inst, bits)
            assert evaluate_qubo(qubo, bits) == pytest.approx(expected, abs=1e-9)

    def test_feasible_energy_is_route_cost(self):
        inst = build_instance(3, 1, seed=3)
        qubo = build_qubo(inst)
        found = 0
        for bits in all_assignments(6):
            decoded = decode_routes(inst, bits)
            if isinstance(decoded, RouteSet):
                found += 1
                assert evaluate_qubo(qubo, bits) == pytest.approx(
                    decoded.total_cost, abs=1e-9
                )
        assert found == 2  # one directed tour per orientation


class TestQuboIsingConversion:
    def test_constant_only_form(self):
        qubo = QuboForm(dim=2, q=np.zeros((2, 2)), g=np.zeros(2), c=5.0)
        ising = qubo_to_ising(qubo)
        assert np.all(ising.j == 0) and np.all(ising.h == 0) and ising.d == 5.0

    def test_pointwise_equality_n2(self):
        inst = build_instance(2, 1, weights=[[0, 3], [4, 0]], penalty_a=6)
        qubo = build_qubo(inst)
        ising = qubo_to_ising(qubo)
        for bits in all_assignments(2):
            assert evaluate_ising(ising, bits) == pytest.approx(
                evaluate_qubo(qubo, bits), abs=1e-12
            )

    def test_pointwise_equality_n3_seeded(self):
        inst = small_instance(seed=42)
        qubo = build_qubo(inst)
        ising = qubo_to_ising(qubo)
        for bits in all_assignments(6):
            expected = evaluate_qubo(qubo, bits)
            assert evaluate_ising(ising, bits) == pytest.approx(
                expected, rel=1e-9, abs=1e-9
            )

    def test_random_asymmetric_qubo_converts_exactly(self):
        rng = np.random.default_rng(8)
        qubo = QuboForm(
            dim=5, q=rng.normal(size=(5, 5)), g=rng.normal(size=5), c=rng.normal()
        )
        ising = qubo_to_ising(qubo)
        for bits in all_assignments(5):
            assert evaluate_ising(ising, bits) == pytest.approx(
                evaluate_qubo(qubo, bits), abs=1e-10
            )


class TestEvaluate:
    def test_all_zeros_gives_constant(self):
        qubo = build_qubo(small_instance())
        assert evaluate_qubo(qubo, np.zeros(6, dtype=int)) == pytest.approx(qubo.c)

    def test_n2_feasible_assignment(self):
        inst = build_instance(2, 1, weights=[[0, 1], [1, 0]], penalty_a=10)
        qubo = build_qubo(inst)
        assert evaluate_qubo(qubo, [1, 1]) == pytest.approx(2.0)
        assert evaluate_qubo(qubo, [0, 0]) == pytest.approx(
            direct_penalty_energy(inst, [0, 0])
        )

    def test_ising_constant_only(self):
        ising = IsingForm(dim=3, j=np.zeros((3, 3)), h=np.zeros(3), d=7.0)
        for bits in all_assignments(3):
            assert evaluate_ising(ising, bits) == 7.0

    def test_single_field_spin_up(self):
        ising = IsingForm(dim=1, j=np.zeros((1, 1)), h=np.array([1.0]), d=0.0)
        assert evaluate_ising(ising, [1]) == -1.0
        assert evaluate_ising(ising, [0]) == 1.0

    def test_dimension_mismatch(self):
        qubo = build_qubo(small_instance())
        with pytest.raises(ValueError):
            evaluate_qubo(qubo, [0, 1])

    def test_vectorised_energies_match_scalar(self):
        ising = qubo_to_ising(build_qubo(small_instance(seed=1)))
        bits = all_assignments(6)
        energies = ising_energies(ising, bits)
        for row, energy in zip(bits, energies):
            assert energy == pytest.approx(evaluate_ising(ising, row), abs=1e-9)


class TestBruteForce:
    def test_constant_form_tie_breaks_to_zero(self):
        ising = IsingForm(dim=3, j=np.zeros((3, 3)), h=np.zeros(3), d=3.0)
        assignment, energy = brute_force_minimum(ising)
        assert energy == 3.0
        assert assignment_to_string(assignment) == "000"

    def test_n2_instance(self):
        inst = build_instance(2, 1, weights=[[0, 1], [1, 0]], penalty_a=10)
        assignment, energy = brute_force_minimum(qubo_to_ising(build_qubo(inst)))
        assert assignment_to_string(assignment) == "11"
        assert energy == pytest.approx(2.0)

    def test_minimum_decodes_to_feasible_routes(self):
        inst = small_instance(seed=6)
        assignment, energy = brute_force_minimum(qubo_to_ising(build_qubo(inst)))
        decoded = decode_routes(inst, assignment)
        assert isinstance(decoded, RouteSet)
        assert decoded.total_cost == pytest.approx(energy, abs=1e-9)

    def test_constant_shift_moves_energy_only(self):
        ising = qubo_to_ising(build_qubo(small_instance(seed=2)))
        shifted = IsingForm(dim=ising.dim, j=ising.j, h=ising.h, d=ising.d + 11.5)
        a1, e1 = brute_force_minimum(ising)
        a2, e2 = brute_force_minimum(shifted)
        np.testing.assert_array_equal(a1, a2)
        assert e2 == pytest.approx(e1 + 11.5)

    def test_dimension_guard(self):
        big = IsingForm(dim=25, j=np.zeros((25, 25)), h=np.zeros(25), d=0.0)
        with pytest.raises(DimensionGuardError):
            brute_force_minimum(big)

    def test_penalty_dominance_makes_minimum_feasible(self):
        for seed in range(5):
            w = generate_weights(3, seed)
            inst = build_instance(3, 2, weights=w)  # default A > sum(w)
            assignment, _ = brute_force_minimum(qubo_to_ising(build_qubo(inst)))
            assert isinstance(decode_routes(inst, assignment), RouteSet)


class TestDecodeRoutes:
    def test_two_singleton_routes(self):
        inst = small_instance()
        decoded = decode_routes(inst, [1, 1, 1, 0, 1, 0])
        assert isinstance(decoded, RouteSet)
        assert decoded.routes == ((0, 1, 0), (0, 2, 0))

    def test_all_zeros_reports_first_violation(self):
        decoded = decode_routes(small_instance(), np.zeros(6, dtype=int))
        assert isinstance(decoded, Infeasibility)
        assert decoded.reason == "node 1 out-degree 0"

    def test_single_tour(self):
        inst = build_instance(3, 1, seed=0)
        bits = np.zeros(6, dtype=int)
        for i, j in [(0, 1), (1, 2), (2, 0)]:
            bits[pair_index(3, i, j)] = 1
        decoded = decode_routes(inst, bits)
        assert isinstance(decoded, RouteSet)
        assert decoded.routes == ((0, 1, 2, 0),)

    def test_depot_degree_violation_named(self):
        inst = small_instance()  # k=2
        bits = np.zeros(6, dtype=int)
        for i, j in [(0, 1), (1, 2), (2, 0)]:
            bits[pair_index(3, i, j)] = 1
        decoded = decode_routes(inst, bits)
        assert isinstance(decoded, Infeasibility)
        assert decoded.reason == "depot out-degree 1, expected 2"

    def test_sub_tour_reported(self):
        inst = build_instance(4, 1, seed=0)
        bits = np.zeros(12, dtype=int)
        # depot loop 0->1->0 plus disconnected 2<->3 cycle
        for i, j in [(0, 1), (1, 0), (2, 3), (3, 2)]:
            bits[pair_index(4, i, j)] = 1
        decoded = decode_routes(inst, bits)
        assert isinstance(decoded, Infeasibility)
        assert "sub-tour" in decoded.reason


class TestVrpCost:
    def test_two_edge_route(self):
        inst = build_instance(2, 1, weights=[[0, 3], [4, 0]])
        assert vrp_cost(inst, [[0, 1, 0]]) == 7.0

    def test_route_without_customers_rejected(self):
        inst = build_instance(2, 1, weights=[[0, 3], [4, 0]])
        with pytest.raises(ValueError):
            vrp_cost(inst, [[0, 0]])

    def test_out_of_range_node_rejected(self):
        inst = build_instance(2, 1, weights=[[0, 3], [4, 0]])
        with pytest.raises(ValueError):
            vrp_cost(inst, [[0, 2, 0]])

    def test_matches_brute_force_minimum(self):
        inst = small_instance(seed=4)
        assignment, energy = brute_force_minimum(qubo_to_ising(build_qubo(inst)))
        decoded = decode_routes(inst, assignment)
        assert vrp_cost(inst, decoded) == pytest.approx(energy, abs=1e-9)


class TestAssignmentSerialization:
    def test_string_round_trip(self):
        bits = np.array([1, 0, 1, 1, 0, 0])
        assert assignment_to_string(bits) == "101100"
        np.testing.assert_array_equal(assignment_from_string("101100"), bits)

    def test_uint_unpacking_is_msb_first(self):
        np.testing.assert_array_equal(assignment_from_uint(0b110, 3), [1, 1, 0])

    def test_bad_string_rejected(self):
        with pytest.raises(ValueError):
            assignment_from_string("10x")


class TestInstanceFiles:
    def test_weights_round_trip(self, tmp_path):
        inst = small_instance(seed=12)
        path = tmp_path / "inst.json"
        path.write_text(
            json.dumps(
                {
                    "n": inst.n,
                    "k": inst.k,
                    "penalty_a": inst.penalty_a,
                    "weights": inst.weights.tolist(),
                }
            )
        )
        loaded = load_instance(path)
        np.testing.assert_array_equal(loaded.weights, inst.weights)
        assert loaded.penalty_a == inst.penalty_a

    def test_seeded_form(self):
        inst = instance_from_dict({"n": 3, "k": 2, "penalty_a": 5.0, "seed": 9})
        np.testing.assert_array_equal(inst.weights, generate_weights(3, 9))

    def test_missing_field_named(self):
        with pytest.raises(ValueError, match="'k'"):
            instance_from_dict({"n": 3, "weights": [[0]]})

    def test_both_weights_and_seed_rejected(self):
        with pytest.raises(ValueError):
            instance_from_dict({"n": 2, "k": 1, "weights": [[0, 1], [1, 0]], "seed": 1})

    def test_reference_instances_exist(self):
        assert reference_instance(3).num_variables == 6
        assert reference_instance(4).num_variables == 12
