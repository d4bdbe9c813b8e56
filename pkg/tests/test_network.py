import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from giglab.circuits import make_circuit
from giglab.network import (
    ArityMismatch,
    NetworkValidationError,
    NonMonotone,
    VacuousArc,
    complement,
    config_from_str,
    config_to_str,
    load_network,
    network_from_dict,
    network_to_dict,
    random_network,
    validate_network,
)

from conftest import all_circuits, random_networks


def c(s):
    return config_from_str(s)


# ---------------------------------------------------------------- validation


def test_positive_circuit_is_valid_with_positive_arcs():
    net = validate_network(3, [[2], [0], [1]], [[0, 1]] * 3)
    assert set(net.arc_signs.values()) == {1}
    assert sorted(net.arc_signs) == [(0, 1), (1, 2), (2, 0)]


def test_xor_is_rejected_as_non_monotone():
    with pytest.raises(NetworkValidationError) as exc:
        validate_network(3, [[1, 2], [0], [1]], [[0, 1, 1, 0], [0, 1], [0, 1]])
    kinds = {type(v) for v in exc.value.violations}
    assert kinds == {NonMonotone}
    assert {v.input for v in exc.value.violations} == {1, 2}


def test_constant_table_on_circuit_node_is_vacuous():
    with pytest.raises(NetworkValidationError) as exc:
        validate_network(2, [[1], [0]], [[0, 0], [0, 1]])
    (v,) = exc.value.violations
    assert isinstance(v, VacuousArc) and v.node == 0 and v.input == 1


def test_arity_mismatch():
    with pytest.raises(NetworkValidationError) as exc:
        validate_network(2, [[1], [0]], [[0, 1, 1], [0, 1]])
    assert isinstance(exc.value.violations[0], ArityMismatch)


def test_constant_source_node_warns():
    with pytest.warns(UserWarning):
        net = validate_network(2, [[], [0]], [[1], [0, 1]])
    assert net.eval_local(0, 0) == 1


def test_unsorted_inputs_are_reordered():
    # f = x_2 AND NOT x_0, given with inputs listed as [2, 0]
    # index bit0 <- x_2, bit1 <- x_0
    table = [0, 1, 0, 0]
    net = validate_network(3, [[1], [2], [2, 0]], [[0, 1], [0, 1], table])
    assert net.in_neighbors[2] == (0, 2)
    for x in range(8):
        x0, x2 = x & 1, (x >> 2) & 1
        assert net.eval_local(2, x) == int(x2 and not x0)
    assert net.arc_signs[(0, 2)] == -1 and net.arc_signs[(2, 2)] == 1


# ---------------------------------------------------------------- evaluation


def test_eval_local_examples(pos3, neg3):
    assert pos3.eval_local(1, c("100")) == 1
    assert neg3.eval_local(0, c("001")) == 0
    net = network_from_dict(
        {"n": 3, "nodes": [{"id": 0, "inputs": [1, 2], "function": "and"},
                           {"id": 1, "inputs": [0], "function": "id"},
                           {"id": 2, "inputs": [0], "function": "id"}]}
    )
    assert net.eval_local(0, c("010")) == 0
    assert net.eval_local(0, c("011")) == 1


def test_apply_subset_examples(pos3):
    x = c("100")
    assert pos3.apply_subset(x, []) == x
    assert config_to_str(pos3.apply_subset(x, [0, 1, 2]), 3) == "010"
    assert config_to_str(pos3.apply_subset(x, [1]), 3) == "110"


def test_parallel_examples(pos3, neg3):
    assert pos3.iterate_parallel(c("011"), 3) == c("011")
    assert pos3.apply_parallel(c("000")) == c("000")
    for x in range(8):
        assert neg3.iterate_parallel(x, 3) == complement(x, 3)
    assert pos3.iterate_parallel(c("101"), 0) == c("101")


def test_parallel_map_matches_apply_subset():
    for net in random_networks(10, 6, seed=11):
        full = (1 << net.n) - 1
        assert [net.apply_subset(x, full) for x in range(1 << net.n)] == net.parallel_map.tolist()


def test_unstable_set_examples(pos3, neg3):
    assert pos3.unstable_set(c("000")) == frozenset()
    assert pos3.unstable_set(c("100")) == {0, 1}
    assert neg3.unstable_set(c("000")) == {0}
    assert neg3.potential(c("000")) == 1


def test_complement():
    assert complement(c("000"), 3) == c("111")
    for x in range(16):
        assert complement(complement(x, 4), 4) == x


def test_complement_preserves_potential_on_circuits():
    for n in range(1, 7):
        for desc in all_circuits(n):
            net = desc.network()
            for x in range(1 << n):
                assert net.potential(complement(x, n)) == net.potential(x)


# ---------------------------------------------------------------- properties


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 6))
def test_effective_subset_identity(seed, n):
    net = random_network(n, np.random.default_rng(seed))
    size = 1 << n
    for x in range(size):
        ux = net.unstable_mask(x)
        for p in range(size):
            assert net.apply_subset(x, p) == net.apply_subset(x, p & ux)


def test_stable_nodes_are_idempotent():
    for net in random_networks(15, 6, seed=5):
        for x in range(1 << net.n):
            for i in set(range(net.n)) - net.unstable_set(x):
                assert net.apply_subset(x, [i]) == x


def test_circuit_shift_and_parity():
    for n in range(1, 8):
        for desc in all_circuits(n):
            net = desc.network()
            want = 0 if desc.global_sign > 0 else 1
            for x in range(1 << n):
                u = net.unstable_set(x)
                fx = net.apply_parallel(x)
                assert net.unstable_set(fx) == {(i + 1) % n for i in u}
                assert len(u) % 2 == want
                assert net.potential(net.iterate_parallel(x, 5)) == len(u)


def test_arc_signs_are_monotone():
    for net in random_networks(20, 6, seed=3):
        for (i, j), sign in net.arc_signs.items():
            for x in range(1 << net.n):
                if (x >> i) & 1:
                    continue
                lo, hi = net.eval_local(j, x), net.eval_local(j, x | (1 << i))
                assert (hi >= lo) if sign > 0 else (hi <= lo)


@given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=24))
def test_config_string_round_trip(bits):
    s = "".join(map(str, bits))
    assert config_to_str(config_from_str(s), len(bits)) == s


def test_random_network_is_valid():
    rng = np.random.default_rng(0)
    for _ in range(30):
        net = random_network(5, rng)
        for j in range(net.n):
            assert net.functions[j].arity == len(net.in_neighbors[j])


# ---------------------------------------------------------------- file format


def test_file_round_trip(tmp_path):
    net = make_circuit([1, -1, 1, 1])
    path = tmp_path / "net.json"
    path.write_text(json.dumps(network_to_dict(net)))
    back = load_network(path)
    assert back.in_neighbors == net.in_neighbors
    assert back.functions == net.functions


def test_yaml_file_with_named_functions(tmp_path):
    path = tmp_path / "net.yaml"
    path.write_text(
        "n: 3\n"
        "nodes:\n"
        "  - {id: 0, name: a, inputs: [1, 2], function: nor}\n"
        "  - {id: 1, inputs: [0], function: neg}\n"
        "  - {id: 2, inputs: [0], function: id}\n"
    )
    net = load_network(path)
    assert net.node_names[0] == "a"
    assert net.arc_signs[(1, 0)] == -1 and net.arc_signs[(0, 2)] == 1
    for x in range(8):
        assert net.eval_local(0, x) == int(not ((x >> 1) & 1 or (x >> 2) & 1))


@pytest.mark.parametrize("name", ["and", "or", "nand", "nor"])
def test_named_functions_are_sign_definite(name):
    for k in range(1, 5):
        net = network_from_dict(
            {"n": k + 1, "nodes": [{"id": 0, "inputs": list(range(1, k + 1)), "function": name}]
             + [{"id": i, "inputs": [0], "function": "id"} for i in range(1, k + 1)]}
        )
        expected = 1 if name in ("and", "or") else -1
        assert all(net.arc_signs[(i, 0)] == expected for i in range(1, k + 1))


def test_bad_function_name():
    with pytest.raises(NetworkValidationError):
        network_from_dict({"n": 1, "nodes": [{"id": 0, "inputs": [0], "function": "xor"}]})


def test_exhaustive_truth_table_order():
    # one explicit 3-input table, checked against direct lookup
    table = [0, 0, 0, 1, 0, 1, 1, 1]  # majority
    net = validate_network(4, [[1, 2, 3], [0], [0], [0]], [table, [0, 1], [0, 1], [0, 1]])
    for bits in itertools.product((0, 1), repeat=4):
        x = sum(b << i for i, b in enumerate(bits))
        assert net.eval_local(0, x) == int(bits[1] + bits[2] + bits[3] >= 2)
