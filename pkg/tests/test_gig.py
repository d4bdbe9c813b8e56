import json
from fractions import Fraction
from xml.etree import ElementTree as ET

import math
import pytest

from giglab.circuits import canonical
from giglab.gig import (
    EmptySet,
    UndefinedLikeliness,
    UnsupportedFormat,
    build_gig,
    build_gig_naive,
    export_gig,
    mutually_reachable,
    parse_jsonl,
    reachable,
    reachable_set,
    scc_decomposition,
    set_metrics,
    submasks,
)
from giglab.network import StateSpaceGuard, config_from_str, config_to_str

from conftest import all_circuits, random_networks


def c(s):
    return config_from_str(s)


def naive_metrics(arcs, members):
    out = inn = outside = 0
    for (x, y), m in arcs.items():
        if x in members and y not in members:
            out += m
        elif x not in members and y in members:
            inn += m
        elif x not in members and y not in members:
            outside += m
    return out, inn, outside


def naive_reach(arcs, x):
    succ = {}
    for (a, b) in arcs:
        succ.setdefault(a, []).append(b)
    seen, stack = {x}, [x]
    while stack:
        v = stack.pop()
        for w in succ.get(v, []):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


# ---------------------------------------------------------------- construction


def test_submasks():
    assert submasks(0b101).tolist() == [0, 1, 4, 5]
    assert submasks(0).tolist() == [0]


def test_single_node_positive_circuit():
    g = build_gig(canonical(1, 1).network())
    assert g.arcs(0) == [(0, 1)] and g.arcs(1) == [(1, 1)]


def test_positive_three_arcs_from_100(pos3):
    g = build_gig(pos3)
    x = c("100")
    arcs = dict(g.arcs(x))
    assert len(arcs) == 4
    assert arcs.pop(x) == 1
    assert set(arcs.values()) == {2}
    naive = build_gig_naive(pos3)
    assert {y: m for (s, y), m in naive.items() if s == x} == dict(g.arcs(x))


def test_condensed_matches_naive():
    nets = [d.network() for n in range(1, 5) for d in all_circuits(n)]
    nets += random_networks(12, 5, seed=31)
    for net in nets:
        assert build_gig(net).arc_multiset() == build_gig_naive(net)


def test_degree_law_and_target_sets():
    for net in random_networks(10, 6, seed=17) + [canonical(n, s).network() for n in range(1, 8) for s in (1, -1)]:
        g = build_gig(net)
        n = net.n
        for x in range(1 << n):
            assert g.out_degree(x) == (1 << n) - 1
            u = int(g.potentials[x])
            ux = net.unstable_mask(x)
            want = {net.apply_subset(x, q) for q in range(1 << n) if q & ~ux == 0}
            if u == n:
                want.discard(x)  # only the empty set fixes x
            assert set(g.successors(x).tolist()) == want
        assert g.total_arcs() == (1 << n) * ((1 << n) - 1)


def test_gig_guard():
    with pytest.raises(StateSpaceGuard):
        build_gig(canonical(17, 1).network())


# ---------------------------------------------------------------- metrics


def test_fixed_point_metrics(pos3):
    g = build_gig(pos3)
    rep = set_metrics(g, [c("000")])
    assert rep.robustness == math.inf and rep.deg_out == 0
    assert rep.likeliness > 0


def test_whole_space_metrics(pos3):
    rep = set_metrics(build_gig(pos3), range(8))
    assert rep.deg_out == 0 and rep.robustness == math.inf
    assert not rep.likeliness_defined
    with pytest.raises(UndefinedLikeliness):
        rep.likeliness


def test_parallel_cycle_metrics_match_brute_force(pos3):
    members = {c("011"), c("101"), c("110")}
    rep = set_metrics(build_gig(pos3), members)
    out, inn, outside = naive_metrics(build_gig_naive(pos3), members)
    assert (rep.deg_out, rep.deg_in, rep.t_outside) == (out, inn, outside)
    assert rep.deg_out > 0 and rep.deg_in > 0
    assert rep.robustness == Fraction(1, out)
    assert rep.likeliness == Fraction(inn, outside)


def test_metrics_match_brute_force_on_random_sets():
    import numpy as np

    rng = np.random.default_rng(4)
    for net in random_networks(8, 5, seed=13):
        g = build_gig(net)
        naive = build_gig_naive(net)
        for _ in range(5):
            k = int(rng.integers(1, 1 << net.n))
            members = {int(v) for v in rng.choice(1 << net.n, size=k, replace=False)}
            rep = set_metrics(g, members)
            assert (rep.deg_out, rep.deg_in, rep.t_outside) == naive_metrics(naive, members)
            distinct = set_metrics(g, members, weighting="distinct")
            assert distinct.deg_out == sum(1 for (x, y) in naive if x in members and y not in members)


def test_empty_set_rejected(pos3):
    with pytest.raises(EmptySet):
        set_metrics(build_gig(pos3), [])


def test_metrics_report_serialises(pos3):
    d = set_metrics(build_gig(pos3), [0]).to_dict()
    assert d["robustness"] == "inf" and d["members"] == ["000"]
    assert json.loads(json.dumps(d)) == d


# ---------------------------------------------------------------- reachability


def test_reachability_examples(pos3):
    g = build_gig(pos3)
    assert reachable(g, 5, 5)
    assert reachable(g, c("100"), c("000"))
    assert not reachable(g, c("000"), c("100"))
    g4 = build_gig(canonical(4, 1).network())
    assert mutually_reachable(g4, c("1010"), c("0101"))


def test_reachable_set_matches_naive():
    for net in random_networks(6, 5, seed=23):
        g = build_gig(net)
        naive = build_gig_naive(net)
        for x in range(1 << net.n):
            assert reachable_set(g, x) == naive_reach(naive, x)


# ---------------------------------------------------------------- components


def test_scc_examples(pos3, neg3):
    part = scc_decomposition(build_gig(pos3)).partition()
    assert part == {frozenset([0]), frozenset([7]), frozenset(range(1, 7))}
    part = scc_decomposition(build_gig(neg3)).partition()
    layers = {}
    for x in range(8):
        layers.setdefault(neg3.potential(x), set()).add(x)
    assert part == {frozenset(layers[1]), frozenset(layers[3])}
    assert len(layers[1]) == 6 and len(layers[3]) == 2


def test_scc_matches_mutual_reachability_oracle():
    for net in random_networks(8, 5, seed=41):
        g = build_gig(net)
        naive = build_gig_naive(net)
        reach = {x: naive_reach(naive, x) for x in range(1 << net.n)}
        labels = scc_decomposition(g).labels
        for x in range(1 << net.n):
            for y in range(1 << net.n):
                assert (labels[x] == labels[y]) == (y in reach[x] and x in reach[y])


def test_condensation_is_topologically_ordered():
    for net in random_networks(8, 6, seed=12):
        scc = scc_decomposition(build_gig(net))
        for a, succ in scc.dag.items():
            assert all(b > a for b in succ)
        for fp in net.fixed_points():
            assert scc.components[scc.labels[fp]] == [fp]


# ---------------------------------------------------------------- export


def test_export_single_node_all_formats():
    g = build_gig(canonical(1, 1).network())
    dot = export_gig(g, "dot")
    assert dot.count("->") == 2 and '"0" -> "0"' in dot and '"1" -> "1"' in dot
    root = ET.fromstring(export_gig(g, "graphml").split("?>", 1)[1])
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    assert len(root.findall(".//g:node", ns)) == 2
    assert len(root.findall(".//g:edge", ns)) == 2
    lines = export_gig(g, "jsonl").strip().splitlines()
    assert [json.loads(l) for l in lines] == [
        {"src": "0", "dst": "0", "mult": 1},
        {"src": "1", "dst": "1", "mult": 1},
    ]


def test_export_layers(pos3):
    dot = export_gig(build_gig(pos3), "dot", layers=True)
    assert "cluster_u0" in dot and "cluster_u2" in dot
    u0 = dot.split("cluster_u0")[1].split("}")[0]
    assert '"000"' in u0 and '"111"' in u0 and '"100"' not in u0
    gml = export_gig(build_gig(pos3), "graphml", layers=True)
    assert '<data key="u">2</data>' in gml


def test_jsonl_round_trip():
    for net in random_networks(5, 5, seed=50) + [canonical(3, -1).network()]:
        g = build_gig(net)
        back = parse_jsonl(export_gig(g, "jsonl"))
        n = net.n
        assert back == {(config_to_str(x, n), config_to_str(y, n)): m for (x, y), m in g.arc_multiset().items()}


def test_dot_multiplicity_labels(pos3):
    dot = export_gig(build_gig(pos3), "dot")
    assert '"000" -> "000" [label="7"];' in dot
    assert '"100" -> "100";' in dot
    plain = export_gig(build_gig(pos3), "dot", show_multiplicity=False)
    assert "label" not in plain


def test_unsupported_format(pos3):
    with pytest.raises(UnsupportedFormat):
        export_gig(build_gig(pos3), "svg")
