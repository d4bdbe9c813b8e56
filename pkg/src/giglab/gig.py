"""General iteration graphs: every nonempty subset update as a labelled arc.

For a configuration ``x`` only the unstable nodes matter, since
``F^P(x) = F^(P & U(x))(x)``, and updating an unstable node flips it. So the
targets out of ``x`` are exactly ``x ^ Q`` for ``Q`` a submask of ``U(x)``, and
each target is hit by ``2^(n - u(x))`` subsets ``P`` (one fewer for the
self-loop, which also absorbs the empty set).
"""

from __future__ import annotations

import graphlib
import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator
from xml.etree import ElementTree as ET

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from giglab.network import GIG_GUARD, Network, check_guard, config_to_str

EXPORT_FORMATS = ("dot", "graphml", "jsonl")


class UnsupportedFormat(ValueError):
    pass


class UndefinedLikeliness(ArithmeticError):
    pass


class EmptySet(ValueError):
    pass


@lru_cache(maxsize=4096)
def submasks(mask: int) -> np.ndarray:
    """All submasks of ``mask`` in increasing order."""
    bits = [1 << i for i in range(mask.bit_length()) if (mask >> i) & 1]
    out = np.zeros(1, dtype=np.int64)
    for b in bits:
        out = np.concatenate([out, out | b])
    out.sort()
    out.setflags(write=False)
    return out


def estimate_arcs(net: Network) -> int:
    """Number of distinct (source, target) pairs the condensed graph will hold."""
    return int(np.sum(np.left_shift(1, net.potentials)))


@dataclass(frozen=True)
class GeneralIterationGraph:
    """Condensed multigraph in CSR layout.

    ``targets[offsets[x]:offsets[x+1]]`` are the distinct successors of ``x``,
    sorted, with matching ``mults``.
    """

    n: int
    offsets: np.ndarray
    targets: np.ndarray
    mults: np.ndarray
    potentials: np.ndarray

    @property
    def size(self) -> int:
        return 1 << self.n

    def arcs(self, x: int) -> list[tuple[int, int]]:
        a, b = self.offsets[x], self.offsets[x + 1]
        return list(zip(self.targets[a:b].tolist(), self.mults[a:b].tolist()))

    def successors(self, x: int) -> np.ndarray:
        return self.targets[self.offsets[x]:self.offsets[x + 1]]

    def iter_arcs(self) -> Iterator[tuple[int, int, int]]:
        for x in range(self.size):
            for y, m in self.arcs(x):
                yield x, y, m

    @property
    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.size, dtype=np.int64), np.diff(self.offsets))

    def out_degree(self, x: int) -> int:
        return int(self.mults[self.offsets[x]:self.offsets[x + 1]].sum())

    def total_arcs(self) -> int:
        return int(self.mults.sum())

    def arc_multiset(self) -> dict[tuple[int, int], int]:
        return {(x, y): m for x, y, m in self.iter_arcs()}


def build_gig(net: Network, force: bool = False) -> GeneralIterationGraph:
    """Condensed general iteration graph, enumerating only subsets of ``U(x)``."""
    check_guard(net.n, GIG_GUARD, force, "GIG construction")
    n = net.n
    size = 1 << n
    masks = net.unstable_masks
    pot = net.potentials
    counts = np.left_shift(np.int64(1), pot)
    offsets = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    targets = np.empty(int(offsets[-1]), dtype=np.int64)
    mults = np.empty_like(targets)
    for x in range(size):
        a, b = offsets[x], offsets[x + 1]
        # x ^ Q for sorted Q is not sorted in general
        t = np.sort(x ^ submasks(int(masks[x])))
        targets[a:b] = t
        mult = 1 << (n - int(pot[x]))
        mults[a:b] = mult
        mults[a + np.searchsorted(t, x)] = mult - 1
    # when every node is unstable the self-loop is only reachable through P = {}
    empty = mults == 0
    if empty.any():
        src = np.repeat(np.arange(size, dtype=np.int64), np.diff(offsets))
        keep = ~empty
        targets, mults = targets[keep], mults[keep]
        offsets = np.zeros(size + 1, dtype=np.int64)
        np.cumsum(np.bincount(src[keep], minlength=size), out=offsets[1:])
    for arr in (offsets, targets, mults):
        arr.setflags(write=False)
    return GeneralIterationGraph(n, offsets, targets, mults, pot)


def build_gig_naive(net: Network) -> dict[tuple[int, int], int]:
    """Arc multiset from every (x, P) pair with P nonempty, via ``apply_subset``."""
    arcs: dict[tuple[int, int], int] = {}
    size = 1 << net.n
    for x in range(size):
        for p in range(1, size):
            y = net.apply_subset(x, p)
            arcs[(x, y)] = arcs.get((x, y), 0) + 1
    return arcs


# --------------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class ConfigSetReport:
    members: frozenset[int]
    n: int
    deg_out: int
    deg_in: int
    t_outside: int
    weighting: str = "multiplicity"

    @property
    def robustness(self) -> Fraction | float:
        return math.inf if self.deg_out == 0 else Fraction(1, self.deg_out)

    @property
    def likeliness(self) -> Fraction:
        if self.t_outside == 0:
            raise UndefinedLikeliness("no arcs lie wholly outside the set")
        return Fraction(self.deg_in, self.t_outside)

    @property
    def likeliness_defined(self) -> bool:
        return self.t_outside != 0

    def to_dict(self) -> dict:
        r = self.robustness
        return {
            "members": sorted(config_to_str(x, self.n) for x in self.members),
            "weighting": self.weighting,
            "deg_out": self.deg_out,
            "deg_in": self.deg_in,
            "t_outside": self.t_outside,
            "robustness": "inf" if r == math.inf else str(r),
            "likeliness": str(self.likeliness) if self.likeliness_defined else None,
        }


def set_metrics(
    gig: GeneralIterationGraph, members: Iterable[int], weighting: str = "multiplicity"
) -> ConfigSetReport:
    """Arc counts across the boundary of a configuration set, with robustness and likeliness.

    ``weighting="distinct"`` counts each (source, target) pair once instead of
    once per subset label.
    """
    members = frozenset(int(x) for x in members)
    if not members:
        raise EmptySet("configuration set is empty")
    if any(not 0 <= x < gig.size for x in members):
        raise ValueError("configuration outside the state space")
    inside = np.zeros(gig.size, dtype=bool)
    inside[list(members)] = True
    src_in = inside[gig.sources]
    dst_in = inside[gig.targets]
    if weighting == "multiplicity":
        w = gig.mults
    elif weighting == "distinct":
        w = (gig.mults > 0).astype(np.int64)
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    deg_out = int(w[src_in & ~dst_in].sum())
    deg_in = int(w[~src_in & dst_in].sum())
    t_out = int(w[~src_in & ~dst_in].sum())
    return ConfigSetReport(members, gig.n, deg_out, deg_in, t_out, weighting)


# --------------------------------------------------------------------------
# reachability and components


def reachable_set(gig: GeneralIterationGraph, x: int) -> set[int]:
    seen = {x}
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in gig.successors(v).tolist():
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def reachable(gig: GeneralIterationGraph, x: int, y: int) -> bool:
    """Directed path from ``x`` to ``y`` (reflexive)."""
    if x == y:
        return True
    seen = {x}
    queue = deque([x])
    while queue:
        v = queue.popleft()
        for w in gig.successors(v).tolist():
            if w == y:
                return True
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return False


def mutually_reachable(gig: GeneralIterationGraph, x: int, y: int) -> bool:
    return reachable(gig, x, y) and reachable(gig, y, x)


@dataclass(frozen=True)
class SCCDecomposition:
    labels: np.ndarray  # component id per configuration, ids in topological order
    components: list[list[int]]
    dag: dict[int, set[int]]  # component -> successor components

    def partition(self) -> set[frozenset[int]]:
        return {frozenset(c) for c in self.components}


def scc_decomposition(gig: GeneralIterationGraph) -> SCCDecomposition:
    """Strongly connected components, numbered so that every DAG arc goes from a lower to a higher id."""
    size = gig.size
    src = gig.sources
    keep = src != gig.targets
    graph = csr_matrix(
        (np.ones(int(keep.sum()), dtype=np.int8), (src[keep], gig.targets[keep])),
        shape=(size, size),
    )
    ncomp, raw = connected_components(graph, directed=True, connection="strong")
    cs, ct = raw[src[keep]], raw[gig.targets[keep]]
    cross = cs != ct
    edges = set(zip(cs[cross].tolist(), ct[cross].tolist()))
    preds: dict[int, set[int]] = {c: set() for c in range(ncomp)}
    for a, b in edges:
        preds[b].add(a)
    # deterministic topological rank: among ready components, smallest first member first
    first = np.full(ncomp, size, dtype=np.int64)
    np.minimum.at(first, raw, np.arange(size))
    sorter = graphlib.TopologicalSorter(preds)
    sorter.prepare()
    order: list[int] = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready(), key=lambda c: first[c])
        order.extend(ready)
        sorter.done(*ready)
    rank = np.empty(ncomp, dtype=np.int64)
    rank[np.asarray(order, dtype=np.int64)] = np.arange(ncomp)
    labels = rank[raw]
    components: list[list[int]] = [[] for _ in range(ncomp)]
    for x, c in enumerate(labels.tolist()):
        components[c].append(x)
    dag = {c: set() for c in range(ncomp)}
    for a, b in edges:
        dag[int(rank[a])].add(int(rank[b]))
    return SCCDecomposition(labels, components, dag)


# --------------------------------------------------------------------------
# export


def _layer_groups(gig: GeneralIterationGraph) -> dict[int, list[int]]:
    groups: dict[int, list[int]] = {}
    for x, u in enumerate(gig.potentials.tolist()):
        groups.setdefault(u, []).append(x)
    return dict(sorted(groups.items()))


def export_gig(
    gig: GeneralIterationGraph,
    fmt: str,
    show_multiplicity: bool = True,
    layers: bool = False,
) -> str:
    """Serialise the condensed multigraph as DOT, GraphML or JSON lines."""
    if fmt not in EXPORT_FORMATS:
        raise UnsupportedFormat(f"unsupported format {fmt!r}; choose from {EXPORT_FORMATS}")
    n = gig.n
    name = lambda x: config_to_str(x, n)  # noqa: E731
    if fmt == "jsonl":
        lines = [
            json.dumps({"src": name(x), "dst": name(y), "mult": m}, sort_keys=True)
            for x, y, m in gig.iter_arcs()
        ]
        return "\n".join(lines) + "\n"
    if fmt == "dot":
        out = ["digraph gig {"]
        if layers:
            for u, xs in _layer_groups(gig).items():
                out.append(f"  subgraph cluster_u{u} {{")
                out.append(f'    label="u={u}";')
                out.append("    rank=same;")
                for x in xs:
                    out.append(f'    "{name(x)}";')
                out.append("  }")
        else:
            for x in range(gig.size):
                out.append(f'  "{name(x)}";')
        for x, y, m in gig.iter_arcs():
            attr = f' [label="{m}"]' if show_multiplicity and m > 1 else ""
            out.append(f'  "{name(x)}" -> "{name(y)}"{attr};')
        out.append("}")
        return "\n".join(out) + "\n"
    # graphml
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    ET.SubElement(root, "key", id="mult", attrib={"for": "edge", "attr.name": "mult", "attr.type": "int"})
    ET.SubElement(root, "key", id="u", attrib={"for": "node", "attr.name": "u", "attr.type": "int"})
    g = ET.SubElement(root, "graph", id="gig", edgedefault="directed")
    pots = gig.potentials.tolist()
    for x in range(gig.size):
        node = ET.SubElement(g, "node", id=name(x))
        if layers:
            ET.SubElement(node, "data", key="u").text = str(pots[x])
    for k, (x, y, m) in enumerate(gig.iter_arcs()):
        e = ET.SubElement(g, "edge", id=f"e{k}", source=name(x), target=name(y))
        if show_multiplicity:
            ET.SubElement(e, "data", key="mult").text = str(m)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def parse_jsonl(text: str) -> dict[tuple[str, str], int]:
    arcs: dict[tuple[str, str], int] = {}
    for line in text.splitlines():
        if line.strip():
            rec = json.loads(line)
            arcs[(rec["src"], rec["dst"])] = arcs.get((rec["src"], rec["dst"]), 0) + int(rec["mult"])
    return arcs
