"""Boolean automata circuits and exhaustive checks of their layered dynamics.

A circuit of size n has arcs ``i-1 -> i`` (indices mod n) and every local
function is either identity or negation. Signs are given per node: ``signs[i]``
is the sign of the arc entering node ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from giglab.gig import build_gig, scc_decomposition
from giglab.network import Network, StateSpaceGuard, complement, config_to_str, validate_network
from giglab.schedules import UpdateSchedule, enumerate_attractors, enumerate_schedules, parallel

LEMMA_GUARD = 10
CENSUS_GUARD = 5


class SignMismatch(ValueError):
    pass


class SizeMismatch(ValueError):
    pass


class InvalidLayer(ValueError):
    pass


@dataclass(frozen=True)
class CircuitDescriptor:
    signs: tuple[int, ...]  # +1 for identity, -1 for negation

    def __post_init__(self):
        if not self.signs:
            raise ValueError("a circuit needs at least one node")
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")

    @property
    def n(self) -> int:
        return len(self.signs)

    @property
    def global_sign(self) -> int:
        return -1 if self.signs.count(-1) % 2 else 1

    @property
    def literal(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.signs)

    @classmethod
    def parse(cls, text: str) -> "CircuitDescriptor":
        """``pos:n``, ``neg:n`` or a ``+``/``-`` string, one character per node."""
        text = text.strip()
        if text.startswith(("pos:", "neg:")):
            n = int(text[4:])
            return canonical(n, 1 if text.startswith("pos") else -1)
        if not text or set(text) - {"+", "-"}:
            raise ValueError(f"not a circuit literal: {text!r}")
        return cls(tuple(1 if c == "+" else -1 for c in text))

    def network(self) -> Network:
        return make_circuit(self.signs)


def canonical(n: int, sign: int) -> CircuitDescriptor:
    """All-identity circuit, or the one with a single negation on node 0."""
    if n < 1:
        raise ValueError("n must be at least 1")
    signs = [1] * n
    if sign < 0:
        signs[0] = -1
    return CircuitDescriptor(tuple(signs))


def make_circuit(signs: Sequence[int] | CircuitDescriptor) -> Network:
    if isinstance(signs, CircuitDescriptor):
        signs = signs.signs
    n = len(signs)
    if n == 0:
        raise ValueError("signs must be nonempty")
    inputs = [[(i - 1) % n] for i in range(n)]
    tables = [[0, 1] if s > 0 else [1, 0] for s in signs]
    return validate_network(n, inputs, tables)


def compose_path(c: CircuitDescriptor, j: int, i: int) -> int:
    """Sign of ``f_j o ... o f_i`` along the circuit (wrapping past n-1 when j < i).

    Returns +1 for identity, -1 for negation.
    """
    n = c.n
    i, j = i % n, j % n
    nodes = range(i, j + 1) if i <= j else [*range(i, n), *range(0, j + 1)]
    negs = sum(1 for k in nodes if c.signs[k] < 0)
    return -1 if negs % 2 else 1


def iso_map(c: CircuitDescriptor, c2: CircuitDescriptor) -> int:
    """Flip mask of the bijection conjugating the dynamics of ``c`` onto ``c2``.

    ``sigma(x) = x ^ mask`` satisfies ``F2^P(sigma(x)) = sigma(F^P(x))`` for all
    x and P. Bit i flips when the paths 0 <- ... <- i+1 of the two circuits have
    different parities; against the all-identity circuit this reduces to
    flipping exactly where ``c2``'s path is a negation.
    """
    if c.n != c2.n:
        raise SizeMismatch(f"sizes differ: {c.n} vs {c2.n}")
    if c.global_sign != c2.global_sign:
        raise SignMismatch("circuits of opposite sign are not isomorphic")
    mask = 0
    for i in range(c.n):
        if compose_path(c, 0, i + 1) != compose_path(c2, 0, i + 1):
            mask |= 1 << i
    return mask


def u_extremes(n: int, sign: int) -> tuple[int, int]:
    if n < 1:
        raise ValueError("n must be at least 1")
    u_min = 0 if sign > 0 else 1
    matches = (n % 2 == 0) if sign > 0 else (n % 2 == 1)
    return u_min, n if matches else n - 1


def valid_layers(n: int, sign: int) -> list[int]:
    lo, hi = u_extremes(n, sign)
    return list(range(lo, hi + 1, 2))


@dataclass
class LayerProfile:
    n: int
    global_sign: int
    sizes: dict[int, int]

    @property
    def valid_ks(self) -> list[int]:
        return sorted(self.sizes)

    @property
    def total(self) -> int:
        return sum(self.sizes.values())


def layer_profile(n: int, sign: int) -> LayerProfile:
    """Closed-form layer sizes ``2 * C(n, k)``."""
    return LayerProfile(n, sign, {k: 2 * math.comb(n, k) for k in valid_layers(n, sign)})


def enumerated_layer_profile(net: Network, sign: int) -> LayerProfile:
    """Layer sizes counted over every configuration of ``net``."""
    counts = np.bincount(net.potentials, minlength=net.n + 1)
    return LayerProfile(net.n, sign, {k: int(c) for k, c in enumerate(counts) if c})


def representative_config(n: int, k: int) -> int:
    """``(10)^(k/2) 0^(n-k)``: a configuration of the canonical positive circuit with ``u = k``."""
    if k < 0 or k % 2 or k > n:
        raise InvalidLayer(f"no representative for k={k}, n={n}; need even 0 <= k <= n")
    return sum(1 << (2 * t) for t in range(k // 2))


# --------------------------------------------------------------------------
# exhaustive verification


@dataclass
class LemmaResult:
    name: str
    passed: bool
    counterexample: str | None = None

    def to_dict(self) -> dict:
        d = {"name": self.name, "passed": self.passed}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        return d


@dataclass
class LemmaReport:
    n: int
    sign: int
    results: list[LemmaResult] = field(default_factory=list)
    layers: dict[int, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sign": "pos" if self.sign > 0 else "neg",
            "passed": self.passed,
            "layers": {str(k): v for k, v in self.layers.items()},
            "checks": [r.to_dict() for r in self.results],
        }


def _rotate_mask(mask: int, n: int) -> int:
    """Shift bit i to bit i+1 (mod n)."""
    full = (1 << n) - 1
    return ((mask << 1) | (mask >> (n - 1))) & full


def verify_lemmas(n: int, sign: int, force: bool = False) -> LemmaReport:
    """Exhaustively check the layered structure of the canonical circuit of given size and sign."""
    if n > LEMMA_GUARD and not force:
        raise StateSpaceGuard(f"lemma verification limited to n<={LEMMA_GUARD}")
    desc = canonical(n, sign)
    net = desc.network()
    report = LemmaReport(n, sign)
    size = 1 << n
    masks = net.unstable_masks.tolist()
    pots = net.potentials.tolist()
    fmap = net.parallel_map.tolist()
    s = lambda x: config_to_str(x, n)  # noqa: E731

    # shift: U(F(x)) = U(x) + 1
    bad = next((x for x in range(size) if masks[fmap[x]] != _rotate_mask(masks[x], n)), None)
    report.results.append(
        LemmaResult("shift", bad is None, None if bad is None else f"x={s(bad)}")
    )

    # parity of u follows the sign
    want = 0 if sign > 0 else 1
    bad = next((x for x in range(size) if pots[x] % 2 != want), None)
    report.results.append(
        LemmaResult("parity", bad is None, None if bad is None else f"x={s(bad)} u={pots[bad]}")
    )

    # layer sizes, complement closure
    prof = enumerated_layer_profile(net, sign)
    report.layers = dict(prof.sizes)
    expected = layer_profile(n, sign).sizes
    report.results.append(
        LemmaResult(
            "layer-sizes",
            prof.sizes == expected,
            None if prof.sizes == expected else f"got {prof.sizes}, expected {expected}",
        )
    )
    bad = next((x for x in range(size) if pots[complement(x, n)] != pots[x]), None)
    report.results.append(
        LemmaResult("complement", bad is None, None if bad is None else f"x={s(bad)}")
    )

    gig = build_gig(net, force=force)

    # no arc raises u
    src = gig.sources
    up = np.flatnonzero(gig.potentials[gig.targets] > gig.potentials[src])
    report.results.append(
        LemmaResult(
            "no-upward-arc",
            up.size == 0,
            None if up.size == 0 else f"{s(int(src[up[0]]))} -> {s(int(gig.targets[up[0]]))}",
        )
    )

    # SCCs: fixed points are singletons, every other layer is one component
    scc = scc_decomposition(gig)
    layer_part: set[frozenset[int]] = set()
    for k in sorted(set(pots)):
        members = [x for x in range(size) if pots[x] == k]
        if k == 0:
            layer_part.update(frozenset([x]) for x in members)
        else:
            layer_part.add(frozenset(members))
    got = scc.partition()
    msg = None
    if got != layer_part:
        diff = sorted(got ^ layer_part, key=len)[0]
        msg = "component mismatch at {" + ",".join(s(x) for x in sorted(diff)) + "}"
    report.results.append(LemmaResult("scc-equals-layers", got == layer_part, msg))

    # downward reachability: from every configuration of layer k > u_min some
    # configuration of layer k - 2 is reachable
    ncomp = len(scc.components)
    reach = [0] * ncomp
    for c in reversed(range(ncomp)):  # ids are topologically ordered
        for d in scc.dag[c]:
            reach[c] |= reach[d]
        for x in scc.components[c]:
            reach[c] |= 1 << pots[x]
    u_min, _ = u_extremes(n, sign)
    bad = None
    for x in range(size):
        k = pots[x]
        if k > u_min and not (reach[int(scc.labels[x])] >> (k - 2)) & 1:
            bad = x
            break
    report.results.append(
        LemmaResult("downward-reachability", bad is None, None if bad is None else f"x={s(bad)}")
    )
    return report


@dataclass
class CensusEntry:
    schedule: str
    aligned: bool
    limit_cycles_macro: int
    limit_cycles_block: int

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule,
            "aligned_sequential": self.aligned,
            "limit_cycles_macro": self.limit_cycles_macro,
            "limit_cycles_block": self.limit_cycles_block,
        }


@dataclass
class CensusReport:
    n: int
    entries: list[CensusEntry]

    def deviations(self, observation: str = "macro") -> list[CensusEntry]:
        """Schedules where "limit cycle exists" disagrees with "not aligned sequential"."""
        attr = "limit_cycles_macro" if observation == "macro" else "limit_cycles_block"
        return [e for e in self.entries if (getattr(e, attr) > 0) == e.aligned]

    @property
    def aligned_count(self) -> int:
        return sum(e.aligned for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "schedules": len(self.entries),
            "aligned_sequential": self.aligned_count,
            "deviations_macro": [e.to_dict() for e in self.deviations("macro")],
            "deviations_block": [e.to_dict() for e in self.deviations("block")],
            "entries": [e.to_dict() for e in self.entries],
        }


def _census_entry(args: tuple[int, tuple[int, ...]]) -> CensusEntry:
    n, dates = args
    net = canonical(n, 1).network()
    sched = UpdateSchedule(dates)
    macro = sum(a.period > 1 for a in enumerate_attractors(net, sched, "macro"))
    block = sum(a.period > 1 for a in enumerate_attractors(net, sched, "block"))
    return CensusEntry(sched.literal(), sched.is_aligned_sequential, macro, block)


def positive_limit_cycle_census(n: int, force: bool = False, threads: int = 1) -> CensusReport:
    """Count limit cycles of the canonical positive circuit under every schedule."""
    if n > CENSUS_GUARD and not force:
        raise StateSpaceGuard(f"census limited to n<={CENSUS_GUARD}")
    jobs = [(n, s.dates) for s in enumerate_schedules(n, force=force)]
    if threads > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(_census_entry, jobs, chunksize=16))
    else:
        entries = [_census_entry(j) for j in jobs]
    return CensusReport(n, entries)


def parallel_limit_cycles(c: CircuitDescriptor) -> list[tuple[int, ...]]:
    net = c.network()
    return [a.cycle for a in enumerate_attractors(net, parallel(c.n)) if a.period > 1]
